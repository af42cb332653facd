#include "swc/probbounds.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace swc::probbounds {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw std::domain_error(msg);
}

void check_levels(const ProbLevels& levels) {
  require(levels.epsilon > 0.0 && levels.epsilon < 1.0,
          "epsilon must lie in (0,1)");
  require(levels.delta > 0.0 && levels.delta < 1.0,
          "delta must lie in (0,1)");
}

// ceil with a small relative guard so values like 7564.999999999 coming from
// a decimal-exact quantity round up to the intended integer
std::int64_t guarded_ceil(double x) {
  double guard = 1e-12 * std::max(1.0, std::fabs(x));
  return static_cast<std::int64_t>(std::ceil(x - guard));
}

double log_add(double a, double b) {
  if (a == -INFINITY) return b;
  if (b == -INFINITY) return a;
  double hi = std::max(a, b), lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

} // namespace

double binomial_tail(std::int64_t n_samples, double epsilon, int n_theta) {
  require(n_samples >= 1, "sample count must be >= 1");
  require(n_theta >= 1, "n_theta must be >= 1");
  require(epsilon > 0.0 && epsilon < 1.0, "epsilon must lie in (0,1)");

  const std::int64_t terms = std::min<std::int64_t>(n_theta, n_samples + 1);
  const double log_ratio = std::log(epsilon) - std::log1p(-epsilon);

  if (n_samples <= 1000) {
    // term recurrence t_{k+1} = t_k (N-k)/(k+1) eps/(1-eps)
    double term = std::exp(static_cast<double>(n_samples) * std::log1p(-epsilon));
    double sum = term;
    for (std::int64_t k = 0; k + 1 < terms; ++k) {
      term *= static_cast<double>(n_samples - k) / static_cast<double>(k + 1) *
              epsilon / (1.0 - epsilon);
      sum += term;
    }
    return std::min(sum, 1.0);
  }

  // log-space accumulation for large N
  double log_term = static_cast<double>(n_samples) * std::log1p(-epsilon);
  double log_sum = log_term;
  for (std::int64_t k = 0; k + 1 < terms; ++k) {
    log_term += std::log(static_cast<double>(n_samples - k)) -
                std::log(static_cast<double>(k + 1)) + log_ratio;
    log_sum = log_add(log_sum, log_term);
  }
  return std::min(std::exp(log_sum), 1.0);
}

std::int64_t min_samples_exact(const ProbLevels& levels, int n_theta) {
  check_levels(levels);
  require(n_theta >= 1, "n_theta must be >= 1");

  // B(N,eps,n_theta) = 1 for N < n_theta, and is strictly decreasing in N
  // beyond that, so double until below delta, then bisect.
  std::int64_t lo = n_theta; // B(lo) = 1 > delta
  std::int64_t hi = std::max<std::int64_t>(2 * n_theta, 2);
  while (binomial_tail(hi, levels.epsilon, n_theta) > levels.delta) {
    lo = hi;
    hi *= 2;
    require(hi < (std::int64_t{1} << 50), "sample complexity search overflow");
  }
  while (hi - lo > 1) {
    std::int64_t mid = lo + (hi - lo) / 2;
    if (binomial_tail(mid, levels.epsilon, n_theta) <= levels.delta)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

std::int64_t min_samples_bound(const ProbLevels& levels, int n_theta) {
  check_levels(levels);
  require(n_theta >= 1, "n_theta must be >= 1");
  const double e = 2.718281828459045235360287471353;
  double value = e / (levels.epsilon * (e - 1.0)) *
                 (std::log(1.0 / levels.delta) + n_theta - 1);
  return guarded_ceil(value);
}

double hyperharmonic(int m, double alpha) {
  require(m >= 1, "series length must be >= 1");
  require(alpha > 0.0, "alpha must be > 0");
  double sum = 0.0;
  for (int j = 1; j <= m; ++j) sum += std::pow(j, -alpha);
  return sum;
}

std::int64_t validation_samples(const ProbLevels& levels,
                                const SequentialParams& seq, int k) {
  check_levels(levels);
  require(seq.k_t >= 2, "k_t must be >= 2");
  require(seq.alpha > 0.0, "alpha must be > 0");
  require(k >= 1 && k <= seq.k_t - 1, "iteration index out of range");

  double numer = seq.alpha * std::log(static_cast<double>(k)) +
                 std::log(hyperharmonic(seq.k_t - 1, seq.alpha)) +
                 std::log(2.0 / levels.delta);
  double denom = -std::log1p(-levels.epsilon); // ln(1/(1-eps))
  return std::max<std::int64_t>(1, guarded_ceil(numer / denom));
}

std::int64_t design_schedule(std::int64_t n_full, const SequentialParams& seq,
                             int k) {
  require(n_full >= 1, "N must be >= 1");
  require(seq.k_t >= 2, "k_t must be >= 2");
  require(k >= 1 && k <= seq.k_t, "iteration index out of range");
  // exact integer ceil(N*k/k_t)
  std::int64_t num = n_full * static_cast<std::int64_t>(k);
  return (num + seq.k_t - 1) / seq.k_t;
}

} // namespace swc::probbounds
