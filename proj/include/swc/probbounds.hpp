#pragma once

#include <cstdint>

namespace swc::probbounds {

/// Accuracy/confidence pair for randomized guarantees.
struct ProbLevels {
  double epsilon; // accuracy level in (0,1)
  double delta;   // confidence level in (0,1)
};

/// Parameters of the sequential randomized algorithm.
struct SequentialParams {
  int k_t = 10;       // total iterations, >= 2
  double alpha = 1.0; // hyperharmonic exponent, > 0
};

// Lower binomial tail sum_{k=0}^{n_theta-1} C(N,k) eps^k (1-eps)^(N-k).
// Evaluated by the incremental term recurrence; switches to log-space
// accumulation for large N to avoid underflow of the leading term.
double binomial_tail(std::int64_t n_samples, double epsilon, int n_theta);

// Smallest N with binomial_tail(N, eps, n_theta) <= delta.
std::int64_t min_samples_exact(const ProbLevels& levels, int n_theta);

// Explicit sample-complexity bound ceil(e/(eps(e-1)) (ln(1/delta)+n_theta-1)).
// Always dominates min_samples_exact.
std::int64_t min_samples_bound(const ProbLevels& levels, int n_theta);

// Smallest validation sample count M_k for iteration k of the sequential
// algorithm, 1 <= k <= k_t - 1.
std::int64_t validation_samples(const ProbLevels& levels,
                                const SequentialParams& seq, int k);

// Design sample count N_k = ceil(N*k/k_t) for iteration k, 1 <= k <= k_t.
std::int64_t design_schedule(std::int64_t n_full, const SequentialParams& seq,
                             int k);

// Finite hyperharmonic series H_m(alpha) = sum_{j=1}^m j^(-alpha).
double hyperharmonic(int m, double alpha);

} // namespace swc::probbounds
