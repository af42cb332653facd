#include "swc/scenario.hpp"

#include "swc/parallel.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace swc::scenario {

namespace {

void check_family(const ConstraintFamily& family) {
  if (family.n_theta < 1)
    throw std::invalid_argument("family must have at least one design variable");
  if (family.n_xi < 0) throw std::invalid_argument("negative certificate count");
  if (!family.generator) throw std::invalid_argument("family has no generator");
  if (family.objective.size() != family.n_theta)
    throw std::invalid_argument("objective length must equal n_theta");
}

// partially evaluate a block at fixed theta, leaving xi variables
// reindexed to 0..n_xi-1
sdp::LmiBlock restrict_to_xi(const sdp::LmiBlock& block, const sdp::Vector& theta,
                             int n_theta) {
  sdp::LmiBlock out;
  out.dim = block.dim;
  out.sense = block.sense;
  out.strict_ineq = block.strict_ineq;
  out.margin = block.margin;
  out.constant = block.constant;
  for (const auto& [var, coeff] : block.coeffs) {
    if (var < n_theta)
      out.constant += theta(var) * coeff;
    else
      out.coeffs.emplace_back(var - n_theta, coeff);
  }
  return out;
}

// feasibility in xi alone at fixed theta for one sample; conservative:
// anything but a certified t <= 0 counts as violated
bool sample_violated(const ConstraintFamily& family, const sdp::Vector& theta,
                     const Sample& q, const sdp::SolverOptions& solver) {
  auto blocks = family.generator(q);
  if (family.n_xi == 0) {
    for (const auto& block : blocks) {
      sdp::Matrix m = restrict_to_xi(block, theta, family.n_theta)
                          .evaluate_canonical(sdp::Vector());
      Eigen::SelfAdjointEigenSolver<sdp::Matrix> es(m, Eigen::EigenvaluesOnly);
      if (es.eigenvalues()(0) < -solver.feasibility_tol) return true;
    }
    return false;
  }
  sdp::SdpProblem prob;
  prob.n_vars = family.n_xi;
  prob.objective = sdp::Vector::Zero(family.n_xi);
  prob.blocks.reserve(blocks.size());
  for (const auto& block : blocks)
    prob.blocks.push_back(restrict_to_xi(block, theta, family.n_theta));
  sdp::SdpSolution sol = sdp::solve_feasibility(prob, solver);
  // a sample counts as satisfied only constructively: the returned
  // certificate must pass the same eigenvalue-tolerance check as check_point
  return sol.margin < -solver.feasibility_tol;
}

std::vector<Sample> draw_from_stream(const ConstraintFamily& family,
                                     std::int64_t count, rng::Stream base) {
  std::vector<Sample> samples(count);
  for (std::int64_t i = 0; i < count; ++i) {
    rng::Stream child = base.split(static_cast<std::uint64_t>(i));
    samples[i] = family.sampler(child);
  }
  return samples;
}

std::int64_t count_violations(const ConstraintFamily& family,
                              const sdp::Vector& theta,
                              const std::vector<Sample>& samples,
                              const sdp::SolverOptions& solver, int threads,
                              std::vector<std::int64_t>* failures) {
  std::vector<char> violated(samples.size(), 0);
  parallel_for(static_cast<std::int64_t>(samples.size()), threads,
               [&](std::int64_t i) {
                 violated[i] = sample_violated(family, theta, samples[i], solver);
               });
  std::int64_t count = 0;
  for (std::size_t i = 0; i < violated.size(); ++i) {
    if (violated[i]) {
      ++count;
      if (failures) failures->push_back(static_cast<std::int64_t>(i));
    }
  }
  return count;
}

SwcResult design_solve(const ConstraintFamily& family,
                       const std::vector<Sample>& samples,
                       const sdp::SolverOptions& solver) {
  sdp::SdpProblem problem = assemble_swc(family, samples);
  sdp::SdpSolution sol = sdp::solve(problem, solver);
  SwcResult result;
  result.status = sol.status;
  result.theta = sol.values.head(family.n_theta);
  result.objective_value = family.objective.dot(result.theta);
  result.n_used = static_cast<std::int64_t>(samples.size());
  if (family.n_xi > 0 && sol.values.size() == problem.n_vars) {
    result.certificate_values.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i)
      result.certificate_values.push_back(sol.values.segment(
          family.n_theta + static_cast<Eigen::Index>(i) * family.n_xi,
          family.n_xi));
  }
  return result;
}

} // namespace

std::vector<Sample> draw_multisample(const ConstraintFamily& family,
                                     std::int64_t count, std::uint64_t seed) {
  check_family(family);
  if (count < 1) throw std::domain_error("sample count must be >= 1");
  return draw_from_stream(family, count, rng::Stream(seed));
}

sdp::SdpProblem assemble_so(const ConstraintFamily& family,
                            const std::vector<Sample>& samples) {
  check_family(family);
  if (family.n_xi != 0)
    throw std::invalid_argument(
        "assemble_so requires a certificate-free family (n_xi = 0)");
  if (samples.empty()) throw std::domain_error("no samples");
  sdp::SdpProblem problem;
  problem.n_vars = family.n_theta;
  problem.objective = family.objective;
  for (const auto& q : samples)
    for (auto& block : family.generator(q)) problem.blocks.push_back(std::move(block));
  problem.validate();
  return problem;
}

sdp::SdpProblem assemble_swc(const ConstraintFamily& family,
                             const std::vector<Sample>& samples) {
  check_family(family);
  if (samples.empty()) throw std::domain_error("no samples");
  if (family.n_xi == 0) return assemble_so(family, samples);

  const auto n = static_cast<std::int64_t>(samples.size());
  sdp::SdpProblem problem;
  problem.n_vars = family.n_theta + static_cast<int>(n) * family.n_xi;
  problem.objective = sdp::Vector::Zero(problem.n_vars);
  problem.objective.head(family.n_theta) = family.objective;

  for (std::int64_t i = 0; i < n; ++i) {
    const int offset = family.n_theta + static_cast<int>(i) * family.n_xi;
    for (auto& block : family.generator(samples[i])) {
      for (auto& [var, coeff] : block.coeffs) {
        if (var >= family.n_theta + family.n_xi || var < 0)
          throw std::invalid_argument("generator block variable out of range");
        if (var >= family.n_theta) var = offset + (var - family.n_theta);
      }
      problem.blocks.push_back(std::move(block));
    }
  }
  problem.validate();
  return problem;
}

ConstraintFamily with_shared_certificates(const ConstraintFamily& family) {
  check_family(family);
  ConstraintFamily shared;
  shared.n_theta = family.n_theta + family.n_xi;
  shared.n_xi = 0;
  shared.generator = family.generator; // index space unchanged
  shared.objective = sdp::Vector::Zero(shared.n_theta);
  shared.objective.head(family.n_theta) = family.objective;
  shared.sampler = family.sampler;
  return shared;
}

ViolationEstimate estimate_violation(const ConstraintFamily& family,
                                     const sdp::Vector& theta,
                                     std::int64_t count, std::uint64_t seed,
                                     const sdp::SolverOptions& solver,
                                     int threads) {
  check_family(family);
  if (count < 1) throw std::domain_error("validation count must be >= 1");
  if (theta.size() != family.n_theta)
    throw std::invalid_argument("theta length must equal n_theta");

  auto samples = draw_from_stream(family, count, rng::Stream(seed));
  ViolationEstimate estimate;
  estimate.n_checked = count;
  std::int64_t violations =
      count_violations(family, theta, samples, solver, threads, &estimate.failures);
  estimate.fraction = static_cast<double>(violations) / static_cast<double>(count);
  return estimate;
}

SwcResult sequential_swc(const ConstraintFamily& family,
                         const probbounds::ProbLevels& levels,
                         const SequentialOptions& options, std::uint64_t seed) {
  check_family(family);
  if (options.seq.k_t < 2) throw std::domain_error("k_t must be > 1");

  const int n_theta_rule = options.n_theta_override.value_or(family.n_theta);
  const std::int64_t n_full = options.n_full_override.value_or(
      probbounds::min_samples_exact({levels.epsilon, levels.delta / 2.0},
                                    n_theta_rule));

  rng::Stream root(seed);
  SwcResult result;
  for (int k = 1; k <= options.seq.k_t; ++k) {
    const auto t_start = std::chrono::steady_clock::now();
    const std::int64_t n_k = probbounds::design_schedule(n_full, options.seq, k);
    auto design_samples = draw_from_stream(
        family, n_k, root.split(2 * static_cast<std::uint64_t>(k)));

    SwcResult attempt = design_solve(family, design_samples, options.solver);
    IterationLog log;
    log.k = k;
    log.n_design = n_k;
    log.objective = attempt.objective_value;
    if (attempt.status != sdp::SolveStatus::Optimal) {
      attempt.iterations = std::move(result.iterations);
      attempt.iterations.push_back(log);
      return attempt; // infeasible or failed design solve, with context
    }

    if (k == options.seq.k_t) {
      log.wall_time_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
              .count();
      attempt.iterations = std::move(result.iterations);
      attempt.iterations.push_back(log);
      return attempt;
    }

    const std::int64_t m_k = probbounds::validation_samples(levels, options.seq, k);
    log.n_validation = m_k;
    auto validation_samples = draw_from_stream(
        family, m_k, root.split(2 * static_cast<std::uint64_t>(k) + 1));
    log.violations = count_violations(family, attempt.theta, validation_samples,
                                      options.solver, options.threads, nullptr);
    log.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
            .count();
    result.iterations.push_back(log);

    if (log.violations == 0) {
      attempt.iterations = result.iterations;
      return attempt;
    }
  }
  result.status = sdp::SolveStatus::NumericalFailure;
  return result; // unreachable: loop always returns at k == k_t
}

SwcResult one_shot_swc(const ConstraintFamily& family,
                       const probbounds::ProbLevels& levels,
                       const OneShotOptions& options, std::uint64_t seed) {
  check_family(family);
  const int n_theta_rule = options.n_theta_override.value_or(family.n_theta);
  const std::int64_t n = options.n_override.value_or(
      probbounds::min_samples_exact(levels, n_theta_rule));

  rng::Stream root(seed);
  const auto t_start = std::chrono::steady_clock::now();
  auto samples = draw_from_stream(family, n, root.split(0));
  SwcResult result = design_solve(family, samples, options.solver);
  IterationLog log;
  log.k = 1;
  log.n_design = n;
  log.objective = result.objective_value;
  log.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  result.iterations.push_back(log);
  return result;
}

} // namespace swc::scenario
