#pragma once

#include "swc/lmi.hpp"
#include "swc/probbounds.hpp"
#include "swc/rng.hpp"
#include "swc/solver.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace swc::scenario {

using Sample = Eigen::VectorXd;

/// Family of uncertain LMI constraints, jointly affine in the design
/// variables theta and the certificate variables xi. The generator emits
/// blocks over the concatenated vector (theta, xi): indices 0..n_theta-1
/// address theta, indices n_theta..n_theta+n_xi-1 address the certificate
/// slice of one sample.
struct ConstraintFamily {
  int n_theta = 0;
  int n_xi = 0;
  std::function<std::vector<sdp::LmiBlock>(const Sample&)> generator;
  sdp::Vector objective; // over theta only
  std::function<Sample(rng::Stream&)> sampler;
};

struct IterationLog {
  int k = 0;
  std::int64_t n_design = 0;
  std::int64_t n_validation = 0;
  double objective = 0.0;
  std::int64_t violations = 0;
  double wall_time_s = 0.0;
};

struct SwcResult {
  sdp::Vector theta;
  double objective_value = 0.0;
  std::int64_t n_used = 0;
  std::vector<IterationLog> iterations;
  std::vector<sdp::Vector> certificate_values; // per design sample, diagnostics
  sdp::SolveStatus status = sdp::SolveStatus::NumericalFailure;
};

struct ViolationEstimate {
  double fraction = 0.0;
  std::vector<std::int64_t> failures; // indices of violated samples
  std::int64_t n_checked = 0;
};

/// N iid samples from the family's distribution; deterministic per seed and
/// independent of threading (per-sample child streams).
std::vector<Sample> draw_multisample(const ConstraintFamily& family,
                                     std::int64_t count, std::uint64_t seed);

/// Classical scenario program: union of per-sample blocks over theta only.
/// Rejects families with certificates.
sdp::SdpProblem assemble_so(const ConstraintFamily& family,
                            const std::vector<Sample>& samples);

/// Scenario-with-certificates program: a fresh certificate slice per sample,
/// n_theta + N*n_xi variables, objective zero-extended over certificates.
sdp::SdpProblem assemble_swc(const ConstraintFamily& family,
                             const std::vector<Sample>& samples);

/// Reinterpret the family with its certificates shared across all samples
/// (the common-certificate baseline): everything becomes a design variable.
ConstraintFamily with_shared_certificates(const ConstraintFamily& family);

/// Monte Carlo violation estimate at fixed theta: for each fresh sample,
/// solves the feasibility problem in xi alone (reduces to an eigenvalue check
/// when n_xi = 0). Numerical failures count as violations.
ViolationEstimate estimate_violation(const ConstraintFamily& family,
                                     const sdp::Vector& theta,
                                     std::int64_t count, std::uint64_t seed,
                                     const sdp::SolverOptions& solver = {},
                                     int threads = 1);

struct SequentialOptions {
  probbounds::SequentialParams seq;
  std::optional<std::int64_t> n_full_override; // explicit full N
  std::optional<int> n_theta_override; // sample-complexity convention override
  sdp::SolverOptions solver;
  int threads = 1;
};

/// Sequential design/validation algorithm: at iteration k solves a
/// reduced-size SwC problem on ceil(N k/k_t) fresh design samples, then
/// validates with M_k fresh samples; returns the first fully validated
/// iterate (or the final one). Without an explicit override, N is the
/// smallest integer with B(N, eps, n_theta) <= delta/2.
SwcResult sequential_swc(const ConstraintFamily& family,
                         const probbounds::ProbLevels& levels,
                         const SequentialOptions& options, std::uint64_t seed);

struct OneShotOptions {
  std::optional<std::int64_t> n_override;
  std::optional<int> n_theta_override;
  sdp::SolverOptions solver;
};

/// Single SwC solve at N = min_samples_exact(eps, delta, n_theta).
SwcResult one_shot_swc(const ConstraintFamily& family,
                       const probbounds::ProbLevels& levels,
                       const OneShotOptions& options, std::uint64_t seed);

} // namespace swc::scenario
