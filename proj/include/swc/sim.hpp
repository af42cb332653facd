#pragma once

#include "swc/awsys.hpp"

#include <cstdint>
#include <vector>

namespace swc::sim {

using awsys::ClosedLoop;
using awsys::Controller;
using awsys::Plant;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Uniformly sampled multichannel signal; rows are time steps.
struct Signal {
  double t0 = 0.0;
  double dt = 0.0;
  Matrix samples;

  int steps() const { return static_cast<int>(samples.rows()); }
  int channels() const { return static_cast<int>(samples.cols()); }
  /// linear interpolation, clamped at the ends
  Vector value(double t) const;
};

/// Trapezoidal approximation of (integral |sig(t)|^2 dt)^(1/2).
double l2norm(const Signal& sig);

struct SimResult {
  Signal x, z, u, sigma;
  Signal y; // filled by the raw interconnection form only
  std::vector<bool> saturation_active;
};

struct SimOptions {
  double dt = 1e-3;
  // damped fixed-point settings for the input deadzone loop (multi-input);
  // single-input loops use an exact case split on the saturation regions
  double loop_tol = 1e-12;
  int loop_max_iter = 100;
};

/// Fixed-step RK4 simulation of the assembled closed loop from state x0,
/// with the deadzone resolved consistently inside every stage. Throws
/// std::runtime_error with the step index if the algebraic input loop cannot
/// be resolved (ill-posed).
SimResult simulate(const ClosedLoop& cl, const Matrix& d_aw, const Signal& w,
                   const Vector& x0, double t_end, const SimOptions& options = {});

/// Reference simulator of the raw plant/controller/anti-windup
/// interconnection (no assembled form involved); same integrator and input
/// handling, used to cross-check the assembled model.
SimResult simulate_raw(const Plant& plant, const Controller& controller,
                       const Matrix& d_aw, const Vector& u_bar, const Signal& w,
                       const Vector& x0_plant, const Vector& x0_controller,
                       double t_end, const SimOptions& options = {});

struct GainCheckOptions {
  double dt = 1e-3;
  double t_input = 5.0; // input support; zero afterwards so the state rings down
  double t_end = 40.0;
  SimOptions sim;
  int threads = 1;
};

struct GainCheckResult {
  double worst_ratio = 0.0;
  std::vector<double> ratios; // per trial
};

/// Empirical check of a certified gain: random finite-energy inputs scaled to
/// rho * s (rho in {0.1, 0.5, 1.0}; piecewise-constant and filtered-noise
/// families), simulated from rest; reports max ||z||_2 / ||w||_2.
GainCheckResult gain_check(const ClosedLoop& cl, const Matrix& d_aw,
                           double gamma_hat, double s, int n_trials,
                           std::uint64_t seed,
                           const GainCheckOptions& options = {});

} // namespace swc::sim
