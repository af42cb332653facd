#pragma once

#include "swc/lmi.hpp"

namespace swc::sdp {

/// Minimize objective . x subject to the problem's LMI blocks, using the
/// built-in primal-dual interior-point method (Nesterov-Todd scaling,
/// predictor step for the centering heuristic). Deterministic for fixed
/// inputs; no global state.
SdpSolution solve(const SdpProblem& problem, const SolverOptions& options = {});

/// Feasibility-only solve: minimizes the auxiliary slack t with
/// F_j(x) + t I >= 0 over all blocks; the original problem is feasible
/// iff the optimal t is <= 0. Returns early once a strictly feasible point
/// is located. `objective_value` carries the best t found.
SdpSolution solve_feasibility(const SdpProblem& problem,
                              const SolverOptions& options = {});

struct PointCheck {
  bool feasible = false;
  double margin = 0.0; // min canonical eigenvalue over all blocks
};

/// Evaluate every block at `point` and report the worst eigenvalue margin
/// (sign-adjusted for sense, strictness margins folded in).
PointCheck check_point(const SdpProblem& problem, const Vector& point,
                       double feasibility_tol = 1e-8);

} // namespace swc::sdp
