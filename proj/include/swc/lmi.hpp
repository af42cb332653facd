#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

namespace swc::sdp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class BlockSense { PSD, NSD };

/// One affine symmetric-matrix constraint
///   F(x) = constant + sum_j x(var_j) * coeff_j   (sense PSD:  F(x) >= 0,
///                                                 sense NSD:  F(x) <= 0).
/// `strict_ineq` encodes an originally strict inequality; the solver enforces
/// it with a margin of `margin` (if >= 0) or a default derived from the block
/// data.
struct LmiBlock {
  int dim = 0;
  Matrix constant;
  std::vector<std::pair<int, Matrix>> coeffs;
  BlockSense sense = BlockSense::PSD;
  bool strict_ineq = false;
  double margin = -1.0; // explicit strictness margin, < 0 selects the default

  double strictness_margin() const; // resolved margin actually enforced
  // F(x) evaluated in canonical form: sense-normalized to PSD and with the
  // strictness margin subtracted, so feasibility is min_eig >= 0
  Matrix evaluate_canonical(const Vector& point) const;
};

/// Linear objective over a decision vector subject to LMI blocks.
struct SdpProblem {
  int n_vars = 0;
  Vector objective;
  std::vector<LmiBlock> blocks;
  std::vector<std::string> var_names; // optional labels, may be empty

  void validate() const; // throws std::invalid_argument on malformed data
};

enum class SolveStatus { Optimal, Infeasible, NumericalFailure };

struct SdpSolution {
  Vector values;
  double objective_value = 0.0;
  SolveStatus status = SolveStatus::NumericalFailure;
  double margin = 0.0; // smallest canonical eigenvalue slack across blocks
  int iterations = 0;
  // set when the value comes from the bisection fallback, whose optimality
  // is limited by the resolution of the feasibility oracle
  bool reduced_accuracy = false;
};

struct SolverOptions {
  double feasibility_tol = 1e-8; // absolute, on block eigenvalues
  double gap_tol = 1e-8;         // relative duality gap
  int max_iterations = 250;
  bool verbose = false;
};

const char* to_string(SolveStatus status);

// JSON serialization of problems (dense row-major matrices), used for
// debugging and golden tests.
std::string to_json(const SdpProblem& problem);
SdpProblem problem_from_json(const std::string& text);

} // namespace swc::sdp
