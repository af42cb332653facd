#pragma once

#include "swc/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace swc::awsys {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Continuous-time plant with saturated control input sigma, exogenous
/// input w, measured output y and performance output z.
struct Plant {
  Matrix A_p, B_pu, B_pw;
  Matrix C_py, D_pyu, D_pyw;
  Matrix C_pz, D_pzu, D_pzw;

  int n_p() const { return static_cast<int>(A_p.rows()); }
  int n_u() const { return static_cast<int>(B_pu.cols()); }
  int n_w() const { return static_cast<int>(B_pw.cols()); }
  int n_y() const { return static_cast<int>(C_py.rows()); }
  int n_z() const { return static_cast<int>(C_pz.rows()); }
  void validate() const;
};

/// Linear controller with anti-windup injection ports v1 (state equation)
/// and v2 (output equation).
struct Controller {
  Matrix A_c, B_cy, B_cw, C_c, D_cy, D_cw;

  int n_c() const { return static_cast<int>(A_c.rows()); }
  void validate(const Plant& plant) const;
};

/// Assembled saturated closed loop with deadzone input dz(u) and the
/// anti-windup injection v = D_aw dz(u) kept symbolic:
///   xdot = A_cl x + (B_clq + B_clv D_aw) dz(u) + B_clw w
///   z    = C_clz x + (D_clzq + D_clzv D_aw) dz(u) + D_clzw w
///   u    = C_clu x + (D_cluq + D_cluv D_aw) dz(u) + D_cluw w
struct ClosedLoop {
  Matrix A_cl, B_clq, B_clv, B_clw;
  Matrix C_clz, D_clzq, D_clzv, D_clzw;
  Matrix C_clu, D_cluq, D_cluv, D_cluw;
  Vector u_bar; // saturation limits, strictly positive per channel

  int n() const { return static_cast<int>(A_cl.rows()); }
  int n_u() const { return static_cast<int>(B_clq.cols()); }
  int n_w() const { return static_cast<int>(B_clw.cols()); }
  int n_z() const { return static_cast<int>(C_clz.rows()); }
  int n_v() const { return static_cast<int>(B_clv.cols()); }
};

/// Assemble the closed loop. Requires D_pyu = 0 (strictly proper u -> y):
/// with direct feedthrough the u-equation would contain an algebraic loop
/// this assembly does not model.
ClosedLoop assemble_closed_loop(const Plant& plant, const Controller& controller,
                                const Vector& u_bar);

/// RC-ladder parameters, all strictly positive.
struct CircuitParams {
  double r1, r2, r3, r4, r5; // ohm
  double c1, c2, c3;         // farad

  Vector to_vector() const;
  static CircuitParams from_vector(const Vector& v);
};

struct CircuitUncertainty {
  CircuitParams means;
  double relative_std = 0.10; // fraction of the mean, in (0, 0.5)
  std::uint64_t seed = 0;
};

/// Build the 3-state plant of the benchmark network: states are the
/// capacitor voltages, the output gain makes the input-output numerator
/// monic, y = V_o and z = w - y.
Plant circuit_to_plant(const CircuitParams& params);

/// N iid parameter draws, componentwise Gaussian with standard deviation
/// relative_std * mean, resampled until positive. Deterministic per seed.
std::vector<CircuitParams> sample_circuit(const CircuitUncertainty& unc,
                                          std::int64_t count);

/// Single draw from an explicit stream (building block of sample_circuit and
/// of the scenario samplers).
CircuitParams draw_circuit(const CircuitParams& means, double relative_std,
                           rng::Stream& stream);

/// Nominal benchmark plant and PID controller (saturation limit 1).
std::pair<Plant, Controller> benchmark_nominal();
CircuitParams benchmark_circuit_params();

/// Transfer function of a SISO state-space realization, coefficients in
/// descending powers of s with monic denominator.
struct TransferFunction {
  Vector numerator;
  Vector denominator;
};
TransferFunction siso_transfer(const Matrix& a, const Matrix& b, const Matrix& c,
                               double d = 0.0);

std::string to_json(const Plant& plant);
std::string to_json(const Controller& controller);
std::string to_json(const ClosedLoop& cl);
Plant plant_from_json(const std::string& text);
Controller controller_from_json(const std::string& text);

/// Plant + controller + saturation limits bundled for file exchange.
struct BenchmarkModel {
  Plant plant;
  Controller controller;
  Vector u_bar;
};
std::string to_json(const BenchmarkModel& model);
BenchmarkModel benchmark_model_from_json(const std::string& text);

} // namespace swc::awsys
