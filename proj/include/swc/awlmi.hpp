#pragma once

#include "swc/awsys.hpp"
#include "swc/lmi.hpp"
#include "swc/probbounds.hpp"
#include "swc/scenario.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace swc::awlmi {

using awsys::ClosedLoop;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Disturbance energy bound and probabilistic levels for an analysis or
/// synthesis run. An empty u_bar uses the closed loop's own limits.
struct AnalysisSpec {
  double s = 0.0;
  Vector u_bar;
  probbounds::ProbLevels levels{0.1, 1e-3};
};

/// Index assignment of the LMI decision variables {gamma2, Q, U, Y[, X]}
/// inside a surrounding variable vector. Q is parameterized by its upper
/// triangle (row-major), Y and X row-major, U by its diagonal.
struct VariableIndices {
  int gamma2 = -1;
  std::vector<int> q; // n(n+1)/2
  std::vector<int> u; // n_u
  std::vector<int> y; // n_u * n
  std::vector<int> x; // (n_c+n_u) * n_u; empty for analysis at fixed D_aw
};

/// Regional analysis certificate blocks at fixed anti-windup gain:
/// Q > 0, U > 0 diagonal, the He[.] < 0 performance block, and one sector
/// block per input channel. All blocks are affine in {gamma2, Q, U, Y}.
std::vector<sdp::LmiBlock> build_analysis_blocks(const ClosedLoop& cl,
                                                 const Matrix& d_aw, double s);

/// Synthesis variant: the bilinear products D_aw U are replaced by the free
/// variable X, making the same structure affine in {gamma2, Q, U, Y, X}.
std::vector<sdp::LmiBlock> build_synthesis_blocks(const ClosedLoop& cl, double s);

/// Generic builder over an explicit index assignment; d_aw empty selects the
/// synthesis form (indices.x must then be set).
std::vector<sdp::LmiBlock> build_blocks(const ClosedLoop& cl, double s,
                                        const VariableIndices& indices,
                                        const Matrix* d_aw);

/// Contiguous index layouts matching build_analysis_blocks /
/// build_synthesis_blocks: [gamma2, Q, U, Y] and [gamma2, Q, U, Y, X].
VariableIndices analysis_layout(const ClosedLoop& cl);
VariableIndices synthesis_layout(const ClosedLoop& cl);
int analysis_var_count(const ClosedLoop& cl);
int synthesis_var_count(const ClosedLoop& cl);

struct Certificates {
  Matrix q;      // Lyapunov matrix
  Vector u_diag; // sector multiplier
  Matrix y;
};

struct AnalysisResult {
  bool feasible = false;
  double gamma_hat = 0.0;
  Certificates certificates;
  sdp::SdpSolution solution;
};

/// min gamma^2 subject to the analysis blocks; infeasibility at a given s is
/// a first-class result (the regional method has a bounded feasible range).
AnalysisResult analyze_nominal(const ClosedLoop& cl, const Matrix& d_aw, double s,
                               const sdp::SolverOptions& solver = {});

struct AwDesign {
  Matrix d_aw; // (n_c + n_u) x n_u
  double gamma_hat = 0.0;
  Certificates certificates;
  Matrix x;
  bool feasible = false;
  sdp::SdpSolution solution;
};

/// min gamma^2 over {gamma2, Q, U, Y, X}; the gain is recovered as
/// D_aw = X U^{-1} (U diagonal).
AwDesign synthesize_nominal(const ClosedLoop& cl, double s,
                            const sdp::SolverOptions& solver = {});

/// Uncertain closed loop: a sampler over the uncertainty distribution plus
/// the map realizing a closed loop from one sample.
struct UncertainClosedLoop {
  std::function<scenario::Sample(rng::Stream&)> sampler;
  std::function<ClosedLoop(const scenario::Sample&)> realize;
  ClosedLoop nominal; // fixes dimensions (and the point-mass case)
};

/// Uncertain benchmark-style loop: randomized circuit parameters closed with
/// a fixed controller and saturation limits.
UncertainClosedLoop circuit_uncertainty(const awsys::CircuitUncertainty& unc,
                                        const awsys::Controller& controller,
                                        const Vector& u_bar);

struct ProbabilisticOptions {
  enum class Mode { OneShot, Sequential };
  Mode mode = Mode::OneShot;
  bool shared_certificates = false; // common-certificate baseline
  probbounds::SequentialParams seq{};
  std::optional<std::int64_t> n_override;
  std::optional<int> n_theta_override;
  sdp::SolverOptions solver;
  int threads = 1;
};

struct SwcAnalysisResult {
  double gamma_hat = 0.0;
  bool feasible = false;
  scenario::SwcResult run;
};

/// Probabilistic gain estimate: theta = gamma^2, certificates {Q, U, Y}
/// replicated per sample.
SwcAnalysisResult swc_analysis(const UncertainClosedLoop& ucl, const Matrix& d_aw,
                               const AnalysisSpec& spec, std::uint64_t seed,
                               const ProbabilisticOptions& options = {});

struct SwcSynthesisResult {
  AwDesign design;
  scenario::SwcResult run;
};

/// Probabilistic synthesis: shared theta = {gamma^2, U, X}, per-sample
/// certificates {Q, Y}.
SwcSynthesisResult swc_synthesis(const UncertainClosedLoop& ucl,
                                 const AnalysisSpec& spec, std::uint64_t seed,
                                 const ProbabilisticOptions& options = {});

/// Constraint families backing the probabilistic drivers (exposed for
/// validation and statistical tests).
scenario::ConstraintFamily analysis_family(const UncertainClosedLoop& ucl,
                                           const Matrix& d_aw,
                                           const AnalysisSpec& spec);
scenario::ConstraintFamily synthesis_family(const UncertainClosedLoop& ucl,
                                            const AnalysisSpec& spec);

struct GainPoint {
  double s = 0.0;
  double gamma_hat = 0.0;
  bool feasible = false;
};

struct GainCurve {
  std::vector<GainPoint> points; // s strictly increasing
};

/// One analysis solve per grid point; infeasible points are flagged, never
/// interpolated over.
GainCurve gain_curve(const ClosedLoop& cl, const Matrix& d_aw,
                     const std::vector<double>& s_grid,
                     const sdp::SolverOptions& solver = {}, int threads = 1);

GainCurve gain_curve_probabilistic(const UncertainClosedLoop& ucl,
                                   const Matrix& d_aw,
                                   const std::vector<double>& s_grid,
                                   const probbounds::ProbLevels& levels,
                                   std::uint64_t seed,
                                   const ProbabilisticOptions& options = {});

} // namespace swc::awlmi
