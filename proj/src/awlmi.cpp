#include "swc/awlmi.hpp"

#include "swc/parallel.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace swc::awlmi {

namespace {

using sdp::BlockSense;
using sdp::LmiBlock;

int tri_count(int n) { return n * (n + 1) / 2; }

// upper-triangle basis for the symmetric variable Q
Matrix sym_basis(int n, int i, int j) {
  Matrix e = Matrix::Zero(n, n);
  e(i, j) = 1.0;
  e(j, i) = 1.0;
  return e;
}

// accumulator for one affine matrix block; duplicate variables merge
class AffineBlock {
public:
  explicit AffineBlock(int dim) : dim_(dim), constant_(Matrix::Zero(dim, dim)) {}

  void add_const(int r0, int c0, const Matrix& m) {
    constant_.block(r0, c0, m.rows(), m.cols()) += m;
  }
  void add(int var, int r0, int c0, const Matrix& m) {
    auto [it, inserted] = coeff_.try_emplace(var, Matrix::Zero(dim_, dim_));
    it->second.block(r0, c0, m.rows(), m.cols()) += m;
  }

  LmiBlock emit(BlockSense sense, bool strict, double margin,
                bool he_fold) const {
    LmiBlock block;
    block.dim = dim_;
    block.sense = sense;
    block.strict_ineq = strict;
    block.margin = margin;
    block.constant = he_fold ? Matrix(constant_ + constant_.transpose())
                             : constant_;
    block.coeffs.reserve(coeff_.size());
    for (const auto& [var, m] : coeff_)
      block.coeffs.emplace_back(var, he_fold ? Matrix(m + m.transpose()) : m);
    return block;
  }

private:
  int dim_;
  Matrix constant_;
  std::map<int, Matrix> coeff_;
};

// The randomized guarantees assume compact design and certificate domains;
// the box below realizes that compactness and keeps the central path bounded
// on problems with flat optimal faces (e.g. the synthesis multiplier U).
constexpr double kDomainBound = 1e6;

void append_box(std::vector<LmiBlock>& blocks, int var) {
  for (double sign : {1.0, -1.0}) {
    LmiBlock b;
    b.dim = 1;
    b.constant = Matrix::Constant(1, 1, kDomainBound);
    b.coeffs.emplace_back(var, Matrix::Constant(1, 1, sign));
    blocks.push_back(std::move(b));
  }
}

double closed_loop_scale(const ClosedLoop& cl) {
  double s = 0.0;
  for (const Matrix* m :
       {&cl.A_cl, &cl.B_clq, &cl.B_clv, &cl.B_clw, &cl.C_clz, &cl.D_clzq,
        &cl.D_clzv, &cl.D_clzw, &cl.C_clu, &cl.D_cluq, &cl.D_cluv, &cl.D_cluw})
    s = std::max(s, m->norm());
  return s;
}

void check_indices(const ClosedLoop& cl, const VariableIndices& vi,
                   bool need_x) {
  const int n = cl.n(), nu = cl.n_u(), nv = cl.n_v();
  if (vi.gamma2 < 0) throw std::invalid_argument("gamma2 index unset");
  if (static_cast<int>(vi.q.size()) != tri_count(n))
    throw std::invalid_argument("Q index count mismatch");
  if (static_cast<int>(vi.u.size()) != nu)
    throw std::invalid_argument("U index count mismatch");
  if (static_cast<int>(vi.y.size()) != nu * n)
    throw std::invalid_argument("Y index count mismatch");
  if (need_x && static_cast<int>(vi.x.size()) != nv * nu)
    throw std::invalid_argument("X index count mismatch");
}

} // namespace

VariableIndices analysis_layout(const ClosedLoop& cl) {
  const int n = cl.n(), nu = cl.n_u();
  VariableIndices vi;
  vi.gamma2 = 0;
  int next = 1;
  for (int k = 0; k < tri_count(n); ++k) vi.q.push_back(next++);
  for (int k = 0; k < nu; ++k) vi.u.push_back(next++);
  for (int k = 0; k < nu * n; ++k) vi.y.push_back(next++);
  return vi;
}

VariableIndices synthesis_layout(const ClosedLoop& cl) {
  VariableIndices vi = analysis_layout(cl);
  int next = 1 + tri_count(cl.n()) + cl.n_u() + cl.n_u() * cl.n();
  for (int k = 0; k < cl.n_v() * cl.n_u(); ++k) vi.x.push_back(next++);
  return vi;
}

int analysis_var_count(const ClosedLoop& cl) {
  return 1 + tri_count(cl.n()) + cl.n_u() + cl.n_u() * cl.n();
}

int synthesis_var_count(const ClosedLoop& cl) {
  return analysis_var_count(cl) + cl.n_v() * cl.n_u();
}

std::vector<LmiBlock> build_blocks(const ClosedLoop& cl, double s,
                                   const VariableIndices& vi,
                                   const Matrix* d_aw) {
  if (s <= 0.0) throw std::invalid_argument("s must be positive");
  const int n = cl.n(), nu = cl.n_u(), nw = cl.n_w(), nz = cl.n_z();
  const int nv = cl.n_v();
  const bool synthesis = d_aw == nullptr;
  check_indices(cl, vi, synthesis);
  if (!synthesis && (d_aw->rows() != nv || d_aw->cols() != nu))
    throw std::invalid_argument("D_aw must be (n_c+n_u) x n_u");
  if (cl.u_bar.size() != nu)
    throw std::invalid_argument("closed loop u_bar length mismatch");

  const double margin = 1e-7 * (1.0 + closed_loop_scale(cl));
  std::vector<LmiBlock> blocks;
  blocks.reserve(3 + nu);

  auto q_var = [&](int i, int j) { return vi.q[i * n - i * (i - 1) / 2 + (j - i)]; };

  // Q > 0
  {
    AffineBlock qb(n);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) qb.add(q_var(i, j), 0, 0, sym_basis(n, i, j));
    blocks.push_back(qb.emit(BlockSense::PSD, true, -1.0, false));
  }

  // U > 0 diagonal (diagonality is structural: only diagonal entries exist)
  {
    AffineBlock ub(nu);
    for (int k = 0; k < nu; ++k) {
      Matrix e = Matrix::Zero(nu, nu);
      e(k, k) = 1.0;
      ub.add(vi.u[k], 0, 0, e);
    }
    blocks.push_back(ub.emit(BlockSense::PSD, true, -1.0, false));
  }

  // He[.] < 0 performance block; row offsets of the four block-rows
  {
    const int rx = 0, ru = n, rw = n + nu, rz = n + nu + nw;
    AffineBlock he(n + nu + nw + nz);

    // (x,x) A_cl Q ; (u,x) C_clu Q ; (z,x) C_clz Q
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        Matrix e = sym_basis(n, i, j);
        he.add(q_var(i, j), rx, rx, cl.A_cl * e);
        he.add(q_var(i, j), ru, rx, cl.C_clu * e);
        he.add(q_var(i, j), rz, rx, cl.C_clz * e);
      }

    // columns touched by U (and X or the folded D_aw)
    const Matrix bq_eff = synthesis ? cl.B_clq : cl.B_clq + cl.B_clv * (*d_aw);
    const Matrix duq_eff =
        synthesis ? cl.D_cluq : cl.D_cluq + cl.D_cluv * (*d_aw);
    const Matrix dzq_eff =
        synthesis ? cl.D_clzq : cl.D_clzq + cl.D_clzv * (*d_aw);
    for (int k = 0; k < nu; ++k) {
      Matrix col;
      col = Matrix::Zero(n, nu);
      col.col(k) = bq_eff.col(k);
      he.add(vi.u[k], rx, ru, col);
      col = Matrix::Zero(nu, nu);
      col.col(k) = duq_eff.col(k);
      col(k, k) -= 1.0; // the -U term
      he.add(vi.u[k], ru, ru, col);
      col = Matrix::Zero(nz, nu);
      col.col(k) = dzq_eff.col(k);
      he.add(vi.u[k], rz, ru, col);
    }
    if (synthesis) {
      for (int r = 0; r < nv; ++r)
        for (int c = 0; c < nu; ++c) {
          const int var = vi.x[r * nu + c];
          Matrix col;
          col = Matrix::Zero(n, nu);
          col.col(c) = cl.B_clv.col(r);
          he.add(var, rx, ru, col);
          col = Matrix::Zero(nu, nu);
          col.col(c) = cl.D_cluv.col(r);
          he.add(var, ru, ru, col);
          col = Matrix::Zero(nz, nu);
          col.col(c) = cl.D_clzv.col(r);
          he.add(var, rz, ru, col);
        }
    }

    // Y^T in the (x,u) slot
    for (int k = 0; k < nu; ++k)
      for (int l = 0; l < n; ++l) {
        Matrix e = Matrix::Zero(n, nu);
        e(l, k) = 1.0;
        he.add(vi.y[k * n + l], rx, ru, e);
      }

    he.add_const(rx, rw, cl.B_clw);
    he.add_const(ru, rw, cl.D_cluw);
    he.add_const(rw, rw, -0.5 * Matrix::Identity(nw, nw));
    he.add_const(rz, rw, cl.D_clzw);
    he.add(vi.gamma2, rz, rz, -0.5 * Matrix::Identity(nz, nz));

    blocks.push_back(he.emit(BlockSense::NSD, true, margin, true));
  }

  // sector blocks, one per input channel
  for (int k = 0; k < nu; ++k) {
    AffineBlock sec(n + 1);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) sec.add(q_var(i, j), 0, 0, sym_basis(n, i, j));
    for (int l = 0; l < n; ++l) {
      Matrix e = Matrix::Zero(n + 1, n + 1);
      e(l, n) = 1.0;
      e(n, l) = 1.0;
      sec.add(vi.y[k * n + l], 0, 0, e);
    }
    Matrix corner = Matrix::Zero(1, 1);
    corner(0, 0) = cl.u_bar(k) * cl.u_bar(k) / (s * s);
    sec.add_const(n, n, corner);
    blocks.push_back(sec.emit(BlockSense::PSD, false, -1.0, false));
  }

  return blocks;
}

namespace {

// certificate/design blocks plus the domain box; the multiplier U and the
// synthesis variable X are the coordinates with flat rays, the others are
// pinned by the matrix inequalities themselves
std::vector<LmiBlock> build_bounded_blocks(const ClosedLoop& cl, double s,
                                           const VariableIndices& vi,
                                           const Matrix* d_aw,
                                           bool box_multiplier) {
  std::vector<LmiBlock> blocks = build_blocks(cl, s, vi, d_aw);
  // Compactification policy: the multiplier U (and the synthesis variable X)
  // carries flat rays that break path-following on the large sampled
  // programs, so those coordinates are boxed there and in synthesis. Plain
  // nominal analysis resolves more sharply unboxed, backed by the level-set
  // fallback.
  if (box_multiplier) {
    for (int v : vi.u) append_box(blocks, v);
    for (int v : vi.x) append_box(blocks, v);
  }
  return blocks;
}

} // namespace

std::vector<LmiBlock> build_analysis_blocks(const ClosedLoop& cl,
                                            const Matrix& d_aw, double s) {
  return build_blocks(cl, s, analysis_layout(cl), &d_aw);
}

std::vector<LmiBlock> build_synthesis_blocks(const ClosedLoop& cl, double s) {
  return build_blocks(cl, s, synthesis_layout(cl), nullptr);
}

namespace {

Matrix q_from_values(const sdp::Vector& values, const VariableIndices& vi, int n) {
  Matrix q(n, n);
  int idx = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      q(i, j) = values(vi.q[idx]);
      q(j, i) = q(i, j);
      ++idx;
    }
  return q;
}

Certificates certificates_from(const sdp::Vector& values,
                               const VariableIndices& vi, const ClosedLoop& cl) {
  Certificates certs;
  const int n = cl.n(), nu = cl.n_u();
  certs.q = q_from_values(values, vi, n);
  certs.u_diag = Vector(nu);
  for (int k = 0; k < nu; ++k) certs.u_diag(k) = values(vi.u[k]);
  certs.y = Matrix(nu, n);
  for (int k = 0; k < nu; ++k)
    for (int l = 0; l < n; ++l) certs.y(k, l) = values(vi.y[k * n + l]);
  return certs;
}

Matrix x_from_values(const sdp::Vector& values, const VariableIndices& vi,
                     const ClosedLoop& cl) {
  Matrix x(cl.n_v(), cl.n_u());
  for (int r = 0; r < cl.n_v(); ++r)
    for (int c = 0; c < cl.n_u(); ++c) x(r, c) = values(vi.x[r * cl.n_u() + c]);
  return x;
}

Matrix recover_gain(const Matrix& x, const Vector& u_diag) {
  Matrix d_aw = x;
  for (Eigen::Index c = 0; c < d_aw.cols(); ++c) d_aw.col(c) /= u_diag(c);
  return d_aw;
}

// blocks with gamma2 (variable 0) pinned to a value; remaining variables
// shift down by one
std::vector<LmiBlock> pin_gamma2(const std::vector<LmiBlock>& blocks,
                                 double gamma2) {
  std::vector<LmiBlock> out;
  out.reserve(blocks.size());
  for (const auto& block : blocks) {
    LmiBlock b;
    b.dim = block.dim;
    b.sense = block.sense;
    b.strict_ineq = block.strict_ineq;
    b.margin = block.margin;
    b.constant = block.constant;
    for (const auto& [var, coeff] : block.coeffs) {
      if (var == 0)
        b.constant += gamma2 * coeff;
      else
        b.coeffs.emplace_back(var - 1, coeff);
    }
    out.push_back(std::move(b));
  }
  return out;
}

// level-set iteration on gamma^2: each probe is a pure certificate
// feasibility problem, which resolves much more reliably than optimizing
// through degenerate faces. Returns the certificate point at the accepted
// level, or an empty vector when no feasible level is found.
struct GammaIteration {
  bool feasible = false;
  double gamma2 = 0.0;
  sdp::Vector point; // remaining variables at the accepted level
};

GammaIteration gamma_iteration(const std::vector<LmiBlock>& blocks, int n_vars,
                               const sdp::SolverOptions& solver) {
  auto probe = [&](double g2, sdp::Vector* point) {
    sdp::SdpProblem prob;
    prob.n_vars = n_vars - 1;
    prob.objective = sdp::Vector::Zero(prob.n_vars);
    prob.blocks = pin_gamma2(blocks, g2);
    sdp::SdpSolution sol = sdp::solve_feasibility(prob, solver);
    // constructive acceptance only: the returned point must itself satisfy
    // the blocks (margins in original units, as check_point measures them)
    bool ok = sol.margin >= -solver.feasibility_tol;
    if (ok && point) *point = sol.values;
    return ok;
  };

  GammaIteration result;
  double hi = 1.0;
  int expansions = 0;
  while (!probe(hi, &result.point)) {
    hi *= 4.0;
    if (++expansions > 20) return result; // no certificate up to 1e12
  }
  double lo = 0.0;
  for (int i = 0; i < 60 && hi - lo > 1e-7 * (1.0 + hi); ++i) {
    double mid = 0.5 * (lo + hi);
    if (probe(mid, &result.point))
      hi = mid;
    else
      lo = mid;
  }
  result.feasible = true;
  result.gamma2 = hi;
  return result;
}

ClosedLoop with_u_bar(ClosedLoop cl, const Vector& u_bar) {
  if (u_bar.size() > 0) {
    if (u_bar.size() != cl.u_bar.size() || !(u_bar.array() > 0.0).all())
      throw std::invalid_argument("saturation override must be positive per channel");
    cl.u_bar = u_bar;
  }
  return cl;
}

} // namespace

AnalysisResult analyze_nominal(const ClosedLoop& cl, const Matrix& d_aw, double s,
                               const sdp::SolverOptions& solver) {
  const VariableIndices vi = analysis_layout(cl);
  sdp::SdpProblem problem;
  problem.n_vars = analysis_var_count(cl);
  problem.objective = sdp::Vector::Zero(problem.n_vars);
  problem.objective(vi.gamma2) = 1.0;
  problem.blocks = build_bounded_blocks(cl, s, vi, &d_aw, false);

  AnalysisResult result;
  result.solution = sdp::solve(problem, solver);
  result.feasible = result.solution.status == sdp::SolveStatus::Optimal;

  if (result.solution.status == sdp::SolveStatus::NumericalFailure ||
      result.solution.reduced_accuracy) {
    // level-set cross-check (certificate feasibility per gamma^2 value);
    // adopt its value when it beats or rescues the generic path
    GammaIteration level = gamma_iteration(problem.blocks, problem.n_vars, solver);
    if (level.feasible &&
        (!result.feasible || level.gamma2 < result.solution.values(0))) {
      result.feasible = true;
      result.solution.status = sdp::SolveStatus::Optimal;
      result.solution.reduced_accuracy = false;
      result.solution.values = sdp::Vector(problem.n_vars);
      result.solution.values(0) = level.gamma2;
      result.solution.values.tail(problem.n_vars - 1) = level.point;
      result.solution.objective_value = level.gamma2;
    }
  }

  if (result.feasible) {
    result.gamma_hat =
        std::sqrt(std::max(0.0, result.solution.values(vi.gamma2)));
    result.certificates = certificates_from(result.solution.values, vi, cl);
  }
  return result;
}

AwDesign synthesize_nominal(const ClosedLoop& cl, double s,
                            const sdp::SolverOptions& solver) {
  const VariableIndices vi = synthesis_layout(cl);
  sdp::SdpProblem problem;
  problem.n_vars = synthesis_var_count(cl);
  problem.objective = sdp::Vector::Zero(problem.n_vars);
  problem.objective(vi.gamma2) = 1.0;
  problem.blocks = build_bounded_blocks(cl, s, vi, nullptr, true);

  AwDesign design;
  design.solution = sdp::solve(problem, solver);
  design.feasible = design.solution.status == sdp::SolveStatus::Optimal;

  if (design.solution.status == sdp::SolveStatus::NumericalFailure ||
      design.solution.reduced_accuracy) {
    GammaIteration level = gamma_iteration(problem.blocks, problem.n_vars, solver);
    if (level.feasible &&
        (!design.feasible || level.gamma2 < design.solution.values(0))) {
      design.feasible = true;
      design.solution.status = sdp::SolveStatus::Optimal;
      design.solution.reduced_accuracy = false;
      design.solution.values = sdp::Vector(problem.n_vars);
      design.solution.values(0) = level.gamma2;
      design.solution.values.tail(problem.n_vars - 1) = level.point;
      design.solution.objective_value = level.gamma2;
    }
  }

  if (design.feasible) {
    design.gamma_hat =
        std::sqrt(std::max(0.0, design.solution.values(vi.gamma2)));
    design.certificates = certificates_from(design.solution.values, vi, cl);
    design.x = x_from_values(design.solution.values, vi, cl);
    design.d_aw = recover_gain(design.x, design.certificates.u_diag);
  }
  return design;
}

UncertainClosedLoop circuit_uncertainty(const awsys::CircuitUncertainty& unc,
                                        const awsys::Controller& controller,
                                        const Vector& u_bar) {
  UncertainClosedLoop ucl;
  awsys::Plant nominal_plant = awsys::circuit_to_plant(unc.means);
  ucl.nominal = awsys::assemble_closed_loop(nominal_plant, controller, u_bar);
  const awsys::CircuitParams means = unc.means;
  const double relative_std = unc.relative_std;
  ucl.sampler = [means, relative_std](rng::Stream& stream) {
    return awsys::draw_circuit(means, relative_std, stream).to_vector();
  };
  const awsys::Controller fixed = controller;
  const Vector limits = u_bar;
  ucl.realize = [fixed, limits](const scenario::Sample& q) {
    awsys::Plant plant =
        awsys::circuit_to_plant(awsys::CircuitParams::from_vector(q));
    return awsys::assemble_closed_loop(plant, fixed, limits);
  };
  return ucl;
}

scenario::ConstraintFamily analysis_family(const UncertainClosedLoop& ucl,
                                           const Matrix& d_aw,
                                           const AnalysisSpec& spec) {
  const ClosedLoop& ref = ucl.nominal;
  const int n = ref.n(), nu = ref.n_u();

  scenario::ConstraintFamily family;
  family.n_theta = 1;
  family.n_xi = tri_count(n) + nu + nu * n;
  family.objective = sdp::Vector::Ones(1);
  family.sampler = ucl.sampler;

  // certificate slice (Q, U, Y) sits right after theta, which matches the
  // contiguous analysis layout
  const double s = spec.s;
  const Vector u_bar = spec.u_bar;
  const Matrix gain = d_aw;
  auto realize = ucl.realize;
  family.generator = [realize, gain, s, u_bar,
                      ref](const scenario::Sample& q) {
    ClosedLoop cl = with_u_bar(realize(q), u_bar);
    return build_bounded_blocks(cl, s, analysis_layout(cl), &gain, true);
  };
  return family;
}

scenario::ConstraintFamily synthesis_family(const UncertainClosedLoop& ucl,
                                            const AnalysisSpec& spec) {
  const ClosedLoop& ref = ucl.nominal;
  const int n = ref.n(), nu = ref.n_u(), nv = ref.n_v();

  scenario::ConstraintFamily family;
  family.n_theta = 1 + nu + nv * nu; // gamma2, diag U, X
  family.n_xi = tri_count(n) + nu * n; // Q, Y per sample
  family.objective = sdp::Vector::Zero(family.n_theta);
  family.objective(0) = 1.0;
  family.sampler = ucl.sampler;

  VariableIndices vi;
  vi.gamma2 = 0;
  for (int k = 0; k < nu; ++k) vi.u.push_back(1 + k);
  for (int k = 0; k < nv * nu; ++k) vi.x.push_back(1 + nu + k);
  int next = family.n_theta;
  for (int k = 0; k < tri_count(n); ++k) vi.q.push_back(next++);
  for (int k = 0; k < nu * n; ++k) vi.y.push_back(next++);

  const double s = spec.s;
  const Vector u_bar = spec.u_bar;
  auto realize = ucl.realize;
  family.generator = [realize, s, u_bar, vi](const scenario::Sample& q) {
    ClosedLoop cl = with_u_bar(realize(q), u_bar);
    return build_bounded_blocks(cl, s, vi, nullptr, true);
  };
  return family;
}

namespace {

scenario::SwcResult run_probabilistic(const scenario::ConstraintFamily& family,
                                      const probbounds::ProbLevels& levels,
                                      std::uint64_t seed,
                                      const ProbabilisticOptions& options) {
  const scenario::ConstraintFamily effective =
      options.shared_certificates ? scenario::with_shared_certificates(family)
                                  : family;
  if (options.mode == ProbabilisticOptions::Mode::Sequential) {
    scenario::SequentialOptions seq_options;
    seq_options.seq = options.seq;
    seq_options.n_full_override = options.n_override;
    // the sample-complexity convention follows the underlying family's
    // design-variable count unless explicitly overridden
    seq_options.n_theta_override =
        options.n_theta_override.value_or(family.n_theta);
    seq_options.solver = options.solver;
    seq_options.threads = options.threads;
    return scenario::sequential_swc(effective, levels, seq_options, seed);
  }
  scenario::OneShotOptions one_shot;
  one_shot.n_override = options.n_override;
  one_shot.n_theta_override = options.n_theta_override.value_or(family.n_theta);
  one_shot.solver = options.solver;
  return scenario::one_shot_swc(effective, levels, one_shot, seed);
}

} // namespace

SwcAnalysisResult swc_analysis(const UncertainClosedLoop& ucl, const Matrix& d_aw,
                               const AnalysisSpec& spec, std::uint64_t seed,
                               const ProbabilisticOptions& options) {
  scenario::ConstraintFamily family = analysis_family(ucl, d_aw, spec);
  SwcAnalysisResult result;
  result.run = run_probabilistic(family, spec.levels, seed, options);
  result.feasible = result.run.status == sdp::SolveStatus::Optimal;
  if (result.feasible)
    result.gamma_hat = std::sqrt(std::max(0.0, result.run.theta(0)));
  return result;
}

SwcSynthesisResult swc_synthesis(const UncertainClosedLoop& ucl,
                                 const AnalysisSpec& spec, std::uint64_t seed,
                                 const ProbabilisticOptions& options) {
  scenario::ConstraintFamily family = synthesis_family(ucl, spec);
  const int nu = ucl.nominal.n_u(), nv = ucl.nominal.n_v();

  SwcSynthesisResult result;
  result.run = run_probabilistic(family, spec.levels, seed, options);
  result.design.feasible = result.run.status == sdp::SolveStatus::Optimal;
  result.design.solution.status = result.run.status;
  if (!result.design.feasible) return result;

  const sdp::Vector& theta = result.run.theta;
  result.design.gamma_hat = std::sqrt(std::max(0.0, theta(0)));
  Vector u_diag = theta.segment(1, nu);
  Matrix x(nv, nu);
  for (int r = 0; r < nv; ++r)
    for (int c = 0; c < nu; ++c) x(r, c) = theta(1 + nu + r * nu + c);
  result.design.x = x;
  result.design.certificates.u_diag = u_diag;
  result.design.d_aw = recover_gain(x, u_diag);
  return result;
}

GainCurve gain_curve(const ClosedLoop& cl, const Matrix& d_aw,
                     const std::vector<double>& s_grid,
                     const sdp::SolverOptions& solver, int threads) {
  for (std::size_t i = 0; i + 1 < s_grid.size(); ++i)
    if (!(s_grid[i] < s_grid[i + 1]))
      throw std::invalid_argument("s grid must be strictly increasing");
  if (!s_grid.empty() && s_grid.front() <= 0.0)
    throw std::invalid_argument("s grid must be positive");

  GainCurve curve;
  curve.points.resize(s_grid.size());
  parallel_for(static_cast<std::int64_t>(s_grid.size()), threads,
               [&](std::int64_t i) {
                 AnalysisResult r = analyze_nominal(cl, d_aw, s_grid[i], solver);
                 curve.points[i] = {s_grid[i], r.gamma_hat, r.feasible};
               });
  return curve;
}

GainCurve gain_curve_probabilistic(const UncertainClosedLoop& ucl,
                                   const Matrix& d_aw,
                                   const std::vector<double>& s_grid,
                                   const probbounds::ProbLevels& levels,
                                   std::uint64_t seed,
                                   const ProbabilisticOptions& options) {
  for (std::size_t i = 0; i + 1 < s_grid.size(); ++i)
    if (!(s_grid[i] < s_grid[i + 1]))
      throw std::invalid_argument("s grid must be strictly increasing");

  GainCurve curve;
  curve.points.resize(s_grid.size());
  rng::Stream root(seed);
  for (std::size_t i = 0; i < s_grid.size(); ++i) {
    AnalysisSpec spec;
    spec.s = s_grid[i];
    spec.levels = levels;
    std::uint64_t point_seed = root.split(i).next_u64();
    SwcAnalysisResult r = swc_analysis(ucl, d_aw, spec, point_seed, options);
    curve.points[i] = {s_grid[i], r.gamma_hat, r.feasible};
  }
  return curve;
}

} // namespace swc::awlmi
