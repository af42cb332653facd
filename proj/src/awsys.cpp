#include "swc/awsys.hpp"

#include "swc/rng.hpp"

#include <json.hpp>

#include <cmath>
#include <stdexcept>

namespace swc::awsys {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

} // namespace

void Plant::validate() const {
  require(A_p.rows() == A_p.cols(), "A_p must be square");
  require(B_pu.rows() == n_p() && B_pw.rows() == n_p(), "B dimensions");
  require(C_py.cols() == n_p() && C_pz.cols() == n_p(), "C dimensions");
  require(D_pyu.rows() == n_y() && D_pyu.cols() == n_u(), "D_pyu dimensions");
  require(D_pyw.rows() == n_y() && D_pyw.cols() == n_w(), "D_pyw dimensions");
  require(D_pzu.rows() == n_z() && D_pzu.cols() == n_u(), "D_pzu dimensions");
  require(D_pzw.rows() == n_z() && D_pzw.cols() == n_w(), "D_pzw dimensions");
}

void Controller::validate(const Plant& plant) const {
  require(A_c.rows() == A_c.cols(), "A_c must be square");
  require(B_cy.rows() == n_c() && B_cy.cols() == plant.n_y(), "B_cy dimensions");
  require(B_cw.rows() == n_c() && B_cw.cols() == plant.n_w(), "B_cw dimensions");
  require(C_c.rows() == plant.n_u() && C_c.cols() == n_c(), "C_c dimensions");
  require(D_cy.rows() == plant.n_u() && D_cy.cols() == plant.n_y(),
          "D_cy dimensions");
  require(D_cw.rows() == plant.n_u() && D_cw.cols() == plant.n_w(),
          "D_cw dimensions");
}

ClosedLoop assemble_closed_loop(const Plant& plant, const Controller& controller,
                                const Vector& u_bar) {
  plant.validate();
  controller.validate(plant);
  require(plant.D_pyu.norm() == 0.0,
          "assembly requires D_pyu = 0: plants with direct u->y feedthrough "
          "introduce an algebraic loop this form does not model");
  const int np = plant.n_p(), nc = controller.n_c(), nu = plant.n_u();
  const int nw = plant.n_w(), nz = plant.n_z();
  const int n = np + nc;
  require(u_bar.size() == nu, "u_bar length must equal the input count");
  require((u_bar.array() > 0.0).all(), "saturation limits must be positive");

  const Matrix dw = plant.D_pyw;         // y = C_py x_p + D_pyw w
  const Matrix duw = controller.D_cy * dw + controller.D_cw;

  ClosedLoop cl;
  cl.u_bar = u_bar;

  cl.A_cl = Matrix::Zero(n, n);
  cl.A_cl.topLeftCorner(np, np) =
      plant.A_p + plant.B_pu * controller.D_cy * plant.C_py;
  cl.A_cl.topRightCorner(np, nc) = plant.B_pu * controller.C_c;
  cl.A_cl.bottomLeftCorner(nc, np) = controller.B_cy * plant.C_py;
  cl.A_cl.bottomRightCorner(nc, nc) = controller.A_c;

  cl.B_clq = Matrix::Zero(n, nu);
  cl.B_clq.topRows(np) = -plant.B_pu;

  cl.B_clv = Matrix::Zero(n, nc + nu);
  cl.B_clv.topRightCorner(np, nu) = plant.B_pu;
  cl.B_clv.bottomLeftCorner(nc, nc) = Matrix::Identity(nc, nc);

  cl.B_clw = Matrix::Zero(n, nw);
  cl.B_clw.topRows(np) = plant.B_pu * duw + plant.B_pw;
  cl.B_clw.bottomRows(nc) = controller.B_cy * dw + controller.B_cw;

  cl.C_clu = Matrix::Zero(nu, n);
  cl.C_clu.leftCols(np) = controller.D_cy * plant.C_py;
  cl.C_clu.rightCols(nc) = controller.C_c;
  cl.D_cluq = Matrix::Zero(nu, nu);
  cl.D_cluv = Matrix::Zero(nu, nc + nu);
  cl.D_cluv.rightCols(nu) = Matrix::Identity(nu, nu);
  cl.D_cluw = duw;

  cl.C_clz = Matrix::Zero(nz, n);
  cl.C_clz.leftCols(np) = plant.C_pz + plant.D_pzu * controller.D_cy * plant.C_py;
  cl.C_clz.rightCols(nc) = plant.D_pzu * controller.C_c;
  cl.D_clzq = -plant.D_pzu;
  cl.D_clzv = Matrix::Zero(nz, nc + nu);
  cl.D_clzv.rightCols(nu) = plant.D_pzu;
  cl.D_clzw = plant.D_pzu * duw + plant.D_pzw;

  return cl;
}

Vector CircuitParams::to_vector() const {
  Vector v(8);
  v << r1, r2, r3, r4, r5, c1, c2, c3;
  return v;
}

CircuitParams CircuitParams::from_vector(const Vector& v) {
  if (v.size() != 8) throw std::invalid_argument("circuit vector must have 8 entries");
  return CircuitParams{v(0), v(1), v(2), v(3), v(4), v(5), v(6), v(7)};
}

Plant circuit_to_plant(const CircuitParams& p) {
  for (double v : {p.r1, p.r2, p.r3, p.r4, p.r5, p.c1, p.c2, p.c3})
    require(v > 0.0, "circuit parameters must be positive");

  // Three cascaded non-loading sections with states x = [vC1, vC2, v3]:
  //   R1 feeding the series R2-C1 shunt       (zero at -1/(R2 C1)),
  //   R3 feeding the series R4-C2 shunt       (zero at -1/(R4 C2)),
  //   R5 feeding C3.
  // Section poles -1/((R1+R2)C1), -1/((R3+R4)C2), -1/(R5 C3) reproduce the
  // published denominator; a loading (single-node) ladder reading gets the
  // zeros right but not the poles.
  const double g1 = 1.0 / p.r1, g2 = 1.0 / p.r2, g3 = 1.0 / p.r3;
  const double g4 = 1.0 / p.r4, g5 = 1.0 / p.r5;
  require(g1 + g2 > 1e-300 && g3 + g4 > 1e-300, "singular node conductance");

  // section node voltages: v1 = alpha Vi + beta vC1, v2 = gamma v1 + delta vC2
  const double alpha = g1 / (g1 + g2), beta = g2 / (g1 + g2);
  const double gamma = g3 / (g3 + g4), delta = g4 / (g3 + g4);
  const double a1 = g1 * g2 / ((g1 + g2) * p.c1); // 1/((R1+R2) C1)
  const double a2 = g3 * g4 / ((g3 + g4) * p.c2); // 1/((R3+R4) C2)
  const double a3 = g5 / p.c3;                    // 1/(R5 C3)

  Matrix a = Matrix::Zero(3, 3);
  Matrix b = Matrix::Zero(3, 1);
  a(0, 0) = -a1;
  b(0, 0) = a1;
  a(1, 0) = a2 * beta;
  a(1, 1) = -a2;
  b(1, 0) = a2 * alpha;
  a(2, 0) = a3 * gamma * beta;
  a(2, 1) = a3 * delta;
  a(2, 2) = -a3;
  b(2, 0) = a3 * gamma * alpha;

  Matrix c_raw = Matrix::Zero(1, 3);
  c_raw(0, 2) = 1.0; // unscaled output is the C3 node voltage

  // amplifier gain: reciprocal of the leading numerator coefficient, so the
  // input-output numerator is monic
  TransferFunction tf = siso_transfer(a, b, c_raw);
  require(std::fabs(tf.numerator(0)) > 1e-300, "degenerate circuit numerator");
  const double k = 1.0 / tf.numerator(0);

  Plant plant;
  plant.A_p = a;
  plant.B_pu = b;
  plant.B_pw = Matrix::Zero(3, 1);
  plant.C_py = k * c_raw;
  plant.D_pyu = Matrix::Zero(1, 1);
  plant.D_pyw = Matrix::Zero(1, 1);
  plant.C_pz = -plant.C_py; // z = w - y
  plant.D_pzu = Matrix::Zero(1, 1);
  plant.D_pzw = Matrix::Ones(1, 1);
  return plant;
}

CircuitParams draw_circuit(const CircuitParams& means, double relative_std,
                           rng::Stream& stream) {
  require(relative_std > 0.0 && relative_std < 0.5,
          "relative_std must lie in (0, 0.5)");
  const Vector mean_vec = means.to_vector();
  Vector v(8);
  for (int j = 0; j < 8; ++j) {
    double value;
    do {
      value = mean_vec(j) * (1.0 + relative_std * stream.next_normal());
    } while (value <= 0.0); // resample, never clip
    v(j) = value;
  }
  return CircuitParams::from_vector(v);
}

std::vector<CircuitParams> sample_circuit(const CircuitUncertainty& unc,
                                          std::int64_t count) {
  require(count >= 1, "sample count must be >= 1");
  require(unc.relative_std > 0.0 && unc.relative_std < 0.5,
          "relative_std must lie in (0, 0.5)");
  std::vector<CircuitParams> out;
  out.reserve(count);
  rng::Stream root(unc.seed);
  for (std::int64_t i = 0; i < count; ++i) {
    rng::Stream child = root.split(static_cast<std::uint64_t>(i));
    out.push_back(draw_circuit(unc.means, unc.relative_std, child));
  }
  return out;
}

std::pair<Plant, Controller> benchmark_nominal() {
  Plant plant;
  plant.A_p = Matrix(3, 3);
  plant.A_p << -10.6, -6.09, -0.9, 1, 0, 0, 0, 1, 0;
  plant.B_pu = Matrix(3, 1);
  plant.B_pu << 1, 0, 0;
  plant.B_pw = Matrix::Zero(3, 1);
  plant.C_pz = Matrix(1, 3);
  plant.C_pz << -1, -11, -30;
  plant.D_pzu = Matrix::Zero(1, 1);
  plant.D_pzw = Matrix::Ones(1, 1);
  plant.C_py = Matrix(1, 3);
  plant.C_py << 1, 11, 30;
  plant.D_pyu = Matrix::Zero(1, 1);
  plant.D_pyw = Matrix::Zero(1, 1);

  // PID acting on the tracking error w - y; written in (y, w) input form the
  // measured-output channels carry the minus sign. With the signs the other
  // way around the loop is positive-feedback and unstable, contradicting the
  // design premise of an asymptotically stable unconstrained loop.
  Controller ctrl;
  ctrl.A_c = Matrix(2, 2);
  ctrl.A_c << -80, 0, 1, 0;
  ctrl.B_cy = Matrix(2, 1);
  ctrl.B_cy << -1, 0;
  ctrl.B_cw = Matrix(2, 1);
  ctrl.B_cw << 1, 0;
  ctrl.C_c = Matrix(1, 2);
  ctrl.C_c << 20.25, 1600;
  ctrl.D_cy = Matrix(1, 1);
  ctrl.D_cy << -80;
  ctrl.D_cw = Matrix(1, 1);
  ctrl.D_cw << 80;
  return {plant, ctrl};
}

CircuitParams benchmark_circuit_params() {
  return CircuitParams{313.0, 20.0, 315.0, 17.0, 10.0, 0.01, 0.01, 0.01};
}

TransferFunction siso_transfer(const Matrix& a, const Matrix& b, const Matrix& c,
                               double d) {
  require(a.rows() == a.cols(), "A must be square");
  require(b.cols() == 1 && c.rows() == 1, "transfer extraction is SISO");
  const int n = static_cast<int>(a.rows());

  // Faddeev-LeVerrier: adj(sI - A) = sum_k M_k s^(n-1-k) alongside the
  // characteristic polynomial coefficients
  Vector den(n + 1);
  den(0) = 1.0;
  Vector num_sp(n); // strictly proper part, degree n-1 downward
  Matrix m = Matrix::Identity(n, n);
  for (int k = 0; k < n; ++k) {
    num_sp(k) = (c * m * b)(0, 0);
    Matrix am = a * m;
    double ck = -am.trace() / (k + 1);
    den(k + 1) = ck;
    m = am + ck * Matrix::Identity(n, n);
  }

  TransferFunction tf;
  tf.denominator = den;
  if (d == 0.0) {
    tf.numerator = num_sp;
  } else {
    tf.numerator = d * den;
    tf.numerator.tail(n) += num_sp;
  }
  return tf;
}

// ---------------------------------------------------------------------------
// JSON serialization (dense row-major matrices with explicit dimensions)
// ---------------------------------------------------------------------------

namespace {

nlohmann::json mat_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(rows)}};
}

Matrix mat_from(const nlohmann::json& j) {
  const auto nr = j.at("rows").get<Eigen::Index>();
  const auto nc = j.at("cols").get<Eigen::Index>();
  Matrix m(nr, nc);
  const auto& data = j.at("data");
  for (Eigen::Index i = 0; i < nr; ++i)
    for (Eigen::Index jj = 0; jj < nc; ++jj)
      m(i, jj) = data.at(i).at(jj).get<double>();
  return m;
}

nlohmann::json plant_json(const Plant& p) {
  return {{"A_p", mat_json(p.A_p)},   {"B_pu", mat_json(p.B_pu)},
          {"B_pw", mat_json(p.B_pw)}, {"C_py", mat_json(p.C_py)},
          {"D_pyu", mat_json(p.D_pyu)}, {"D_pyw", mat_json(p.D_pyw)},
          {"C_pz", mat_json(p.C_pz)}, {"D_pzu", mat_json(p.D_pzu)},
          {"D_pzw", mat_json(p.D_pzw)}};
}

Plant plant_from(const nlohmann::json& j) {
  Plant p;
  p.A_p = mat_from(j.at("A_p"));
  p.B_pu = mat_from(j.at("B_pu"));
  p.B_pw = mat_from(j.at("B_pw"));
  p.C_py = mat_from(j.at("C_py"));
  p.D_pyu = mat_from(j.at("D_pyu"));
  p.D_pyw = mat_from(j.at("D_pyw"));
  p.C_pz = mat_from(j.at("C_pz"));
  p.D_pzu = mat_from(j.at("D_pzu"));
  p.D_pzw = mat_from(j.at("D_pzw"));
  p.validate();
  return p;
}

nlohmann::json controller_json(const Controller& c) {
  return {{"A_c", mat_json(c.A_c)}, {"B_cy", mat_json(c.B_cy)},
          {"B_cw", mat_json(c.B_cw)}, {"C_c", mat_json(c.C_c)},
          {"D_cy", mat_json(c.D_cy)}, {"D_cw", mat_json(c.D_cw)}};
}

Controller controller_from(const nlohmann::json& j) {
  Controller c;
  c.A_c = mat_from(j.at("A_c"));
  c.B_cy = mat_from(j.at("B_cy"));
  c.B_cw = mat_from(j.at("B_cw"));
  c.C_c = mat_from(j.at("C_c"));
  c.D_cy = mat_from(j.at("D_cy"));
  c.D_cw = mat_from(j.at("D_cw"));
  return c;
}

} // namespace

std::string to_json(const Plant& plant) { return plant_json(plant).dump(2); }

std::string to_json(const Controller& controller) {
  return controller_json(controller).dump(2);
}

std::string to_json(const ClosedLoop& cl) {
  nlohmann::json j{{"A_cl", mat_json(cl.A_cl)},     {"B_clq", mat_json(cl.B_clq)},
                   {"B_clv", mat_json(cl.B_clv)},   {"B_clw", mat_json(cl.B_clw)},
                   {"C_clz", mat_json(cl.C_clz)},   {"D_clzq", mat_json(cl.D_clzq)},
                   {"D_clzv", mat_json(cl.D_clzv)}, {"D_clzw", mat_json(cl.D_clzw)},
                   {"C_clu", mat_json(cl.C_clu)},   {"D_cluq", mat_json(cl.D_cluq)},
                   {"D_cluv", mat_json(cl.D_cluv)}, {"D_cluw", mat_json(cl.D_cluw)}};
  j["u_bar"] = std::vector<double>(cl.u_bar.data(), cl.u_bar.data() + cl.u_bar.size());
  return j.dump(2);
}

Plant plant_from_json(const std::string& text) {
  return plant_from(nlohmann::json::parse(text));
}

Controller controller_from_json(const std::string& text) {
  return controller_from(nlohmann::json::parse(text));
}

std::string to_json(const BenchmarkModel& model) {
  nlohmann::json j;
  j["plant"] = plant_json(model.plant);
  j["controller"] = controller_json(model.controller);
  j["u_bar"] = std::vector<double>(model.u_bar.data(),
                                   model.u_bar.data() + model.u_bar.size());
  return j.dump(2);
}

BenchmarkModel benchmark_model_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  BenchmarkModel model;
  model.plant = plant_from(j.at("plant"));
  model.controller = controller_from(j.at("controller"));
  auto ub = j.at("u_bar").get<std::vector<double>>();
  model.u_bar = Eigen::Map<const Vector>(ub.data(), ub.size());
  model.controller.validate(model.plant);
  return model;
}

} // namespace swc::awsys
