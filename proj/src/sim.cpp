#include "swc/sim.hpp"

#include "swc/parallel.hpp"
#include "swc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace swc::sim {

namespace {

Vector saturate(const Vector& u, const Vector& u_bar) {
  return u.cwiseMin(u_bar).cwiseMax(-u_bar);
}

// solve u = c + d2 * dz(u) for the actual controller output
class InputLoop {
public:
  InputLoop(Matrix d2, Vector u_bar, const SimOptions& options)
      : d2_(std::move(d2)), u_bar_(std::move(u_bar)), options_(options) {}

  Vector resolve(const Vector& c, bool& ok) const {
    ok = true;
    if (u_bar_.size() == 1) {
      const double d = d2_(0, 0), ub = u_bar_(0), cv = c(0);
      if (std::fabs(cv) <= ub) return c; // dz = 0 consistent
      if (std::fabs(1.0 - d) > 1e-12) {
        double up = (cv - d * ub) / (1.0 - d);
        if (up > ub) return Vector::Constant(1, up);
        double un = (cv + d * ub) / (1.0 - d);
        if (un < -ub) return Vector::Constant(1, un);
      }
    }
    // damped fixed point
    Vector u = c;
    const double lambda = 1.0 / (1.0 + d2_.lpNorm<Eigen::Infinity>());
    for (int it = 0; it < options_.loop_max_iter; ++it) {
      Vector next = c + d2_ * (u - saturate(u, u_bar_));
      double err = (next - u).lpNorm<Eigen::Infinity>();
      u += lambda * (next - u);
      if (err <= options_.loop_tol * (1.0 + u.lpNorm<Eigen::Infinity>()))
        return u;
    }
    ok = false;
    return u;
  }

private:
  Matrix d2_;
  Vector u_bar_;
  SimOptions options_;
};

[[noreturn]] void loop_failure(int step, double t) {
  throw std::runtime_error(
      "deadzone input loop did not converge at step " + std::to_string(step) +
      " (t = " + std::to_string(t) + "): algebraic loop appears ill-posed");
}

int step_count(double t_end, double dt) {
  if (dt <= 0.0) throw std::invalid_argument("dt must be positive");
  if (t_end <= 0.0) throw std::invalid_argument("t_end must be positive");
  return static_cast<int>(std::llround(t_end / dt));
}

// generic fixed-step RK4 over a callable xdot = f(t, x, step)
template <typename Deriv>
Matrix integrate(const Vector& x0, int n_steps, double dt, Deriv&& deriv) {
  Matrix xs(n_steps + 1, x0.size());
  Vector x = x0;
  xs.row(0) = x.transpose();
  for (int k = 0; k < n_steps; ++k) {
    const double t = k * dt;
    Vector k1 = deriv(t, x, k);
    Vector k2 = deriv(t + 0.5 * dt, x + 0.5 * dt * k1, k);
    Vector k3 = deriv(t + 0.5 * dt, x + 0.5 * dt * k2, k);
    Vector k4 = deriv(t + dt, x + dt * k3, k);
    x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    xs.row(k + 1) = x.transpose();
  }
  return xs;
}

Signal make_signal(double dt, Matrix samples) {
  Signal s;
  s.dt = dt;
  s.samples = std::move(samples);
  return s;
}

} // namespace

Vector Signal::value(double t) const {
  if (steps() == 0) throw std::invalid_argument("empty signal");
  double pos = (t - t0) / dt;
  if (pos <= 0.0) return samples.row(0).transpose();
  if (pos >= steps() - 1) return samples.row(steps() - 1).transpose();
  int i0 = static_cast<int>(pos);
  double frac = pos - i0;
  return ((1.0 - frac) * samples.row(i0) + frac * samples.row(i0 + 1))
      .transpose();
}

double l2norm(const Signal& sig) {
  if (sig.steps() == 0) return 0.0;
  double acc = 0.0;
  for (int k = 0; k < sig.steps(); ++k) {
    double w = (k == 0 || k == sig.steps() - 1) ? 0.5 : 1.0;
    acc += w * sig.samples.row(k).squaredNorm();
  }
  return std::sqrt(acc * sig.dt);
}

SimResult simulate(const ClosedLoop& cl, const Matrix& d_aw, const Signal& w,
                   const Vector& x0, double t_end, const SimOptions& options) {
  const int n = cl.n(), nu = cl.n_u(), nz = cl.n_z();
  if (x0.size() != n) throw std::invalid_argument("x0 length mismatch");
  if (d_aw.rows() != cl.n_v() || d_aw.cols() != nu)
    throw std::invalid_argument("D_aw dimensions mismatch");

  const Matrix bq = cl.B_clq + cl.B_clv * d_aw;
  const Matrix dzq = cl.D_clzq + cl.D_clzv * d_aw;
  const InputLoop loop(cl.D_cluq + cl.D_cluv * d_aw, cl.u_bar, options);

  const int n_steps = step_count(t_end, options.dt);
  auto deriv = [&](double t, const Vector& x, int step) {
    Vector wt = w.value(t);
    bool ok = true;
    Vector u = loop.resolve(cl.C_clu * x + cl.D_cluw * wt, ok);
    if (!ok) loop_failure(step, t);
    Vector dz = u - saturate(u, cl.u_bar);
    return Vector(cl.A_cl * x + bq * dz + cl.B_clw * wt);
  };
  Matrix xs = integrate(x0, n_steps, options.dt, deriv);

  SimResult result;
  result.x = make_signal(options.dt, xs);
  Matrix us(n_steps + 1, nu), sigmas(n_steps + 1, nu), zs(n_steps + 1, nz);
  result.saturation_active.resize(n_steps + 1);
  for (int k = 0; k <= n_steps; ++k) {
    const double t = k * options.dt;
    Vector wt = w.value(t);
    Vector x = xs.row(k).transpose();
    bool ok = true;
    Vector u = loop.resolve(cl.C_clu * x + cl.D_cluw * wt, ok);
    if (!ok) loop_failure(k, t);
    Vector sigma = saturate(u, cl.u_bar);
    Vector dz = u - sigma;
    us.row(k) = u.transpose();
    sigmas.row(k) = sigma.transpose();
    zs.row(k) = (cl.C_clz * x + dzq * dz + cl.D_clzw * wt).transpose();
    result.saturation_active[k] = dz.lpNorm<Eigen::Infinity>() > 0.0;
  }
  result.u = make_signal(options.dt, std::move(us));
  result.sigma = make_signal(options.dt, std::move(sigmas));
  result.z = make_signal(options.dt, std::move(zs));
  return result;
}

SimResult simulate_raw(const Plant& plant, const Controller& controller,
                       const Matrix& d_aw, const Vector& u_bar, const Signal& w,
                       const Vector& x0_plant, const Vector& x0_controller,
                       double t_end, const SimOptions& options) {
  plant.validate();
  controller.validate(plant);
  if (plant.D_pyu.norm() != 0.0)
    throw std::invalid_argument("raw interconnection requires D_pyu = 0");
  const int np = plant.n_p(), nc = controller.n_c(), nu = plant.n_u();
  const int nz = plant.n_z(), ny = plant.n_y();
  if (x0_plant.size() != np || x0_controller.size() != nc)
    throw std::invalid_argument("initial state length mismatch");
  if (d_aw.rows() != nc + nu || d_aw.cols() != nu)
    throw std::invalid_argument("D_aw dimensions mismatch");

  const Matrix d_aw_state = d_aw.topRows(nc);    // v1
  const Matrix d_aw_output = d_aw.bottomRows(nu); // v2
  const InputLoop loop(d_aw_output, u_bar, options);

  Vector x0(np + nc);
  x0 << x0_plant, x0_controller;

  auto controller_output = [&](const Vector& x, const Vector& wt, bool& ok) {
    Vector xp = x.head(np), xc = x.tail(nc);
    Vector y = plant.C_py * xp + plant.D_pyw * wt;
    Vector c = controller.C_c * xc + controller.D_cy * y + controller.D_cw * wt;
    return loop.resolve(c, ok);
  };

  const int n_steps = step_count(t_end, options.dt);
  auto deriv = [&](double t, const Vector& x, int step) {
    Vector wt = w.value(t);
    bool ok = true;
    Vector u = controller_output(x, wt, ok);
    if (!ok) loop_failure(step, t);
    Vector sigma = saturate(u, u_bar);
    Vector dz = u - sigma;
    Vector xp = x.head(np), xc = x.tail(nc);
    Vector y = plant.C_py * xp + plant.D_pyw * wt;
    Vector out(np + nc);
    out.head(np) = plant.A_p * xp + plant.B_pu * sigma + plant.B_pw * wt;
    out.tail(nc) = controller.A_c * xc + controller.B_cy * y +
                   controller.B_cw * wt + d_aw_state * dz;
    return out;
  };
  Matrix xs = integrate(x0, n_steps, options.dt, deriv);

  SimResult result;
  result.x = make_signal(options.dt, xs);
  Matrix us(n_steps + 1, nu), sigmas(n_steps + 1, nu), zs(n_steps + 1, nz),
      ys(n_steps + 1, ny);
  result.saturation_active.resize(n_steps + 1);
  for (int k = 0; k <= n_steps; ++k) {
    const double t = k * options.dt;
    Vector wt = w.value(t);
    Vector x = xs.row(k).transpose();
    bool ok = true;
    Vector u = controller_output(x, wt, ok);
    if (!ok) loop_failure(k, t);
    Vector sigma = saturate(u, u_bar);
    Vector xp = x.head(np);
    us.row(k) = u.transpose();
    sigmas.row(k) = sigma.transpose();
    ys.row(k) = (plant.C_py * xp + plant.D_pyw * wt).transpose();
    zs.row(k) =
        (plant.C_pz * xp + plant.D_pzu * sigma + plant.D_pzw * wt).transpose();
    result.saturation_active[k] = (u - sigma).lpNorm<Eigen::Infinity>() > 0.0;
  }
  result.u = make_signal(options.dt, std::move(us));
  result.sigma = make_signal(options.dt, std::move(sigmas));
  result.z = make_signal(options.dt, std::move(zs));
  result.y = make_signal(options.dt, std::move(ys));
  return result;
}

GainCheckResult gain_check(const ClosedLoop& cl, const Matrix& d_aw,
                           double gamma_hat, double s, int n_trials,
                           std::uint64_t seed, const GainCheckOptions& options) {
  if (n_trials < 1) throw std::invalid_argument("n_trials must be >= 1");
  (void)gamma_hat; // the caller compares the reported ratio against it
  const int nw = cl.n_w();
  const int n_input_steps = step_count(options.t_input, options.dt);
  const int n_total_steps = step_count(options.t_end, options.dt);
  const double rhos[3] = {0.1, 0.5, 1.0};

  GainCheckResult result;
  result.ratios.assign(n_trials, 0.0);
  rng::Stream root(seed);

  parallel_for(n_trials, options.threads, [&](std::int64_t trial) {
    rng::Stream stream = root.split(static_cast<std::uint64_t>(trial));
    Matrix w_samples = Matrix::Zero(n_total_steps + 1, nw);

    if (trial % 2 == 0) {
      // piecewise constant with random switch times
      const int n_seg = 3 + static_cast<int>(stream.next_u64() % 5);
      std::vector<double> bounds{0.0};
      for (int b = 0; b < n_seg - 1; ++b)
        bounds.push_back(stream.next_uniform() * options.t_input);
      bounds.push_back(options.t_input);
      std::sort(bounds.begin(), bounds.end());
      for (int seg = 0; seg < n_seg; ++seg) {
        Vector level(nw);
        for (int c = 0; c < nw; ++c) level(c) = stream.next_normal();
        int k0 = static_cast<int>(bounds[seg] / options.dt);
        int k1 = static_cast<int>(bounds[seg + 1] / options.dt);
        for (int k = k0; k < std::min(k1, n_input_steps); ++k)
          w_samples.row(k) = level.transpose();
      }
    } else {
      // white noise through a random first-order filter
      const double tau = 0.05 + 0.95 * stream.next_uniform();
      const double alpha = options.dt / (tau + options.dt);
      Vector state = Vector::Zero(nw);
      for (int k = 0; k < n_input_steps; ++k) {
        Vector e(nw);
        for (int c = 0; c < nw; ++c) e(c) = stream.next_normal();
        state = (1.0 - alpha) * state + alpha * e;
        w_samples.row(k) = state.transpose();
      }
    }

    Signal w = make_signal(options.dt, std::move(w_samples));
    double norm = l2norm(w);
    if (norm <= 0.0) {
      result.ratios[trial] = 0.0;
      return;
    }
    const double rho = rhos[(trial / 2) % 3];
    w.samples *= rho * s / norm;

    SimOptions sim_options = options.sim;
    sim_options.dt = options.dt;
    SimResult run = simulate(cl, d_aw, w, Vector::Zero(cl.n()), options.t_end,
                             sim_options);
    result.ratios[trial] = l2norm(run.z) / (rho * s);
  });

  result.worst_ratio = 0.0;
  for (double r : result.ratios) result.worst_ratio = std::max(result.worst_ratio, r);
  return result;
}

} // namespace swc::sim
