#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "swc/scenario.hpp"

#include <cmath>

using namespace swc;
using scenario::ConstraintFamily;
using scenario::Sample;

namespace {

sdp::LmiBlock scalar_ge(int var, double coeff, double constant) {
  sdp::LmiBlock b;
  b.dim = 1;
  b.constant = sdp::Matrix::Constant(1, 1, constant);
  b.coeffs.emplace_back(var, sdp::Matrix::Constant(1, 1, coeff));
  return b;
}

// min theta s.t. q <= theta; uniform q on [0, 1]
ConstraintFamily scalar_so_family() {
  ConstraintFamily f;
  f.n_theta = 1;
  f.n_xi = 0;
  f.objective = sdp::Vector::Ones(1);
  f.generator = [](const Sample& q) {
    std::vector<sdp::LmiBlock> blocks;
    blocks.push_back(scalar_ge(0, 1.0, -q(0))); // theta - q >= 0
    return blocks;
  };
  f.sampler = [](rng::Stream& st) {
    Sample q(1);
    q(0) = st.next_uniform();
    return q;
  };
  return f;
}

// min theta s.t. exists xi: xi <= theta and q <= xi
ConstraintFamily scalar_swc_family() {
  ConstraintFamily f;
  f.n_theta = 1;
  f.n_xi = 1;
  f.objective = sdp::Vector::Ones(1);
  f.generator = [](const Sample& q) {
    std::vector<sdp::LmiBlock> blocks;
    blocks.push_back(scalar_ge(0, 1.0, 0.0));  // theta - xi >= 0 (below)
    blocks.back().coeffs.emplace_back(1, sdp::Matrix::Constant(1, 1, -1.0));
    blocks.push_back(scalar_ge(1, 1.0, -q(0))); // xi - q >= 0
    return blocks;
  };
  f.sampler = [](rng::Stream& st) {
    Sample q(1);
    q(0) = st.next_uniform();
    return q;
  };
  return f;
}

} // namespace

TEST_CASE("multisample draws are deterministic per seed") {
  auto f = scalar_so_family();
  auto a = scenario::draw_multisample(f, 5, 7);
  auto b = scenario::draw_multisample(f, 5, 7);
  REQUIRE(a.size() == 5);
  for (int i = 0; i < 5; ++i) CHECK(a[i](0) == b[i](0));
  auto c = scenario::draw_multisample(f, 5, 8);
  bool any_diff = false;
  for (int i = 0; i < 5; ++i) any_diff |= c[i](0) != a[i](0);
  CHECK(any_diff);
}

TEST_CASE("multisample mean matches the distribution") {
  auto f = scalar_so_family();
  auto samples = scenario::draw_multisample(f, 100000, 3);
  double mean = 0.0;
  for (const auto& q : samples) mean += q(0);
  mean /= static_cast<double>(samples.size());
  // 6 sigma of the sample mean of U[0,1] at n = 1e5 is ~0.0055
  CHECK(std::fabs(mean - 0.5) < 0.01);
}

TEST_CASE("zero samples is a domain error") {
  auto f = scalar_so_family();
  CHECK_THROWS_AS(scenario::draw_multisample(f, 0, 1), std::domain_error);
}

TEST_CASE("scenario program solves to the sample maximum") {
  auto f = scalar_so_family();
  std::vector<Sample> samples;
  for (double v : {0.2, 0.9, 0.5}) samples.push_back(Sample::Constant(1, v));
  auto problem = scenario::assemble_so(f, samples);
  CHECK(problem.n_vars == 1);
  CHECK(problem.blocks.size() == 3);
  auto sol = sdp::solve(problem);
  REQUIRE(sol.status == sdp::SolveStatus::Optimal);
  CHECK(sol.values(0) == doctest::Approx(0.9).epsilon(1e-6));
}

TEST_CASE("assemble_so rejects families with certificates") {
  auto f = scalar_swc_family();
  std::vector<Sample> samples{Sample::Constant(1, 0.5)};
  CHECK_THROWS_AS(scenario::assemble_so(f, samples), std::invalid_argument);
}

TEST_CASE("block count scales with the sample count") {
  auto f = scalar_so_family();
  auto samples = scenario::draw_multisample(f, 7, 1);
  auto problem = scenario::assemble_so(f, samples);
  CHECK(problem.blocks.size() == 7);
}

TEST_CASE("swc assembly: variable count and certificate separation") {
  ConstraintFamily f;
  f.n_theta = 1;
  f.n_xi = 2;
  f.objective = sdp::Vector::Ones(1);
  f.generator = [](const Sample& q) {
    std::vector<sdp::LmiBlock> blocks;
    blocks.push_back(scalar_ge(1, 1.0, -q(0)));
    blocks.push_back(scalar_ge(2, 1.0, 1.0));
    blocks.back().coeffs.emplace_back(0, sdp::Matrix::Constant(1, 1, 0.5));
    return blocks;
  };
  f.sampler = [](rng::Stream& st) { return Sample::Constant(1, st.next_uniform()); };

  auto samples = scenario::draw_multisample(f, 3, 5);
  auto problem = scenario::assemble_swc(f, samples);
  CHECK(problem.n_vars == 1 + 3 * 2);
  // block i touches theta and its own slice only
  for (std::size_t i = 0; i < problem.blocks.size(); ++i) {
    int sample_index = static_cast<int>(i) / 2;
    for (const auto& [var, coeff] : problem.blocks[i].coeffs) {
      if (var == 0) continue;
      CHECK(var >= 1 + sample_index * 2);
      CHECK(var < 1 + (sample_index + 1) * 2);
    }
  }
}

TEST_CASE("certificates collapse to the binding sample") {
  auto f = scalar_swc_family();
  std::vector<Sample> samples{Sample::Constant(1, 0.2), Sample::Constant(1, 0.9)};
  auto problem = scenario::assemble_swc(f, samples);
  CHECK(problem.n_vars == 3);
  auto sol = sdp::solve(problem);
  REQUIRE(sol.status == sdp::SolveStatus::Optimal);
  CHECK(sol.values(0) == doctest::Approx(0.9).epsilon(1e-6));
}

TEST_CASE("certificate-free families reduce to the plain scenario program") {
  auto f = scalar_so_family();
  auto samples = scenario::draw_multisample(f, 4, 11);
  auto a = scenario::assemble_so(f, samples);
  auto b = scenario::assemble_swc(f, samples);
  CHECK(sdp::to_json(a) == sdp::to_json(b));
}

TEST_CASE("per-sample certificates relax the shared-certificate program") {
  // f(theta, xi, q) = { xi >= q, theta >= xi - q }: with a private xi per
  // sample the optimum is 0 (xi_i = q_i); a shared xi must sit at the sample
  // maximum, forcing theta >= max(q) - min(q) > 0
  ConstraintFamily f;
  f.n_theta = 1;
  f.n_xi = 1;
  f.objective = sdp::Vector::Ones(1);
  f.generator = [](const Sample& q) {
    std::vector<sdp::LmiBlock> blocks;
    blocks.push_back(scalar_ge(1, 1.0, -q(0))); // xi >= q
    sdp::LmiBlock t = scalar_ge(0, 1.0, q(0));  // theta - xi + q >= 0
    t.coeffs.emplace_back(1, sdp::Matrix::Constant(1, 1, -1.0));
    blocks.push_back(t);
    return blocks;
  };
  f.sampler = [](rng::Stream& st) { return Sample::Constant(1, st.next_uniform()); };

  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    auto samples = scenario::draw_multisample(f, 6, seed);
    auto swc_sol = sdp::solve(scenario::assemble_swc(f, samples));
    auto shared = scenario::with_shared_certificates(f);
    auto common_sol = sdp::solve(scenario::assemble_so(shared, samples));
    REQUIRE(swc_sol.status == sdp::SolveStatus::Optimal);
    REQUIRE(common_sol.status == sdp::SolveStatus::Optimal);
    double spread = 0.0;
    double lo = 1e300, hi = -1e300;
    for (const auto& q : samples) {
      lo = std::min(lo, q(0));
      hi = std::max(hi, q(0));
    }
    spread = hi - lo;
    CHECK(swc_sol.objective_value == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(common_sol.objective_value == doctest::Approx(spread).epsilon(1e-6));
    CHECK(swc_sol.objective_value <= common_sol.objective_value + 1e-6);
  }
}

TEST_CASE("swc objective is monotone in nested multisamples") {
  auto f = scalar_swc_family();
  auto samples = scenario::draw_multisample(f, 12, 21);
  std::vector<Sample> small(samples.begin(), samples.begin() + 6);
  auto big_sol = sdp::solve(scenario::assemble_swc(f, samples));
  auto small_sol = sdp::solve(scenario::assemble_swc(f, small));
  REQUIRE(big_sol.status == sdp::SolveStatus::Optimal);
  REQUIRE(small_sol.status == sdp::SolveStatus::Optimal);
  CHECK(big_sol.objective_value >= small_sol.objective_value - 1e-7);
}

TEST_CASE("violation estimate at the median is about one half") {
  auto f = scalar_so_family();
  sdp::Vector theta = sdp::Vector::Constant(1, 0.5);
  auto estimate = scenario::estimate_violation(f, theta, 10000, 17);
  CHECK(estimate.fraction == doctest::Approx(0.5).epsilon(0.04));
  CHECK(estimate.n_checked == 10000);
  CHECK(estimate.failures.size() ==
        static_cast<std::size_t>(estimate.fraction * 10000 + 0.5));
}

TEST_CASE("violation estimation validates its inputs") {
  auto f = scalar_so_family();
  sdp::Vector theta = sdp::Vector::Constant(1, 0.5);
  CHECK_THROWS_AS(scenario::estimate_violation(f, theta, 0, 1),
                  std::domain_error);
  sdp::Vector wrong = sdp::Vector::Zero(2);
  CHECK_THROWS_AS(scenario::estimate_violation(f, wrong, 10, 1),
                  std::invalid_argument);
}

TEST_CASE("violation is zero for always-feasible families") {
  ConstraintFamily f;
  f.n_theta = 1;
  f.n_xi = 1;
  f.objective = sdp::Vector::Ones(1);
  f.generator = [](const Sample&) {
    std::vector<sdp::LmiBlock> blocks;
    blocks.push_back(scalar_ge(1, 1.0, 5.0)); // xi >= -5, trivially satisfiable
    return blocks;
  };
  f.sampler = [](rng::Stream& st) { return Sample::Constant(1, st.next_uniform()); };
  sdp::Vector theta = sdp::Vector::Zero(1);
  auto estimate = scenario::estimate_violation(f, theta, 64, 3);
  CHECK(estimate.fraction == 0.0);
}

TEST_CASE("violation estimation is thread-count invariant") {
  auto f = scalar_swc_family();
  sdp::Vector theta = sdp::Vector::Constant(1, 0.7);
  auto serial = scenario::estimate_violation(f, theta, 500, 9, {}, 1);
  auto parallel = scenario::estimate_violation(f, theta, 500, 9, {}, 4);
  CHECK(serial.fraction == parallel.fraction);
  CHECK(serial.failures == parallel.failures);
}

TEST_CASE("statistical guarantee of the one-shot program") {
  // at eps=0.2, delta=0.05 the exact sample count is 14; the violation of the
  // resulting design stays below eps in at least 95% of repeated trials.
  // The sample distribution mixes an atom at the top with a continuous part,
  // so the guarantee holds with slack and the test is seed-stable.
  ConstraintFamily f = scalar_swc_family();
  f.sampler = [](rng::Stream& st) {
    double u = st.next_uniform();
    return Sample::Constant(1, u < 0.5 ? 1.0 : st.next_uniform());
  };
  probbounds::ProbLevels levels{0.2, 0.05};
  auto n = probbounds::min_samples_exact(levels, 1);
  CHECK(n == 14);

  int trials = 60, passes = 0;
  for (int t = 0; t < trials; ++t) {
    scenario::OneShotOptions options;
    auto result = scenario::one_shot_swc(f, levels, options, 1000 + t);
    REQUIRE(result.status == sdp::SolveStatus::Optimal);
    auto viol = scenario::estimate_violation(f, result.theta, 400, 5000 + t);
    if (viol.fraction <= levels.epsilon) ++passes;
  }
  CHECK(passes >= static_cast<int>(std::ceil(0.95 * trials)));
}

TEST_CASE("sequential algorithm on a certainty-equivalent family") {
  // constraints independent of the draw terminate at the first iteration
  ConstraintFamily f;
  f.n_theta = 1;
  f.n_xi = 0;
  f.objective = sdp::Vector::Ones(1);
  f.generator = [](const Sample&) {
    std::vector<sdp::LmiBlock> blocks;
    blocks.push_back(scalar_ge(0, 1.0, -1.0)); // theta >= 1 always
    return blocks;
  };
  f.sampler = [](rng::Stream& st) { return Sample::Constant(1, st.next_uniform()); };

  scenario::SequentialOptions options;
  options.seq = {5, 1.0};
  auto result = scenario::sequential_swc(f, {0.2, 0.05}, options, 77);
  REQUIRE(result.status == sdp::SolveStatus::Optimal);
  CHECK(result.iterations.size() == 1);
  CHECK(result.iterations[0].violations == 0);
  CHECK(result.theta(0) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("sequential schedule reproduces the published sample counts") {
  // with the explicit full count 7565 and ten iterations, the third design
  // round uses 2270 samples
  ConstraintFamily f = scalar_swc_family();
  scenario::SequentialOptions options;
  options.seq = {10, 1.0};
  options.n_full_override = 7565;
  options.n_theta_override = 35;
  CHECK(probbounds::design_schedule(7565, options.seq, 3) == 2270);

  // the same arithmetic drives sequential_swc: run a cheap two-iteration
  // configuration and check the logged design sizes
  scenario::SequentialOptions small;
  small.seq = {10, 1.0};
  small.n_full_override = 7565;
  // make every validation fail so the loop advances: theta from 14 samples
  // of U[0,1] is violated eventually w.h.p.; instead check the log directly
  auto result = scenario::sequential_swc(f, {0.2, 0.05}, small, 5);
  REQUIRE(!result.iterations.empty());
  CHECK(result.iterations[0].n_design == 757); // ceil(7565/10)
}

TEST_CASE("sequential result reruns deterministically") {
  auto f = scalar_swc_family();
  scenario::SequentialOptions options;
  options.seq = {4, 1.0};
  auto a = scenario::sequential_swc(f, {0.2, 0.1}, options, 99);
  auto b = scenario::sequential_swc(f, {0.2, 0.1}, options, 99);
  REQUIRE(a.status == sdp::SolveStatus::Optimal);
  CHECK(a.theta(0) == b.theta(0));
  CHECK(a.n_used == b.n_used);
  REQUIRE(a.iterations.size() == b.iterations.size());
  for (std::size_t i = 0; i < a.iterations.size(); ++i) {
    CHECK(a.iterations[i].n_design == b.iterations[i].n_design);
    CHECK(a.iterations[i].violations == b.iterations[i].violations);
  }
}

TEST_CASE("final sequential design is validated by fresh sampling") {
  auto f = scalar_swc_family();
  scenario::SequentialOptions options;
  options.seq = {4, 1.0};
  auto result = scenario::sequential_swc(f, {0.2, 0.05}, options, 31);
  REQUIRE(result.status == sdp::SolveStatus::Optimal);
  auto viol = scenario::estimate_violation(f, result.theta, 1000, 4242);
  CHECK(viol.fraction <= 0.2);
}
