#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "onestep/analysis.hpp"
#include "onestep/models.hpp"

using namespace onestep;
using Catch::Approx;

TEST_CASE("Newton finds the FastTrack steady state", "[analysis]") {
  const Network a(fasttrack({1.0, 0.1, 0.5}));
  const std::vector<Vector> g1{{4.0, 3.0}};
  auto fps = find_fixed_points(a, g1);
  REQUIRE(fps.size() == 1);
  CHECK(fps[0].converged);
  CHECK(fps[0].state[0] == Approx(5.0).epsilon(1e-12));
  CHECK(fps[0].state[1] == Approx(2.0).epsilon(1e-12));
  CHECK(fps[0].residual_norm < 1e-10);

  const Network b(fasttrack({2.0, 0.5, 1.0}));
  const std::vector<Vector> g2{{1.0, 1.0}, {3.0, 0.5}, {2.0, 2.0}};
  fps = find_fixed_points(b, g2);
  REQUIRE(fps.size() == 1);  // deduplicated
  CHECK(fps[0].state[0] == Approx(2.0).epsilon(1e-12));
  CHECK(fps[0].state[1] == Approx(2.0).epsilon(1e-12));
}

TEST_CASE("scheme without reactions: the guess is a fixed point", "[analysis]") {
  InteractionScheme empty;
  empty.species = {{"A", 0}, {"B", 1}};
  const Network net(empty);
  const std::vector<Vector> g{{3.0, 4.0}};
  const auto fps = find_fixed_points(net, g);
  REQUIRE(fps.size() == 1);
  CHECK(fps[0].converged);
  CHECK(fps[0].state == Vector{3.0, 4.0});
  CHECK(fps[0].residual_norm == 0.0);
}

TEST_CASE("non-convergence is reported, not hidden", "[analysis]") {
  const Network net(fasttrack({1.0, 0.1, 0.5}));
  NewtonOptions opt;
  opt.max_iter = 1;
  const std::vector<Vector> g{{100.0, 100.0}};
  const auto fps = find_fixed_points(net, g, opt);
  REQUIRE(fps.size() == 1);
  CHECK_FALSE(fps[0].converged);
  CHECK(fps[0].residual_norm >= opt.tol);

  opt.tol = 0.0;
  CHECK_THROWS_AS(find_fixed_points(net, g, opt), ConfigError);
  const std::vector<Vector> wrong{{1.0}};
  CHECK_THROWS_AS(find_fixed_points(net, wrong), ConfigError);
}

TEST_CASE("singular Jacobian falls back to a gradient step", "[analysis]") {
  // The closed system's Jacobian is singular everywhere; fixed points form the axes.
  const Network net(bittorrent_closed(0.5));
  const std::vector<Vector> g{{2.0, 3.0}};
  NewtonOptions opt;
  opt.max_iter = 2000;
  opt.tol = 1e-8;
  const auto fps = find_fixed_points(net, g, opt);
  REQUIRE(fps.size() == 1);
  const auto& fp = fps[0];
  CHECK(fp.residual_norm < 0.5 * 3.0);  // improved on the start's residual
  if (fp.converged) CHECK(std::min(std::abs(fp.state[0]), std::abs(fp.state[1])) < 1e-6);
}

TEST_CASE("classify", "[analysis]") {
  const std::vector<Complex> focus{{-0.1, 0.3}, {-0.1, -0.3}};
  const std::vector<Complex> node{{-0.536, 0.0}, {-7.464, 0.0}};
  const std::vector<Complex> saddle{{1.0, 0.0}, {-1.0, 0.0}};
  const std::vector<Complex> unstable_focus{{0.2, 1.0}, {0.2, -1.0}};
  const std::vector<Complex> unstable_node{{0.2, 0.0}, {3.0, 0.0}};
  const std::vector<Complex> center{{0.0, 1.0}, {0.0, -1.0}};
  const std::vector<Complex> zero{{0.0, 0.0}, {-1.0, 0.0}};
  CHECK(classify(focus) == Classification::stable_focus);
  CHECK(classify(node) == Classification::stable_node);
  CHECK(classify(saddle) == Classification::saddle);
  CHECK(classify(unstable_focus) == Classification::unstable_focus);
  CHECK(classify(unstable_node) == Classification::unstable_node);
  CHECK(classify(center) == Classification::center);
  CHECK(classify(zero) == Classification::degenerate);
  const std::vector<Complex> dead_zone{{-5e-10, 1.0}, {-5e-10, -1.0}};
  CHECK(classify(dead_zone) == Classification::center);
  CHECK_THROWS_AS(classify(std::vector<Complex>{}), ConfigError);
}

TEST_CASE("closed-form FastTrack classification", "[analysis]") {
  CHECK(fasttrack_classification(1.0, 0.1, 0.5) == Classification::stable_focus);
  CHECK(fasttrack_classification(4.0, 1.0, 0.5) == Classification::stable_node);
  CHECK(fasttrack_classification(1.0, 4.0, 1.0) == Classification::degenerate);
  CHECK_THROWS_AS(fasttrack_classification(0.0, 1.0, 1.0), ConfigError);
}

TEST_CASE("eigen-based classification matches the closed form", "[analysis][property]") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> logu(std::log(0.01), std::log(10.0));
  int checked = 0;
  while (checked < 200) {
    const FastTrackParams p{std::exp(logu(rng)), std::exp(logu(rng)), std::exp(logu(rng))};
    const double ratio = p.beta * p.lambda / (4.0 * p.mu * p.mu);
    if (std::abs(ratio - 1.0) < 0.01) continue;
    ++checked;
    const Network net(fasttrack(p));
    const auto rep = stability_report(net, {fasttrack_fixed_point(p), 0.0, true});
    REQUIRE(rep.classification == fasttrack_classification(p.lambda, p.beta, p.mu));
  }
}

TEST_CASE("phase portrait", "[analysis]") {
  const FastTrackParams p{1.0, 0.1, 0.5};
  const Network net(fasttrack(p));
  const Vector center = fasttrack_fixed_point(p);

  SECTION("zero deviation stays put") {
    const std::vector<Vector> dev{{0.0, 0.0}};
    const auto tr = phase_portrait(net, center, dev, 50.0, 0.01);
    REQUIRE(tr.size() == 1);
    double worst = 0.0;
    for (std::size_t k = 1; k < tr[0].size(); ++k)
      worst = std::max(worst, max_abs_diff(tr[0].states[k], tr[0].states[k - 1]));
    CHECK(worst < 1e-8);
  }

  SECTION("focus regime oscillates while decaying") {
    const std::vector<Vector> dev{{1.0, 1.0}, {-1.0, 0.5}, {2.0, -1.0}};
    const auto trs = phase_portrait(net, center, dev, 200.0, 0.01);
    REQUIRE(trs.size() == 3);
    for (const auto& tr : trs) {
      REQUIRE(tr.ok());
      int sign_changes = 0;
      for (std::size_t k = 1; k < tr.size(); ++k) {
        const double a = tr.states[k - 1][0] - center[0], b = tr.states[k][0] - center[0];
        if ((a < 0.0) != (b < 0.0) && std::abs(b) > 1e-12) ++sign_changes;
      }
      CHECK(sign_changes >= 2);
      const double d0 = max_abs_diff(tr.states.front(), center);
      const double d1 = max_abs_diff(tr.states.back(), center);
      CHECK(d1 < 1e-3 * d0);
    }
  }

  SECTION("start point outside the positive orthant is rejected") {
    const std::vector<Vector> dev{{-10.0, 0.0}};
    CHECK_THROWS_AS(phase_portrait(net, center, dev, 1.0, 0.01), ConfigError);
  }
}
