#include <catch2/catch_amalgamated.hpp>

#include "onestep/models.hpp"
#include "onestep/simulate.hpp"

using namespace onestep;
using Catch::Approx;

namespace {

RunConfig cfg(double t_end, double dt, std::uint64_t seed = 0) {
  RunConfig c;
  c.t_end = t_end;
  c.dt = dt;
  c.seed = seed;
  return c;
}

InteractionScheme pure_influx(double lambda) {
  InteractionScheme s;
  s.name = "influx";
  s.species = {{"N", 0}};
  s.parameters["lambda"] = lambda;
  Reaction r;
  r.label = "arrival";
  r.reactants = {0};
  r.products = {1};
  r.rate.constant = "lambda";
  s.reactions.push_back(r);
  return s;
}

}  // namespace

TEST_CASE("ODE examples", "[simulate]") {
  const FastTrackParams p{1.0, 0.1, 0.5};
  const Network ft(fasttrack(p));

  SECTION("fixed point is stationary") {
    const auto tr = integrate_ode(ft, Vector{5.0, 2.0}, cfg(100.0, 0.01));
    REQUIRE(tr.ok());
    REQUIRE(tr.size() == 10001);
    for (const auto& x : tr.states) CHECK(max_abs_diff(x, Vector{5.0, 2.0}) < 1e-10);
    CHECK(tr.times.back() == 100.0);
  }

  SECTION("closed model conserves n + c") {
    const Network closed(bittorrent_closed(0.5));
    const auto tr = integrate_ode(closed, Vector{10.0, 1.0}, cfg(50.0, 0.01));
    for (const auto& x : tr.states) REQUIRE(std::abs(x[0] + x[1] - 11.0) < 1e-9);
  }

  SECTION("focus regime converges") {
    const auto tr = integrate_ode(ft, Vector{10.0, 1.0}, cfg(200.0, 0.01));
    CHECK(max_abs_diff(tr.final_state(), Vector{5.0, 2.0}) < 1e-4);
  }

  SECTION("grid and stride") {
    RunConfig c = cfg(1.0, 0.3);
    const auto grid = time_grid(c);
    REQUIRE(grid.size() == 5);
    CHECK(grid.back() == 1.0);
    c.record_every = 3;
    const auto tr = integrate_ode(ft, Vector{10.0, 1.0}, c);
    CHECK(tr.times == time_grid(c));
    REQUIRE(tr.size() == 3);
    CHECK(tr.times[1] == Approx(0.9));
    CHECK(tr.times[2] == 1.0);
  }

  SECTION("bad input") {
    CHECK_THROWS_AS(integrate_ode(ft, Vector{1.0}, cfg(1.0, 0.1)), ConfigError);
    CHECK_THROWS_AS(integrate_ode(ft, Vector{-1.0, 1.0}, cfg(1.0, 0.1)), ConfigError);
    CHECK_THROWS_AS(integrate_ode(ft, Vector{1.0, 1.0}, cfg(1.0, 0.0)), ConfigError);
    CHECK_THROWS_AS(integrate_ode(ft, Vector{1.0, 1.0}, cfg(-1.0, 0.1)), ConfigError);
  }
}

TEST_CASE("non-finite states abort with a partial trajectory", "[simulate]") {
  InteractionScheme s;
  s.species = {{"X", 0}};
  s.parameters["k"] = 1.0;
  Reaction r;
  r.label = "explode";
  r.reactants = {2};
  r.products = {3};
  r.rate = {"k", {{SourceKind::species, 0, 2}}};
  s.reactions.push_back(r);
  const Network net(s);
  const auto tr = integrate_ode(net, Vector{10.0}, cfg(100.0, 0.1));
  CHECK_FALSE(tr.ok());
  CHECK(tr.size() >= 1);
  CHECK(tr.size() < 1001);
}

TEST_CASE("RK4 is fourth order", "[simulate][property]") {
  const Network ft(fasttrack({1.0, 0.1, 0.5}));
  const Vector x0{8.0, 3.0};
  const auto ref = integrate_ode(ft, x0, cfg(10.0, 0.001)).final_state();
  const double e1 = max_abs_diff(integrate_ode(ft, x0, cfg(10.0, 0.2)).final_state(), ref);
  const double e2 = max_abs_diff(integrate_ode(ft, x0, cfg(10.0, 0.1)).final_state(), ref);
  CHECK(e1 / e2 > 12.0);
  CHECK(e1 / e2 < 20.0);
  const double f1 = max_abs_diff(integrate_ode(ft, x0, cfg(10.0, 0.02), OdeMethod::euler).final_state(), ref);
  const double f2 = max_abs_diff(integrate_ode(ft, x0, cfg(10.0, 0.01), OdeMethod::euler).final_state(), ref);
  CHECK(f1 / f2 == Approx(2.0).margin(0.2));
}

TEST_CASE("SDE", "[simulate]") {
  const Network ft(fasttrack({1.0, 0.1, 0.5}));

  SECTION("zero noise is bitwise Euler") {
    RunConfig c = cfg(20.0, 0.01, 99);
    c.noise_scale = 0.0;
    const auto sde = integrate_sde(ft, Vector{10.0, 1.0}, c);
    const auto ode = integrate_ode(ft, Vector{10.0, 1.0}, c, OdeMethod::euler);
    REQUIRE(sde.size() == ode.size());
    for (std::size_t k = 0; k < sde.size(); ++k) REQUIRE(sde.states[k] == ode.states[k]);
  }

  SECTION("closed model conserves n + c on every path") {
    const Network closed(bittorrent_closed(0.5));
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const auto tr = integrate_sde(closed, Vector{10.0, 1.0}, cfg(100.0, 0.01, seed));
      for (const auto& x : tr.states) REQUIRE(std::abs(x[0] + x[1] - 11.0) < 1e-9);
    }
  }

  SECTION("determinism") {
    const auto a = integrate_sde(ft, Vector{10.0, 1.0}, cfg(50.0, 0.01, 7));
    const auto b = integrate_sde(ft, Vector{10.0, 1.0}, cfg(50.0, 0.01, 7));
    const auto c = integrate_sde(ft, Vector{10.0, 1.0}, cfg(50.0, 0.01, 8));
    CHECK(a.states == b.states);
    CHECK(a.states != c.states);
  }

  SECTION("small noise stays near the deterministic path") {
    RunConfig c = cfg(100.0, 0.01, 5);
    c.noise_scale = 0.01;
    const auto sde = integrate_sde(ft, Vector{5.0, 2.0}, c);
    const auto ode = integrate_ode(ft, Vector{5.0, 2.0}, c);
    double worst = 0.0;
    for (std::size_t k = 5000; k < sde.size(); ++k)
      worst = std::max(worst, max_abs_diff(sde.states[k], ode.states[k]));
    CHECK(worst < 0.5);
  }
}

TEST_CASE("Euler-Maruyama weak consistency on pure influx", "[simulate][property]") {
  const double lambda = 2.0, t = 5.0;
  const Network net(pure_influx(lambda));
  RunConfig c = cfg(t, 0.05, 11);
  const auto stats = ensemble(net, Vector{0.0}, c, 10000, EnsembleMode::sde);
  const double mean = stats.mean.back()[0];
  const double se = std::sqrt(stats.variance.back()[0] / 10000.0);
  CHECK(std::abs(mean - lambda * t) < 3.0 * se);
  CHECK(stats.variance.back()[0] == Approx(lambda * t).epsilon(0.05));
}

TEST_CASE("SSA", "[simulate]") {
  const Network closed(bittorrent_closed(0.7));

  SECTION("single possible event") {
    const auto tr = ssa_run(closed, Vector{1.0, 1.0}, cfg(1e6, 0.01, 3));
    REQUIRE(tr.size() == 2);
    CHECK(tr.final_state() == Vector{0.0, 2.0});
    CHECK(tr.times[1] > 0.0);
  }

  SECTION("absorbing start") {
    const auto tr = ssa_run(closed, Vector{0.0, 4.0}, cfg(10.0, 0.01));
    REQUIRE(tr.size() == 1);
    CHECK(tr.final_state() == Vector{0.0, 4.0});
  }

  SECTION("exact conservation and nonnegativity") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto tr = ssa_run(closed, Vector{30.0, 2.0}, cfg(100.0, 0.01, seed));
      for (const auto& x : tr.states) {
        REQUIRE(x[0] + x[1] == 32.0);
        REQUIRE(x[0] >= 0.0);
      }
    }
    const Network ft(fasttrack({5.0, 0.1, 0.5}));
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto tr = ssa_run(ft, Vector{20.0, 3.0}, cfg(20.0, 0.01, seed));
      for (const auto& x : tr.states) REQUIRE((x[0] >= 0.0 && x[1] >= 0.0));
    }
  }

  SECTION("stride keeps the final state") {
    RunConfig c = cfg(100.0, 0.01, 4);
    const auto all = ssa_run(closed, Vector{30.0, 2.0}, c);
    c.record_every = 7;
    const auto some = ssa_run(closed, Vector{30.0, 2.0}, c);
    CHECK(some.final_state() == all.final_state());
    CHECK(some.times.back() == all.times.back());
    CHECK(some.size() < all.size());
  }

  SECTION("integer initial state required") {
    CHECK_THROWS_AS(ssa_run(closed, Vector{1.5, 1.0}, cfg(1.0, 0.1)), ConfigError);
  }
}

TEST_CASE("ensemble", "[simulate]") {
  const Network ft(fasttrack({1.0, 0.1, 0.5}));

  SECTION("forced-equal seeds give zero variance") {
    const SeedDeriver same = [](std::uint64_t, std::size_t) { return std::uint64_t{42}; };
    const auto stats = ensemble(ft, Vector{10.0, 1.0}, cfg(10.0, 0.1), 2, EnsembleMode::ssa, same);
    for (const auto& v : stats.variance)
      for (double x : v) CHECK(x == 0.0);
  }

  SECTION("noise-free SDE gives zero variance") {
    RunConfig c = cfg(10.0, 0.1);
    c.noise_scale = 0.0;
    const auto stats = ensemble(ft, Vector{10.0, 1.0}, c, 20, EnsembleMode::sde);
    for (const auto& v : stats.variance)
      for (double x : v) CHECK(x == 0.0);
    const auto ode = integrate_ode(ft, Vector{10.0, 1.0}, c, OdeMethod::euler);
    CHECK(stats.mean.back() == ode.final_state());
  }

  SECTION("results do not depend on the thread count") {
    const RunConfig c = cfg(10.0, 0.1, 9);
    const auto a = ensemble(ft, Vector{10.0, 1.0}, c, 100, EnsembleMode::ssa, derive_seed, 1);
    const auto b = ensemble(ft, Vector{10.0, 1.0}, c, 100, EnsembleMode::ssa, derive_seed, 7);
    CHECK(a.mean == b.mean);
    CHECK(a.variance == b.variance);
    CHECK(a.times == time_grid(c));
  }

  SECTION("failures name the run") {
    CHECK_THROWS_AS(ensemble(ft, Vector{10.0, 1.0}, cfg(1.0, 0.1), 1, EnsembleMode::ssa), ConfigError);
    try {
      ensemble(ft, Vector{10.5, 1.0}, cfg(1.0, 0.1), 4, EnsembleMode::ssa);
      FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
      CHECK(std::string(e.what()).find("run 0") != std::string::npos);
    }
  }

  SECTION("Welford moments match a two-pass computation") {
    const RunConfig c = cfg(5.0, 0.5, 13);
    const std::size_t runs = 40;
    const auto stats = ensemble(ft, Vector{10.0, 1.0}, c, runs, EnsembleMode::sde);
    std::vector<Vector> finals;
    for (std::size_t r = 0; r < runs; ++r) {
      RunConfig rc = c;
      rc.seed = derive_seed(c.seed, r);
      finals.push_back(integrate_sde(ft, Vector{10.0, 1.0}, rc).final_state());
    }
    for (std::size_t i = 0; i < 2; ++i) {
      double m = 0.0;
      for (const auto& f : finals) m += f[i];
      m /= runs;
      double v = 0.0;
      for (const auto& f : finals) v += (f[i] - m) * (f[i] - m);
      v /= runs - 1;
      CHECK(stats.mean.back()[i] == Approx(m).epsilon(1e-12));
      CHECK(stats.variance.back()[i] == Approx(v).epsilon(1e-10));
    }
  }
}

TEST_CASE("SSA stationary means carry the linear-noise correction", "[simulate][property]") {
  // lambda=100, beta=1e-3, mu=0.5: the Lyapunov covariance at (500, 200) has
  // cov(n, l) = -500, so E[n] = mu/beta - cov/E[l] = 502.5 while E[l] = 200.
  const Network net(fasttrack({100.0, 0.001, 0.5}));
  const auto tr = ssa_run(net, Vector{500.0, 200.0}, cfg(100000.0, 0.01, 21));
  double sum_n = 0.0, sum_l = 0.0;
  for (std::size_t k = 0; k + 1 < tr.size(); ++k) {
    const double w = tr.times[k + 1] - tr.times[k];
    sum_n += w * tr.states[k][0];
    sum_l += w * tr.states[k][1];
  }
  const double span = tr.times.back();
  CHECK(span > 99000.0);
  CHECK(sum_l / span == Approx(200.0).margin(1.5));
  CHECK(sum_n / span == Approx(502.5).margin(1.5));
  CHECK(sum_n / span > 500.5);
}
