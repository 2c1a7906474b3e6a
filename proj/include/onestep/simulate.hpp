#pragma once

// Time evolution of an interaction scheme.
//
//   integrate_ode  fixed-step RK4 (or explicit Euler) on dx/dt = A(x)
//   integrate_sde  Euler-Maruyama on dx = A dt + b dW, one Wiener component per reaction
//   ssa_run        Gillespie direct method on the integer jump process
//   ensemble       pointwise mean and variance over independent sde/ssa runs
//
// ODE and SDE share a step grid: steps of dt, the last one shortened so the
// final time is exactly t_end. The SSA records one row per firing.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "onestep/error.hpp"
#include "onestep/kinetics.hpp"
#include "onestep/random.hpp"
#include "onestep/scheme.hpp"

namespace onestep {

enum class TrajectoryKind { ode, sde, ssa };

inline const char* to_string(TrajectoryKind k) {
  switch (k) {
    case TrajectoryKind::ode: return "ode";
    case TrajectoryKind::sde: return "sde";
    case TrajectoryKind::ssa: return "ssa";
  }
  return "?";
}

struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;
  TrajectoryKind kind = TrajectoryKind::ode;
  std::optional<std::string> failure;  // set when the run aborted early

  bool ok() const noexcept { return !failure; }
  std::size_t size() const noexcept { return times.size(); }
  const Vector& final_state() const { return states.back(); }
};

struct RunConfig {
  double t_end = 100.0;
  double dt = 0.01;
  std::uint64_t seed = 0;
  std::size_t record_every = 1;
  double noise_scale = 1.0;

  void check() const {
    if (!(t_end > 0.0) || !std::isfinite(t_end)) throw ConfigError("t_end must be positive");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive");
    if (record_every == 0) throw ConfigError("record_every must be positive");
    if (!(noise_scale >= 0.0)) throw ConfigError("noise_scale must be nonnegative");
  }
};

enum class OdeMethod { rk4, euler };

namespace detail {

inline std::size_t step_count(const RunConfig& c) {
  const double ratio = c.t_end / c.dt;
  const double nearest = std::round(ratio);
  if (std::abs(ratio - nearest) <= 1e-9 * std::max(1.0, nearest))
    return static_cast<std::size_t>(std::max(1.0, nearest));
  return static_cast<std::size_t>(std::ceil(ratio));
}

inline double step_time(const RunConfig& c, std::size_t k, std::size_t steps) {
  return k >= steps ? c.t_end : static_cast<double>(k) * c.dt;
}

inline bool recorded_step(std::size_t k, std::size_t steps, std::size_t stride) {
  return k % stride == 0 || k == steps;
}

inline bool all_finite(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

inline void check_initial(const Network& net, std::span<const double> initial) {
  if (initial.size() != net.species_count())
    throw ConfigError("initial state has " + std::to_string(initial.size()) +
                      " components, scheme has " + std::to_string(net.species_count()));
  for (double v : initial)
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("initial state must be nonnegative");
}

}  // namespace detail

// Times at which ODE/SDE runs record a state for `config`.
inline std::vector<double> time_grid(const RunConfig& config) {
  config.check();
  const std::size_t steps = detail::step_count(config);
  std::vector<double> t;
  for (std::size_t k = 0; k <= steps; ++k)
    if (detail::recorded_step(k, steps, config.record_every))
      t.push_back(detail::step_time(config, k, steps));
  return t;
}

// Fixed-step integration of dx/dt = rhs(x). `rhs(x, dxdt)` writes into dxdt.
template <class Rhs>
Trajectory integrate_fixed_step(Rhs&& rhs, Vector x, const RunConfig& config,
                                OdeMethod method = OdeMethod::rk4) {
  config.check();
  const std::size_t n = x.size();
  const std::size_t steps = detail::step_count(config);
  Trajectory traj;
  traj.kind = TrajectoryKind::ode;
  traj.times.push_back(0.0);
  traj.states.push_back(x);

  Vector k1(n), k2(n), k3(n), k4(n), tmp(n);
  for (std::size_t k = 0; k < steps; ++k) {
    const double h = detail::step_time(config, k + 1, steps) - detail::step_time(config, k, steps);
    if (method == OdeMethod::euler) {
      rhs(std::span<const double>(x), std::span<double>(k1));
      for (std::size_t i = 0; i < n; ++i) x[i] = x[i] + h * k1[i];
    } else {
      rhs(std::span<const double>(x), std::span<double>(k1));
      for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
      rhs(std::span<const double>(tmp), std::span<double>(k2));
      for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
      rhs(std::span<const double>(tmp), std::span<double>(k3));
      for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + h * k3[i];
      rhs(std::span<const double>(tmp), std::span<double>(k4));
      for (std::size_t i = 0; i < n; ++i)
        x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    if (!detail::all_finite(x)) {
      traj.failure = "non-finite state at t=" + std::to_string(detail::step_time(config, k + 1, steps));
      return traj;
    }
    if (detail::recorded_step(k + 1, steps, config.record_every)) {
      traj.times.push_back(detail::step_time(config, k + 1, steps));
      traj.states.push_back(x);
    }
  }
  return traj;
}

inline Trajectory integrate_ode(const Network& net, std::span<const double> initial,
                                const RunConfig& config, OdeMethod method = OdeMethod::rk4) {
  detail::check_initial(net, initial);
  Vector scratch(net.reaction_count());
  auto rhs = [&](std::span<const double> x, std::span<double> dx) { drift(net, x, dx, scratch); };
  return integrate_fixed_step(rhs, Vector(initial.begin(), initial.end()), config, method);
}

// Euler-Maruyama: x <- x + A h + noise_scale * b xi sqrt(h), xi ~ N(0, I) per reaction.
inline Trajectory integrate_sde(const Network& net, std::span<const double> initial,
                                const RunConfig& config) {
  config.check();
  detail::check_initial(net, initial);
  const std::size_t n = net.species_count();
  const std::size_t nr = net.reaction_count();
  const std::size_t steps = detail::step_count(config);
  const auto& changes = net.change_vectors();
  RandomStream rng(config.seed);

  Trajectory traj;
  traj.kind = TrajectoryKind::sde;
  Vector x(initial.begin(), initial.end());
  traj.times.push_back(0.0);
  traj.states.push_back(x);

  Vector props(nr), a(n), xi(nr), roots(nr);
  for (std::size_t k = 0; k < steps; ++k) {
    const double h = detail::step_time(config, k + 1, steps) - detail::step_time(config, k, steps);
    drift(net, x, a, props);
    for (std::size_t r = 0; r < nr; ++r) {
      xi[r] = rng.normal();
      roots[r] = std::sqrt(std::max(props[r], 0.0));
    }
    const double amp = config.noise_scale * std::sqrt(h);
    for (std::size_t i = 0; i < n; ++i) x[i] = x[i] + h * a[i];
    for (std::size_t i = 0; i < n; ++i) {
      double noise = 0.0;
      for (std::size_t r = 0; r < nr; ++r)
        if (changes[r][i] != 0) noise += changes[r][i] * roots[r] * xi[r];
      x[i] += amp * noise;
    }
    if (!detail::all_finite(x)) {
      traj.failure = "non-finite state at t=" + std::to_string(detail::step_time(config, k + 1, steps));
      return traj;
    }
    if (detail::recorded_step(k + 1, steps, config.record_every)) {
      traj.times.push_back(detail::step_time(config, k + 1, steps));
      traj.states.push_back(x);
    }
  }
  return traj;
}

// Gillespie direct method. Stops at t_end or once every propensity vanishes.
// `record_every` strides over firings; the last state is always recorded.
inline Trajectory ssa_run(const Network& net, std::span<const double> initial,
                          const RunConfig& config) {
  config.check();
  detail::check_initial(net, initial);
  for (double v : initial)
    if (v != std::floor(v)) throw ConfigError("ssa initial state must be integer-valued");

  const std::size_t nr = net.reaction_count();
  const auto& changes = net.change_vectors();
  RandomStream rng(config.seed);

  Trajectory traj;
  traj.kind = TrajectoryKind::ssa;
  Vector x(initial.begin(), initial.end());
  traj.times.push_back(0.0);
  traj.states.push_back(x);

  Vector props(nr);
  double t = 0.0;
  std::size_t fired = 0;
  bool last_recorded = true;
  while (true) {
    net.propensities(x, props);
    double total = 0.0;
    for (double s : props) total += s;
    if (!(total > 0.0)) break;
    const double tau = rng.exponential(total);
    if (t + tau > config.t_end) break;
    t += tau;

    const double target = rng.uniform() * total;
    std::size_t chosen = nr;
    double cumulative = 0.0;
    for (std::size_t r = 0; r < nr; ++r) {
      if (props[r] <= 0.0) continue;
      cumulative += props[r];
      chosen = r;
      if (target < cumulative) break;
    }
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += changes[chosen][i];
    ++fired;
    last_recorded = fired % config.record_every == 0;
    if (last_recorded) {
      traj.times.push_back(t);
      traj.states.push_back(x);
    }
  }
  if (!last_recorded) {
    traj.times.push_back(t);
    traj.states.push_back(x);
  }
  return traj;
}

enum class EnsembleMode { sde, ssa };

struct EnsembleStats {
  std::vector<double> times;
  std::vector<Vector> mean;
  std::vector<Vector> variance;  // unbiased
  std::size_t run_count = 0;
};

using SeedDeriver = std::function<std::uint64_t(std::uint64_t seed, std::size_t run)>;

namespace detail {

// Per-block running statistics (Welford), merged in block order so results do
// not depend on how many threads ran the blocks.
struct Moments {
  std::size_t count = 0;
  std::vector<Vector> mean;
  std::vector<Vector> m2;

  Moments(std::size_t points, std::size_t n) : mean(points, Vector(n, 0.0)), m2(points, Vector(n, 0.0)) {}

  void add(std::span<const Vector> sample) {
    ++count;
    for (std::size_t p = 0; p < sample.size(); ++p)
      for (std::size_t i = 0; i < sample[p].size(); ++i) {
        const double d = sample[p][i] - mean[p][i];
        mean[p][i] += d / static_cast<double>(count);
        m2[p][i] += d * (sample[p][i] - mean[p][i]);
      }
  }

  void merge(const Moments& o) {
    if (o.count == 0) return;
    const double na = static_cast<double>(count), nb = static_cast<double>(o.count);
    const double n = na + nb;
    for (std::size_t p = 0; p < mean.size(); ++p)
      for (std::size_t i = 0; i < mean[p].size(); ++i) {
        const double d = o.mean[p][i] - mean[p][i];
        mean[p][i] += d * nb / n;
        m2[p][i] += o.m2[p][i] + d * d * na * nb / n;
      }
    count += o.count;
  }
};

// Last-value interpolation of a jump path onto `grid`.
inline std::vector<Vector> align_to_grid(const Trajectory& path, std::span<const double> grid) {
  std::vector<Vector> out;
  out.reserve(grid.size());
  std::size_t j = 0;
  for (double t : grid) {
    while (j + 1 < path.times.size() && path.times[j + 1] <= t) ++j;
    out.push_back(path.states[j]);
  }
  return out;
}

}  // namespace detail

inline EnsembleStats ensemble(const Network& net, std::span<const double> initial,
                              const RunConfig& config, std::size_t runs, EnsembleMode mode,
                              SeedDeriver derive = derive_seed, unsigned threads = 0) {
  if (runs < 2) throw ConfigError("ensemble needs at least 2 runs");
  config.check();
  const std::vector<double> grid = time_grid(config);
  const std::size_t n = net.species_count();

  constexpr std::size_t block_size = 16;
  const std::size_t blocks = (runs + block_size - 1) / block_size;
  std::vector<detail::Moments> partial(blocks, detail::Moments(grid.size(), n));

  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::optional<std::string> error;

  auto worker = [&] {
    for (std::size_t b = next++; b < blocks; b = next++) {
      for (std::size_t run = b * block_size; run < std::min(runs, (b + 1) * block_size); ++run) {
        {
          std::lock_guard lock(error_mutex);
          if (error) return;
        }
        RunConfig c = config;
        c.seed = derive(config.seed, run);
        std::vector<Vector> aligned;
        try {
          if (mode == EnsembleMode::sde) {
            Trajectory tr = integrate_sde(net, initial, c);
            if (!tr.ok()) throw NumericalError(*tr.failure);
            aligned = std::move(tr.states);
          } else {
            aligned = detail::align_to_grid(ssa_run(net, initial, c), grid);
          }
        } catch (const std::exception& e) {
          std::lock_guard lock(error_mutex);
          if (!error)
            error = "run " + std::to_string(run) + " (seed " + std::to_string(c.seed) + "): " + e.what();
          return;
        }
        partial[b].add(aligned);
      }
    }
  };

  unsigned count = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  count = static_cast<unsigned>(std::min<std::size_t>(count, blocks));
  if (count <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < count; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) throw NumericalError("ensemble aborted: " + *error);

  detail::Moments total(grid.size(), n);
  for (const auto& p : partial) total.merge(p);

  EnsembleStats stats;
  stats.times = grid;
  stats.mean = std::move(total.mean);
  stats.variance = std::move(total.m2);
  for (auto& row : stats.variance)
    for (double& v : row) v = std::max(0.0, v / static_cast<double>(runs - 1));
  stats.run_count = runs;
  return stats;
}

}  // namespace onestep
