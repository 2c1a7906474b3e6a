#pragma once

// Steady states and their linear stability.

#include <algorithm>
#include <cmath>
#include <complex>
#include <future>
#include <span>
#include <string>
#include <vector>

#include "onestep/eigen.hpp"
#include "onestep/kinetics.hpp"
#include "onestep/linalg.hpp"
#include "onestep/scheme.hpp"
#include "onestep/simulate.hpp"

namespace onestep {

struct FixedPoint {
  Vector state;
  double residual_norm = 0.0;  // max-norm of the drift
  bool converged = false;
};

enum class Classification {
  stable_node,
  stable_focus,
  unstable_node,
  unstable_focus,
  saddle,
  center,
  degenerate,
};

inline const char* to_string(Classification c) {
  switch (c) {
    case Classification::stable_node: return "stable-node";
    case Classification::stable_focus: return "stable-focus";
    case Classification::unstable_node: return "unstable-node";
    case Classification::unstable_focus: return "unstable-focus";
    case Classification::saddle: return "saddle";
    case Classification::center: return "center";
    case Classification::degenerate: return "degenerate";
  }
  return "?";
}

struct StabilityReport {
  FixedPoint fixed_point;
  Matrix jacobian;
  std::vector<Complex> eigenvalues;
  Classification classification = Classification::degenerate;
};

struct NewtonOptions {
  double tol = 1e-10;
  int max_iter = 100;
  int max_halvings = 30;
  double dedup_radius = 1e-6;
};

// Damped Newton on drift(x) = 0 from a single start. The step is halved until
// the residual 2-norm decreases and the trial stays in the nonnegative orthant
// (outside it clamped propensities make the drift vanish spuriously). Where the
// Jacobian is singular the steepest-descent direction -J^T F is used instead.
inline FixedPoint newton_fixed_point(const Network& net, Vector x, const NewtonOptions& opt = {}) {
  const auto norm2 = [](const Vector& v) {
    double s = 0.0;
    for (double e : v) s += e * e;
    return std::sqrt(s);
  };
  Vector f = drift(net, x);
  double merit = norm2(f);
  for (int it = 0; it < opt.max_iter && !(max_norm(f) < opt.tol); ++it) {
    const Matrix j = jacobian(net, x);
    Vector neg_f(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) neg_f[i] = -f[i];
    Vector step;
    if (auto s = solve(j, neg_f)) {
      step = std::move(*s);
    } else {
      step = j.transposed() * neg_f;
      if (max_norm(step) == 0.0) break;
    }
    double lambda = 1.0;
    bool improved = false;
    for (int h = 0; h <= opt.max_halvings; ++h, lambda *= 0.5) {
      Vector trial(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) trial[i] = x[i] + lambda * step[i];
      if (std::any_of(trial.begin(), trial.end(), [](double v) { return v < 0.0; })) continue;
      Vector ft = drift(net, trial);
      const double mt = norm2(ft);
      if (std::isfinite(mt) && mt < merit) {
        x = std::move(trial);
        f = std::move(ft);
        merit = mt;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  const double res = max_norm(f);
  return {std::move(x), res, res < opt.tol};
}

// Newton from every guess; converged results within `dedup_radius` (max-norm)
// are merged, keeping the first. Non-converged starts are reported as such.
inline std::vector<FixedPoint> find_fixed_points(const Network& net,
                                                 std::span<const Vector> initial_guesses,
                                                 const NewtonOptions& opt = {}) {
  if (!(opt.tol > 0.0)) throw ConfigError("tolerance must be positive");
  std::vector<FixedPoint> found;
  for (const auto& g : initial_guesses) {
    if (g.size() != net.species_count()) throw ConfigError("initial guess has wrong dimension");
    FixedPoint fp = newton_fixed_point(net, g, opt);
    if (fp.converged) {
      const bool duplicate = std::any_of(found.begin(), found.end(), [&](const FixedPoint& o) {
        return o.converged && max_abs_diff(o.state, fp.state) <= opt.dedup_radius;
      });
      if (duplicate) continue;
    }
    found.push_back(std::move(fp));
  }
  return found;
}

inline constexpr double kClassificationEpsilon = 1e-9;

inline Classification classify(std::span<const Complex> eigenvalues,
                               double eps = kClassificationEpsilon) {
  if (eigenvalues.empty()) throw ConfigError("classify: empty spectrum");
  bool any_zero = false, any_neg = false, any_pos = false, any_complex = false;
  bool all_zero_are_oscillatory = true;
  for (const auto& ev : eigenvalues) {
    const double re = ev.real();
    if (std::abs(re) <= eps) {
      any_zero = true;
      if (!(std::abs(ev.imag()) > eps)) all_zero_are_oscillatory = false;
    } else if (re < 0.0) {
      any_neg = true;
    } else {
      any_pos = true;
    }
    if (std::abs(ev.imag()) > eps) any_complex = true;
  }
  if (any_neg && any_pos) return Classification::saddle;
  if (any_zero) {
    return (!any_neg && !any_pos && all_zero_are_oscillatory) ? Classification::center
                                                              : Classification::degenerate;
  }
  if (any_neg) return any_complex ? Classification::stable_focus : Classification::stable_node;
  return any_complex ? Classification::unstable_focus : Classification::unstable_node;
}

// Closed-form type of the FastTrack steady state: the discriminant of
// s^2 + (beta lambda / mu) s + beta lambda changes sign at beta lambda = 4 mu^2.
inline Classification fasttrack_classification(double lambda, double beta, double mu) {
  if (!(lambda > 0.0 && beta > 0.0 && mu > 0.0))
    throw ConfigError("fasttrack parameters must be positive");
  const double lhs = beta * lambda;
  const double rhs = 4.0 * mu * mu;
  if (lhs < rhs) return Classification::stable_focus;
  if (lhs > rhs) return Classification::stable_node;
  return Classification::degenerate;
}

inline StabilityReport stability_report(const Network& net, FixedPoint fp) {
  StabilityReport rep;
  rep.jacobian = jacobian(net, fp.state);
  rep.eigenvalues = eigenvalues(rep.jacobian);
  rep.classification = classify(rep.eigenvalues);
  rep.fixed_point = std::move(fp);
  return rep;
}

// One ODE trajectory per start point center + deviation, computed concurrently.
inline std::vector<Trajectory> phase_portrait(const Network& net, std::span<const double> center,
                                              std::span<const Vector> deviations, double t_end,
                                              double dt) {
  if (center.size() != net.species_count()) throw ConfigError("center has wrong dimension");
  RunConfig config;
  config.t_end = t_end;
  config.dt = dt;
  config.check();
  std::vector<Vector> starts;
  for (const auto& d : deviations) {
    if (d.size() != center.size()) throw ConfigError("deviation has wrong dimension");
    Vector s(center.begin(), center.end());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] += d[i];
    starts.push_back(std::move(s));
  }
  std::vector<std::future<Trajectory>> jobs;
  for (const auto& s : starts)
    jobs.push_back(std::async(std::launch::async, [&net, &s, config] {
      return integrate_ode(net, s, config);
    }));
  std::vector<Trajectory> out;
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

}  // namespace onestep
