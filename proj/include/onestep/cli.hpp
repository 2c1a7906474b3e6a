#pragma once

// Command-line front end: verbs simulate, analyze, phase, ensemble, export.
//
// Exit codes: 0 success, 1 numerical failure, 2 usage or configuration error.
// Every diagnostic is a single stderr line "error[<code>]: <message>" with
// code one of usage, config, parse, numerical, io.

#include <CLI11.hpp>

#include <cctype>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "onestep/analysis.hpp"
#include "onestep/error.hpp"
#include "onestep/io.hpp"
#include "onestep/model_file.hpp"
#include "onestep/models.hpp"
#include "onestep/random.hpp"
#include "onestep/simulate.hpp"

namespace onestep::cli {

enum class Verb { simulate, analyze, phase, ensemble, export_model };
enum class Mode { ode, sde, ssa };

class UsageError : public std::runtime_error {
 public:
  UsageError(const std::string& what, std::string usage)
      : std::runtime_error(what), usage_(std::move(usage)) {}
  const std::string& usage() const noexcept { return usage_; }

 private:
  std::string usage_;
};

// --help was given; `text()` is the help to print.
class HelpRequested : public std::runtime_error {
 public:
  explicit HelpRequested(std::string text) : std::runtime_error("help"), text_(std::move(text)) {}
  const std::string& text() const noexcept { return text_; }

 private:
  std::string text_;
};

struct ModelSource {
  std::string builtin;  // empty when `path` is set
  std::string path;
  std::vector<std::pair<std::string, double>> overrides;
  std::string policy = "all-leechers";
};

// A state given either positionally ("10,1") or by species name ("n=10,l=1").
struct StateSpec {
  Vector positional;
  std::vector<std::pair<std::string, double>> named;
};

struct Command {
  Verb verb = Verb::simulate;
  ModelSource model;
  Mode mode = Mode::ode;
  RunConfig run;
  std::size_t runs = 100;
  std::optional<StateSpec> init;
  std::optional<StateSpec> center;
  std::vector<Vector> deviations;
  std::vector<Vector> guesses;
  NewtonOptions newton;
  std::optional<std::string> out;
};

inline const std::vector<std::string>& builtin_models() {
  static const std::vector<std::string> names = {"fasttrack", "bittorrent-closed",
                                                 "bittorrent-open", "bittorrent-chunks",
                                                 "bittorrent-aggregated"};
  return names;
}

namespace detail {

using onestep::detail::split;
using onestep::detail::to_double;
using onestep::detail::trim;

inline std::pair<std::string, double> parse_assignment(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("expected name=value, got '" + text + "'");
  const std::string value = trim(text.substr(eq + 1));
  const double v = to_double(value);
  if (!std::isfinite(v)) throw ConfigError("value of '" + text.substr(0, eq) + "' is not finite");
  return {trim(text.substr(0, eq)), v};
}

inline Vector parse_numbers(const std::string& text) {
  Vector out;
  for (const auto& cell : split(text, ',')) out.push_back(to_double(trim(cell)));
  return out;
}

inline StateSpec parse_state(const std::string& text) {
  StateSpec spec;
  const auto cells = split(text, ',');
  const bool named = cells.front().find('=') != std::string::npos;
  for (const auto& cell : cells) {
    const bool this_named = cell.find('=') != std::string::npos;
    if (this_named != named) throw ConfigError("cannot mix positional and named values in '" + text + "'");
    if (named)
      spec.named.push_back(parse_assignment(cell));
    else
      spec.positional.push_back(to_double(trim(cell)));
  }
  return spec;
}

inline bool iequals(const std::string& a, const std::string& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i])))
      return false;
  return true;
}

}  // namespace detail

// Resolves a state spec against species names. Names match exactly, or
// case-insensitively when that is unambiguous; unnamed species default to 0.
inline Vector resolve_state(const StateSpec& spec, const InteractionScheme& scheme) {
  const std::size_t n = scheme.species_count();
  if (spec.named.empty()) {
    if (spec.positional.size() != n)
      throw ConfigError("expected " + std::to_string(n) + " values, got " +
                        std::to_string(spec.positional.size()));
    return spec.positional;
  }
  Vector x(n, 0.0);
  std::vector<bool> seen(n, false);
  for (const auto& [name, value] : spec.named) {
    std::optional<std::size_t> idx = scheme.species_index(name);
    if (!idx) {
      for (const auto& s : scheme.species)
        if (detail::iequals(s.name, name)) {
          if (idx) throw ConfigError("species name '" + name + "' is ambiguous");
          idx = s.index;
        }
    }
    if (!idx) throw ConfigError("unknown species '" + name + "'");
    if (seen[*idx]) throw ConfigError("species '" + name + "' given twice");
    seen[*idx] = true;
    x[*idx] = value;
  }
  return x;
}

inline Command parse_args(const std::vector<std::string>& args) {
  CLI::App app{"One-step process models of peer-to-peer protocols", "onestep"};
  app.require_subcommand(1);

  struct Raw {
    std::string model, model_file, mode, init, center, out, policy = "all-leechers";
    std::vector<std::string> params, deviations, guesses;
    double t_end = 100.0, dt = 0.01, noise_scale = 1.0, tol = 1e-10;
    std::uint64_t seed = 0;
    std::size_t record_every = 1, runs = 100;
    int max_iter = 100;
  } raw;

  auto add_model = [&](CLI::App* sub, bool allow_file) {
    auto* m = sub->add_option("--model", raw.model, "built-in model name")
                  ->check(CLI::IsMember(builtin_models()));
    if (allow_file) {
      auto* f = sub->add_option("--model-file", raw.model_file, "model definition file");
      m->excludes(f);
    }
    sub->add_option("-p,--param", raw.params, "parameter override name=value (repeatable)")
        ->expected(1)
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    sub->add_option("--policy", raw.policy, "interest policy for bittorrent-chunks")
        ->check(CLI::IsMember({"all-leechers", "others-only", "higher-classes"}));
  };
  auto add_run = [&](CLI::App* sub, bool stochastic) {
    sub->add_option("--t-end", raw.t_end, "end time (default 100)")->check(CLI::PositiveNumber);
    sub->add_option("--dt", raw.dt, "step size (default 0.01)")->check(CLI::PositiveNumber);
    sub->add_option("--record-every", raw.record_every, "record stride (default 1)")
        ->check(CLI::PositiveNumber);
    if (stochastic) {
      sub->add_option("--seed", raw.seed, "64-bit seed (default 0)");
      sub->add_option("--noise-scale", raw.noise_scale, "noise multiplier (default 1)")
          ->check(CLI::NonNegativeNumber);
    }
  };
  auto add_newton = [&](CLI::App* sub) {
    sub->add_option("--tol", raw.tol, "Newton residual tolerance (default 1e-10)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--max-iter", raw.max_iter, "Newton iteration cap (default 100)")
        ->check(CLI::PositiveNumber);
  };

  auto* simulate = app.add_subcommand("simulate", "integrate one trajectory to CSV");
  add_model(simulate, true);
  simulate->add_option("--mode", raw.mode, "ode | sde | ssa (default ode)")
      ->check(CLI::IsMember({"ode", "sde", "ssa"}));
  add_run(simulate, true);
  simulate->add_option("--init", raw.init, "initial state: 10,1 or n=10,l=1")->required();
  simulate->add_option("--out", raw.out, "output CSV (default stdout)");

  auto* analyze = app.add_subcommand("analyze", "fixed points and linear stability report");
  add_model(analyze, true);
  add_newton(analyze);
  analyze->add_option("--guess", raw.guesses, "extra Newton start (repeatable)")
      ->expected(1)
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  analyze->add_option("--seed", raw.seed, "seed for random Newton starts (default 0)");
  analyze->add_option("--out", raw.out, "output report (default stdout)");

  auto* phase = app.add_subcommand("phase", "ODE trajectories around a steady state");
  add_model(phase, true);
  add_newton(phase);
  phase->add_option("--t-end", raw.t_end, "end time (default 100)")->check(CLI::PositiveNumber);
  phase->add_option("--dt", raw.dt, "step size (default 0.01)")->check(CLI::PositiveNumber);
  phase->add_option("--seed", raw.seed, "seed for random Newton starts (default 0)");
  phase->add_option("--center", raw.center, "phase-plane center (default: first fixed point)");
  phase->add_option("--deviation", raw.deviations, "offset from the center (repeatable)")
      ->expected(1)
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)
      ->required();
  phase->add_option("--out", raw.out, "output prefix; writes <prefix>_<k>.csv")->required();

  auto* ens = app.add_subcommand("ensemble", "mean and variance over stochastic runs");
  add_model(ens, true);
  ens->add_option("--mode", raw.mode, "sde | ssa (default ssa)")->check(CLI::IsMember({"sde", "ssa"}));
  add_run(ens, true);
  ens->add_option("--runs", raw.runs, "number of runs (default 100)")->check(CLI::Range(2, 100000000));
  ens->add_option("--init", raw.init, "initial state")->required();
  ens->add_option("--out", raw.out, "output CSV (default stdout)");

  auto* exp = app.add_subcommand("export", "write a built-in model as a model file");
  add_model(exp, false);
  exp->add_option("--out", raw.out, "output file (default stdout)");

  std::vector<std::string> argv_store{"onestep"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    CLI::App* target = &app;
    for (auto* sub : app.get_subcommands()) target = sub;
    throw HelpRequested(target->help());
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what(), app.help());
  }

  CLI::App* used = app.get_subcommands().front();
  const std::string usage = used->help();
  Command cmd;
  try {
    if (used == simulate) cmd.verb = Verb::simulate;
    else if (used == analyze) cmd.verb = Verb::analyze;
    else if (used == phase) cmd.verb = Verb::phase;
    else if (used == ens) cmd.verb = Verb::ensemble;
    else cmd.verb = Verb::export_model;

    if (raw.model.empty() && raw.model_file.empty())
      throw ConfigError(cmd.verb == Verb::export_model ? "--model is required"
                                                       : "one of --model or --model-file is required");
    cmd.model.builtin = raw.model;
    cmd.model.path = raw.model_file;
    cmd.model.policy = raw.policy;
    for (const auto& p : raw.params) cmd.model.overrides.push_back(detail::parse_assignment(p));

    if (raw.mode.empty()) raw.mode = cmd.verb == Verb::ensemble ? "ssa" : "ode";
    cmd.mode = raw.mode == "sde" ? Mode::sde : raw.mode == "ssa" ? Mode::ssa : Mode::ode;

    cmd.run.t_end = raw.t_end;
    cmd.run.dt = raw.dt;
    cmd.run.seed = raw.seed;
    cmd.run.record_every = raw.record_every;
    cmd.run.noise_scale = raw.noise_scale;
    cmd.run.check();
    cmd.runs = raw.runs;
    cmd.newton.tol = raw.tol;
    cmd.newton.max_iter = raw.max_iter;

    if (!raw.init.empty()) cmd.init = detail::parse_state(raw.init);
    if (!raw.center.empty()) cmd.center = detail::parse_state(raw.center);
    for (const auto& d : raw.deviations) cmd.deviations.push_back(detail::parse_numbers(d));
    for (const auto& g : raw.guesses) cmd.guesses.push_back(detail::parse_numbers(g));
    if (!raw.out.empty()) cmd.out = raw.out;
  } catch (const ConfigError& e) {
    throw UsageError(e.what(), usage);
  }
  return cmd;
}

struct ResolvedModel {
  InteractionScheme scheme;
  std::optional<Vector> reference_point;  // analytic steady state when known
};

inline ResolvedModel resolve_model(const ModelSource& src) {
  if (!src.path.empty()) {
    InteractionScheme s = load_model_file(src.path);
    for (const auto& [k, v] : src.overrides) {
      auto it = s.parameters.find(k);
      if (it == s.parameters.end())
        throw ConfigError("parameter override '" + k + "' is not declared in " + src.path);
      it->second = v;
    }
    require_valid(s);
    return {std::move(s), std::nullopt};
  }

  const std::string& name = src.builtin;
  std::map<std::string, double> values;
  auto take = [&](const std::string& key) { return values.at(key); };
  auto apply_overrides = [&] {
    for (const auto& [k, v] : src.overrides) {
      if (!values.count(k))
        throw ConfigError("model '" + name + "' has no parameter '" + k + "'");
      values[k] = v;
    }
  };

  if (name == "bittorrent-closed") {
    values = {{"beta", 0.1}};
    apply_overrides();
    return {bittorrent_closed(take("beta")), std::nullopt};
  }
  if (name == "fasttrack" || name == "bittorrent-open" || name == "bittorrent-aggregated") {
    values = {{"lambda", 1.0}, {"beta", 0.1}, {"mu", 0.5}};
    if (name == "bittorrent-aggregated") values["fraction"] = 1.0;
    apply_overrides();
    const FastTrackParams p{take("lambda"), take("beta"), take("mu")};
    if (name == "fasttrack") return {fasttrack(p), fasttrack_fixed_point(p)};
    if (name == "bittorrent-open") return {bittorrent_open(p), fasttrack_fixed_point(p)};
    const double f = take("fraction");
    auto s = bittorrent_aggregated(p, f);
    std::optional<Vector> ref;
    if (f > 0.0) ref = Vector{p.mu * f / p.beta, p.lambda / (p.mu * f)};
    return {std::move(s), ref};
  }
  if (name == "bittorrent-chunks") {
    int m = 3;
    for (const auto& [k, v] : src.overrides)
      if (k == "m") {
        if (v != std::floor(v) || v < 2 || v > 1000) throw ConfigError("m must be an integer >= 2");
        m = static_cast<int>(v);
      }
    ChunkModelParams p = ChunkModelParams::uniform(m, 1.0, 0.1, 0.5, 0.1);
    values = {{"m", double(m)},         {"lambda", p.lambda},
              {"beta", p.beta}, {"mu", p.mu},
              {"gamma_last_peer", p.gamma_last_peer}, {"gamma_last_seed", p.gamma_last_seed}};
    for (int i = 1; i <= m - 1; ++i) {
      values["beta_" + std::to_string(i)] = p.beta_i[i - 1];
      values["delta_" + std::to_string(i)] = p.delta_i[i - 1];
    }
    for (int i = 1; i <= m - 2; ++i) values["gamma_" + std::to_string(i)] = p.gamma_i[i - 1];
    apply_overrides();
    p.lambda = take("lambda");
    p.beta = take("beta");
    p.mu = take("mu");
    p.gamma_last_peer = take("gamma_last_peer");
    p.gamma_last_seed = take("gamma_last_seed");
    for (int i = 1; i <= m - 1; ++i) {
      p.beta_i[i - 1] = take("beta_" + std::to_string(i));
      p.delta_i[i - 1] = take("delta_" + std::to_string(i));
    }
    for (int i = 1; i <= m - 2; ++i) p.gamma_i[i - 1] = take("gamma_" + std::to_string(i));
    p.interest_policy = parse_interest_policy(src.policy);
    return {bittorrent_chunks(p), std::nullopt};
  }
  throw ConfigError("unknown model '" + name + "'");
}

// Newton starts: the analytic point scaled by 0.5 and 1.5 when known, then 8
// random positive points drawn from a stream seeded by `seed`.
inline std::vector<Vector> default_guesses(const ResolvedModel& model, std::uint64_t seed) {
  const std::size_t n = model.scheme.species_count();
  std::vector<Vector> out;
  Vector scale(n, 10.0);
  if (model.reference_point) {
    const Vector& r = *model.reference_point;
    Vector lo(n), hi(n);
    for (std::size_t i = 0; i < n; ++i) {
      lo[i] = 0.5 * r[i];
      hi[i] = 1.5 * r[i];
      scale[i] = 2.0 * std::max(r[i], 1.0);
    }
    out.push_back(std::move(lo));
    out.push_back(std::move(hi));
  }
  RandomStream rng(derive_seed(seed, 0));
  for (int k = 0; k < 8; ++k) {
    Vector g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = rng.uniform_positive() * scale[i];
    out.push_back(std::move(g));
  }
  return out;
}

namespace detail {

template <class Write>
void emit(const std::optional<std::string>& path, std::ostream& fallback, Write&& write) {
  if (!path) {
    write(fallback);
    return;
  }
  std::ofstream f(*path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::ios_base::failure("cannot open '" + *path + "' for writing");
  write(f);
  f.flush();
  if (!f) throw std::ios_base::failure("failed writing '" + *path + "'");
}

}  // namespace detail

inline int run(const Command& cmd, std::ostream& out, std::ostream& err) {
  auto fail = [&](const char* code, const std::string& msg, int status) {
    std::string one_line = msg;
    for (char& c : one_line)
      if (c == '\n') c = ';';
    err << "error[" << code << "]: " << one_line << '\n';
    return status;
  };

  try {
    ResolvedModel model = resolve_model(cmd.model);
    const Network net(model.scheme);
    const auto names = model.scheme.species_names();
    const std::string label = model.scheme.name.empty() ? cmd.model.path : model.scheme.name;

    auto fixed_points = [&] {
      std::vector<Vector> guesses = cmd.guesses;
      for (auto& g : default_guesses(model, cmd.run.seed)) guesses.push_back(std::move(g));
      return find_fixed_points(net, guesses, cmd.newton);
    };

    switch (cmd.verb) {
      case Verb::export_model:
        detail::emit(cmd.out, out, [&](std::ostream& os) { os << render_model(model.scheme); });
        return 0;

      case Verb::simulate: {
        const Vector x0 = resolve_state(*cmd.init, model.scheme);
        Trajectory tr = cmd.mode == Mode::ode   ? integrate_ode(net, x0, cmd.run)
                        : cmd.mode == Mode::sde ? integrate_sde(net, x0, cmd.run)
                                                : ssa_run(net, x0, cmd.run);
        detail::emit(cmd.out, out, [&](std::ostream& os) { write_trajectory_csv(os, names, tr); });
        if (!tr.ok()) return fail("numerical", *tr.failure, 1);
        return 0;
      }

      case Verb::ensemble: {
        const Vector x0 = resolve_state(*cmd.init, model.scheme);
        const EnsembleMode mode = cmd.mode == Mode::sde ? EnsembleMode::sde : EnsembleMode::ssa;
        const EnsembleStats st = ensemble(net, x0, cmd.run, cmd.runs, mode);
        detail::emit(cmd.out, out, [&](std::ostream& os) { write_ensemble_csv(os, names, st, mode); });
        return 0;
      }

      case Verb::analyze: {
        const auto fps = fixed_points();
        std::vector<StabilityReport> reports;
        std::size_t unconverged = 0;
        for (const auto& fp : fps) {
          if (fp.converged)
            reports.push_back(stability_report(net, fp));
          else
            ++unconverged;
        }
        detail::emit(cmd.out, out, [&](std::ostream& os) {
          write_report(os, label, names, reports, unconverged);
        });
        if (reports.empty()) return fail("numerical", "no Newton start converged", 1);
        return 0;
      }

      case Verb::phase: {
        Vector center;
        if (cmd.center) {
          center = resolve_state(*cmd.center, model.scheme);
        } else {
          const auto fps = fixed_points();
          const auto it = std::find_if(fps.begin(), fps.end(), [](const FixedPoint& f) { return f.converged; });
          if (it == fps.end()) return fail("numerical", "no fixed point found for phase center", 1);
          center = it->state;
        }
        const auto trajectories = phase_portrait(net, center, cmd.deviations, cmd.run.t_end, cmd.run.dt);
        for (std::size_t k = 0; k < trajectories.size(); ++k) {
          const std::optional<std::string> path = *cmd.out + "_" + std::to_string(k) + ".csv";
          detail::emit(path, out, [&](std::ostream& os) { write_trajectory_csv(os, names, trajectories[k]); });
        }
        for (const auto& t : trajectories)
          if (!t.ok()) return fail("numerical", *t.failure, 1);
        return 0;
      }
    }
  } catch (const ParseError& e) {
    return fail("parse", e.what(), 2);
  } catch (const ConfigError& e) {
    return fail("config", e.what(), 2);
  } catch (const NumericalError& e) {
    return fail("numerical", e.what(), 1);
  } catch (const std::ios_base::failure& e) {
    return fail("io", e.what(), 1);
  }
  return 0;
}

inline int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Command cmd;
  try {
    cmd = parse_args(args);
  } catch (const HelpRequested& h) {
    out << h.text();
    return 0;
  } catch (const UsageError& e) {
    std::string msg = e.what();
    for (char& c : msg)
      if (c == '\n') c = ';';
    err << "error[usage]: " << msg << '\n' << e.usage();
    return 2;
  }
  return run(cmd, out, err);
}

}  // namespace onestep::cli
