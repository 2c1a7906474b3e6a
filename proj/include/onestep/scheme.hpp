#pragma once

// Interaction schemes: the symbolic record of a one-step process.
//
// A scheme lists species (the components of the state vector), aggregates
// (linear combinations of species that rate laws may reference), reactions
// and named rate constants. Each reaction carries a "before" stoichiometry
// (reactants), an "after" stoichiometry (products) and a monomial rate law
//
//     s(x) = k * prod_f source_f(x) ^ exponent_f
//
// where each source is either a species count or an aggregate value. The
// reaction moves the state by the change vector products - reactants.
// Reverse transition rates are not modelled; a reversible interaction is
// written as two reactions.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "onestep/error.hpp"
#include "onestep/linalg.hpp"

namespace onestep {

struct Species {
  std::string name;
  std::size_t index = 0;

  friend bool operator==(const Species&, const Species&) = default;
};

struct Aggregate {
  std::string name;
  Vector weights;  // one per species

  friend bool operator==(const Aggregate&, const Aggregate&) = default;
};

enum class SourceKind { species, aggregate };

struct RateFactor {
  SourceKind kind = SourceKind::species;
  std::size_t index = 0;
  int exponent = 1;

  friend bool operator==(const RateFactor&, const RateFactor&) = default;
};

struct RateLaw {
  std::string constant;  // parameter name
  std::vector<RateFactor> factors;

  friend bool operator==(const RateLaw&, const RateLaw&) = default;
};

struct Reaction {
  std::string label;
  std::vector<int> reactants;
  std::vector<int> products;
  RateLaw rate;

  friend bool operator==(const Reaction&, const Reaction&) = default;
};

struct InteractionScheme {
  std::string name;
  std::vector<Species> species;
  std::vector<Aggregate> aggregates;
  std::vector<Reaction> reactions;
  std::map<std::string, double> parameters;

  std::size_t species_count() const noexcept { return species.size(); }
  std::size_t reaction_count() const noexcept { return reactions.size(); }

  std::optional<std::size_t> species_index(std::string_view n) const {
    for (const auto& s : species)
      if (s.name == n) return s.index;
    return std::nullopt;
  }

  std::optional<std::size_t> aggregate_index(std::string_view n) const {
    for (std::size_t i = 0; i < aggregates.size(); ++i)
      if (aggregates[i].name == n) return i;
    return std::nullopt;
  }

  std::vector<std::string> species_names() const {
    std::vector<std::string> out;
    out.reserve(species.size());
    for (const auto& s : species) out.push_back(s.name);
    return out;
  }

  friend bool operator==(const InteractionScheme&, const InteractionScheme&) = default;
};

inline std::vector<int> change_vector(const Reaction& reaction) {
  std::vector<int> r(reaction.products.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = reaction.products[i] - reaction.reactants[i];
  return r;
}

namespace detail {

inline double ipow(double base, int exponent) {
  double r = 1.0;
  for (int i = 0; i < exponent; ++i) r *= base;
  return r;
}

inline double source_value(const RateFactor& f, std::span<const double> state,
                           std::span<const double> aggregate_values) {
  return f.kind == SourceKind::species ? state[f.index] : aggregate_values[f.index];
}

// k * prod(source^exponent), clamped at 0 when the raw product is negative.
inline double monomial(double constant, std::span<const RateFactor> factors,
                       std::span<const double> state, std::span<const double> aggregate_values) {
  double s = constant;
  for (const auto& f : factors) s *= ipow(source_value(f, state, aggregate_values), f.exponent);
  return s < 0.0 ? 0.0 : s;
}

// Adds d(monomial)/dx into `grad`. A clamped (negative raw) monomial has zero gradient.
inline void monomial_gradient(double constant, std::span<const RateFactor> factors,
                              std::span<const double> state,
                              std::span<const double> aggregate_values,
                              std::span<const Aggregate> aggregates, std::span<double> grad) {
  double raw = constant;
  for (const auto& f : factors) raw *= ipow(source_value(f, state, aggregate_values), f.exponent);
  if (raw < 0.0) return;
  for (std::size_t fi = 0; fi < factors.size(); ++fi) {
    const auto& f = factors[fi];
    double d = constant * f.exponent *
               ipow(source_value(f, state, aggregate_values), f.exponent - 1);
    for (std::size_t gi = 0; gi < factors.size(); ++gi) {
      if (gi == fi) continue;
      d *= ipow(source_value(factors[gi], state, aggregate_values), factors[gi].exponent);
    }
    if (d == 0.0) continue;
    if (f.kind == SourceKind::species) {
      grad[f.index] += d;
    } else {
      const auto& w = aggregates[f.index].weights;
      for (std::size_t j = 0; j < w.size(); ++j) grad[j] += d * w[j];
    }
  }
}

}  // namespace detail

inline Vector aggregate_values(const InteractionScheme& scheme, std::span<const double> state) {
  Vector out(scheme.aggregates.size(), 0.0);
  for (std::size_t a = 0; a < scheme.aggregates.size(); ++a) {
    const auto& w = scheme.aggregates[a].weights;
    double s = 0.0;
    for (std::size_t j = 0; j < w.size() && j < state.size(); ++j) s += w[j] * state[j];
    out[a] = s;
  }
  return out;
}

inline double rate_constant(const InteractionScheme& scheme, const Reaction& reaction) {
  auto it = scheme.parameters.find(reaction.rate.constant);
  if (it == scheme.parameters.end())
    throw ConfigError("reaction '" + reaction.label + "': unresolved parameter '" +
                      reaction.rate.constant + "'");
  return it->second;
}

inline double propensity(const InteractionScheme& scheme, const Reaction& reaction,
                         std::span<const double> state) {
  if (state.size() != scheme.species_count())
    throw ConfigError("state has " + std::to_string(state.size()) + " components, scheme has " +
                      std::to_string(scheme.species_count()) + " species");
  for (const auto& f : reaction.rate.factors) {
    const std::size_t bound =
        f.kind == SourceKind::species ? scheme.species.size() : scheme.aggregates.size();
    if (f.index >= bound)
      throw ConfigError("reaction '" + reaction.label + "': unresolved source");
  }
  const double k = rate_constant(scheme, reaction);
  const Vector agg = aggregate_values(scheme, state);
  return detail::monomial(k, reaction.rate.factors, state, agg);
}

inline Vector propensities(const InteractionScheme& scheme, std::span<const double> state) {
  Vector out;
  out.reserve(scheme.reactions.size());
  for (const auto& r : scheme.reactions) out.push_back(propensity(scheme, r, state));
  return out;
}

// All structural problems of a scheme; empty means valid.
inline std::vector<std::string> validate(const InteractionScheme& scheme) {
  std::vector<std::string> v;
  const std::size_t n = scheme.species.size();

  std::set<std::string> names;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = scheme.species[i];
    if (s.name.empty()) v.push_back("species #" + std::to_string(i) + " has an empty name");
    if (!names.insert(s.name).second) v.push_back("duplicate species '" + s.name + "'");
    if (s.index != i)
      v.push_back("species '" + s.name + "' has index " + std::to_string(s.index) +
                  ", expected " + std::to_string(i));
  }
  for (const auto& a : scheme.aggregates) {
    if (!names.insert(a.name).second) v.push_back("duplicate name '" + a.name + "' (aggregate)");
    if (a.weights.size() != n)
      v.push_back("aggregate '" + a.name + "' has " + std::to_string(a.weights.size()) +
                  " weights, expected " + std::to_string(n));
    if (std::all_of(a.weights.begin(), a.weights.end(), [](double w) { return w == 0.0; }))
      v.push_back("aggregate '" + a.name + "' has no nonzero weight");
  }
  for (const auto& [p, value] : scheme.parameters) {
    if (!names.insert(p).second) v.push_back("duplicate name '" + p + "' (parameter)");
    if (!std::isfinite(value)) v.push_back("parameter '" + p + "' is not finite");
  }

  std::set<std::string> labels;
  for (const auto& r : scheme.reactions) {
    const std::string who = "reaction '" + r.label + "'";
    if (r.label.empty()) v.push_back("reaction with empty label");
    if (!labels.insert(r.label).second) v.push_back("duplicate reaction label '" + r.label + "'");
    if (r.reactants.size() != n || r.products.size() != n) {
      v.push_back(who + ": stoichiometry dimension mismatch");
    } else {
      for (std::size_t i = 0; i < n; ++i)
        if (r.reactants[i] < 0 || r.products[i] < 0) {
          v.push_back(who + ": negative stoichiometric coefficient");
          break;
        }
    }
    auto it = scheme.parameters.find(r.rate.constant);
    if (it == scheme.parameters.end()) {
      v.push_back(who + ": unresolved parameter '" + r.rate.constant + "'");
    } else if (it->second < 0.0) {
      v.push_back(who + ": negative rate constant '" + r.rate.constant + "'");
    }
    for (const auto& f : r.rate.factors) {
      const std::size_t bound =
          f.kind == SourceKind::species ? scheme.species.size() : scheme.aggregates.size();
      if (f.index >= bound) v.push_back(who + ": unresolved source");
      if (f.exponent < 1) v.push_back(who + ": exponent must be >= 1");
    }
  }
  return v;
}

inline void require_valid(const InteractionScheme& scheme) {
  auto violations = validate(scheme);
  if (violations.empty()) return;
  std::string msg = "invalid scheme '" + scheme.name + "':";
  for (const auto& s : violations) msg += "\n  " + s;
  throw ConfigError(msg, std::move(violations));
}

// A validated scheme with rate constants and change vectors resolved, for
// evaluation in inner loops.
class Network {
 public:
  explicit Network(InteractionScheme scheme) : scheme_(std::move(scheme)) {
    require_valid(scheme_);
    for (const auto& r : scheme_.reactions) {
      constants_.push_back(scheme_.parameters.at(r.rate.constant));
      changes_.push_back(change_vector(r));
    }
  }

  const InteractionScheme& scheme() const noexcept { return scheme_; }
  std::size_t species_count() const noexcept { return scheme_.species.size(); }
  std::size_t reaction_count() const noexcept { return scheme_.reactions.size(); }
  std::size_t aggregate_count() const noexcept { return scheme_.aggregates.size(); }
  const std::vector<std::vector<int>>& change_vectors() const noexcept { return changes_; }

  void aggregate_values(std::span<const double> state, std::span<double> out) const {
    for (std::size_t a = 0; a < scheme_.aggregates.size(); ++a) {
      const auto& w = scheme_.aggregates[a].weights;
      double s = 0.0;
      for (std::size_t j = 0; j < w.size(); ++j) s += w[j] * state[j];
      out[a] = s;
    }
  }

  void propensities(std::span<const double> state, std::span<double> out) const {
    Vector agg(aggregate_count());
    aggregate_values(state, agg);
    for (std::size_t r = 0; r < reaction_count(); ++r)
      out[r] = detail::monomial(constants_[r], scheme_.reactions[r].rate.factors, state, agg);
  }

  Vector propensities(std::span<const double> state) const {
    Vector out(reaction_count());
    propensities(state, out);
    return out;
  }

  // Gradient of each propensity, one row per reaction.
  Matrix propensity_gradients(std::span<const double> state) const {
    Vector agg(aggregate_count());
    aggregate_values(state, agg);
    Matrix g(reaction_count(), species_count());
    for (std::size_t r = 0; r < reaction_count(); ++r)
      detail::monomial_gradient(constants_[r], scheme_.reactions[r].rate.factors, state, agg,
                                scheme_.aggregates, g.row(r));
    return g;
  }

 private:
  InteractionScheme scheme_;
  std::vector<double> constants_;
  std::vector<std::vector<int>> changes_;
};

}  // namespace onestep
