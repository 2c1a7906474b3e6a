#pragma once

// Built-in peer-to-peer protocol schemes.
//
//   fasttrack              N (new nodes), L (supernodes)
//                          0 -> N @ lambda;  N + L -> 2L @ beta n l;  L -> 0 @ mu l
//   bittorrent_closed      N + C -> 2C @ beta n c
//   bittorrent_open        fasttrack with L renamed to C
//   bittorrent_chunks      N, L1..L{m-1}, C with chunk-by-chunk transfer
//   bittorrent_aggregated  N, Y (leechers + seeders) reduced model

#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "onestep/error.hpp"
#include "onestep/linalg.hpp"
#include "onestep/scheme.hpp"

namespace onestep {

struct FastTrackParams {
  double lambda = 1.0;
  double beta = 0.1;
  double mu = 0.5;

  void check() const {
    if (!(lambda > 0.0 && beta > 0.0 && mu > 0.0))
      throw ConfigError("lambda, beta and mu must be positive");
  }
};

// Which leechers hold chunks of interest to a class-i leecher.
enum class InterestPolicy {
  all_leechers,    // sum over every leecher class
  others_only,     // every class except i
  higher_classes,  // classes j > i
};

inline const char* to_string(InterestPolicy p) {
  switch (p) {
    case InterestPolicy::all_leechers: return "all-leechers";
    case InterestPolicy::others_only: return "others-only";
    case InterestPolicy::higher_classes: return "higher-classes";
  }
  return "?";
}

inline InterestPolicy parse_interest_policy(std::string_view s) {
  if (s == "all-leechers") return InterestPolicy::all_leechers;
  if (s == "others-only") return InterestPolicy::others_only;
  if (s == "higher-classes") return InterestPolicy::higher_classes;
  throw ConfigError("unknown interest policy '" + std::string(s) + "'");
}

struct ChunkModelParams {
  int m = 3;
  double lambda = 1.0;
  double beta = 0.1;              // peer <- seeder
  double mu = 0.5;
  std::vector<double> beta_i;     // peer <- leecher class i, length m-1
  std::vector<double> delta_i;    // leecher <- leechers, length m-1
  std::vector<double> gamma_i;    // leecher <- seeder, length m-2
  double gamma_last_peer = 0.1;   // last chunk from leechers
  double gamma_last_seed = 0.1;   // last chunk from a seeder
  InterestPolicy interest_policy = InterestPolicy::all_leechers;

  // Every per-class coefficient set to `value`, lengths matching m.
  static ChunkModelParams uniform(int m, double lambda, double beta, double mu, double value) {
    ChunkModelParams p;
    p.m = m;
    p.lambda = lambda;
    p.beta = beta;
    p.mu = mu;
    p.beta_i.assign(m > 1 ? m - 1 : 0, value);
    p.delta_i.assign(m > 1 ? m - 1 : 0, value);
    p.gamma_i.assign(m > 2 ? m - 2 : 0, value);
    p.gamma_last_peer = value;
    p.gamma_last_seed = value;
    return p;
  }

  void check() const {
    if (m < 2) throw ConfigError("chunk model needs m >= 2 (use bittorrent-open for one chunk)");
    const auto need = [](const std::vector<double>& v, std::size_t len, const char* name) {
      if (v.size() != len)
        throw ConfigError(std::string(name) + " has length " + std::to_string(v.size()) +
                          ", expected " + std::to_string(len));
      for (double x : v)
        if (!(x >= 0.0)) throw ConfigError(std::string(name) + " must be nonnegative");
    };
    need(beta_i, m - 1, "beta_i");
    need(delta_i, m - 1, "delta_i");
    need(gamma_i, m - 2, "gamma_i");
    if (!(lambda >= 0.0 && beta >= 0.0 && mu >= 0.0 && gamma_last_peer >= 0.0 &&
          gamma_last_seed >= 0.0))
      throw ConfigError("chunk model coefficients must be nonnegative");
  }
};

namespace detail {

class SchemeBuilder {
 public:
  explicit SchemeBuilder(std::string name) { s_.name = std::move(name); }

  std::size_t species(const std::string& name) {
    s_.species.push_back({name, s_.species.size()});
    return s_.species.size() - 1;
  }

  void parameter(const std::string& name, double value) { s_.parameters[name] = value; }

  std::size_t aggregate(const std::string& name, Vector weights) {
    s_.aggregates.push_back({name, std::move(weights)});
    return s_.aggregates.size() - 1;
  }

  // `reactants`/`products` as (species index, count) pairs.
  void reaction(std::string label, std::vector<std::pair<std::size_t, int>> reactants,
                std::vector<std::pair<std::size_t, int>> products, std::string constant,
                std::vector<RateFactor> factors) {
    Reaction r;
    r.label = std::move(label);
    r.reactants.assign(s_.species.size(), 0);
    r.products.assign(s_.species.size(), 0);
    for (auto [i, c] : reactants) r.reactants[i] += c;
    for (auto [i, c] : products) r.products[i] += c;
    r.rate = {std::move(constant), std::move(factors)};
    s_.reactions.push_back(std::move(r));
  }

  InteractionScheme build() {
    require_valid(s_);
    return std::move(s_);
  }

 private:
  InteractionScheme s_;
};

inline RateFactor sp(std::size_t i, int e = 1) { return {SourceKind::species, i, e}; }
inline RateFactor agg(std::size_t i, int e = 1) { return {SourceKind::aggregate, i, e}; }

inline InteractionScheme influx_contact_departure(const std::string& name,
                                                  const std::string& seeder,
                                                  const FastTrackParams& p) {
  p.check();
  SchemeBuilder b(name);
  const auto n = b.species("N");
  const auto l = b.species(seeder);
  b.parameter("lambda", p.lambda);
  b.parameter("beta", p.beta);
  b.parameter("mu", p.mu);
  b.reaction("arrival", {}, {{n, 1}}, "lambda", {});
  b.reaction("download", {{n, 1}, {l, 1}}, {{l, 2}}, "beta", {sp(n), sp(l)});
  b.reaction("departure", {{l, 1}}, {}, "mu", {sp(l)});
  return b.build();
}

}  // namespace detail

inline InteractionScheme fasttrack(const FastTrackParams& p) {
  return detail::influx_contact_departure("fasttrack", "L", p);
}

// (mu / beta, lambda / mu)
inline Vector fasttrack_fixed_point(const FastTrackParams& p) {
  p.check();
  return {p.mu / p.beta, p.lambda / p.mu};
}

// Roots of s^2 + (beta lambda / mu) s + beta lambda = 0.
inline std::pair<std::complex<double>, std::complex<double>> fasttrack_char_roots(
    const FastTrackParams& p) {
  p.check();
  const double b = p.beta * p.lambda / p.mu;
  const double c = p.beta * p.lambda;
  const std::complex<double> root = std::sqrt(std::complex<double>(b * b - 4.0 * c, 0.0));
  return {0.5 * (-b + root), 0.5 * (-b - root)};
}

inline InteractionScheme bittorrent_closed(double beta) {
  if (!(beta > 0.0)) throw ConfigError("beta must be positive");
  detail::SchemeBuilder b("bittorrent-closed");
  const auto n = b.species("N");
  const auto c = b.species("C");
  b.parameter("beta", beta);
  b.reaction("download", {{n, 1}, {c, 1}}, {{c, 2}}, "beta", {detail::sp(n), detail::sp(c)});
  return b.build();
}

inline InteractionScheme bittorrent_open(const FastTrackParams& p) {
  return detail::influx_contact_departure("bittorrent-open", "C", p);
}

// Species order: N, L1, ..., L{m-1}, C. Parameters are named beta_<i>,
// delta_<i>, gamma_<i> (1-based class index), gamma_last_peer, gamma_last_seed.
// The interest aggregate lbar_<i> follows the policy; when it would be empty
// (no class qualifies) the reactions that need it are omitted.
inline InteractionScheme bittorrent_chunks(const ChunkModelParams& p) {
  p.check();
  using detail::agg;
  using detail::sp;
  const int m = p.m;
  const int classes = m - 1;
  detail::SchemeBuilder b("bittorrent-chunks");
  const auto n = b.species("N");
  std::vector<std::size_t> l(classes + 1);  // 1-based
  for (int i = 1; i <= classes; ++i) l[i] = b.species("L" + std::to_string(i));
  const auto c = b.species("C");
  const std::size_t species_count = static_cast<std::size_t>(m) + 1;

  b.parameter("lambda", p.lambda);
  b.parameter("beta", p.beta);
  b.parameter("mu", p.mu);
  b.parameter("gamma_last_peer", p.gamma_last_peer);
  b.parameter("gamma_last_seed", p.gamma_last_seed);
  for (int i = 1; i <= classes; ++i) {
    b.parameter("beta_" + std::to_string(i), p.beta_i[i - 1]);
    b.parameter("delta_" + std::to_string(i), p.delta_i[i - 1]);
  }
  for (int i = 1; i <= m - 2; ++i) b.parameter("gamma_" + std::to_string(i), p.gamma_i[i - 1]);

  std::vector<std::optional<std::size_t>> interest(classes + 1);
  for (int i = 1; i <= classes; ++i) {
    Vector w(species_count, 0.0);
    bool any = false;
    for (int j = 1; j <= classes; ++j) {
      bool include = true;
      if (p.interest_policy == InterestPolicy::others_only) include = j != i;
      if (p.interest_policy == InterestPolicy::higher_classes) include = j > i;
      if (include) {
        w[l[j]] = 1.0;
        any = true;
      }
    }
    if (any) interest[i] = b.aggregate("lbar_" + std::to_string(i), std::move(w));
  }

  b.reaction("arrival", {}, {{n, 1}}, "lambda", {});
  b.reaction("seed_first_chunk", {{n, 1}, {c, 1}}, {{l[1], 1}, {c, 1}}, "beta", {sp(n), sp(c)});
  for (int i = 1; i <= classes; ++i) {
    const auto s = std::to_string(i);
    b.reaction("peer_first_chunk_" + s, {{n, 1}, {l[i], 1}}, {{l[1], 1}, {l[i], 1}}, "beta_" + s,
               {sp(n), sp(l[i])});
  }
  for (int i = 1; i <= m - 2; ++i) {
    const auto s = std::to_string(i);
    if (interest[i])
      b.reaction("leech_chunk_" + s, {{l[i], 1}}, {{l[i + 1], 1}}, "delta_" + s,
                 {sp(l[i]), agg(*interest[i])});
    b.reaction("seed_chunk_" + s, {{l[i], 1}, {c, 1}}, {{l[i + 1], 1}, {c, 1}}, "gamma_" + s,
               {sp(l[i]), sp(c)});
  }
  if (interest[classes])
    b.reaction("leech_last_chunk", {{l[classes], 1}}, {{c, 1}}, "gamma_last_peer",
               {sp(l[classes]), agg(*interest[classes])});
  b.reaction("seed_last_chunk", {{l[classes], 1}, {c, 1}}, {{c, 2}}, "gamma_last_seed",
             {sp(l[classes]), sp(c)});
  b.reaction("departure", {{c, 1}}, {}, "mu", {sp(c)});
  return b.build();
}

// Two-species reduction on (n, y), y = leechers + seeders:
//   dn/dt = lambda - beta n y,   dy/dt = beta n y - mu f y
// with f the seeder fraction of y (default 1). Departures use the single
// constant mu_seed = mu * f.
inline InteractionScheme bittorrent_aggregated(const FastTrackParams& p, double seeder_fraction = 1.0) {
  p.check();
  if (!(seeder_fraction >= 0.0 && seeder_fraction <= 1.0))
    throw ConfigError("seeder fraction must lie in [0, 1]");
  detail::SchemeBuilder b("bittorrent-aggregated");
  const auto n = b.species("N");
  const auto y = b.species("Y");
  b.parameter("lambda", p.lambda);
  b.parameter("beta", p.beta);
  b.parameter("mu_seed", p.mu * seeder_fraction);
  b.reaction("arrival", {}, {{n, 1}}, "lambda", {});
  b.reaction("download", {{n, 1}, {y, 1}}, {{y, 2}}, "beta", {detail::sp(n), detail::sp(y)});
  b.reaction("departure", {{y, 1}}, {}, "mu_seed", {detail::sp(y)});
  return b.build();
}

}  // namespace onestep
