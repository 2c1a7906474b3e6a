#pragma once

// Drift, diffusion and Langevin noise factor of a one-step process.
//
// With change vectors r_a and propensities s_a(x) (reverse rates are zero):
//
//     A(x) = sum_a r_a s_a(x)              drift, the deterministic RHS
//     B(x) = sum_a r_a r_a^T s_a(x)        diffusion matrix
//     b(x) = [ r_a sqrt(s_a(x)) ]_a        noise factor, b b^T = B
//
// The noise factor has one column per reaction, so it exists even where B is
// singular (conserved quantities).

#include <cmath>
#include <span>

#include "onestep/linalg.hpp"
#include "onestep/scheme.hpp"

namespace onestep {

struct KineticCoefficients {
  Vector drift;
  Matrix diffusion;
  Matrix noise_factor;
};

inline void drift(const Network& net, std::span<const double> state, std::span<double> out,
                  std::span<double> propensity_scratch) {
  net.propensities(state, propensity_scratch);
  std::fill(out.begin(), out.end(), 0.0);
  const auto& changes = net.change_vectors();
  for (std::size_t a = 0; a < changes.size(); ++a) {
    const double s = propensity_scratch[a];
    const auto& r = changes[a];
    for (std::size_t i = 0; i < r.size(); ++i)
      if (r[i] != 0) out[i] += r[i] * s;
  }
}

inline Vector drift(const Network& net, std::span<const double> state) {
  Vector out(net.species_count());
  Vector s(net.reaction_count());
  drift(net, state, out, s);
  return out;
}

inline Matrix diffusion(const Network& net, std::span<const double> state) {
  const std::size_t n = net.species_count();
  const Vector s = net.propensities(state);
  Matrix b(n, n);
  const auto& changes = net.change_vectors();
  for (std::size_t a = 0; a < changes.size(); ++a) {
    const auto& r = changes[a];
    for (std::size_t i = 0; i < n; ++i) {
      if (r[i] == 0) continue;
      for (std::size_t j = 0; j < n; ++j)
        if (r[j] != 0) b(i, j) += double(r[i]) * double(r[j]) * s[a];
    }
  }
  return b;
}

inline void noise_factor(const Network& net, std::span<const double> propensities, Matrix& out) {
  const auto& changes = net.change_vectors();
  for (std::size_t a = 0; a < changes.size(); ++a) {
    const double root = std::sqrt(std::max(propensities[a], 0.0));
    for (std::size_t i = 0; i < changes[a].size(); ++i) out(i, a) = changes[a][i] * root;
  }
}

inline Matrix noise_factor(const Network& net, std::span<const double> state) {
  Matrix b(net.species_count(), net.reaction_count());
  noise_factor(net, net.propensities(state), b);
  return b;
}

// Analytic Jacobian of the drift: sum_a r_a (grad s_a)^T.
inline Matrix jacobian(const Network& net, std::span<const double> state) {
  const std::size_t n = net.species_count();
  const Matrix grads = net.propensity_gradients(state);
  Matrix j(n, n);
  const auto& changes = net.change_vectors();
  for (std::size_t a = 0; a < changes.size(); ++a) {
    const auto g = grads.row(a);
    for (std::size_t i = 0; i < n; ++i) {
      if (changes[a][i] == 0) continue;
      for (std::size_t k = 0; k < n; ++k) j(i, k) += changes[a][i] * g[k];
    }
  }
  return j;
}

inline KineticCoefficients coefficients(const Network& net, std::span<const double> state) {
  return {drift(net, state), diffusion(net, state), noise_factor(net, state)};
}

// Convenience overloads on an unresolved scheme; each call validates.
inline Vector drift(const InteractionScheme& s, std::span<const double> x) {
  return drift(Network(s), x);
}
inline Matrix diffusion(const InteractionScheme& s, std::span<const double> x) {
  return diffusion(Network(s), x);
}
inline Matrix noise_factor(const InteractionScheme& s, std::span<const double> x) {
  return noise_factor(Network(s), x);
}
inline Matrix jacobian(const InteractionScheme& s, std::span<const double> x) {
  return jacobian(Network(s), x);
}

}  // namespace onestep
