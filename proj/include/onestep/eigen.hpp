#pragma once

// Eigenvalues of small dense real nonsymmetric matrices.
//
// Dimension <= 2 uses the closed-form quadratic. Larger matrices are balanced,
// reduced to upper Hessenberg form by stabilized elimination, then iterated
// with the Francis double-shift QR algorithm until the quasi-triangular form
// exposes every 1x1 and 2x2 block.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "onestep/error.hpp"
#include "onestep/linalg.hpp"

namespace onestep {

using Complex = std::complex<double>;

// QR iteration ran out of sweeps. `partial()` holds the eigenvalues already
// deflated when the cap was hit.
class EigenError : public NumericalError {
 public:
  EigenError(const std::string& what, std::vector<Complex> partial)
      : NumericalError(what), partial_(std::move(partial)) {}
  const std::vector<Complex>& partial() const noexcept { return partial_; }

 private:
  std::vector<Complex> partial_;
};

inline constexpr std::size_t kMaxEigenDimension = 64;

namespace detail {

inline void sort_spectrum(std::vector<Complex>& ev) {
  std::sort(ev.begin(), ev.end(), [](const Complex& a, const Complex& b) {
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
  });
}

inline std::vector<Complex> quadratic_spectrum(const Matrix& a) {
  if (a.rows() == 1) return {Complex(a(0, 0), 0.0)};
  const double half_trace = 0.5 * (a(0, 0) + a(1, 1));
  const double det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
  const double p = 0.5 * (a(0, 0) - a(1, 1));
  const double disc = p * p + a(0, 1) * a(1, 0);
  if (disc >= 0.0) {
    const double root = std::sqrt(disc);
    const double big = half_trace + std::copysign(root, half_trace);
    const double small = big != 0.0 ? det / big : half_trace - root;
    return {Complex(big, 0.0), Complex(small, 0.0)};
  }
  const double im = std::sqrt(-disc);
  return {Complex(half_trace, im), Complex(half_trace, -im)};
}

inline void balance(Matrix& a) {
  constexpr double radix = std::numeric_limits<double>::radix;
  constexpr double sqrdx = radix * radix;
  const std::size_t n = a.rows();
  bool done = false;
  while (!done) {
    done = true;
    for (std::size_t i = 0; i < n; ++i) {
      double r = 0.0, c = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) {
          c += std::abs(a(j, i));
          r += std::abs(a(i, j));
        }
      if (c == 0.0 || r == 0.0) continue;
      double g = r / radix;
      double f = 1.0;
      const double s = c + r;
      while (c < g) {
        f *= radix;
        c *= sqrdx;
      }
      g = r * radix;
      while (c > g) {
        f /= radix;
        c /= sqrdx;
      }
      if ((c + r) / f < 0.95 * s) {
        done = false;
        g = 1.0 / f;
        for (std::size_t j = 0; j < n; ++j) a(i, j) *= g;
        for (std::size_t j = 0; j < n; ++j) a(j, i) *= f;
      }
    }
  }
}

// Similarity reduction to upper Hessenberg form by Gaussian elimination with
// pivoting. Entries below the subdiagonal are zeroed on return.
inline void reduce_to_hessenberg(Matrix& a) {
  const std::size_t n = a.rows();
  for (std::size_t m = 1; m + 1 < n; ++m) {
    double x = 0.0;
    std::size_t piv = m;
    for (std::size_t j = m; j < n; ++j)
      if (std::abs(a(j, m - 1)) > std::abs(x)) {
        x = a(j, m - 1);
        piv = j;
      }
    if (piv != m) {
      for (std::size_t j = m - 1; j < n; ++j) std::swap(a(piv, j), a(m, j));
      for (std::size_t j = 0; j < n; ++j) std::swap(a(j, piv), a(j, m));
    }
    if (x == 0.0) continue;
    for (std::size_t i = m + 1; i < n; ++i) {
      double y = a(i, m - 1);
      if (y == 0.0) continue;
      y /= x;
      a(i, m - 1) = 0.0;
      for (std::size_t j = m; j < n; ++j) a(i, j) -= y * a(m, j);
      for (std::size_t j = 0; j < n; ++j) a(j, m) += y * a(j, i);
    }
  }
  for (std::size_t i = 2; i < n; ++i)
    for (std::size_t j = 0; j + 1 < i; ++j) a(i, j) = 0.0;
}

// Francis double-shift QR on an upper Hessenberg matrix (destroyed).
inline std::vector<Complex> hessenberg_qr(Matrix& a, int max_sweeps_per_eigenvalue) {
  const int n = static_cast<int>(a.rows());
  std::vector<double> wr(n, 0.0), wi(n, 0.0);
  double anorm = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = std::max(i - 1, 0); j < n; ++j) anorm += std::abs(a(i, j));

  auto partial = [&](int nn) {
    std::vector<Complex> out;
    for (int i = nn + 1; i < n; ++i) out.emplace_back(wr[i], wi[i]);
    return out;
  };

  int nn = n - 1;
  double t = 0.0;
  while (nn >= 0) {
    int its = 0;
    int l = 0;
    do {
      for (l = nn; l > 0; --l) {
        double s = std::abs(a(l - 1, l - 1)) + std::abs(a(l, l));
        if (s == 0.0) s = anorm;
        if (std::abs(a(l, l - 1)) + s == s) {
          a(l, l - 1) = 0.0;
          break;
        }
      }
      double x = a(nn, nn);
      if (l == nn) {
        wr[nn] = x + t;
        wi[nn] = 0.0;
        --nn;
        continue;
      }
      double y = a(nn - 1, nn - 1);
      double w = a(nn, nn - 1) * a(nn - 1, nn);
      if (l == nn - 1) {
        const double p = 0.5 * (y - x);
        const double q = p * p + w;
        double z = std::sqrt(std::abs(q));
        x += t;
        if (q >= 0.0) {
          z = p + std::copysign(z, p);
          wr[nn - 1] = wr[nn] = x + z;
          if (z != 0.0) wr[nn] = x - w / z;
          wi[nn - 1] = wi[nn] = 0.0;
        } else {
          wr[nn - 1] = wr[nn] = x + p;
          wi[nn - 1] = z;
          wi[nn] = -z;
        }
        nn -= 2;
        continue;
      }
      if (its == max_sweeps_per_eigenvalue)
        throw EigenError("QR iteration did not converge", partial(nn));
      if (its == 10 || its == 20) {
        // Exceptional shift.
        t += x;
        for (int i = 0; i <= nn; ++i) a(i, i) -= x;
        const double s = std::abs(a(nn, nn - 1)) + std::abs(a(nn - 1, nn - 2));
        y = x = 0.75 * s;
        w = -0.4375 * s * s;
      }
      ++its;
      int m = nn - 2;
      double p = 0, q = 0, r = 0, z = 0;
      for (; m >= l; --m) {
        z = a(m, m);
        r = x - z;
        double s = y - z;
        p = (r * s - w) / a(m + 1, m) + a(m, m + 1);
        q = a(m + 1, m + 1) - z - r - s;
        r = a(m + 2, m + 1);
        s = std::abs(p) + std::abs(q) + std::abs(r);
        p /= s;
        q /= s;
        r /= s;
        if (m == l) break;
        const double u = std::abs(a(m, m - 1)) * (std::abs(q) + std::abs(r));
        const double v = std::abs(p) * (std::abs(a(m - 1, m - 1)) + std::abs(z) +
                                        std::abs(a(m + 1, m + 1)));
        if (u + v == v) break;
      }
      for (int i = m; i < nn - 1; ++i) {
        a(i + 2, i) = 0.0;
        if (i != m) a(i + 2, i - 1) = 0.0;
      }
      for (int k = m; k < nn; ++k) {
        if (k != m) {
          p = a(k, k - 1);
          q = a(k + 1, k - 1);
          r = 0.0;
          if (k + 1 != nn) r = a(k + 2, k - 1);
          if ((x = std::abs(p) + std::abs(q) + std::abs(r)) != 0.0) {
            p /= x;
            q /= x;
            r /= x;
          }
        }
        const double s = std::copysign(std::sqrt(p * p + q * q + r * r), p);
        if (s == 0.0) continue;
        if (k == m) {
          if (l != m) a(k, k - 1) = -a(k, k - 1);
        } else {
          a(k, k - 1) = -s * x;
        }
        p += s;
        x = p / s;
        y = q / s;
        z = r / s;
        q /= p;
        r /= p;
        for (int j = k; j <= nn; ++j) {
          p = a(k, j) + q * a(k + 1, j);
          if (k + 1 != nn) {
            p += r * a(k + 2, j);
            a(k + 2, j) -= p * z;
          }
          a(k + 1, j) -= p * y;
          a(k, j) -= p * x;
        }
        const int mmin = nn < k + 3 ? nn : k + 3;
        for (int i = l; i <= mmin; ++i) {
          p = x * a(i, k) + y * a(i, k + 1);
          if (k + 1 != nn) {
            p += z * a(i, k + 2);
            a(i, k + 2) -= p * r;
          }
          a(i, k + 1) -= p * q;
          a(i, k) -= p;
        }
      }
    } while (l + 1 < nn);
  }

  std::vector<Complex> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) out.emplace_back(wr[i], wi[i]);
  return out;
}

}  // namespace detail

// All eigenvalues, sorted by real part descending, then imaginary part descending.
inline std::vector<Complex> eigenvalues(const Matrix& matrix, int max_sweeps_per_eigenvalue = 60) {
  if (matrix.rows() != matrix.cols()) throw std::invalid_argument("eigenvalues: matrix is not square");
  if (matrix.rows() > kMaxEigenDimension)
    throw std::invalid_argument("eigenvalues: dimension exceeds " +
                                std::to_string(kMaxEigenDimension));
  for (std::size_t i = 0; i < matrix.rows(); ++i)
    for (double v : matrix.row(i))
      if (!std::isfinite(v)) throw NumericalError("eigenvalues: non-finite matrix entry");
  if (matrix.rows() == 0) return {};

  std::vector<Complex> ev;
  if (matrix.rows() <= 2) {
    ev = detail::quadratic_spectrum(matrix);
  } else {
    Matrix a = matrix;
    detail::balance(a);
    detail::reduce_to_hessenberg(a);
    ev = detail::hessenberg_qr(a, max_sweeps_per_eigenvalue);
  }
  detail::sort_spectrum(ev);
  return ev;
}

}  // namespace onestep
