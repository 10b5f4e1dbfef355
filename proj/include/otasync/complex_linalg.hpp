#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "otasync/rng.hpp"

namespace otasync {

using cdouble = std::complex<double>;
using CVec = std::vector<cdouble>;

// Dense complex matrix, row-major.
struct CMat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  CVec data;

  CMat() = default;
  CMat(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c) {}

  cdouble& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  const cdouble& operator()(std::size_t i, std::size_t j) const {
    return data[i * cols + j];
  }
  bool empty() const { return data.empty(); }
};

inline double norm2(std::span<const cdouble> v) {
  double s = 0;
  for (const auto& z : v) s += std::norm(z);
  return s;
}

inline double norm(std::span<const cdouble> v) { return std::sqrt(norm2(v)); }

// sum_i a_i * b_i (transpose product, no conjugation)
inline cdouble dot_t(std::span<const cdouble> a, std::span<const cdouble> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot_t: size mismatch");
  cdouble s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// sum_i conj(a_i) * b_i
inline cdouble dot_h(std::span<const cdouble> a, std::span<const cdouble> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot_h: size mismatch");
  cdouble s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

// Vector of i.i.d. CN(0, variance) entries.
inline CVec complex_gaussian_vector(std::size_t n, double variance,
                                    RandomStream& rng) {
  if (n < 1) throw std::invalid_argument("complex_gaussian_vector: n < 1");
  if (variance < 0)
    throw std::invalid_argument("complex_gaussian_vector: negative variance");
  CVec v(n);
  for (auto& z : v) z = rng.complex_gaussian(variance);
  return v;
}

// Principal value in (-pi, pi]; -pi is mapped to +pi.
inline double wrap_angle(double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("wrap_angle: non-finite");
  double r = std::remainder(x, 2.0 * std::numbers::pi);
  if (r <= -std::numbers::pi) r += 2.0 * std::numbers::pi;
  return r;
}

// sqrt(mean of wrapped squared errors)
inline double rmse_circular(std::span<const double> errors) {
  if (errors.empty()) throw std::invalid_argument("rmse_circular: empty input");
  double s = 0;
  for (double e : errors) {
    const double w = wrap_angle(e);
    s += w * w;
  }
  return std::sqrt(s / static_cast<double>(errors.size()));
}

struct PowerIterationResult {
  CVec vector;       // unit norm, largest-magnitude entry rotated real >= 0
  double sigma = 0;  // dominant singular value estimate
  bool converged = false;
  int iterations = 0;
};

namespace detail {

inline void normalize_phase(CVec& v) {
  std::size_t imax = 0;
  double best = -1;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > best) {
      best = std::abs(v[i]);
      imax = i;
    }
  }
  if (best <= 0) return;
  const cdouble rot = std::conj(v[imax]) / std::abs(v[imax]);
  for (auto& z : v) z *= rot;
}

}  // namespace detail

// Dominant left singular vector of Y via power iteration on Y*Y^H.
// Every matrix this project decomposes is rank one plus noise, so the
// spectral gap is large and 200 iterations are ample.
inline PowerIterationResult dominant_left_singular_vector(const CMat& Y,
                                                          double tol = 1e-10,
                                                          int max_iters = 200) {
  if (Y.empty()) throw std::invalid_argument("power iteration: empty matrix");
  const std::size_t m = Y.rows, n = Y.cols;
  if (norm2(Y.data) == 0)
    throw std::invalid_argument("power iteration: zero matrix");

  // A = Y Y^H (m x m Hermitian PSD)
  CMat A(m, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      cdouble s = 0;
      for (std::size_t k = 0; k < n; ++k) s += Y(i, k) * std::conj(Y(j, k));
      A(i, j) = s;
    }

  // Start from the standard basis vector of the row with the largest energy.
  std::size_t start = 0;
  double best = -1;
  for (std::size_t i = 0; i < m; ++i) {
    double rn = 0;
    for (std::size_t k = 0; k < n; ++k) rn += std::norm(Y(i, k));
    if (rn > best) {
      best = rn;
      start = i;
    }
  }
  CVec v(m, cdouble{0});
  v[start] = 1.0;

  PowerIterationResult res;
  CVec av(m);
  double lambda = 0;
  for (int it = 1; it <= max_iters; ++it) {
    for (std::size_t i = 0; i < m; ++i) {
      cdouble s = 0;
      for (std::size_t j = 0; j < m; ++j) s += A(i, j) * v[j];
      av[i] = s;
    }
    lambda = std::real(dot_h(v, av));
    double resid = 0;
    for (std::size_t i = 0; i < m; ++i) resid += std::norm(av[i] - lambda * v[i]);
    const double an = norm(av);
    if (an == 0) break;  // v landed in the null space; keep iterating is futile
    for (auto& z : av) z /= an;
    v = av;
    res.iterations = it;
    if (std::sqrt(resid) <= tol * std::max(lambda, 1e-300)) {
      res.converged = true;
      break;
    }
  }
  detail::normalize_phase(v);
  const double nv = norm(v);
  for (auto& z : v) z /= nv;
  res.vector = std::move(v);
  res.sigma = std::sqrt(std::max(lambda, 0.0));
  return res;
}

}  // namespace otasync
