#pragma once

// Independent reference eigensolver for Hermitian matrices (cyclic complex
// Jacobi rotations). Test-only oracle; deliberately shares no code with the
// library's power iteration.

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "otasync/complex_linalg.hpp"

namespace testutil {

struct EigResult {
  std::vector<double> values;        // ascending
  otasync::CMat vectors;             // columns are eigenvectors
};

inline EigResult jacobi_hermitian_eig(otasync::CMat a, int sweeps = 100,
                                      double tol = 1e-14) {
  using otasync::cdouble;
  const std::size_t n = a.rows;
  if (n != a.cols) throw std::invalid_argument("jacobi: square matrix required");

  otasync::CMat v(n, n);
  for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

  double scale = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) scale = std::max(scale, std::abs(a(i, j)));
  if (scale == 0) scale = 1;

  for (int sweep = 0; sweep < sweeps; ++sweep) {
    double off = 0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += std::norm(a(p, q));
    if (std::sqrt(off) <= tol * scale * static_cast<double>(n)) break;

    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        const cdouble apq = a(p, q);
        if (std::abs(apq) <= tol * scale) continue;
        const double app = std::real(a(p, p)), aqq = std::real(a(q, q));
        const double phi = std::arg(apq);
        const double theta = 0.5 * std::atan2(2.0 * std::abs(apq), app - aqq);
        const double c = std::cos(theta), s = std::sin(theta);
        const cdouble se = s * std::polar(1.0, -phi);

        // A <- J^H A J with J affecting columns/rows p and q.
        for (std::size_t k = 0; k < n; ++k) {
          const cdouble akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp + se * akq;
          a(k, q) = -std::conj(se) * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const cdouble apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk + std::conj(se) * aqk;
          a(q, k) = -se * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const cdouble vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp + se * vkq;
          v(k, q) = -std::conj(se) * vkp + c * vkq;
        }
      }
  }

  EigResult res;
  res.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) res.values[i] = std::real(a(i, i));
  res.vectors = std::move(v);

  // selection sort ascending, swapping vector columns along
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = i;
    for (std::size_t j = i + 1; j < n; ++j)
      if (res.values[j] < res.values[best]) best = j;
    if (best != i) {
      std::swap(res.values[i], res.values[best]);
      for (std::size_t k = 0; k < n; ++k)
        std::swap(res.vectors(k, i), res.vectors(k, best));
    }
  }
  return res;
}

}  // namespace testutil
