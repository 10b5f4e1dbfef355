#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "jacobi_eig.hpp"
#include "otasync/complex_linalg.hpp"
#include "otasync/rng.hpp"

using namespace otasync;
constexpr double kPi = std::numbers::pi;

TEST_CASE("wrap_angle maps into (-pi, pi]") {
  CHECK(wrap_angle(0.0) == 0.0);
  CHECK_THAT(wrap_angle(2 * kPi - 0.2), Catch::Matchers::WithinAbs(-0.2, 1e-14));
  CHECK_THAT(wrap_angle(-3 * kPi), Catch::Matchers::WithinAbs(kPi, 1e-12));
  CHECK(wrap_angle(kPi) == kPi);

  RandomStream rng(11);
  for (int i = 0; i < 200; ++i) {
    const double x = rng.uniform(-1e6, 1e6);
    const int k = static_cast<int>(rng.uniform(-40, 40));
    const double w = wrap_angle(x);
    CHECK(w > -kPi);
    CHECK(w <= kPi);
    CHECK_THAT(wrap_angle(x + 2 * kPi * k), Catch::Matchers::WithinAbs(w, 1e-7));
  }
  CHECK_THROWS_AS(wrap_angle(std::nan("")), std::invalid_argument);
}

TEST_CASE("rmse_circular") {
  const double a[] = {0.1, -0.1};
  CHECK_THAT(rmse_circular(a), Catch::Matchers::WithinAbs(0.1, 1e-15));
  const double b[] = {0.0, 0.0, 0.0};
  CHECK(rmse_circular(b) == 0.0);
  const double c[] = {2 * kPi + 0.3, -0.3};
  CHECK_THAT(rmse_circular(c), Catch::Matchers::WithinAbs(0.3, 1e-12));
  CHECK_THROWS_AS(rmse_circular(std::span<const double>{}), std::invalid_argument);
}

TEST_CASE("complex_gaussian_vector moments and symmetry") {
  RandomStream rng(42);
  const auto zeros = complex_gaussian_vector(3, 0.0, rng);
  for (const auto& z : zeros) CHECK(z == cdouble{0.0, 0.0});

  const std::size_t n = 100000;
  auto v = complex_gaussian_vector(n, 2.0, rng);
  double p = 0;
  for (const auto& z : v) p += std::norm(z);
  p /= static_cast<double>(n);
  CHECK_THAT(p, Catch::Matchers::WithinRel(2.0, 0.02));

  auto u = complex_gaussian_vector(n, 1.0, rng);
  double sxy = 0, sx2 = 0, sy2 = 0;
  for (const auto& z : u) {
    sxy += z.real() * z.imag();
    sx2 += z.real() * z.real();
    sy2 += z.imag() * z.imag();
  }
  CHECK(std::abs(sxy / std::sqrt(sx2 * sy2)) < 0.02);

  CHECK_THROWS_AS(complex_gaussian_vector(0, 1.0, rng), std::invalid_argument);
  CHECK_THROWS_AS(complex_gaussian_vector(3, -1.0, rng), std::invalid_argument);
}

TEST_CASE("complex_gaussian_vector is reproducible for a fixed seed") {
  RandomStream a(1234), b(1234);
  const auto va = complex_gaussian_vector(64, 1.5, a);
  const auto vb = complex_gaussian_vector(64, 1.5, b);
  CHECK(va == vb);
}

TEST_CASE("derived substreams differ from parent and are stable") {
  RandomStream root(9);
  auto s1 = root.derive(std::uint64_t{5});
  auto s2 = root.derive(std::uint64_t{5});
  auto s3 = root.derive(std::uint64_t{6});
  CHECK(s1.next_u64() == s2.next_u64());
  CHECK(s1.next_u64() != s3.next_u64());
}

TEST_CASE("power iteration: diagonal case") {
  CMat y(2, 2);
  y(0, 0) = 3.0;
  y(1, 1) = 1.0;
  const auto res = dominant_left_singular_vector(y);
  REQUIRE(res.converged);
  CHECK_THAT(std::abs(res.vector[0]), Catch::Matchers::WithinAbs(1.0, 1e-10));
  CHECK_THAT(std::abs(res.vector[1]), Catch::Matchers::WithinAbs(0.0, 1e-10));
  CHECK_THAT(res.sigma, Catch::Matchers::WithinAbs(3.0, 1e-9));
  // phase convention: dominant entry rotated real nonnegative
  CHECK(res.vector[0].real() > 0);
  CHECK_THAT(res.vector[0].imag(), Catch::Matchers::WithinAbs(0.0, 1e-12));
}

TEST_CASE("power iteration: rank-one matrix recovers the column direction") {
  RandomStream rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    const auto g = complex_gaussian_vector(8, 1.0, rng);
    const auto p = complex_gaussian_vector(5, 1.0, rng);
    CMat y(8, 5);
    for (std::size_t i = 0; i < 8; ++i)
      for (std::size_t j = 0; j < 5; ++j) y(i, j) = g[i] * p[j];
    const auto res = dominant_left_singular_vector(y);
    REQUIRE(res.converged);
    CHECK_THAT(norm(res.vector), Catch::Matchers::WithinAbs(1.0, 1e-12));
    CHECK_THAT(std::abs(dot_h(res.vector, g)),
               Catch::Matchers::WithinRel(norm(g), 1e-10));
    // ||v^H Y|| = ||g|| * ||p||
    CVec vy(5);
    for (std::size_t j = 0; j < 5; ++j) {
      cdouble s = 0;
      for (std::size_t i = 0; i < 8; ++i) s += std::conj(res.vector[i]) * y(i, j);
      vy[j] = s;
    }
    CHECK_THAT(norm(vy), Catch::Matchers::WithinRel(norm(g) * norm(p), 1e-9));
  }
}

TEST_CASE("power iteration matches an independent Jacobi eigensolver") {
  RandomStream rng(13);
  for (int rep = 0; rep < 25; ++rep) {
    CMat y(4, 6);
    for (auto& z : y.data) z = rng.complex_gaussian(1.0);

    CMat a(4, 4);  // Y Y^H
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j) {
        cdouble s = 0;
        for (std::size_t k = 0; k < 6; ++k) s += y(i, k) * std::conj(y(j, k));
        a(i, j) = s;
      }
    const auto eig = testutil::jacobi_hermitian_eig(a);

    // oracle self-check: A v = lambda v for the top eigenpair
    const double lambda = eig.values.back();
    CVec top(4);
    for (std::size_t i = 0; i < 4; ++i) top[i] = eig.vectors(i, 3);
    for (std::size_t i = 0; i < 4; ++i) {
      cdouble av = 0;
      for (std::size_t j = 0; j < 4; ++j) av += a(i, j) * top[j];
      CHECK_THAT(std::abs(av - lambda * top[i]),
                 Catch::Matchers::WithinAbs(0.0, 1e-8 * lambda));
    }

    const auto res = dominant_left_singular_vector(y, 1e-12, 500);
    REQUIRE(res.converged);
    CHECK_THAT(res.sigma * res.sigma, Catch::Matchers::WithinRel(lambda, 1e-8));
    // agreement up to a unit-modulus phase
    CHECK_THAT(std::abs(dot_h(res.vector, top)),
               Catch::Matchers::WithinAbs(1.0, 1e-8));
  }
}

TEST_CASE("power iteration rejects degenerate input") {
  CHECK_THROWS_AS(dominant_left_singular_vector(CMat{}), std::invalid_argument);
  CMat z(3, 3);
  CHECK_THROWS_AS(dominant_left_singular_vector(z), std::invalid_argument);
}
