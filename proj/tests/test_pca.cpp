#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "mpa/pca.hpp"
#include "oracles.hpp"

using namespace mpa;

namespace {

std::vector<double> random_matrix(std::size_t n, std::size_t m, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x(n * m);
  for (auto& v : x) v = u(rng);
  return x;
}

}  // namespace

TEST_CASE("axis-aligned variance yields the axis as first component") {
  // 2-D data varying only along axis 0
  std::vector<double> x = {0.0, 0.5, 0.2, 0.5, 0.9, 0.5, 0.4, 0.5, 0.7, 0.5};
  const auto basis = fit_pca(x.data(), 5, 2, 2);
  CHECK(std::abs(basis.components[0]) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::abs(basis.components[1]) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(basis.explained_variance[1] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("explained variance is non-increasing") {
  const auto x = random_matrix(40, 7, 3);
  const auto basis = fit_pca(x.data(), 40, 7, 7);
  for (std::size_t i = 1; i < basis.explained_variance.size(); ++i)
    CHECK(basis.explained_variance[i] <= basis.explained_variance[i - 1] + 1e-12);
}

TEST_CASE("components match an independent eigensolver up to sign") {
  const auto x = random_matrix(5, 4, 11);
  const auto basis = fit_pca(x.data(), 5, 4, 4);

  const auto cov = oracles::covariance_naive(x, 5, 4);
  const auto eig = oracles::jacobi_eigen(cov, 4);

  for (std::size_t r = 0; r < 4; ++r) {
    CHECK(basis.explained_variance[r] ==
          doctest::Approx(eig.values[r]).epsilon(1e-6));
    // compare up to sign
    double dot = 0;
    for (std::size_t j = 0; j < 4; ++j)
      dot += basis.components[r * 4 + j] * eig.vectors[r * 4 + j];
    for (std::size_t j = 0; j < 4; ++j) {
      const double expected = (dot >= 0 ? 1.0 : -1.0) * eig.vectors[r * 4 + j];
      CHECK(basis.components[r * 4 + j] == doctest::Approx(expected).epsilon(1e-6));
    }
  }
}

TEST_CASE("component rows are orthonormal") {
  const auto x = random_matrix(60, 9, 17);
  const auto basis = fit_pca(x.data(), 60, 9, 6);
  for (std::size_t a = 0; a < 6; ++a) {
    for (std::size_t b = 0; b < 6; ++b) {
      double dot = 0;
      for (std::size_t j = 0; j < 9; ++j)
        dot += basis.components[a * 9 + j] * basis.components[b * 9 + j];
      CHECK(dot == doctest::Approx(a == b ? 1.0 : 0.0).epsilon(1e-6));
    }
  }
}

TEST_CASE("full-rank reconstruction reproduces the data") {
  const std::size_t n = 30, m = 6;
  const auto x = random_matrix(n, m, 23);
  const auto basis = fit_pca(x.data(), n, m, m);
  const auto proj = pca_project(x.data(), n, basis);
  const auto recon = pca_reconstruct(proj, n, basis);

  double num = 0, den = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num += (recon[i] - x[i]) * (recon[i] - x[i]);
    den += x[i] * x[i];
  }
  CHECK(std::sqrt(num / den) < 1e-6);
}

TEST_CASE("projection equals centered dot products") {
  const auto ds = synth_blobs(3, 30, 5, 0.2, 9);
  const auto basis = fit_pca(ds, 2);
  const auto proj = pca_project(ds, basis);
  REQUIRE(proj.size() == ds.rows * 2);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t r = 0; r < 2; ++r) {
      double expected = 0;
      for (std::size_t j = 0; j < ds.cols; ++j)
        expected += (ds.features[i * ds.cols + j] - basis.mean[j]) *
                    basis.components[r * ds.cols + j];
      CHECK(proj[i * 2 + r] == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("pca input validation") {
  const auto x = random_matrix(5, 3, 2);
  CHECK_THROWS_AS(fit_pca(x.data(), 5, 3, 4), std::invalid_argument);
  CHECK_THROWS_AS(fit_pca(x.data(), 5, 3, 0), std::invalid_argument);
  CHECK_THROWS_AS(fit_pca(x.data(), 1, 3, 2), std::invalid_argument);
}

TEST_CASE("degenerate zero-variance data still yields an orthonormal basis") {
  std::vector<double> x(20 * 4, 0.25);  // constant matrix
  const auto basis = fit_pca(x.data(), 20, 4, 4);
  for (std::size_t r = 0; r < 4; ++r)
    CHECK(basis.explained_variance[r] == doctest::Approx(0.0).epsilon(1e-12));
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t b = 0; b < 4; ++b) {
      double dot = 0;
      for (std::size_t j = 0; j < 4; ++j)
        dot += basis.components[a * 4 + j] * basis.components[b * 4 + j];
      CHECK(dot == doctest::Approx(a == b ? 1.0 : 0.0).epsilon(1e-9));
    }
}
