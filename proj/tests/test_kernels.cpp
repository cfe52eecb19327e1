#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <random>

#include "mpa/kernels.hpp"
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

TEST_CASE("parallel_for touches every index exactly once") {
  std::vector<std::atomic<int>> hits(1000);
  kernels::parallel_for(hits.size(), [&](std::size_t i) { hits[i]++; });
  for (const auto& h : hits) CHECK(h.load() == 1);
}

TEST_CASE("min_distances serial and parallel agree bitwise") {
  for (const auto [nq, nr, m] :
       {std::tuple<std::size_t, std::size_t, std::size_t>{1, 1, 1},
        {13, 57, 3},
        {100, 200, 16}}) {
    const auto q = random_matrix(nq, m, 1);
    const auto r = random_matrix(nr, m, 2);
    const auto a = kernels::min_distances_serial(q.data(), nq, r.data(), nr, m);
    const auto b = kernels::min_distances_parallel(q.data(), nq, r.data(), nr, m);
    CHECK(a == b);
  }
}

TEST_CASE("min_distances matches the naive oracle") {
  const std::size_t nq = 20, nr = 50, m = 7;
  const auto q = random_matrix(nq, m, 5);
  const auto r = random_matrix(nr, m, 6);
  const auto got = kernels::min_distances(q.data(), nq, r.data(), nr, m);
  for (std::size_t i = 0; i < nq; ++i) {
    const std::vector<double> qi(q.begin() + static_cast<long>(i * m),
                                 q.begin() + static_cast<long>((i + 1) * m));
    CHECK(got[i] == doctest::Approx(oracles::min_distance_naive(qi, r, nr, m))
                        .epsilon(1e-12));
  }
}

TEST_CASE("knn_indices serial and parallel agree, ties break low") {
  const std::size_t nq = 30, nr = 80, m = 4, k = 5;
  const auto q = random_matrix(nq, m, 7);
  const auto r = random_matrix(nr, m, 8);
  const auto a = kernels::knn_indices_serial(q.data(), nq, r.data(), nr, m, k);
  const auto b = kernels::knn_indices_parallel(q.data(), nq, r.data(), nr, m, k);
  CHECK(a == b);

  // duplicate reference rows: the lower index must win
  std::vector<double> refs = {0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.9, 0.9};
  std::vector<double> query = {0.5, 0.5};
  const auto n1 = kernels::knn_indices(query.data(), 1, refs.data(), 4, 2, 3);
  CHECK(n1 == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("covariance serial and parallel agree bitwise and match oracle") {
  for (const auto [n, m] : {std::pair<std::size_t, std::size_t>{2, 1},
                            {10, 3},
                            {64, 17}}) {
    const auto x = random_matrix(n, m, 9);
    const auto a = kernels::covariance_serial(x.data(), n, m);
    const auto b = kernels::covariance_parallel(x.data(), n, m);
    CHECK(a == b);
    const auto oracle = oracles::covariance_naive(x, n, m);
    for (std::size_t i = 0; i < a.size(); ++i)
      CHECK(a[i] == doctest::Approx(oracle[i]).epsilon(1e-10));
  }
}

TEST_CASE("thread-count setting does not change results") {
  const auto x = random_matrix(40, 8, 10);
  kernels::set_max_threads(1);
  const auto serial = kernels::covariance(x.data(), 40, 8);
  kernels::set_max_threads(4);
  const auto parallel = kernels::covariance(x.data(), 40, 8);
  kernels::set_max_threads(0);
  CHECK(serial == parallel);
}
