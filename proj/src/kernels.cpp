#include "mpa/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mpa::kernels {

namespace {

std::atomic<int> g_max_threads{0};

inline double sq_dist(const double* a, const double* b, std::size_t m) {
  double s = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    const double d = a[j] - b[j];
    s += d * d;
  }
  return s;
}

inline int effective_threads() {
#ifdef _OPENMP
  const int requested = g_max_threads.load();
  return requested > 0 ? requested : omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace

void set_max_threads(int n) { g_max_threads.store(n < 0 ? 0 : n); }

int max_threads() { return effective_threads(); }

void serial_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  for (std::size_t i = 0; i < n; ++i) fn(i);
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
#ifdef _OPENMP
  const int nt = effective_threads();
  if (nt > 1 && n > 1) {
#pragma omp parallel for schedule(static) num_threads(nt)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
      fn(static_cast<std::size_t>(i));
    }
    return;
  }
#endif
  serial_for(n, fn);
}

std::vector<double> min_distances_serial(const double* queries, std::size_t nq,
                                         const double* refs, std::size_t nr,
                                         std::size_t m) {
  std::vector<double> out(nq, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < nq; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < nr; ++r) {
      best = std::min(best, sq_dist(queries + i * m, refs + r * m, m));
    }
    out[i] = std::sqrt(best);
  }
  return out;
}

std::vector<double> min_distances_parallel(const double* queries, std::size_t nq,
                                           const double* refs, std::size_t nr,
                                           std::size_t m) {
  std::vector<double> out(nq, std::numeric_limits<double>::infinity());
  parallel_for(nq, [&](std::size_t i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < nr; ++r) {
      best = std::min(best, sq_dist(queries + i * m, refs + r * m, m));
    }
    out[i] = std::sqrt(best);
  });
  return out;
}

std::vector<double> min_distances(const double* queries, std::size_t nq,
                                  const double* refs, std::size_t nr,
                                  std::size_t m) {
  return max_threads() > 1 ? min_distances_parallel(queries, nq, refs, nr, m)
                           : min_distances_serial(queries, nq, refs, nr, m);
}

namespace {

void knn_one_query(const double* q, const double* refs, std::size_t nr,
                   std::size_t m, std::size_t k, std::size_t* out) {
  std::vector<std::pair<double, std::size_t>> dists(nr);
  for (std::size_t r = 0; r < nr; ++r) dists[r] = {sq_dist(q, refs + r * m, m), r};
  std::partial_sort(dists.begin(), dists.begin() + static_cast<long>(k),
                    dists.end());
  for (std::size_t j = 0; j < k; ++j) out[j] = dists[j].second;
}

}  // namespace

std::vector<std::size_t> knn_indices_serial(const double* queries, std::size_t nq,
                                            const double* refs, std::size_t nr,
                                            std::size_t m, std::size_t k) {
  std::vector<std::size_t> out(nq * k);
  for (std::size_t i = 0; i < nq; ++i) {
    knn_one_query(queries + i * m, refs, nr, m, k, out.data() + i * k);
  }
  return out;
}

std::vector<std::size_t> knn_indices_parallel(const double* queries, std::size_t nq,
                                              const double* refs, std::size_t nr,
                                              std::size_t m, std::size_t k) {
  std::vector<std::size_t> out(nq * k);
  parallel_for(nq, [&](std::size_t i) {
    knn_one_query(queries + i * m, refs, nr, m, k, out.data() + i * k);
  });
  return out;
}

std::vector<std::size_t> knn_indices(const double* queries, std::size_t nq,
                                     const double* refs, std::size_t nr,
                                     std::size_t m, std::size_t k) {
  return max_threads() > 1 ? knn_indices_parallel(queries, nq, refs, nr, m, k)
                           : knn_indices_serial(queries, nq, refs, nr, m, k);
}

namespace {

inline void column_means(const double* x, std::size_t n, std::size_t m,
                         std::vector<double>& mean) {
  mean.assign(m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) mean[j] += x[i * m + j];
  }
  for (std::size_t j = 0; j < m; ++j) mean[j] /= static_cast<double>(n);
}

inline double cov_entry(const double* x, std::size_t n, std::size_t m,
                        const std::vector<double>& mean, std::size_t a,
                        std::size_t b) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    s += (x[i * m + a] - mean[a]) * (x[i * m + b] - mean[b]);
  }
  return s / static_cast<double>(n - 1);
}

}  // namespace

std::vector<double> covariance_serial(const double* x, std::size_t n,
                                      std::size_t m) {
  std::vector<double> mean;
  column_means(x, n, m, mean);
  std::vector<double> cov(m * m, 0.0);
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a; b < m; ++b) {
      const double v = cov_entry(x, n, m, mean, a, b);
      cov[a * m + b] = v;
      cov[b * m + a] = v;
    }
  }
  return cov;
}

std::vector<double> covariance_parallel(const double* x, std::size_t n,
                                        std::size_t m) {
  std::vector<double> mean;
  column_means(x, n, m, mean);
  std::vector<double> cov(m * m, 0.0);
  // upper triangle flattened so work splits evenly across entries
  const std::size_t entries = m * (m + 1) / 2;
  parallel_for(entries, [&](std::size_t e) {
    // invert e -> (a, b) with a <= b
    std::size_t a = 0;
    std::size_t offset = e;
    while (offset >= m - a) {
      offset -= m - a;
      ++a;
    }
    const std::size_t b = a + offset;
    const double v = cov_entry(x, n, m, mean, a, b);
    cov[a * m + b] = v;
    if (a != b) cov[b * m + a] = v;
  });
  return cov;
}

std::vector<double> covariance(const double* x, std::size_t n, std::size_t m) {
  return max_threads() > 1 ? covariance_parallel(x, n, m)
                           : covariance_serial(x, n, m);
}

}  // namespace mpa::kernels
