// Test-only reference implementations, kept independent of the library's
// computation paths.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

namespace oracles {

// Cyclic Jacobi eigendecomposition for a symmetric matrix (row-major n x n).
// Returns eigenpairs sorted by descending eigenvalue; eigenvectors are the
// rows of `vectors`.
struct EigenResult {
  std::vector<double> values;
  std::vector<double> vectors;  // n x n, row r is the r-th eigenvector
};

inline EigenResult jacobi_eigen(std::vector<double> a, std::size_t n) {
  std::vector<double> v(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
    if (off < 1e-24) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (std::abs(apq) < 1e-300) continue;
        const double app = a[p * n + p], aqq = a[q * n + q];
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t i = 0; i < n; ++i) {
          const double aip = a[i * n + p], aiq = a[i * n + q];
          a[i * n + p] = c * aip - s * aiq;
          a[i * n + q] = s * aip + c * aiq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double api = a[p * n + i], aqi = a[q * n + i];
          a[p * n + i] = c * api - s * aqi;
          a[q * n + i] = s * api + c * aqi;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vip = v[i * n + p], viq = v[i * n + q];
          v[i * n + p] = c * vip - s * viq;
          v[i * n + q] = s * vip + c * viq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return a[x * n + x] > a[y * n + y];
  });
  EigenResult result;
  result.values.resize(n);
  result.vectors.resize(n * n);
  for (std::size_t r = 0; r < n; ++r) {
    result.values[r] = a[order[r] * n + order[r]];
    for (std::size_t i = 0; i < n; ++i)
      result.vectors[r * n + i] = v[i * n + order[r]];
  }
  return result;
}

// Plain two-pass covariance with divisor n-1.
inline std::vector<double> covariance_naive(const std::vector<double>& x,
                                            std::size_t n, std::size_t m) {
  std::vector<double> mean(m, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) mean[j] += x[i * m + j];
  for (auto& v : mean) v /= static_cast<double>(n);
  std::vector<double> cov(m * m, 0.0);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        s += (x[i * m + a] - mean[a]) * (x[i * m + b] - mean[b]);
      cov[a * m + b] = s / static_cast<double>(n - 1);
    }
  return cov;
}

inline double min_distance_naive(const std::vector<double>& q,
                                 const std::vector<double>& refs, std::size_t nr,
                                 std::size_t m) {
  double best = 1e300;
  for (std::size_t r = 0; r < nr; ++r) {
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double d = q[j] - refs[r * m + j];
      s += d * d;
    }
    best = std::min(best, s);
  }
  return std::sqrt(best);
}

struct ConfusionCounts {
  double tp = 0, fp = 0, tn = 0, fn = 0;
};

inline ConfusionCounts count_confusion(const std::vector<int>& truth,
                                       const std::vector<int>& pred) {
  ConfusionCounts c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == 1 && pred[i] == 1) c.tp += 1;
    if (truth[i] == 0 && pred[i] == 1) c.fp += 1;
    if (truth[i] == 0 && pred[i] == 0) c.tn += 1;
    if (truth[i] == 1 && pred[i] == 0) c.fn += 1;
  }
  return c;
}

}  // namespace oracles
