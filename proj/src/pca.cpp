#include "mpa/pca.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "mpa/kernels.hpp"

namespace mpa {

namespace {

double dot(const double* a, const double* b, std::size_t m) {
  double s = 0.0;
  for (std::size_t j = 0; j < m; ++j) s += a[j] * b[j];
  return s;
}

double norm(const double* a, std::size_t m) { return std::sqrt(dot(a, a, m)); }

// v -= (v . u) u for each previously accepted unit row u
void orthogonalize(std::vector<double>& v, const std::vector<double>& rows,
                   std::size_t count, std::size_t m) {
  for (std::size_t r = 0; r < count; ++r) {
    const double* u = rows.data() + r * m;
    const double proj = dot(v.data(), u, m);
    for (std::size_t j = 0; j < m; ++j) v[j] -= proj * u[j];
  }
}

// Fills v with a unit vector orthogonal to the accepted rows; used when the
// deflated matrix has (numerically) zero spectrum left.
void complete_basis(std::vector<double>& v, const std::vector<double>& rows,
                    std::size_t count, std::size_t m) {
  for (std::size_t axis = 0; axis < m; ++axis) {
    std::fill(v.begin(), v.end(), 0.0);
    v[axis] = 1.0;
    orthogonalize(v, rows, count, m);
    const double nv = norm(v.data(), m);
    if (nv > 1e-8) {
      for (auto& x : v) x /= nv;
      return;
    }
  }
  throw std::runtime_error("pca: failed to complete orthonormal basis");
}

}  // namespace

PcaBasis fit_pca(const double* x, std::size_t n, std::size_t m, std::size_t c) {
  if (c < 1 || c > m)
    throw std::invalid_argument("fit_pca: component count must be in [1, m]");
  if (n < 2) throw std::invalid_argument("fit_pca: need at least 2 rows");

  PcaBasis basis;
  basis.input_dim = m;
  basis.component_count = c;
  basis.mean.assign(m, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) basis.mean[j] += x[i * m + j];
  for (auto& v : basis.mean) v /= static_cast<double>(n);

  std::vector<double> cov = kernels::covariance(x, n, m);

  basis.components.assign(c * m, 0.0);
  basis.explained_variance.assign(c, 0.0);

  std::vector<double> v(m), cv(m);
  for (std::size_t comp = 0; comp < c; ++comp) {
    // deterministic start: spread mass over all axes, then orthogonalize
    for (std::size_t j = 0; j < m; ++j)
      v[j] = 1.0 + 0.37 * static_cast<double>((j + comp) % 7);
    orthogonalize(v, basis.components, comp, m);
    double nv = norm(v.data(), m);
    if (nv < 1e-12) {
      complete_basis(v, basis.components, comp, m);
    } else {
      for (auto& e : v) e /= nv;
    }

    double lambda = 0.0;
    bool degenerate = false;
    for (int iter = 0; iter < 2000; ++iter) {
      for (std::size_t a = 0; a < m; ++a) cv[a] = dot(cov.data() + a * m, v.data(), m);
      orthogonalize(cv, basis.components, comp, m);
      const double cn = norm(cv.data(), m);
      if (cn < 1e-14) {
        degenerate = true;
        break;
      }
      double diff = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        cv[j] /= cn;
        diff = std::max(diff, std::abs(std::abs(cv[j]) - std::abs(v[j])));
      }
      v = cv;
      lambda = cn;
      if (diff < 1e-13 && iter > 2) break;
    }
    if (degenerate) {
      complete_basis(v, basis.components, comp, m);
      lambda = 0.0;
    } else {
      // Rayleigh quotient for the accepted direction
      for (std::size_t a = 0; a < m; ++a) cv[a] = dot(cov.data() + a * m, v.data(), m);
      lambda = std::max(0.0, dot(v.data(), cv.data(), m));
    }

    std::copy(v.begin(), v.end(), basis.components.begin() + comp * m);
    basis.explained_variance[comp] = lambda;

    // deflate: cov -= lambda v v^T
    if (lambda > 0.0) {
      for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = 0; b < m; ++b) cov[a * m + b] -= lambda * v[a] * v[b];
    }
  }

  // close eigenvalues can converge slightly out of order
  for (std::size_t i = 1; i < c; ++i) {
    std::size_t p = i;
    while (p > 0 && basis.explained_variance[p] >
                        basis.explained_variance[p - 1] + 1e-12) {
      std::swap(basis.explained_variance[p], basis.explained_variance[p - 1]);
      for (std::size_t j = 0; j < m; ++j)
        std::swap(basis.components[p * m + j], basis.components[(p - 1) * m + j]);
      --p;
    }
  }
  return basis;
}

PcaBasis fit_pca(const Dataset& ds, std::size_t c) {
  return fit_pca(ds.features.data(), ds.rows, ds.cols, c);
}

std::vector<double> pca_project(const double* x, std::size_t n,
                                const PcaBasis& basis) {
  const std::size_t m = basis.input_dim, c = basis.component_count;
  std::vector<double> out(n * c, 0.0);
  std::vector<double> centered(m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) centered[j] = x[i * m + j] - basis.mean[j];
    for (std::size_t r = 0; r < c; ++r)
      out[i * c + r] = dot(centered.data(), basis.components.data() + r * m, m);
  }
  return out;
}

std::vector<double> pca_project(const Dataset& ds, const PcaBasis& basis) {
  if (ds.cols != basis.input_dim)
    throw std::invalid_argument("pca_project: dimension mismatch");
  return pca_project(ds.features.data(), ds.rows, basis);
}

std::vector<double> pca_reconstruct(const std::vector<double>& projected,
                                    std::size_t n, const PcaBasis& basis) {
  const std::size_t m = basis.input_dim, c = basis.component_count;
  std::vector<double> out(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double v = basis.mean[j];
      for (std::size_t r = 0; r < c; ++r)
        v += projected[i * c + r] * basis.components[r * m + j];
      out[i * m + j] = v;
    }
  }
  return out;
}

void write_projection_csv(const std::string& path,
                          const std::vector<double>& projected, std::size_t n,
                          std::size_t c, const std::vector<int>& labels,
                          const std::vector<std::string>& tags) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write csv file: " + path);
  out.precision(17);
  for (std::size_t r = 0; r < c; ++r) out << "pc" << (r + 1) << ',';
  out << "label,tag\n";
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < c; ++r) out << projected[i * c + r] << ',';
    out << labels[i] << ',' << tags[i] << '\n';
  }
}

}  // namespace mpa
