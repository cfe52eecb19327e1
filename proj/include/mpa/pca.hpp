#pragma once

#include <cstddef>
#include <vector>

#include "mpa/dataset.hpp"

namespace mpa {

struct PcaBasis {
  std::size_t input_dim = 0;
  std::size_t component_count = 0;
  std::vector<double> components;  // component_count x input_dim, orthonormal rows
  std::vector<double> mean;        // input_dim
  std::vector<double> explained_variance;  // component_count, non-increasing
};

// Top-c principal components of the mean-centered covariance, by descending
// eigenvalue. Power iteration with deflation and re-orthogonalization.
PcaBasis fit_pca(const Dataset& ds, std::size_t c);
PcaBasis fit_pca(const double* x, std::size_t n, std::size_t m, std::size_t c);

// (X - mean) * components^T; output n x c row-major.
std::vector<double> pca_project(const Dataset& ds, const PcaBasis& basis);
std::vector<double> pca_project(const double* x, std::size_t n,
                                const PcaBasis& basis);

// proj * components + mean; output n x input_dim row-major.
std::vector<double> pca_reconstruct(const std::vector<double>& projected,
                                    std::size_t n, const PcaBasis& basis);

// Plot-data export: pc columns, then label, then a free-form tag per row.
void write_projection_csv(const std::string& path,
                          const std::vector<double>& projected, std::size_t n,
                          std::size_t c, const std::vector<int>& labels,
                          const std::vector<std::string>& tags);

}  // namespace mpa
