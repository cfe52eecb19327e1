#pragma once

#include <cstddef>
#include <functional>
#include <vector>

// Data-parallel inner loops. Every kernel has a serial reference
// implementation and an OpenMP one; both produce bit-identical results
// because each output slot is written by exactly one iteration and any
// floating-point reduction runs in a fixed order. Tests compare the two
// paths, tools/bench_kernels times them.
namespace mpa::kernels {

// 0 restores the OpenMP default.
void set_max_threads(int n);
int max_threads();

// Runs fn(0..n-1); iterations must write disjoint state.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);
void serial_for(std::size_t n, const std::function<void(std::size_t)>& fn);

// Minimum Euclidean distance from each query row to any reference row.
std::vector<double> min_distances_serial(const double* queries, std::size_t nq,
                                         const double* refs, std::size_t nr,
                                         std::size_t m);
std::vector<double> min_distances_parallel(const double* queries, std::size_t nq,
                                           const double* refs, std::size_t nr,
                                           std::size_t m);
std::vector<double> min_distances(const double* queries, std::size_t nq,
                                  const double* refs, std::size_t nr,
                                  std::size_t m);

// Indices of the k nearest reference rows per query, ordered by
// (distance, index); distance ties break toward the lower index.
std::vector<std::size_t> knn_indices_serial(const double* queries, std::size_t nq,
                                            const double* refs, std::size_t nr,
                                            std::size_t m, std::size_t k);
std::vector<std::size_t> knn_indices_parallel(const double* queries, std::size_t nq,
                                              const double* refs, std::size_t nr,
                                              std::size_t m, std::size_t k);
std::vector<std::size_t> knn_indices(const double* queries, std::size_t nq,
                                     const double* refs, std::size_t nr,
                                     std::size_t m, std::size_t k);

// Sample covariance (divisor n-1) of row-major data; output m x m.
// Parallelism is over output entries, so each entry's sum over rows keeps
// a fixed order.
std::vector<double> covariance_serial(const double* x, std::size_t n,
                                      std::size_t m);
std::vector<double> covariance_parallel(const double* x, std::size_t n,
                                        std::size_t m);
std::vector<double> covariance(const double* x, std::size_t n, std::size_t m);

}  // namespace mpa::kernels
