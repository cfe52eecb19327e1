#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace mpa {

// Normalized feature matrix plus integer labels; the universe for target
// training data, shadow pools, and evaluation splits. Feature values live in
// [0,1] (enforced by validate()), labels in [0, num_classes).
struct Dataset {
  std::size_t rows = 0;
  std::size_t cols = 0;
  int num_classes = 0;
  std::vector<double> features;  // rows x cols, row-major
  std::vector<int> labels;       // size rows
  std::vector<std::string> feature_names;  // empty or size cols
  std::vector<std::string> class_names;    // empty or size num_classes

  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * cols, cols};
  }

  std::size_t class_count(int c) const;

  // Throws std::invalid_argument on any broken invariant.
  void validate() const;
};

struct SplitPlan {
  std::uint64_t seed = 0;
  double target_train_fraction = 0.5;  // in (0,1)
  std::size_t eval_in_count = 0;
  std::size_t eval_out_count = 0;
};

struct SkewConfig {
  int target_class = 0;
  double target_fraction = 1.0;  // in (0,1]; downsampling only
  std::uint64_t seed = 0;
};

// train: the target model's training set; eval_in: subset of train;
// eval_out: disjoint from train; holdout: the remaining out-of-training
// instances, disjoint from eval_out as well (natural shadow pool).
struct SplitResult {
  Dataset train, eval_in, eval_out, holdout;
  std::vector<std::size_t> train_indices, eval_in_indices, eval_out_indices,
      holdout_indices;
};

using LabelColumn = std::variant<int, std::string>;

Dataset load_csv(const std::string& path, const LabelColumn& label_column,
                 bool normalize);
void write_csv(const Dataset& ds, const std::string& path);

// Min-max scales each feature column into [0,1]; constant columns map to 0.
// Idempotent.
Dataset normalize_min_max(Dataset ds);

Dataset synth_blobs(int k, int per_class, int m, double spread,
                    std::uint64_t seed);
Dataset synth_purchases(int k, int per_class, int m, double flip_prob,
                        std::uint64_t seed);

// x -> min(1, x + U[0, sigma]) per cell; labels untouched.
Dataset inject_noise(const Dataset& ds, double sigma, std::uint64_t seed);

// Downsamples cfg.target_class to floor(f*R/(1-f)) instances, R = count of
// all other instances, then reshuffles.
Dataset apply_skew(const Dataset& ds, const SkewConfig& cfg);

SplitResult split_in_out(const Dataset& ds, const SplitPlan& plan);

Dataset subset(const Dataset& ds, std::span<const std::size_t> indices);

}  // namespace mpa
