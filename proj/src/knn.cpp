#include <algorithm>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "mpa/kernels.hpp"
#include "mpa/models.hpp"

namespace mpa {

namespace {

class KnnModel : public ProbModel {
 public:
  KnnModel(int k, int m, int k_neighbors)
      : ProbModel(ModelKind::Knn, k, m), k_neighbors_(k_neighbors) {
    if (k_neighbors_ < 1)
      throw std::invalid_argument("knn: k_neighbors must be >= 1");
  }

  void fit(const Dataset& ds) {
    train_features_ = ds.features;
    train_labels_ = ds.labels;
    rows_ = ds.rows;
  }

  void save(std::ostream& os) const override {
    os << "k_neighbors " << k_neighbors_ << "\n";
    os << "rows " << rows_ << "\n";
    for (std::size_t i = 0; i < rows_; ++i) {
      for (int j = 0; j < features(); ++j)
        os << train_features_[i * static_cast<std::size_t>(features()) +
                              static_cast<std::size_t>(j)]
           << ' ';
      os << train_labels_[i] << "\n";
    }
  }

  void load(std::istream& is) {
    std::string tag;
    is >> tag >> k_neighbors_ >> tag >> rows_;
    train_features_.resize(rows_ * static_cast<std::size_t>(features()));
    train_labels_.resize(rows_);
    for (std::size_t i = 0; i < rows_; ++i) {
      for (int j = 0; j < features(); ++j)
        is >> train_features_[i * static_cast<std::size_t>(features()) +
                              static_cast<std::size_t>(j)];
      is >> train_labels_[i];
    }
  }

 protected:
  void do_predict(std::span<const double> x, std::span<double> out) const override {
    const auto k_eff = std::min<std::size_t>(
        static_cast<std::size_t>(k_neighbors_), rows_);
    const auto nearest = kernels::knn_indices_serial(
        x.data(), 1, train_features_.data(), rows_,
        static_cast<std::size_t>(features()), k_eff);
    std::fill(out.begin(), out.end(), 0.0);
    for (const auto idx : nearest)
      out[static_cast<std::size_t>(train_labels_[idx])] += 1.0;
    for (auto& v : out) v /= static_cast<double>(k_eff);
  }

 private:
  int k_neighbors_;
  std::size_t rows_ = 0;
  std::vector<double> train_features_;
  std::vector<int> train_labels_;
};

}  // namespace

std::unique_ptr<ProbModel> make_knn(const ModelSpec& spec, const Dataset& train_set) {
  auto model = std::make_unique<KnnModel>(
      train_set.num_classes, static_cast<int>(train_set.cols), spec.k_neighbors);
  model->fit(train_set);
  return model;
}

std::unique_ptr<ProbModel> load_knn(std::istream& is, int k, int m) {
  auto model = std::make_unique<KnnModel>(k, m, 1);
  model->load(is);
  return model;
}

}  // namespace mpa
