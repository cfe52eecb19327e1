#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <vector>

#include "mpa/models.hpp"

namespace mpa {

namespace {

class GaussianNbModel : public ProbModel {
 public:
  GaussianNbModel(int k, int m, double variance_floor)
      : ProbModel(ModelKind::GaussianNb, k, m), variance_floor_(variance_floor) {}

  void fit(const Dataset& ds) {
    const auto k = static_cast<std::size_t>(classes());
    const auto m = static_cast<std::size_t>(features());
    priors_.assign(k, 0.0);
    means_.assign(k * m, 0.0);
    vars_.assign(k * m, 0.0);

    std::vector<double> counts(k, 0.0);
    for (std::size_t i = 0; i < ds.rows; ++i) {
      const auto c = static_cast<std::size_t>(ds.labels[i]);
      counts[c] += 1.0;
      for (std::size_t j = 0; j < m; ++j) means_[c * m + j] += ds.features[i * m + j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0)
        for (std::size_t j = 0; j < m; ++j) means_[c * m + j] /= counts[c];
      priors_[c] = counts[c] / static_cast<double>(ds.rows);
    }
    for (std::size_t i = 0; i < ds.rows; ++i) {
      const auto c = static_cast<std::size_t>(ds.labels[i]);
      for (std::size_t j = 0; j < m; ++j) {
        const double d = ds.features[i * m + j] - means_[c * m + j];
        vars_[c * m + j] += d * d;
      }
    }
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t j = 0; j < m; ++j) {
        if (counts[c] > 0) vars_[c * m + j] /= counts[c];
        vars_[c * m + j] = std::max(vars_[c * m + j], variance_floor_);
      }
    }
  }

  void save(std::ostream& os) const override {
    os << "priors";
    for (const double p : priors_) os << ' ' << p;
    os << "\nmeans";
    for (const double v : means_) os << ' ' << v;
    os << "\nvars";
    for (const double v : vars_) os << ' ' << v;
    os << "\n";
  }

  void load(std::istream& is) {
    const auto k = static_cast<std::size_t>(classes());
    const auto m = static_cast<std::size_t>(features());
    priors_.resize(k);
    means_.resize(k * m);
    vars_.resize(k * m);
    std::string tag;
    is >> tag;
    for (auto& p : priors_) is >> p;
    is >> tag;
    for (auto& v : means_) is >> v;
    is >> tag;
    for (auto& v : vars_) is >> v;
  }

 protected:
  void do_predict(std::span<const double> x, std::span<double> out) const override {
    const auto k = static_cast<std::size_t>(classes());
    const auto m = static_cast<std::size_t>(features());
    std::vector<double> log_post(k, -std::numeric_limits<double>::infinity());
    for (std::size_t c = 0; c < k; ++c) {
      if (priors_[c] <= 0.0) continue;
      double lp = std::log(priors_[c]);
      for (std::size_t j = 0; j < m; ++j) {
        const double v = vars_[c * m + j];
        const double d = x[j] - means_[c * m + j];
        lp += -0.5 * std::log(2.0 * std::numbers::pi * v) - d * d / (2.0 * v);
      }
      log_post[c] = lp;
    }
    const double mx = *std::max_element(log_post.begin(), log_post.end());
    double sum = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      out[c] = std::isfinite(log_post[c]) ? std::exp(log_post[c] - mx) : 0.0;
      sum += out[c];
    }
    for (auto& v : out) v /= sum;
  }

 private:
  double variance_floor_;
  std::vector<double> priors_;
  std::vector<double> means_;
  std::vector<double> vars_;
};

}  // namespace

std::unique_ptr<ProbModel> make_gaussian_nb(const ModelSpec& spec,
                                            const Dataset& train_set) {
  auto model = std::make_unique<GaussianNbModel>(
      train_set.num_classes, static_cast<int>(train_set.cols),
      std::max(spec.variance_floor, 1e-300));
  model->fit(train_set);
  return model;
}

std::unique_ptr<ProbModel> load_gaussian_nb(std::istream& is, int k, int m) {
  auto model = std::make_unique<GaussianNbModel>(k, m, 1e-9);
  model->load(is);
  return model;
}

}  // namespace mpa
