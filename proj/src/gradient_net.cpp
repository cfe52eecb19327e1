#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <stdexcept>
#include <vector>

#include "mpa/models.hpp"
#include "mpa/rng.hpp"

namespace mpa {

namespace {

void softmax_inplace(std::span<double> logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (auto& v : logits) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (auto& v : logits) v /= sum;
}

// Fully connected net: input -> hidden (relu) ... -> k (softmax). With no
// hidden layers this is multinomial logistic regression. Flat parameter
// order: per layer, weight matrix row-major (out x in), then biases.
class FeedForwardModel : public ProbModel, public GradientNet {
 public:
  FeedForwardModel(ModelKind kind, int k, int m, std::vector<int> hidden)
      : ProbModel(kind, k, m), hidden_(std::move(hidden)) {
    sizes_.push_back(m);
    for (const int h : hidden_) {
      if (h < 1) throw std::invalid_argument("mlp: hidden layer sizes must be >= 1");
      sizes_.push_back(h);
    }
    sizes_.push_back(k);
    std::size_t count = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      layer_offsets_.push_back(count);
      count += static_cast<std::size_t>(sizes_[l + 1]) *
                   static_cast<std::size_t>(sizes_[l]) +
               static_cast<std::size_t>(sizes_[l + 1]);
    }
    params_.assign(count, 0.0);
  }

  // glorot-style uniform, biases zero
  void init_weights(std::uint64_t seed) {
    auto rng = make_rng(derive_seed(seed, 0x1417));
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      const auto fan_in = static_cast<double>(sizes_[l]);
      const auto fan_out = static_cast<double>(sizes_[l + 1]);
      const double r = std::sqrt(6.0 / (fan_in + fan_out));
      std::uniform_real_distribution<double> u(-r, r);
      double* w = params_.data() + layer_offsets_[l];
      const std::size_t wcount =
          static_cast<std::size_t>(sizes_[l + 1]) * static_cast<std::size_t>(sizes_[l]);
      for (std::size_t i = 0; i < wcount; ++i) w[i] = u(rng);
      // biases stay zero
    }
  }

  std::size_t param_count() const override { return params_.size(); }
  std::vector<double>& params() override { return params_; }
  const std::vector<double>& params() const override { return params_; }

  void example_gradient(std::span<const double> x, int y,
                        std::span<double> grad) const override {
    const std::size_t layers = sizes_.size() - 1;
    // forward with cached activations
    std::vector<std::vector<double>> acts(layers + 1);
    acts[0].assign(x.begin(), x.end());
    for (std::size_t l = 0; l < layers; ++l) {
      forward_layer(l, acts[l], acts[l + 1]);
      if (l + 1 < layers)
        for (auto& v : acts[l + 1]) v = std::max(0.0, v);
    }
    softmax_inplace(acts[layers]);

    std::fill(grad.begin(), grad.end(), 0.0);
    // delta at output: p - onehot(y)
    std::vector<double> delta = acts[layers];
    delta[static_cast<std::size_t>(y)] -= 1.0;

    for (std::size_t l = layers; l-- > 0;) {
      const auto in_n = static_cast<std::size_t>(sizes_[l]);
      const auto out_n = static_cast<std::size_t>(sizes_[l + 1]);
      double* gw = grad.data() + layer_offsets_[l];
      double* gb = gw + out_n * in_n;
      const double* w = params_.data() + layer_offsets_[l];
      for (std::size_t o = 0; o < out_n; ++o) {
        const double d = delta[o];
        for (std::size_t i = 0; i < in_n; ++i) gw[o * in_n + i] = d * acts[l][i];
        gb[o] = d;
      }
      if (l == 0) break;
      std::vector<double> prev(in_n, 0.0);
      for (std::size_t i = 0; i < in_n; ++i) {
        if (acts[l][i] <= 0.0) continue;  // relu gate
        double s = 0.0;
        for (std::size_t o = 0; o < out_n; ++o) s += w[o * in_n + i] * delta[o];
        prev[i] = s;
      }
      delta = std::move(prev);
    }
  }

  void save(std::ostream& os) const override {
    os << "hidden " << hidden_.size();
    for (const int h : hidden_) os << ' ' << h;
    os << "\nparams " << params_.size() << "\n";
    for (const double p : params_) os << p << ' ';
    os << "\n";
  }

  void load_params(std::istream& is) {
    std::string tag;
    std::size_t count = 0;
    is >> tag >> count;
    if (tag != "params" || count != params_.size())
      throw std::runtime_error("bad gradient-model payload");
    for (auto& p : params_) is >> p;
  }

 protected:
  void do_predict(std::span<const double> x, std::span<double> out) const override {
    const std::size_t layers = sizes_.size() - 1;
    std::vector<double> cur(x.begin(), x.end()), next;
    for (std::size_t l = 0; l < layers; ++l) {
      forward_layer(l, cur, next);
      if (l + 1 < layers)
        for (auto& v : next) v = std::max(0.0, v);
      cur = std::move(next);
    }
    softmax_inplace(cur);
    std::copy(cur.begin(), cur.end(), out.begin());
  }

 private:
  void forward_layer(std::size_t l, const std::vector<double>& in,
                     std::vector<double>& out) const {
    const auto in_n = static_cast<std::size_t>(sizes_[l]);
    const auto out_n = static_cast<std::size_t>(sizes_[l + 1]);
    const double* w = params_.data() + layer_offsets_[l];
    const double* b = w + out_n * in_n;
    out.assign(out_n, 0.0);
    for (std::size_t o = 0; o < out_n; ++o) {
      double s = b[o];
      for (std::size_t i = 0; i < in_n; ++i) s += w[o * in_n + i] * in[i];
      out[o] = s;
    }
  }

  std::vector<int> hidden_;
  std::vector<int> sizes_;
  std::vector<std::size_t> layer_offsets_;
  std::vector<double> params_;
};

}  // namespace

std::unique_ptr<ProbModel> make_logistic_regression(const ModelSpec& spec, int k,
                                                    int m) {
  (void)spec;
  // zero-initialized weights; the objective is convex
  return std::make_unique<FeedForwardModel>(ModelKind::LogisticRegression, k, m,
                                            std::vector<int>{});
}

std::unique_ptr<ProbModel> make_mlp(const ModelSpec& spec, int k, int m) {
  auto model =
      std::make_unique<FeedForwardModel>(ModelKind::Mlp, k, m, spec.hidden);
  model->init_weights(spec.seed);
  return model;
}

namespace {

std::vector<int> read_hidden_list(std::istream& is) {
  std::string tag;
  std::size_t count = 0;
  is >> tag >> count;
  if (tag != "hidden") throw std::runtime_error("bad gradient-model payload");
  std::vector<int> hidden(count);
  for (auto& h : hidden) is >> h;
  return hidden;
}

}  // namespace

std::unique_ptr<ProbModel> load_logistic_regression(std::istream& is, int k, int m) {
  read_hidden_list(is);
  auto model = std::make_unique<FeedForwardModel>(ModelKind::LogisticRegression, k,
                                                  m, std::vector<int>{});
  model->load_params(is);
  return model;
}

std::unique_ptr<ProbModel> load_mlp(std::istream& is, int k, int m) {
  auto model = std::make_unique<FeedForwardModel>(ModelKind::Mlp, k, m,
                                                  read_hidden_list(is));
  model->load_params(is);
  return model;
}

}  // namespace mpa
