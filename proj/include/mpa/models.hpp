#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mpa/dataset.hpp"

namespace mpa {

enum class ModelKind { DecisionTree, Knn, LogisticRegression, GaussianNb, Mlp };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

struct ModelSpec {
  ModelKind kind = ModelKind::DecisionTree;

  // decision tree
  int max_depth = -1;  // < 0: unbounded
  int min_leaf = 1;

  // knn
  int k_neighbors = 5;

  // gradient learners (logistic regression, mlp)
  double learning_rate = 0.1;
  int epochs = 50;
  double l2 = 0.0;
  std::vector<int> hidden = {16};  // mlp only
  int batch_size = 32;
  std::uint64_t seed = 0;

  // gaussian nb
  double variance_floor = 1e-9;
};

// A trained classifier exposing probability-vector predictions. Outputs are
// length-k, non-negative, and sum to 1 within 1e-9 for every kind.
class ProbModel {
 public:
  virtual ~ProbModel() = default;

  ModelKind kind() const { return kind_; }
  int classes() const { return k_; }
  int features() const { return m_; }
  bool trained() const { return trained_; }

  double train_accuracy() const;
  std::optional<double> test_accuracy() const { return test_accuracy_; }

  void predict_proba(std::span<const double> x, std::span<double> out) const;
  std::vector<double> predict_proba(std::span<const double> x) const;
  int predict_class(std::span<const double> x) const;

  virtual void save(std::ostream& os) const = 0;

  void set_accuracies(double train_acc, std::optional<double> test_acc);

 protected:
  ProbModel(ModelKind kind, int k, int m) : kind_(kind), k_(k), m_(m) {}
  virtual void do_predict(std::span<const double> x,
                          std::span<double> out) const = 0;

 private:
  ModelKind kind_;
  int k_;
  int m_;
  bool trained_ = false;
  double train_accuracy_ = 0.0;
  std::optional<double> test_accuracy_;
};

// Parameter access for gradient-trainable models (LR, MLP). The flat layout
// is per layer: weight matrix row-major (out x in), then biases.
class GradientNet {
 public:
  virtual ~GradientNet() = default;
  virtual std::size_t param_count() const = 0;
  virtual std::vector<double>& params() = 0;
  virtual const std::vector<double>& params() const = 0;
  // Gradient of the per-example cross-entropy -log p_y. Regularization is
  // applied by the trainer as decoupled weight decay, never here.
  virtual void example_gradient(std::span<const double> x, int y,
                                std::span<double> grad) const = 0;
};

std::unique_ptr<ProbModel> train(const ModelSpec& spec, const Dataset& train_set,
                                 const Dataset& test_set);

double accuracy(const ProbModel& model, const Dataset& ds);

// train_accuracy - test_accuracy; throws when the test accuracy is unset.
double accuracy_difference(const ProbModel& model);

// Cross-entropy -log p_y with p_y floored at 1e-12.
double per_example_loss(const ProbModel& model, std::span<const double> x, int y);

// Flat cross-entropy gradient; throws for non-differentiable kinds.
std::vector<double> per_example_gradient(const ProbModel& model,
                                         std::span<const double> x, int y);

void save_model(const ProbModel& model, const std::string& path);
std::unique_ptr<ProbModel> load_model(std::istream& is);
std::unique_ptr<ProbModel> load_model_file(const std::string& path);

// internal factories used by train() and load_model()
std::unique_ptr<ProbModel> make_decision_tree(const ModelSpec& spec,
                                              const Dataset& train_set);
std::unique_ptr<ProbModel> make_knn(const ModelSpec& spec, const Dataset& train_set);
std::unique_ptr<ProbModel> make_gaussian_nb(const ModelSpec& spec,
                                            const Dataset& train_set);
// constructed untrained; parameters fitted by the sgd loop
std::unique_ptr<ProbModel> make_logistic_regression(const ModelSpec& spec, int k,
                                                    int m);
std::unique_ptr<ProbModel> make_mlp(const ModelSpec& spec, int k, int m);

std::unique_ptr<ProbModel> load_decision_tree(std::istream& is, int k, int m);
std::unique_ptr<ProbModel> load_knn(std::istream& is, int k, int m);
std::unique_ptr<ProbModel> load_gaussian_nb(std::istream& is, int k, int m);
std::unique_ptr<ProbModel> load_logistic_regression(std::istream& is, int k, int m);
std::unique_ptr<ProbModel> load_mlp(std::istream& is, int k, int m);

}  // namespace mpa
