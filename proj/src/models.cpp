#include "mpa/models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "mpa/dp.hpp"
#include "mpa/kernels.hpp"

namespace mpa {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::DecisionTree: return "decision_tree";
    case ModelKind::Knn: return "knn";
    case ModelKind::LogisticRegression: return "logistic_regression";
    case ModelKind::GaussianNb: return "gaussian_nb";
    case ModelKind::Mlp: return "mlp";
  }
  throw std::logic_error("unknown model kind");
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "decision_tree" || name == "dt") return ModelKind::DecisionTree;
  if (name == "knn") return ModelKind::Knn;
  if (name == "logistic_regression" || name == "lr")
    return ModelKind::LogisticRegression;
  if (name == "gaussian_nb" || name == "nb") return ModelKind::GaussianNb;
  if (name == "mlp") return ModelKind::Mlp;
  throw std::invalid_argument("unknown model kind: " + name);
}

double ProbModel::train_accuracy() const {
  if (!trained_) throw std::runtime_error("model is not trained");
  return train_accuracy_;
}

void ProbModel::set_accuracies(double train_acc, std::optional<double> test_acc) {
  trained_ = true;
  train_accuracy_ = train_acc;
  test_accuracy_ = test_acc;
}

void ProbModel::predict_proba(std::span<const double> x,
                              std::span<double> out) const {
  if (!trained_) throw std::runtime_error("model is not trained");
  if (x.size() != static_cast<std::size_t>(m_))
    throw std::invalid_argument("predict_proba: input dimension mismatch");
  if (out.size() != static_cast<std::size_t>(k_))
    throw std::invalid_argument("predict_proba: output size mismatch");
  do_predict(x, out);
}

std::vector<double> ProbModel::predict_proba(std::span<const double> x) const {
  std::vector<double> out(static_cast<std::size_t>(k_));
  predict_proba(x, out);
  return out;
}

int ProbModel::predict_class(std::span<const double> x) const {
  const auto p = predict_proba(x);
  return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

double accuracy(const ProbModel& model, const Dataset& ds) {
  if (ds.rows == 0) throw std::invalid_argument("accuracy: empty dataset");
  std::vector<int> preds(ds.rows);
  kernels::parallel_for(ds.rows, [&](std::size_t i) {
    preds[i] = model.predict_class(ds.row(i));
  });
  std::size_t hits = 0;
  for (std::size_t i = 0; i < ds.rows; ++i)
    if (preds[i] == ds.labels[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(ds.rows);
}

double accuracy_difference(const ProbModel& model) {
  if (!model.test_accuracy())
    throw std::runtime_error("accuracy_difference: test accuracy is unset");
  return model.train_accuracy() - *model.test_accuracy();
}

double per_example_loss(const ProbModel& model, std::span<const double> x, int y) {
  if (y < 0 || y >= model.classes())
    throw std::invalid_argument("per_example_loss: label out of range");
  const auto p = model.predict_proba(x);
  return -std::log(std::max(p[static_cast<std::size_t>(y)], 1e-12));
}

std::vector<double> per_example_gradient(const ProbModel& model,
                                         std::span<const double> x, int y) {
  const auto* net = dynamic_cast<const GradientNet*>(&model);
  if (!net)
    throw std::invalid_argument(
        "per_example_gradient: model kind is not gradient-trainable");
  std::vector<double> grad(net->param_count(), 0.0);
  net->example_gradient(x, y, grad);
  return grad;
}

std::unique_ptr<ProbModel> train(const ModelSpec& spec, const Dataset& train_set,
                                 const Dataset& test_set) {
  if (train_set.rows == 0) throw std::invalid_argument("train: empty training set");
  train_set.validate();

  std::unique_ptr<ProbModel> model;
  switch (spec.kind) {
    case ModelKind::DecisionTree:
      model = make_decision_tree(spec, train_set);
      break;
    case ModelKind::Knn:
      model = make_knn(spec, train_set);
      break;
    case ModelKind::GaussianNb:
      model = make_gaussian_nb(spec, train_set);
      break;
    case ModelKind::LogisticRegression:
    case ModelKind::Mlp: {
      model = spec.kind == ModelKind::LogisticRegression
                  ? make_logistic_regression(spec, train_set.num_classes,
                                             static_cast<int>(train_set.cols))
                  : make_mlp(spec, train_set.num_classes,
                             static_cast<int>(train_set.cols));
      auto* net = dynamic_cast<GradientNet*>(model.get());
      SgdOptions opt;
      opt.learning_rate = spec.learning_rate;
      opt.epochs = spec.epochs;
      opt.batch_size = spec.batch_size;
      opt.seed = spec.seed;
      opt.l2 = spec.l2;
      run_sgd(*net, train_set, opt);
      break;
    }
  }

  const double train_acc = accuracy(*model, train_set);
  std::optional<double> test_acc;
  if (test_set.rows > 0) test_acc = accuracy(*model, test_set);
  model->set_accuracies(train_acc, test_acc);
  return model;
}

void save_model(const ProbModel& model, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::invalid_argument("cannot write model file: " + path);
  os.precision(17);
  os << "mpa-model 1\n";
  os << "kind " << to_string(model.kind()) << "\n";
  os << "classes " << model.classes() << "\n";
  os << "features " << model.features() << "\n";
  os << "train_acc " << model.train_accuracy() << "\n";
  if (model.test_accuracy())
    os << "test_acc " << *model.test_accuracy() << "\n";
  else
    os << "test_acc none\n";
  model.save(os);
}

std::unique_ptr<ProbModel> load_model(std::istream& is) {
  std::string magic, kind_name, tag;
  int version = 0, k = 0, m = 0;
  is >> magic >> version;
  if (magic != "mpa-model" || version != 1)
    throw std::runtime_error("unrecognized model file header");
  is >> tag >> kind_name >> tag >> k >> tag >> m;

  double train_acc = 0.0;
  std::string test_token;
  is >> tag >> train_acc >> tag >> test_token;
  std::optional<double> test_acc;
  if (test_token != "none") test_acc = std::stod(test_token);

  std::unique_ptr<ProbModel> model;
  switch (model_kind_from_string(kind_name)) {
    case ModelKind::DecisionTree: model = load_decision_tree(is, k, m); break;
    case ModelKind::Knn: model = load_knn(is, k, m); break;
    case ModelKind::GaussianNb: model = load_gaussian_nb(is, k, m); break;
    case ModelKind::LogisticRegression:
      model = load_logistic_regression(is, k, m);
      break;
    case ModelKind::Mlp: model = load_mlp(is, k, m); break;
  }
  model->set_accuracies(train_acc, test_acc);
  return model;
}

std::unique_ptr<ProbModel> load_model_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("cannot open model file: " + path);
  return load_model(is);
}

}  // namespace mpa
