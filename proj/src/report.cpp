#include "mpa/report.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "mpa/kernels.hpp"

namespace mpa {

MetricTuple confusion_metrics(std::span<const int> truth,
                              std::span<const int> predictions) {
  if (truth.size() != predictions.size())
    throw std::invalid_argument("confusion_metrics: length mismatch");
  if (truth.empty())
    throw std::invalid_argument("confusion_metrics: empty input");

  double tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (predictions[i] == 1)
      (truth[i] == 1 ? tp : fp) += 1;
    else
      (truth[i] == 1 ? fn : tn) += 1;
  }
  MetricTuple m;
  m.accuracy = (tp + tn) / static_cast<double>(truth.size());
  m.precision = (tp + fp) > 0 ? tp / (tp + fp) : 0.0;
  m.recall = (tp + fn) > 0 ? tp / (tp + fn) : 0.0;
  m.f1 = (m.precision + m.recall) > 0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  return m;
}

double distance_to_training(std::span<const double> x, const Dataset& train_set) {
  if (train_set.rows == 0)
    throw std::invalid_argument("distance_to_training: empty training set");
  if (x.size() != train_set.cols)
    throw std::invalid_argument("distance_to_training: dimension mismatch");
  const auto d = kernels::min_distances(x.data(), 1, train_set.features.data(),
                                        train_set.rows, train_set.cols);
  return d[0];
}

double utility_loss(double base_acc, double dp_acc) {
  if (!(base_acc > 0.0))
    throw std::invalid_argument("utility_loss: base accuracy must be positive");
  return 1.0 - dp_acc / base_acc;
}

namespace {

MetricTuple one_vs_rest_f1(const ProbModel& model, const Dataset& test_set,
                           int class_id) {
  std::vector<int> truth(test_set.rows), preds(test_set.rows);
  kernels::parallel_for(test_set.rows, [&](std::size_t i) {
    preds[i] = model.predict_class(test_set.row(i)) == class_id ? 1 : 0;
  });
  for (std::size_t i = 0; i < test_set.rows; ++i)
    truth[i] = test_set.labels[i] == class_id ? 1 : 0;
  return confusion_metrics(truth, preds);
}

}  // namespace

std::optional<double> f1_loss_per_class(const ProbModel& base_model,
                                        const ProbModel& dp_model,
                                        const Dataset& test_set, int class_id) {
  if (class_id < 0 || class_id >= test_set.num_classes ||
      test_set.class_count(class_id) == 0)
    throw std::invalid_argument("f1_loss_per_class: class absent from test set");
  const double f1_base = one_vs_rest_f1(base_model, test_set, class_id).f1;
  const double f1_dp = one_vs_rest_f1(dp_model, test_set, class_id).f1;
  if (f1_base == 0.0) return std::nullopt;
  return 1.0 - f1_dp / f1_base;
}

UtilityLossSummary summarize_utility_loss(const ProbModel& base_model,
                                          const ProbModel& dp_model,
                                          const Dataset& test_set,
                                          double epsilon, double delta) {
  UtilityLossSummary s;
  s.epsilon = epsilon;
  s.delta = delta;
  s.overall_accuracy_loss =
      utility_loss(accuracy(base_model, test_set), accuracy(dp_model, test_set));
  for (int c = 0; c < test_set.num_classes; ++c) {
    if (test_set.class_count(c) == 0) continue;
    s.per_class_f1_loss[c] = f1_loss_per_class(base_model, dp_model, test_set, c);
  }
  return s;
}

VulnerabilityReport evaluate_attack(
    const Attacker& attacker, const ProbModel& target, const Dataset& eval_in,
    const Dataset& eval_out, const Dataset& train_set,
    const std::map<std::string, std::vector<std::size_t>>& subgroups) {
  if (eval_in.rows != eval_out.rows)
    throw std::invalid_argument(
        "evaluate_attack: balanced evaluation requires |eval_in| == |eval_out|");
  if (eval_in.rows == 0)
    throw std::invalid_argument("evaluate_attack: empty evaluation sets");

  const std::size_t n = eval_in.rows + eval_out.rows;
  std::vector<int> truth(n), preds(n), classes(n);
  std::vector<double> confidences(n);

  const auto row_of = [&](std::size_t i) {
    return i < eval_in.rows ? eval_in.row(i) : eval_out.row(i - eval_in.rows);
  };
  const auto label_of = [&](std::size_t i) {
    return i < eval_in.rows ? eval_in.labels[i]
                            : eval_out.labels[i - eval_in.rows];
  };

  const auto t0 = std::chrono::steady_clock::now();
  kernels::parallel_for(n, [&](std::size_t i) {
    truth[i] = i < eval_in.rows ? 1 : 0;
    classes[i] = label_of(i);
    if (std::holds_alternative<ShadowAttacker>(attacker)) {
      const auto* attack = std::get<ShadowAttacker>(attacker).model;
      const auto call = infer_membership(*attack, target, row_of(i), classes[i]);
      preds[i] = call.label;
      confidences[i] = call.confidence;
    } else {
      const double tau = std::get<ThresholdAttacker>(attacker).tau;
      preds[i] = threshold_infer(target, row_of(i), classes[i], tau);
      confidences[i] = 1.0;  // hard decision rule; no calibrated confidence
    }
  });
  const auto t1 = std::chrono::steady_clock::now();

  VulnerabilityReport report;
  report.eval_size = n;
  report.attack_wall_time_seconds =
      std::chrono::duration<double>(t1 - t0).count();
  report.aggregate = confusion_metrics(truth, preds);
  report.target_accuracy_difference =
      target.test_accuracy() ? accuracy_difference(target) : 0.0;

  const auto restricted = [&](const std::vector<std::size_t>& idx) {
    std::vector<int> t, p;
    t.reserve(idx.size());
    p.reserve(idx.size());
    for (const auto i : idx) {
      t.push_back(truth[i]);
      p.push_back(preds[i]);
    }
    return ClassMetrics{confusion_metrics(t, p), idx.size()};
  };

  for (int c = 0; c < eval_in.num_classes; ++c) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < n; ++i)
      if (classes[i] == c) idx.push_back(i);
    if (!idx.empty()) report.per_class[c] = restricted(idx);
  }
  for (const auto& [name, idx] : subgroups) {
    for (const auto i : idx)
      if (i >= n)
        throw std::invalid_argument("evaluate_attack: subgroup index out of range");
    if (!idx.empty()) report.subgroup[name] = restricted(idx);
  }

  double conf_sum[4] = {0, 0, 0, 0};
  std::size_t conf_count[4] = {0, 0, 0, 0};
  std::vector<std::size_t> fp_idx, fn_idx;
  for (std::size_t i = 0; i < n; ++i) {
    int bucket;  // 0 tp, 1 fp, 2 tn, 3 fn
    if (preds[i] == 1)
      bucket = truth[i] == 1 ? 0 : 1;
    else
      bucket = truth[i] == 1 ? 3 : 2;
    conf_sum[bucket] += confidences[i];
    conf_count[bucket] += 1;
    if (bucket == 1) fp_idx.push_back(i);
    if (bucket == 3) fn_idx.push_back(i);
  }
  const char* names[4] = {"tp", "fp", "tn", "fn"};
  for (int b = 0; b < 4; ++b) {
    if (conf_count[b] > 0)
      report.confidence_breakdown[names[b]] =
          conf_sum[b] / static_cast<double>(conf_count[b]);
  }

  const auto mean_distance = [&](const std::vector<std::size_t>& idx)
      -> std::optional<double> {
    if (idx.empty()) return std::nullopt;
    double sum = 0.0;
    for (const auto i : idx) sum += distance_to_training(row_of(i), train_set);
    return sum / static_cast<double>(idx.size());
  };
  report.fp_mean_distance = mean_distance(fp_idx);
  report.fn_mean_distance = mean_distance(fn_idx);
  return report;
}

}  // namespace mpa
