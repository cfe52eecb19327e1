#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mpa/attack.hpp"
#include "mpa/dataset.hpp"
#include "mpa/models.hpp"

namespace mpa {

struct MetricTuple {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Positive class is "in" (1); 0/0 ratios are defined as 0.
MetricTuple confusion_metrics(std::span<const int> truth,
                              std::span<const int> predictions);

struct ClassMetrics {
  MetricTuple metrics;
  std::size_t support = 0;
};

struct VulnerabilityReport {
  MetricTuple aggregate;
  std::map<int, ClassMetrics> per_class;          // keyed by true class
  std::map<std::string, ClassMetrics> subgroup;   // caller-named index sets
  // mean attacker confidence for tp/fp/tn/fn; zero-support keys are absent
  std::map<std::string, double> confidence_breakdown;
  std::optional<double> fp_mean_distance;
  std::optional<double> fn_mean_distance;
  double attack_wall_time_seconds = 0.0;
  double target_accuracy_difference = 0.0;
  double baseline = 0.5;
  std::size_t eval_size = 0;
};

struct ShadowAttacker {
  const AttackModel* model = nullptr;
};
struct ThresholdAttacker {
  double tau = 0.0;
};
using Attacker = std::variant<ShadowAttacker, ThresholdAttacker>;

// Runs membership inference over eval_in (truth "in") followed by eval_out
// (truth "out"); subgroup index sets refer to that concatenated order.
VulnerabilityReport evaluate_attack(
    const Attacker& attacker, const ProbModel& target, const Dataset& eval_in,
    const Dataset& eval_out, const Dataset& train_set,
    const std::map<std::string, std::vector<std::size_t>>& subgroups = {});

// Euclidean distance to the nearest training instance.
double distance_to_training(std::span<const double> x, const Dataset& train_set);

// 1 - dp_acc / base_acc.
double utility_loss(double base_acc, double dp_acc);

// One-vs-rest F1 loss for one class: 1 - f1_dp / f1_base; empty when the
// base F1 is 0 (undefined ratio).
std::optional<double> f1_loss_per_class(const ProbModel& base_model,
                                        const ProbModel& dp_model,
                                        const Dataset& test_set, int class_id);

struct UtilityLossSummary {
  double overall_accuracy_loss = 0.0;
  std::map<int, std::optional<double>> per_class_f1_loss;
  double epsilon = 0.0;
  double delta = 0.0;
};

UtilityLossSummary summarize_utility_loss(const ProbModel& base_model,
                                          const ProbModel& dp_model,
                                          const Dataset& test_set,
                                          double epsilon, double delta);

}  // namespace mpa
