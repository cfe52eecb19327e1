#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "mpa/dataset.hpp"
#include "mpa/models.hpp"

namespace mpa {

enum class ShadowSource { DisjointSameDistribution, NoisyCopy, BootstrapSeeded };

struct ShadowConfig {
  int num_shadows = 4;
  ModelSpec shadow_spec;  // may differ from the target's kind (transferability)
  ShadowSource source = ShadowSource::DisjointSameDistribution;
  double noise_sigma = 0.0;        // NoisyCopy
  double seed_fraction = 0.5;      // BootstrapSeeded
  double per_shadow_train_fraction = 0.5;
  std::uint64_t seed = 0;
};

// One observation harvested from a shadow model: its prediction vector on an
// instance, the instance's class, and whether it was in that shadow's
// training subset.
struct AttackRecord {
  std::vector<double> prediction;
  int true_class = 0;
  int membership = 0;  // 1 = in, 0 = out
};

struct TrainedShadow {
  std::unique_ptr<ProbModel> model;
  std::vector<std::size_t> in_indices;
  std::vector<std::size_t> out_indices;
};

enum class AttackMode { Global, PerClass };

struct AttackModelConfig {
  ModelSpec spec;
  AttackMode mode = AttackMode::Global;
  std::size_t min_class_records = 20;  // below this a class uses the global model
  bool sort_features = false;          // descending-sort ablation of the vector
  std::uint64_t seed = 0;
};

struct MembershipCall {
  int label = 0;               // 1 = in
  double confidence = 0.5;     // winning-class probability, in [0.5, 1]
};

// Binary membership classifier F_a over prediction vectors; per-class mode
// routes by the target's predicted class and falls back to the global
// classifier for classes that had too few records.
class AttackModel {
 public:
  AttackMode mode() const { return mode_; }
  int target_classes() const { return k_target_; }
  bool sorted_features() const { return sort_features_; }
  std::size_t per_class_count() const;

  MembershipCall infer(std::span<const double> prediction_vector,
                       int routing_class) const;

  friend AttackModel train_attack_model(const std::vector<AttackRecord>& records,
                                        const AttackModelConfig& cfg);

 private:
  AttackMode mode_ = AttackMode::Global;
  int k_target_ = 0;
  bool sort_features_ = false;
  std::shared_ptr<ProbModel> global_;
  std::vector<std::shared_ptr<ProbModel>> per_class_;  // null => fallback
};

Dataset build_shadow_data(const Dataset& pool, const ShadowConfig& cfg);

std::vector<TrainedShadow> train_shadows(const Dataset& shadow_data,
                                         const ShadowConfig& cfg);

std::vector<AttackRecord> build_attack_dataset(
    const Dataset& shadow_data, const std::vector<TrainedShadow>& shadows);

AttackModel train_attack_model(const std::vector<AttackRecord>& records,
                               const AttackModelConfig& cfg);

// Full black-box call against the target: feature is the target's prediction
// vector, routed by the target's own predicted class. true_class is carried
// for the evaluator's records, not used in routing.
MembershipCall infer_membership(const AttackModel& attack, const ProbModel& target,
                                std::span<const double> x, int true_class);

struct ThresholdAttackConfig {
  std::optional<double> tau;  // empty: derive from shadows
};

// Mean training loss over all shadows' "in" sets.
double resolve_threshold(const Dataset& shadow_data,
                         const std::vector<TrainedShadow>& shadows);

// Membership iff the target's per-example loss is at most tau.
int threshold_infer(const ProbModel& target, std::span<const double> x, int y,
                    double tau);

struct SubstituteResult {
  std::unique_ptr<ProbModel> model;
  double agreement = 0.0;  // argmax match rate with the target on held-out probes
  std::size_t predicted_in_count = 0;
};

SubstituteResult build_substitute(const AttackModel& attack,
                                  const ProbModel& target,
                                  const Dataset& probe_pool,
                                  const ModelSpec& substitute_spec,
                                  std::uint64_t seed,
                                  std::size_t min_predicted_in = 50);

// CSV export of an attack dataset: k probability columns, true_class,
// membership_label.
void write_attack_records_csv(const std::vector<AttackRecord>& records,
                              const std::string& path);

}  // namespace mpa
