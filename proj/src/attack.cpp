#include "mpa/attack.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

#include "mpa/kernels.hpp"
#include "mpa/rng.hpp"

namespace mpa {

namespace {

std::vector<double> attack_feature(std::vector<double> prediction, bool sorted) {
  if (sorted) std::sort(prediction.begin(), prediction.end(), std::greater<>());
  return prediction;
}

Dataset records_to_dataset(const std::vector<AttackRecord>& records,
                           std::span<const std::size_t> which, bool sorted) {
  Dataset ds;
  ds.rows = which.size();
  ds.cols = records[which[0]].prediction.size();
  ds.num_classes = 2;
  ds.class_names = {"out", "in"};
  ds.features.reserve(ds.rows * ds.cols);
  ds.labels.reserve(ds.rows);
  for (const auto idx : which) {
    auto feat = attack_feature(records[idx].prediction, sorted);
    ds.features.insert(ds.features.end(), feat.begin(), feat.end());
    ds.labels.push_back(records[idx].membership);
  }
  return ds;
}

}  // namespace

Dataset build_shadow_data(const Dataset& pool, const ShadowConfig& cfg) {
  if (pool.rows < 2)
    throw std::invalid_argument("build_shadow_data: insufficient pool");
  switch (cfg.source) {
    case ShadowSource::DisjointSameDistribution:
      return pool;
    case ShadowSource::NoisyCopy:
      return inject_noise(pool, cfg.noise_sigma, derive_seed(cfg.seed, 0xa01));
    case ShadowSource::BootstrapSeeded: {
      if (!(cfg.seed_fraction > 0.0 && cfg.seed_fraction <= 1.0))
        throw std::invalid_argument(
            "build_shadow_data: seed_fraction must be in (0,1]");
      const auto seeds_n = static_cast<std::size_t>(
          std::max(1.0, std::floor(cfg.seed_fraction *
                                   static_cast<double>(pool.rows))));
      std::vector<std::size_t> idx(pool.rows);
      std::iota(idx.begin(), idx.end(), 0);
      auto rng = make_rng(derive_seed(cfg.seed, 0xa02));
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(seeds_n);
      // resample with replacement from the seed set back to pool size
      std::uniform_int_distribution<std::size_t> pick(0, seeds_n - 1);
      std::vector<std::size_t> boot(pool.rows);
      for (auto& b : boot) b = idx[pick(rng)];
      return subset(pool, boot);
    }
  }
  throw std::logic_error("unknown shadow source");
}

std::vector<TrainedShadow> train_shadows(const Dataset& shadow_data,
                                         const ShadowConfig& cfg) {
  if (cfg.num_shadows < 1)
    throw std::invalid_argument("train_shadows: num_shadows must be >= 1");
  if (!(cfg.per_shadow_train_fraction > 0.0 &&
        cfg.per_shadow_train_fraction < 1.0))
    throw std::invalid_argument(
        "train_shadows: per_shadow_train_fraction must be in (0,1)");

  const auto n = shadow_data.rows;
  const auto in_n = static_cast<std::size_t>(
      std::floor(cfg.per_shadow_train_fraction * static_cast<double>(n)));
  if (in_n < 1 || 2 * in_n > n)
    throw std::invalid_argument(
        "train_shadows: split infeasible (need in and equal-sized out sets)");

  std::vector<TrainedShadow> shadows(static_cast<std::size_t>(cfg.num_shadows));
  for (int s = 0; s < cfg.num_shadows; ++s) {
    auto& shadow = shadows[static_cast<std::size_t>(s)];
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    auto rng = make_rng(derive_seed(cfg.seed, 0x54ad0, static_cast<std::uint64_t>(s)));
    std::shuffle(idx.begin(), idx.end(), rng);
    shadow.in_indices.assign(idx.begin(), idx.begin() + static_cast<long>(in_n));
    shadow.out_indices.assign(idx.begin() + static_cast<long>(in_n),
                              idx.begin() + static_cast<long>(2 * in_n));

    ModelSpec spec = cfg.shadow_spec;
    spec.seed = derive_seed(cfg.seed, 0x54ad1, static_cast<std::uint64_t>(s));
    const Dataset train_set = subset(shadow_data, shadow.in_indices);
    const Dataset out_set = subset(shadow_data, shadow.out_indices);
    shadow.model = train(spec, train_set, out_set);
  }
  return shadows;
}

std::vector<AttackRecord> build_attack_dataset(
    const Dataset& shadow_data, const std::vector<TrainedShadow>& shadows) {
  std::vector<AttackRecord> records;
  for (const auto& shadow : shadows) {
    if (!shadow.model || !shadow.model->trained())
      throw std::invalid_argument("build_attack_dataset: untrained shadow");
    for (const int membership : {1, 0}) {
      const auto& indices = membership ? shadow.in_indices : shadow.out_indices;
      for (const auto i : indices) {
        AttackRecord rec;
        rec.prediction = shadow.model->predict_proba(shadow_data.row(i));
        rec.true_class = shadow_data.labels[i];
        rec.membership = membership;
        records.push_back(std::move(rec));
      }
    }
  }
  return records;
}

std::size_t AttackModel::per_class_count() const {
  return static_cast<std::size_t>(
      std::count_if(per_class_.begin(), per_class_.end(),
                    [](const auto& p) { return p != nullptr; }));
}

AttackModel train_attack_model(const std::vector<AttackRecord>& records,
                               const AttackModelConfig& cfg) {
  if (records.empty())
    throw std::invalid_argument("train_attack_model: empty attack dataset");

  AttackModel attack;
  attack.mode_ = cfg.mode;
  attack.sort_features_ = cfg.sort_features;
  attack.k_target_ = static_cast<int>(records[0].prediction.size());

  std::vector<std::size_t> all(records.size());
  std::iota(all.begin(), all.end(), 0);

  ModelSpec spec = cfg.spec;
  spec.seed = derive_seed(cfg.seed, 0xa77ac4);
  attack.global_ = std::shared_ptr<ProbModel>(
      train(spec, records_to_dataset(records, all, cfg.sort_features), Dataset{}));

  if (cfg.mode == AttackMode::PerClass) {
    attack.per_class_.assign(static_cast<std::size_t>(attack.k_target_), nullptr);
    for (int c = 0; c < attack.k_target_; ++c) {
      std::vector<std::size_t> mine;
      for (std::size_t i = 0; i < records.size(); ++i)
        if (records[i].true_class == c) mine.push_back(i);
      // both membership labels must be present to train a binary classifier
      const auto ones = static_cast<std::size_t>(
          std::count_if(mine.begin(), mine.end(),
                        [&](std::size_t i) { return records[i].membership == 1; }));
      if (mine.size() < cfg.min_class_records || ones == 0 || ones == mine.size())
        continue;  // falls back to the global model
      ModelSpec cls_spec = cfg.spec;
      cls_spec.seed = derive_seed(cfg.seed, 0xa77ac5, static_cast<std::uint64_t>(c));
      attack.per_class_[static_cast<std::size_t>(c)] = std::shared_ptr<ProbModel>(
          train(cls_spec, records_to_dataset(records, mine, cfg.sort_features),
                Dataset{}));
    }
  }
  return attack;
}

MembershipCall AttackModel::infer(std::span<const double> prediction_vector,
                                  int routing_class) const {
  if (!global_) throw std::runtime_error("attack model is not trained");
  const ProbModel* classifier = global_.get();
  if (mode_ == AttackMode::PerClass && routing_class >= 0 &&
      routing_class < static_cast<int>(per_class_.size()) &&
      per_class_[static_cast<std::size_t>(routing_class)]) {
    classifier = per_class_[static_cast<std::size_t>(routing_class)].get();
  }
  const auto feat = attack_feature(
      std::vector<double>(prediction_vector.begin(), prediction_vector.end()),
      sort_features_);
  const auto p = classifier->predict_proba(feat);
  const int label = p[1] > p[0] ? 1 : 0;
  const double confidence =
      std::clamp(p[static_cast<std::size_t>(label)], 0.5, 1.0);
  return MembershipCall{label, confidence};
}

MembershipCall infer_membership(const AttackModel& attack, const ProbModel& target,
                                std::span<const double> x, int true_class) {
  (void)true_class;  // evaluator bookkeeping; routing stays black-box
  const auto prediction = target.predict_proba(x);
  const int predicted_class = static_cast<int>(
      std::max_element(prediction.begin(), prediction.end()) - prediction.begin());
  return attack.infer(prediction, predicted_class);
}

double resolve_threshold(const Dataset& shadow_data,
                         const std::vector<TrainedShadow>& shadows) {
  if (shadows.empty())
    throw std::invalid_argument(
        "resolve_threshold: auto threshold needs shadow models");
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& shadow : shadows) {
    for (const auto i : shadow.in_indices) {
      sum += per_example_loss(*shadow.model, shadow_data.row(i),
                              shadow_data.labels[i]);
      ++count;
    }
  }
  if (count == 0) throw std::invalid_argument("resolve_threshold: no in-records");
  return sum / static_cast<double>(count);
}

int threshold_infer(const ProbModel& target, std::span<const double> x, int y,
                    double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("threshold_infer: tau must be > 0");
  return per_example_loss(target, x, y) <= tau ? 1 : 0;
}

SubstituteResult build_substitute(const AttackModel& attack,
                                  const ProbModel& target,
                                  const Dataset& probe_pool,
                                  const ModelSpec& substitute_spec,
                                  std::uint64_t seed,
                                  std::size_t min_predicted_in) {
  if (probe_pool.rows < 10)
    throw std::invalid_argument("build_substitute: probe pool too small");

  // black-box protocol: every probe label comes from the target's argmax
  Dataset labeled = probe_pool;
  labeled.num_classes = target.classes();
  labeled.class_names.clear();
  kernels::parallel_for(labeled.rows, [&](std::size_t i) {
    labeled.labels[i] = target.predict_class(labeled.row(i));
  });

  std::vector<std::size_t> idx(labeled.rows);
  std::iota(idx.begin(), idx.end(), 0);
  auto rng = make_rng(derive_seed(seed, 0x5b57));
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto build_n = static_cast<std::size_t>(
      std::floor(0.7 * static_cast<double>(labeled.rows)));
  std::vector<std::size_t> build_idx(idx.begin(), idx.begin() + static_cast<long>(build_n));
  std::vector<std::size_t> held_idx(idx.begin() + static_cast<long>(build_n), idx.end());

  std::vector<std::size_t> predicted_in;
  for (const auto i : build_idx) {
    const auto call = infer_membership(attack, target, labeled.row(i),
                                       labeled.labels[i]);
    if (call.label == 1) predicted_in.push_back(i);
  }
  if (predicted_in.size() < min_predicted_in)
    throw std::runtime_error(
        "build_substitute: predicted-in subset too small (" +
        std::to_string(predicted_in.size()) + " < " +
        std::to_string(min_predicted_in) + ")");

  ModelSpec spec = substitute_spec;
  spec.seed = derive_seed(seed, 0x5b58);
  const Dataset sub_train = subset(labeled, predicted_in);
  const Dataset held = subset(labeled, held_idx);
  SubstituteResult result;
  result.model = train(spec, sub_train, held);
  result.predicted_in_count = predicted_in.size();
  std::size_t agree = 0;
  for (std::size_t i = 0; i < held.rows; ++i) {
    if (result.model->predict_class(held.row(i)) == held.labels[i]) ++agree;
  }
  result.agreement = static_cast<double>(agree) / static_cast<double>(held.rows);
  return result;
}

void write_attack_records_csv(const std::vector<AttackRecord>& records,
                              const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write csv file: " + path);
  out.precision(17);
  if (records.empty()) return;
  for (std::size_t j = 0; j < records[0].prediction.size(); ++j)
    out << 'p' << j << ',';
  out << "true_class,membership_label\n";
  for (const auto& rec : records) {
    for (const double p : rec.prediction) out << p << ',';
    out << rec.true_class << ',' << rec.membership << '\n';
  }
}

}  // namespace mpa
