#include "mpa/experiment.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mpa/kernels.hpp"
#include "mpa/pca.hpp"
#include "mpa/report.hpp"
#include "mpa/rng.hpp"

namespace mpa {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::Single: return "single";
    case ScenarioKind::SkewSweep: return "skew_sweep";
    case ScenarioKind::NoiseSweep: return "noise_sweep";
    case ScenarioKind::TransferMatrix: return "transfer_matrix";
    case ScenarioKind::DpSweep: return "dp_sweep";
    case ScenarioKind::DepthSweep: return "depth_sweep";
  }
  throw std::logic_error("unknown scenario kind");
}

namespace {

ScenarioKind scenario_from_string(const std::string& s) {
  if (s == "single") return ScenarioKind::Single;
  if (s == "skew_sweep") return ScenarioKind::SkewSweep;
  if (s == "noise_sweep") return ScenarioKind::NoiseSweep;
  if (s == "transfer_matrix") return ScenarioKind::TransferMatrix;
  if (s == "dp_sweep") return ScenarioKind::DpSweep;
  if (s == "depth_sweep") return ScenarioKind::DepthSweep;
  throw std::invalid_argument("unknown scenario kind: " + s);
}

std::string kind_slug(ModelKind kind) {
  switch (kind) {
    case ModelKind::DecisionTree: return "dt";
    case ModelKind::Knn: return "knn";
    case ModelKind::LogisticRegression: return "lr";
    case ModelKind::GaussianNb: return "nb";
    case ModelKind::Mlp: return "mlp";
  }
  return "?";
}

std::string num_label(double v) {
  std::ostringstream ss;
  ss << v;
  return ss.str();
}

// ---- validation ---------------------------------------------------------

struct Problems {
  std::vector<std::string> list;
  void add(const std::string& path, const std::string& reason) {
    list.push_back(path + ": " + reason);
  }
};

bool is_num(const json& j) { return j.is_number(); }

double num_or(const json& j, const std::string& key, double fallback) {
  return j.contains(key) && j[key].is_number() ? j[key].get<double>() : fallback;
}

void validate_model_spec(const json& j, const std::string& path, Problems& p) {
  if (!j.is_object()) {
    p.add(path, "must be an object");
    return;
  }
  if (!j.contains("kind") || !j["kind"].is_string()) {
    p.add(path + ".kind", "missing model kind");
    return;
  }
  try {
    model_kind_from_string(j["kind"].get<std::string>());
  } catch (const std::exception&) {
    p.add(path + ".kind", "unknown model kind '" + j["kind"].get<std::string>() + "'");
  }
  if (j.contains("min_leaf") && num_or(j, "min_leaf", 1) < 1)
    p.add(path + ".min_leaf", "must be >= 1");
  if (j.contains("k_neighbors") && num_or(j, "k_neighbors", 1) < 1)
    p.add(path + ".k_neighbors", "must be >= 1");
  if (j.contains("learning_rate") && !(num_or(j, "learning_rate", 1) > 0))
    p.add(path + ".learning_rate", "must be positive");
  if (j.contains("epochs") && num_or(j, "epochs", 1) < 1)
    p.add(path + ".epochs", "must be >= 1");
  if (j.contains("batch_size") && num_or(j, "batch_size", 1) < 1)
    p.add(path + ".batch_size", "must be >= 1");
  if (j.contains("hidden")) {
    if (!j["hidden"].is_array())
      p.add(path + ".hidden", "must be an array of layer sizes");
    else
      for (const auto& h : j["hidden"])
        if (!is_num(h) || h.get<double>() < 1)
          p.add(path + ".hidden", "layer sizes must be >= 1");
  }
}

ModelSpec parse_model_spec(const json& j) {
  ModelSpec spec;
  spec.kind = model_kind_from_string(j.at("kind").get<std::string>());
  if (j.contains("max_depth")) {
    if (j["max_depth"].is_string())  // "unbounded"
      spec.max_depth = -1;
    else
      spec.max_depth = j["max_depth"].get<int>();
  }
  if (j.contains("min_leaf")) spec.min_leaf = j["min_leaf"].get<int>();
  if (j.contains("k_neighbors")) spec.k_neighbors = j["k_neighbors"].get<int>();
  if (j.contains("learning_rate")) spec.learning_rate = j["learning_rate"].get<double>();
  if (j.contains("epochs")) spec.epochs = j["epochs"].get<int>();
  if (j.contains("l2")) spec.l2 = j["l2"].get<double>();
  if (j.contains("hidden")) spec.hidden = j["hidden"].get<std::vector<int>>();
  if (j.contains("batch_size")) spec.batch_size = j["batch_size"].get<int>();
  if (j.contains("variance_floor")) spec.variance_floor = j["variance_floor"].get<double>();
  return spec;
}

}  // namespace

std::vector<std::string> validate_config(const json& j) {
  Problems p;
  if (!j.is_object()) {
    p.add("config", "top level must be a JSON object");
    return p.list;
  }

  // dataset
  if (!j.contains("dataset") || !j["dataset"].is_object()) {
    p.add("dataset", "missing dataset block");
  } else {
    const auto& d = j["dataset"];
    const std::string source =
        d.contains("source") && d["source"].is_string() ? d["source"].get<std::string>() : "";
    if (source != "csv" && source != "blobs" && source != "purchases")
      p.add("dataset.source", "must be one of csv | blobs | purchases");
    if (source == "csv" && (!d.contains("path") || !d["path"].is_string()))
      p.add("dataset.path", "csv source requires a file path");
    if (source != "csv") {
      if (num_or(d, "k", 2) < 2) p.add("dataset.k", "class count must be >= 2");
      if (num_or(d, "per_class", 1) < 1) p.add("dataset.per_class", "must be >= 1");
      if (num_or(d, "m", 1) < 1) p.add("dataset.m", "must be >= 1");
    }
    if (source == "blobs" && d.contains("spread") && !(num_or(d, "spread", 0.1) >= 0))
      p.add("dataset.spread", "must be >= 0");
    if (source == "purchases") {
      const double fp = num_or(d, "flip_prob", 0.1);
      if (!(fp >= 0.0 && fp < 0.5)) p.add("dataset.flip_prob", "must be in [0, 0.5)");
    }
  }

  // target
  if (!j.contains("target") || !j["target"].is_object()) {
    p.add("target", "missing target block");
  } else {
    const auto& t = j["target"];
    if (!t.contains("model"))
      p.add("target.model", "missing target model spec");
    else
      validate_model_spec(t["model"], "target.model", p);
    if (t.contains("split")) {
      const auto& s = t["split"];
      const double f = num_or(s, "train_fraction", 0.5);
      if (!(f > 0.0 && f < 1.0)) p.add("target.split.train_fraction", "must be in (0,1)");
      if (num_or(s, "eval_in", 1) < 1) p.add("target.split.eval_in", "must be >= 1");
      if (num_or(s, "eval_out", 1) < 1) p.add("target.split.eval_out", "must be >= 1");
      if (s.contains("eval_in") && s.contains("eval_out") &&
          s["eval_in"] != s["eval_out"])
        p.add("target.split.eval_out", "balanced evaluation requires eval_in == eval_out");
    }
  }

  // attacker
  if (!j.contains("attacker") || !j["attacker"].is_object()) {
    p.add("attacker", "missing attacker block");
  } else {
    const auto& a = j["attacker"];
    const std::string method =
        a.contains("method") && a["method"].is_string() ? a["method"].get<std::string>() : "shadow";
    if (method != "shadow" && method != "threshold")
      p.add("attacker.method", "must be shadow | threshold");
    if (a.contains("shadow")) {
      const auto& s = a["shadow"];
      if (num_or(s, "num_shadows", 1) < 1) p.add("attacker.shadow.num_shadows", "must be >= 1");
      const double f = num_or(s, "train_fraction", 0.5);
      if (!(f > 0.0 && f < 1.0))
        p.add("attacker.shadow.train_fraction", "must be in (0,1)");
      if (s.contains("model")) validate_model_spec(s["model"], "attacker.shadow.model", p);
      if (s.contains("source")) {
        const std::string src = s["source"].is_string() ? s["source"].get<std::string>() : "";
        if (src != "disjoint" && src != "noisy_copy" && src != "bootstrap")
          p.add("attacker.shadow.source", "must be disjoint | noisy_copy | bootstrap");
      }
    }
    if (method == "shadow") {
      if (a.contains("model")) validate_model_spec(a["model"], "attacker.model", p);
      if (a.contains("mode")) {
        const std::string mode = a["mode"].is_string() ? a["mode"].get<std::string>() : "";
        if (mode != "global" && mode != "per_class")
          p.add("attacker.mode", "must be global | per_class");
      }
    }
    if (method == "threshold" && a.contains("threshold")) {
      const auto& t = a["threshold"];
      if (t.contains("tau") && !t["tau"].is_string() && !(num_or(t, "tau", 1) > 0))
        p.add("attacker.threshold.tau", "must be positive or \"auto\"");
    }
  }

  // dp block
  const bool dp_present = j.contains("dp") && j["dp"].is_object();
  if (dp_present) {
    const auto& d = j["dp"];
    if (!(num_or(d, "clip_norm", 1) > 0)) p.add("dp.clip_norm", "must be positive");
    if (num_or(d, "noise_multiplier", 0) < 0) p.add("dp.noise_multiplier", "must be >= 0");
    if (num_or(d, "batch_size", 1) < 1) p.add("dp.batch_size", "must be >= 1");
    if (num_or(d, "epochs", 1) < 1) p.add("dp.epochs", "must be >= 1");
    if (!(num_or(d, "learning_rate", 0.1) > 0)) p.add("dp.learning_rate", "must be positive");
    if (d.contains("delta")) {
      const double delta = num_or(d, "delta", 1e-5);
      if (!(delta > 0 && delta < 1)) p.add("dp.delta", "must be in (0,1)");
    }
    if (d.contains("sampling")) {
      const std::string s = d["sampling"].is_string() ? d["sampling"].get<std::string>() : "";
      if (s != "shuffle" && s != "poisson") p.add("dp.sampling", "must be shuffle | poisson");
    }
  }

  // scenario
  if (!j.contains("scenario") || !j["scenario"].is_object() ||
      !j["scenario"].contains("kind")) {
    p.add("scenario.kind", "missing scenario kind");
  } else {
    const auto& s = j["scenario"];
    std::string kind_name = s["kind"].is_string() ? s["kind"].get<std::string>() : "";
    ScenarioKind kind = ScenarioKind::Single;
    bool kind_ok = true;
    try {
      kind = scenario_from_string(kind_name);
    } catch (const std::exception&) {
      p.add("scenario.kind", "unknown scenario '" + kind_name + "'");
      kind_ok = false;
    }
    if (kind_ok) {
      switch (kind) {
        case ScenarioKind::SkewSweep: {
          if (!s.contains("fractions") || !s["fractions"].is_array() ||
              s["fractions"].empty()) {
            p.add("scenario.fractions", "skew_sweep needs a non-empty fraction list");
          } else {
            for (const auto& f : s["fractions"])
              if (!is_num(f) || !(f.get<double>() > 0.0 && f.get<double>() <= 1.0))
                p.add("scenario.fractions", "target_fraction must be in (0,1]");
          }
          break;
        }
        case ScenarioKind::NoiseSweep: {
          if (!s.contains("sigmas") || !s["sigmas"].is_array() || s["sigmas"].empty()) {
            p.add("scenario.sigmas", "noise_sweep needs a non-empty sigma list");
          } else {
            for (const auto& v : s["sigmas"])
              if (!is_num(v) || !(v.get<double>() >= 0.0 && v.get<double>() <= 1.0))
                p.add("scenario.sigmas", "noise sigma must be in [0,1]");
          }
          if (s.contains("applied_to")) {
            const std::string at =
                s["applied_to"].is_string() ? s["applied_to"].get<std::string>() : "";
            if (at != "target_data" && at != "shadow_data")
              p.add("scenario.applied_to", "must be target_data | shadow_data");
          }
          break;
        }
        case ScenarioKind::TransferMatrix: {
          if (!s.contains("model_kinds") || !s["model_kinds"].is_array() ||
              s["model_kinds"].empty()) {
            p.add("scenario.model_kinds", "transfer_matrix needs a model kind list");
          } else {
            for (const auto& k : s["model_kinds"]) {
              try {
                model_kind_from_string(k.is_string() ? k.get<std::string>() : "?");
              } catch (const std::exception&) {
                p.add("scenario.model_kinds", "unknown model kind in list");
              }
            }
          }
          break;
        }
        case ScenarioKind::DpSweep: {
          if (!dp_present) p.add("dp", "dp_sweep requires the dp block");
          const bool has_sigma = s.contains("sigma_list") && s["sigma_list"].is_array() &&
                                 !s["sigma_list"].empty();
          const bool has_eps = s.contains("epsilon_list") && s["epsilon_list"].is_array() &&
                               !s["epsilon_list"].empty();
          if (!has_sigma && !has_eps)
            p.add("scenario", "dp_sweep needs sigma_list or epsilon_list");
          if (has_sigma && has_eps)
            p.add("scenario", "dp_sweep takes sigma_list or epsilon_list, not both");
          if (has_eps && (!dp_present || !j["dp"].contains("delta")))
            p.add("dp.delta", "epsilon_list requires an explicit delta in the dp block");
          if (has_eps)
            for (const auto& e : s["epsilon_list"])
              if (!is_num(e) || !(e.get<double>() > 0)) p.add("scenario.epsilon_list", "epsilon must be positive");
          if (has_sigma)
            for (const auto& v : s["sigma_list"])
              if (!is_num(v) || !(v.get<double>() > 0)) p.add("scenario.sigma_list", "sigma must be positive");
          break;
        }
        case ScenarioKind::DepthSweep: {
          if (!s.contains("depths") || !s["depths"].is_array() || s["depths"].empty()) {
            p.add("scenario.depths", "depth_sweep needs a depth list");
          } else {
            for (const auto& d : s["depths"]) {
              const bool unbounded = d.is_string() && d.get<std::string>() == "unbounded";
              if (!unbounded && (!is_num(d) || d.get<double>() < 1))
                p.add("scenario.depths", "depths must be >= 1 or \"unbounded\"");
            }
          }
          if (j.contains("target") && j["target"].is_object() &&
              j["target"].contains("model") && j["target"]["model"].contains("kind") &&
              j["target"]["model"]["kind"].is_string() &&
              j["target"]["model"]["kind"].get<std::string>() != "decision_tree" &&
              j["target"]["model"]["kind"].get<std::string>() != "dt")
            p.add("scenario.depths", "depth_sweep requires a decision_tree target");
          break;
        }
        case ScenarioKind::Single:
          break;
      }
      if (s.contains("skew_fraction")) {
        const double f = num_or(s, "skew_fraction", 1.0);
        if (!(f > 0.0 && f <= 1.0))
          p.add("scenario.skew_fraction", "target_fraction must be in (0,1]");
      }
    }
  }

  if (j.contains("seeds")) {
    if (!j["seeds"].is_array() || j["seeds"].empty())
      p.add("seeds", "must be a non-empty list of integers");
  }
  if (j.contains("output_dir") &&
      (!j["output_dir"].is_string() || j["output_dir"].get<std::string>().empty()))
    p.add("output_dir", "must be a non-empty path");

  return p.list;
}

ExperimentConfig parse_config(const json& j) {
  const auto problems = validate_config(j);
  if (!problems.empty()) {
    std::string msg = "invalid config:";
    for (const auto& pr : problems) msg += "\n  - " + pr;
    throw std::invalid_argument(msg);
  }

  ExperimentConfig cfg;
  const auto& d = j.at("dataset");
  cfg.dataset.source = d.at("source").get<std::string>();
  if (cfg.dataset.source == "csv") {
    cfg.dataset.csv_path = d.at("path").get<std::string>();
    if (d.contains("label_column")) {
      if (d["label_column"].is_number())
        cfg.dataset.label_column = d["label_column"].get<int>();
      else
        cfg.dataset.label_column = d["label_column"].get<std::string>();
    }
    if (d.contains("normalize")) cfg.dataset.normalize = d["normalize"].get<bool>();
  } else {
    if (d.contains("k")) cfg.dataset.k = d["k"].get<int>();
    if (d.contains("per_class")) cfg.dataset.per_class = d["per_class"].get<int>();
    if (d.contains("m")) cfg.dataset.m = d["m"].get<int>();
    if (d.contains("spread")) cfg.dataset.spread = d["spread"].get<double>();
    if (d.contains("flip_prob")) cfg.dataset.flip_prob = d["flip_prob"].get<double>();
  }

  const auto& t = j.at("target");
  cfg.target_model = parse_model_spec(t.at("model"));
  if (t.contains("split")) {
    const auto& s = t["split"];
    if (s.contains("train_fraction"))
      cfg.split.target_train_fraction = s["train_fraction"].get<double>();
    if (s.contains("eval_in"))
      cfg.split.eval_in_count = s["eval_in"].get<std::size_t>();
    if (s.contains("eval_out"))
      cfg.split.eval_out_count = s["eval_out"].get<std::size_t>();
  }

  const auto& a = j.at("attacker");
  if (a.contains("method")) cfg.attacker.method = a["method"].get<std::string>();
  if (a.contains("shadow")) {
    const auto& s = a["shadow"];
    if (s.contains("num_shadows"))
      cfg.attacker.shadow.num_shadows = s["num_shadows"].get<int>();
    if (s.contains("model")) cfg.attacker.shadow.shadow_spec = parse_model_spec(s["model"]);
    if (s.contains("train_fraction"))
      cfg.attacker.shadow.per_shadow_train_fraction = s["train_fraction"].get<double>();
    if (s.contains("source")) {
      const std::string src = s["source"].get<std::string>();
      cfg.attacker.shadow.source = src == "noisy_copy" ? ShadowSource::NoisyCopy
                                   : src == "bootstrap" ? ShadowSource::BootstrapSeeded
                                                        : ShadowSource::DisjointSameDistribution;
    }
    if (s.contains("noise_sigma"))
      cfg.attacker.shadow.noise_sigma = s["noise_sigma"].get<double>();
    if (s.contains("seed_fraction"))
      cfg.attacker.shadow.seed_fraction = s["seed_fraction"].get<double>();
  }
  if (a.contains("model")) cfg.attacker.attack_spec = parse_model_spec(a["model"]);
  if (a.contains("mode"))
    cfg.attacker.mode = a["mode"].get<std::string>() == "per_class" ? AttackMode::PerClass
                                                                    : AttackMode::Global;
  if (a.contains("min_class_records"))
    cfg.attacker.min_class_records = a["min_class_records"].get<std::size_t>();
  if (a.contains("sort_features"))
    cfg.attacker.sort_features = a["sort_features"].get<bool>();
  if (a.contains("threshold") && a["threshold"].contains("tau") &&
      a["threshold"]["tau"].is_number())
    cfg.attacker.threshold.tau = a["threshold"]["tau"].get<double>();

  if (j.contains("dp") && j["dp"].is_object()) {
    const auto& dj = j["dp"];
    DPConfig dp;
    if (dj.contains("clip_norm")) dp.clip_norm = dj["clip_norm"].get<double>();
    if (dj.contains("noise_multiplier"))
      dp.noise_multiplier = dj["noise_multiplier"].get<double>();
    if (dj.contains("batch_size")) dp.batch_size = dj["batch_size"].get<int>();
    if (dj.contains("epochs")) dp.epochs = dj["epochs"].get<int>();
    if (dj.contains("learning_rate")) dp.learning_rate = dj["learning_rate"].get<double>();
    if (dj.contains("delta")) {
      dp.delta = dj["delta"].get<double>();
      cfg.dp_delta_given = true;
    }
    if (dj.contains("sampling"))
      dp.sampling_mode = dj["sampling"].get<std::string>() == "poisson"
                             ? SamplingMode::Poisson
                             : SamplingMode::Shuffle;
    if (dj.contains("epsilon_cap")) dp.epsilon_cap = dj["epsilon_cap"].get<double>();
    if (dj.contains("schedule")) {
      const auto& sj = dj["schedule"];
      NoiseSchedule sched;
      const std::string kind = sj.value("kind", "fixed");
      sched.kind = kind == "linear_decay"    ? ScheduleKind::LinearDecay
                   : kind == "exp_decay"     ? ScheduleKind::ExpDecay
                   : kind == "step_decay"    ? ScheduleKind::StepDecay
                   : kind == "inverse_time_decay" ? ScheduleKind::InverseTimeDecay
                                             : ScheduleKind::Fixed;
      sched.sigma0 = sj.value("sigma0", dp.noise_multiplier);
      sched.sigma_end = sj.value("sigma_end", sched.sigma0);
      sched.rate = sj.value("rate", 0.0);
      sched.step_period = sj.value("step_period", 1);
      sched.step_factor = sj.value("step_factor", 1.0);
      sched.epochs = dp.epochs;
      dp.schedule = sched;
    }
    cfg.dp = dp;
  }

  const auto& s = j.at("scenario");
  cfg.scenario.kind = scenario_from_string(s.at("kind").get<std::string>());
  if (s.contains("skew_class")) cfg.scenario.skew_class = s["skew_class"].get<int>();
  if (s.contains("fractions"))
    cfg.scenario.fractions = s["fractions"].get<std::vector<double>>();
  if (s.contains("sigmas")) cfg.scenario.sigmas = s["sigmas"].get<std::vector<double>>();
  if (s.contains("applied_to")) cfg.scenario.applied_to = s["applied_to"].get<std::string>();
  if (s.contains("model_kinds"))
    for (const auto& k : s["model_kinds"])
      cfg.scenario.model_kinds.push_back(model_kind_from_string(k.get<std::string>()));
  if (s.contains("sigma_list"))
    cfg.scenario.sigma_list = s["sigma_list"].get<std::vector<double>>();
  if (s.contains("epsilon_list"))
    cfg.scenario.epsilon_list = s["epsilon_list"].get<std::vector<double>>();
  if (s.contains("depths"))
    for (const auto& dj2 : s["depths"])
      cfg.scenario.depths.push_back(dj2.is_string() ? -1 : dj2.get<int>());
  if (s.contains("pca_plot")) cfg.scenario.pca_plot = s["pca_plot"].get<bool>();
  if (s.contains("export_attack_dataset"))
    cfg.scenario.export_attack_dataset = s["export_attack_dataset"].get<bool>();
  if (s.contains("skew_fraction"))
    cfg.scenario.base_skew_fraction = s["skew_fraction"].get<double>();

  if (j.contains("seeds")) cfg.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
  if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();
  return cfg;
}

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  json j;
  in >> j;
  return j;
}

std::string config_hash(const json& j) {
  const std::string dump = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (const unsigned char c : dump) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream ss;
  ss << std::hex << h;
  return ss.str();
}

// ---- execution ----------------------------------------------------------

namespace {

struct PointParams {
  std::string label;
  std::optional<double> skew_fraction;
  std::optional<double> noise_sigma;
  bool noise_on_shadow = false;
  std::optional<ModelKind> shadow_kind;
  std::optional<ModelKind> attack_kind;
  std::optional<double> dp_sigma;
  std::optional<double> dp_epsilon_target;
  std::optional<int> depth;
};

std::vector<PointParams> scenario_points(const ExperimentConfig& cfg) {
  const auto& sc = cfg.scenario;
  std::vector<PointParams> points;
  switch (sc.kind) {
    case ScenarioKind::Single: {
      PointParams p;
      p.label = "single";
      points.push_back(p);
      break;
    }
    case ScenarioKind::SkewSweep:
      for (const double f : sc.fractions) {
        PointParams p;
        p.label = "skew_f" + num_label(f);
        p.skew_fraction = f;
        points.push_back(p);
      }
      break;
    case ScenarioKind::NoiseSweep:
      for (const double s : sc.sigmas) {
        PointParams p;
        p.noise_on_shadow = sc.applied_to == "shadow_data";
        p.label = std::string("noise_") + (p.noise_on_shadow ? "shadow" : "target") +
                  "_s" + num_label(s);
        p.noise_sigma = s;
        points.push_back(p);
      }
      break;
    case ScenarioKind::TransferMatrix:
      for (const auto shadow_kind : sc.model_kinds) {
        for (const auto attack_kind : sc.model_kinds) {
          PointParams p;
          p.label = "transfer_" + kind_slug(shadow_kind) + "_x_" + kind_slug(attack_kind);
          p.shadow_kind = shadow_kind;
          p.attack_kind = attack_kind;
          points.push_back(p);
        }
      }
      break;
    case ScenarioKind::DpSweep:
      for (const double s : sc.sigma_list) {
        PointParams p;
        p.label = "dp_sigma" + num_label(s);
        p.dp_sigma = s;
        points.push_back(p);
      }
      for (const double e : sc.epsilon_list) {
        PointParams p;
        p.label = "dp_eps" + num_label(e);
        p.dp_epsilon_target = e;
        points.push_back(p);
      }
      break;
    case ScenarioKind::DepthSweep:
      for (const int d : sc.depths) {
        PointParams p;
        p.label = d < 0 ? "depth_unbounded" : "depth_" + std::to_string(d);
        p.depth = d;
        points.push_back(p);
      }
      break;
  }
  return points;
}

Dataset concat_datasets(const Dataset& a, const Dataset& b) {
  if (a.rows == 0) return b;
  if (b.rows == 0) return a;
  Dataset out = a;
  out.rows += b.rows;
  out.features.insert(out.features.end(), b.features.begin(), b.features.end());
  out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
  return out;
}

Dataset build_base_dataset(const ExperimentConfig& cfg, std::uint64_t seed) {
  const auto& d = cfg.dataset;
  if (d.source == "csv") return load_csv(d.csv_path, d.label_column, d.normalize);
  if (d.source == "blobs")
    return synth_blobs(d.k, d.per_class, d.m, d.spread, seed);
  return synth_purchases(d.k, d.per_class, d.m, d.flip_prob, seed);
}

json metrics_json(const MetricTuple& m) {
  return json{{"accuracy", m.accuracy},
              {"precision", m.precision},
              {"recall", m.recall},
              {"f1", m.f1}};
}

json report_json(const VulnerabilityReport& r) {
  json out = metrics_json(r.aggregate);
  out["baseline"] = r.baseline;
  out["eval_size"] = r.eval_size;
  json per_class = json::object();
  for (const auto& [c, cm] : r.per_class) {
    json e = metrics_json(cm.metrics);
    e["support"] = cm.support;
    per_class[std::to_string(c)] = e;
  }
  out["per_class"] = per_class;
  json subgroup = json::object();
  for (const auto& [name, cm] : r.subgroup) {
    json e = metrics_json(cm.metrics);
    e["support"] = cm.support;
    subgroup[name] = e;
  }
  out["subgroup"] = subgroup;
  out["confidence_breakdown"] = r.confidence_breakdown;
  out["fp_mean_distance"] =
      r.fp_mean_distance ? json(*r.fp_mean_distance) : json(nullptr);
  out["fn_mean_distance"] =
      r.fn_mean_distance ? json(*r.fn_mean_distance) : json(nullptr);
  out["target_accuracy_difference"] = r.target_accuracy_difference;
  out["attack_seconds"] = r.attack_wall_time_seconds;
  return out;
}

struct Manifest {
  fs::path root;
  std::vector<std::string> files;
  void note(const fs::path& p) { files.push_back(fs::relative(p, root).string()); }
};

void write_text(Manifest& manifest, const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
  manifest.note(p);
}

struct PointOutcome {
  json record;
};

PointOutcome run_point(const ExperimentConfig& cfg, const PointParams& point,
                       std::uint64_t seed, const fs::path& dir,
                       Manifest& manifest, const std::string& hash) {
  // data and split seeds ignore the point label so sweep points see the same
  // data wherever the scenario parameter allows it
  Dataset base = build_base_dataset(cfg, derive_seed(seed, 0xda7a));

  std::optional<double> skew = point.skew_fraction;
  if (!skew && cfg.scenario.base_skew_fraction) skew = cfg.scenario.base_skew_fraction;
  if (skew) {
    base = apply_skew(base, SkewConfig{cfg.scenario.skew_class, *skew,
                                       derive_seed(seed, 0x5e3f)});
  }

  SplitPlan plan = cfg.split;
  plan.seed = derive_seed(seed, 0x59117);
  const SplitResult split = split_in_out(base, plan);
  const Dataset test_all = concat_datasets(split.eval_out, split.holdout);

  // target (DP or plain)
  ModelSpec target_spec = cfg.target_model;
  target_spec.seed = derive_seed(seed, 0x7a96e7);
  if (point.depth) target_spec.max_depth = *point.depth;

  std::unique_ptr<ProbModel> target;
  std::unique_ptr<ProbModel> base_model;  // non-private twin for utility loss
  std::optional<DpGuarantee> guarantee;
  json dp_json;
  const bool dp_enabled = cfg.dp.has_value();
  if (dp_enabled) {
    DPConfig dp = *cfg.dp;
    dp.seed = target_spec.seed;
    if (point.dp_sigma) {
      dp.noise_multiplier = *point.dp_sigma;
      dp.schedule.reset();
    }
    if (point.dp_epsilon_target) {
      const auto n = split.train.rows;
      const int L = std::min<int>(dp.batch_size, static_cast<int>(n));
      const long steps = static_cast<long>(dp.epochs) *
                         static_cast<long>((n + static_cast<std::size_t>(L) - 1) /
                                           static_cast<std::size_t>(L));
      dp.noise_multiplier = calibrate_noise_for_epsilon(
          *point.dp_epsilon_target, dp.delta, steps,
          static_cast<double>(L) / static_cast<double>(n));
      dp.schedule.reset();
    }
    auto result = dp_train(target_spec, split.train, test_all, dp,
                           make_accountant(dp.delta));
    target = std::move(result.model);
    guarantee = result.guarantee;
    base_model = train(target_spec, split.train, test_all);

    dp_json["epsilon"] = guarantee->epsilon;
    dp_json["delta"] = guarantee->delta;
    dp_json["achieving_order"] = guarantee->achieving_order;
    dp_json["steps"] = result.accountant.steps;
    dp_json["q"] = result.accountant.last_q;
    dp_json["noise_multiplier"] = dp.noise_multiplier;
    dp_json["sigma_trace"] = result.accountant.sigma_trace;
    if (!result.accountant.notes.empty()) dp_json["notes"] = result.accountant.notes;

    const auto utility = summarize_utility_loss(*base_model, *target, test_all,
                                                guarantee->epsilon, guarantee->delta);
    json f1_losses = json::object();
    for (const auto& [c, loss] : utility.per_class_f1_loss)
      f1_losses[std::to_string(c)] = loss ? json(*loss) : json(nullptr);
    dp_json["utility"] = {{"overall_accuracy_loss", utility.overall_accuracy_loss},
                          {"per_class_f1_loss", f1_losses}};
  } else {
    target = train(target_spec, split.train, test_all);
  }

  // attacker setup
  const auto setup_t0 = std::chrono::steady_clock::now();
  ShadowConfig shadow_cfg = cfg.attacker.shadow;
  shadow_cfg.seed = derive_seed(seed, 0x54ad);
  if (point.shadow_kind) shadow_cfg.shadow_spec.kind = *point.shadow_kind;
  if (point.noise_sigma && point.noise_on_shadow) {
    shadow_cfg.source = ShadowSource::NoisyCopy;
    shadow_cfg.noise_sigma = *point.noise_sigma;
  }

  const Dataset& pool = split.holdout;
  if (pool.rows < 10)
    throw std::runtime_error(
        "shadow pool too small; lower eval counts or train fraction");
  const Dataset shadow_data = build_shadow_data(pool, shadow_cfg);
  const auto shadows = train_shadows(shadow_data, shadow_cfg);

  Attacker attacker = ShadowAttacker{nullptr};
  std::optional<AttackModel> attack_model;
  double tau = 0.0;
  std::vector<AttackRecord> records;
  if (cfg.attacker.method == "threshold") {
    tau = cfg.attacker.threshold.tau ? *cfg.attacker.threshold.tau
                                     : resolve_threshold(shadow_data, shadows);
    attacker = ThresholdAttacker{tau};
  } else {
    records = build_attack_dataset(shadow_data, shadows);
    AttackModelConfig acfg;
    acfg.spec = cfg.attacker.attack_spec;
    if (point.attack_kind) acfg.spec.kind = *point.attack_kind;
    acfg.mode = cfg.attacker.mode;
    acfg.min_class_records = cfg.attacker.min_class_records;
    acfg.sort_features = cfg.attacker.sort_features;
    acfg.seed = derive_seed(seed, 0xa77);
    attack_model = train_attack_model(records, acfg);
    attacker = ShadowAttacker{&*attack_model};
  }
  const auto setup_t1 = std::chrono::steady_clock::now();

  // evaluation sets; target-side noise models attacker uncertainty about x
  Dataset eval_in = split.eval_in;
  Dataset eval_out = split.eval_out;
  if (point.noise_sigma && !point.noise_on_shadow && *point.noise_sigma > 0) {
    eval_in = inject_noise(eval_in, *point.noise_sigma, derive_seed(seed, 0xe01));
    eval_out = inject_noise(eval_out, *point.noise_sigma, derive_seed(seed, 0xe02));
  }

  std::map<std::string, std::vector<std::size_t>> subgroups;
  if (skew) {
    std::vector<std::size_t> minority;
    for (std::size_t i = 0; i < eval_in.rows + eval_out.rows; ++i) {
      const int label = i < eval_in.rows ? eval_in.labels[i]
                                         : eval_out.labels[i - eval_in.rows];
      if (label == cfg.scenario.skew_class) minority.push_back(i);
    }
    if (!minority.empty()) subgroups["minority"] = minority;
  }

  const auto report =
      evaluate_attack(attacker, *target, eval_in, eval_out, split.train, subgroups);

  // artifacts
  json record;
  record["config_hash"] = hash;
  record["scenario_point"] = point.label;
  record["seed"] = seed;
  json params = json::object();
  if (point.skew_fraction) params["skew_fraction"] = *point.skew_fraction;
  if (skew && !point.skew_fraction) params["base_skew_fraction"] = *skew;
  if (point.noise_sigma) {
    params["noise_sigma"] = *point.noise_sigma;
    params["applied_to"] = point.noise_on_shadow ? "shadow_data" : "target_data";
  }
  if (point.shadow_kind) params["shadow_kind"] = to_string(*point.shadow_kind);
  if (point.attack_kind) params["attack_kind"] = to_string(*point.attack_kind);
  if (point.dp_sigma) params["dp_sigma"] = *point.dp_sigma;
  if (point.dp_epsilon_target) params["dp_epsilon_target"] = *point.dp_epsilon_target;
  if (point.depth) params["depth"] = *point.depth;
  record["params"] = params;

  record["target"] = {
      {"kind", to_string(target_spec.kind)},
      {"train_accuracy", target->train_accuracy()},
      {"test_accuracy", target->test_accuracy() ? json(*target->test_accuracy()) : json(nullptr)},
      {"accuracy_difference",
       target->test_accuracy() ? json(accuracy_difference(*target)) : json(nullptr)},
  };
  json attack_json;
  attack_json["method"] = cfg.attacker.method;
  attack_json["num_shadows"] = shadow_cfg.num_shadows;
  attack_json["shadow_kind"] = to_string(shadow_cfg.shadow_spec.kind);
  if (cfg.attacker.method == "threshold") {
    attack_json["tau"] = tau;
  } else {
    attack_json["attack_kind"] =
        to_string(point.attack_kind ? *point.attack_kind : cfg.attacker.attack_spec.kind);
    attack_json["mode"] = cfg.attacker.mode == AttackMode::PerClass ? "per_class" : "global";
    attack_json["records"] = records.size();
  }
  attack_json["setup_seconds"] =
      std::chrono::duration<double>(setup_t1 - setup_t0).count();
  record["attack"] = attack_json;
  record["vulnerability"] = report_json(report);
  if (dp_enabled) record["dp"] = dp_json;

  fs::create_directories(dir);
  if (cfg.scenario.export_attack_dataset && !records.empty()) {
    const auto p = dir / "attack_records.csv";
    write_attack_records_csv(records, p.string());
    manifest.note(p);
  }
  if (cfg.scenario.pca_plot && attack_model) {
    const auto basis = fit_pca(split.train, std::min<std::size_t>(2, split.train.cols));
    const auto c = basis.component_count;

    std::vector<double> proj = pca_project(split.train, basis);
    std::vector<std::string> tags(split.train.rows, "train");
    std::vector<int> labels = split.train.labels;

    const auto probe_proj = pca_project(pool, basis);
    for (std::size_t i = 0; i < pool.rows; ++i) {
      const auto call =
          infer_membership(*attack_model, *target, pool.row(i), pool.labels[i]);
      tags.push_back(call.label == 1 ? "predicted_in" : "predicted_out");
      labels.push_back(pool.labels[i]);
      for (std::size_t r = 0; r < c; ++r) proj.push_back(probe_proj[i * c + r]);
    }
    const auto p = dir / "pca_plot.csv";
    write_projection_csv(p.string(), proj, labels.size(), c, labels, tags);
    manifest.note(p);
  }

  write_text(manifest, dir / "report.json", record.dump(2) + "\n");
  return PointOutcome{std::move(record)};
}

std::string csv_escape_num(const json& v) {
  if (v.is_null()) return "";
  std::ostringstream ss;
  if (v.is_number_float())
    ss << v.get<double>();
  else
    ss << v;
  return ss.str();
}

void render_tables(const fs::path& root, const std::vector<json>& records,
                   Manifest* manifest) {
  std::ostringstream summary, per_class, subgroup;
  summary << "scenario_point,seed,attack_accuracy,precision,recall,f1,baseline,"
             "accuracy_difference,minority_accuracy,epsilon,utility_loss\n";
  per_class << "scenario_point,seed,class,support,accuracy,precision,recall,f1\n";
  subgroup << "scenario_point,seed,subgroup,support,accuracy,precision,recall,f1\n";

  for (const auto& r : records) {
    const auto& v = r.at("vulnerability");
    summary << r.at("scenario_point").get<std::string>() << ','
            << r.at("seed") << ',' << csv_escape_num(v.at("accuracy")) << ','
            << csv_escape_num(v.at("precision")) << ','
            << csv_escape_num(v.at("recall")) << ',' << csv_escape_num(v.at("f1"))
            << ',' << csv_escape_num(v.at("baseline")) << ','
            << csv_escape_num(v.at("target_accuracy_difference")) << ',';
    if (v.at("subgroup").contains("minority"))
      summary << csv_escape_num(v["subgroup"]["minority"]["accuracy"]);
    summary << ',';
    if (r.contains("dp")) summary << csv_escape_num(r["dp"]["epsilon"]);
    summary << ',';
    if (r.contains("dp"))
      summary << csv_escape_num(r["dp"]["utility"]["overall_accuracy_loss"]);
    summary << '\n';

    for (const auto& [cls, cm] : v.at("per_class").items()) {
      per_class << r.at("scenario_point").get<std::string>() << ',' << r.at("seed")
                << ',' << cls << ',' << cm.at("support") << ','
                << csv_escape_num(cm.at("accuracy")) << ','
                << csv_escape_num(cm.at("precision")) << ','
                << csv_escape_num(cm.at("recall")) << ','
                << csv_escape_num(cm.at("f1")) << '\n';
    }
    for (const auto& [name, cm] : v.at("subgroup").items()) {
      subgroup << r.at("scenario_point").get<std::string>() << ',' << r.at("seed")
               << ',' << name << ',' << cm.at("support") << ','
               << csv_escape_num(cm.at("accuracy")) << ','
               << csv_escape_num(cm.at("precision")) << ','
               << csv_escape_num(cm.at("recall")) << ','
               << csv_escape_num(cm.at("f1")) << '\n';
    }
  }

  const auto write = [&](const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
    if (manifest) manifest->note(p);
  };
  write(root / "summary.csv", summary.str());
  write(root / "per_class.csv", per_class.str());
  write(root / "subgroup.csv", subgroup.str());
}

}  // namespace

RunResult run_experiment(const json& config_json, const RunOverrides& overrides) {
  const auto problems = validate_config(config_json);
  if (!problems.empty()) {
    std::string msg = "invalid config:";
    for (const auto& pr : problems) msg += "\n  - " + pr;
    throw std::invalid_argument(msg);
  }
  ExperimentConfig cfg = parse_config(config_json);

  if (overrides.parallel) kernels::set_max_threads(*overrides.parallel);
  if (overrides.seed) {
    cfg.seeds = {*overrides.seed};
  } else if (const char* env = std::getenv("MPA_SEED")) {
    cfg.seeds = {std::strtoull(env, nullptr, 10)};
  }
  if (overrides.output_dir) {
    cfg.output_dir = *overrides.output_dir;
  } else if (const char* env = std::getenv("MPA_OUT")) {
    cfg.output_dir = env;
  }

  const fs::path root(cfg.output_dir);
  fs::create_directories(root);
  Manifest manifest{root, {}};
  const std::string hash = config_hash(config_json);

  RunResult result;
  std::vector<json> records;
  for (const auto& point : scenario_points(cfg)) {
    for (const auto seed : cfg.seeds) {
      const fs::path dir = root / point.label / ("seed_" + std::to_string(seed));
      ++result.points_run;
      try {
        auto outcome = run_point(cfg, point, seed, dir, manifest, hash);
        records.push_back(std::move(outcome.record));
      } catch (const std::exception& e) {
        ++result.points_failed;
        result.errors.push_back(point.label + "/seed_" + std::to_string(seed) +
                                ": " + e.what());
        fs::create_directories(dir);
        json err{{"scenario_point", point.label},
                 {"seed", seed},
                 {"error", e.what()},
                 {"config_hash", hash}};
        write_text(manifest, dir / "error.json", err.dump(2) + "\n");
      }
    }
  }

  render_tables(root, records, &manifest);

  json manifest_json;
  manifest_json["config_hash"] = hash;
  std::sort(manifest.files.begin(), manifest.files.end());
  manifest_json["artifacts"] = manifest.files;
  manifest_json["points_run"] = result.points_run;
  manifest_json["points_failed"] = result.points_failed;
  const auto manifest_path = root / "manifest.json";
  {
    std::ofstream out(manifest_path);
    out << manifest_json.dump(2) << "\n";
  }
  result.manifest_path = manifest_path.string();
  return result;
}

void render_report_tables(const std::string& dir) {
  const fs::path root(dir);
  std::vector<fs::path> paths;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file() && entry.path().filename() == "report.json")
      paths.push_back(entry.path());
  }
  std::sort(paths.begin(), paths.end());
  std::vector<json> records;
  for (const auto& p : paths) {
    std::ifstream in(p);
    json r;
    in >> r;
    records.push_back(std::move(r));
  }
  render_tables(root, records, nullptr);
}

}  // namespace mpa
