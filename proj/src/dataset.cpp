#include "mpa/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "mpa/rng.hpp"

namespace mpa {

namespace {

[[noreturn]] void fail(const std::string& msg) {
  throw std::invalid_argument(msg);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

bool parse_double(const std::string& s, double& out) {
  try {
    std::size_t pos = 0;
    out = std::stod(s, &pos);
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    return pos == s.size();
  } catch (...) {
    return false;
  }
}

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

}  // namespace

std::size_t Dataset::class_count(int c) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), c));
}

void Dataset::validate() const {
  if (rows < 1 || cols < 1) fail("dataset must have at least one row and one column");
  if (num_classes < 2) fail("degenerate label set: need at least 2 classes");
  if (features.size() != rows * cols) fail("feature buffer size mismatch");
  if (labels.size() != rows) fail("label count mismatch");
  for (std::size_t i = 0; i < rows; ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes)
      fail("label out of range at row " + std::to_string(i));
  }
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (!(features[i] >= 0.0 && features[i] <= 1.0))
      fail("feature value outside [0,1] at flat index " + std::to_string(i));
  }
  if (!feature_names.empty() && feature_names.size() != cols)
    fail("feature_names length mismatch");
  if (!class_names.empty() &&
      class_names.size() != static_cast<std::size_t>(num_classes))
    fail("class_names length mismatch");
}

Dataset normalize_min_max(Dataset ds) {
  for (std::size_t j = 0; j < ds.cols; ++j) {
    double lo = ds.features[j], hi = ds.features[j];
    for (std::size_t i = 1; i < ds.rows; ++i) {
      lo = std::min(lo, ds.features[i * ds.cols + j]);
      hi = std::max(hi, ds.features[i * ds.cols + j]);
    }
    const double range = hi - lo;
    for (std::size_t i = 0; i < ds.rows; ++i) {
      double& v = ds.features[i * ds.cols + j];
      v = range > 0.0 ? (v - lo) / range : 0.0;
    }
  }
  return ds;
}

Dataset load_csv(const std::string& path, const LabelColumn& label_column,
                 bool normalize) {
  std::ifstream in(path);
  if (!in) fail("cannot open csv file: " + path);

  std::vector<std::vector<std::string>> raw;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    raw.push_back(split_line(line));
  }
  if (raw.empty()) fail("empty csv file: " + path);

  const std::size_t ncols = raw[0].size();
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i].size() != ncols)
      fail("row " + std::to_string(i + 1) + " has " +
           std::to_string(raw[i].size()) + " columns, expected " +
           std::to_string(ncols));
  }

  // First row is a header when any cell fails to parse as a number.
  bool has_header = false;
  for (const auto& cell : raw[0]) {
    double tmp;
    if (!parse_double(trim(cell), tmp)) {
      has_header = true;
      break;
    }
  }

  std::vector<std::string> header;
  if (has_header) {
    for (const auto& cell : raw[0]) header.push_back(trim(cell));
  }

  std::size_t label_idx = 0;
  if (std::holds_alternative<int>(label_column)) {
    const int idx = std::get<int>(label_column);
    if (idx < 0 || static_cast<std::size_t>(idx) >= ncols)
      fail("label column index out of range: " + std::to_string(idx));
    label_idx = static_cast<std::size_t>(idx);
  } else {
    const std::string& name = std::get<std::string>(label_column);
    if (!has_header) fail("label column by name requires a header row");
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) fail("label column not found: " + name);
    label_idx = static_cast<std::size_t>(it - header.begin());
  }

  Dataset ds;
  ds.cols = ncols - 1;
  if (ds.cols == 0) fail("csv has no feature columns");

  std::map<std::string, int> label_map;
  std::vector<std::string> class_names;

  const std::size_t first_data = has_header ? 1 : 0;
  for (std::size_t r = first_data; r < raw.size(); ++r) {
    const auto& cells = raw[r];
    std::size_t out_col = 0;
    for (std::size_t c = 0; c < ncols; ++c) {
      const std::string cell = trim(cells[c]);
      if (c == label_idx) {
        auto [it, inserted] =
            label_map.try_emplace(cell, static_cast<int>(class_names.size()));
        if (inserted) class_names.push_back(cell);
        ds.labels.push_back(it->second);
      } else {
        double v;
        if (!parse_double(cell, v))
          fail("non-numeric feature at row " + std::to_string(r + 1) +
               ", column " + std::to_string(c + 1) + ": '" + cell + "'");
        ds.features.push_back(v);
        ++out_col;
      }
    }
    (void)out_col;
  }

  ds.rows = ds.labels.size();
  if (ds.rows == 0) fail("csv has no data rows");
  ds.num_classes = static_cast<int>(class_names.size());
  if (ds.num_classes < 2) fail("degenerate label set: need at least 2 classes");
  ds.class_names = std::move(class_names);
  if (has_header) {
    for (std::size_t c = 0; c < ncols; ++c) {
      if (c != label_idx) ds.feature_names.push_back(header[c]);
    }
  }

  if (normalize) ds = normalize_min_max(std::move(ds));
  return ds;
}

void write_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail("cannot write csv file: " + path);
  out.precision(17);
  for (std::size_t j = 0; j < ds.cols; ++j) {
    out << (ds.feature_names.empty() ? "f" + std::to_string(j)
                                     : ds.feature_names[j])
        << ',';
  }
  out << "label\n";
  for (std::size_t i = 0; i < ds.rows; ++i) {
    for (std::size_t j = 0; j < ds.cols; ++j) out << ds.features[i * ds.cols + j] << ',';
    if (!ds.class_names.empty()) {
      out << ds.class_names[static_cast<std::size_t>(ds.labels[i])];
    } else {
      out << ds.labels[i];
    }
    out << '\n';
  }
}

Dataset synth_blobs(int k, int per_class, int m, double spread,
                    std::uint64_t seed) {
  if (k < 2) fail("synth_blobs: k must be >= 2");
  if (per_class < 1) fail("synth_blobs: per_class must be >= 1");
  if (m < 1) fail("synth_blobs: m must be >= 1");
  if (!(spread >= 0.0)) fail("synth_blobs: spread must be >= 0");

  auto rng = make_rng(derive_seed(seed, 0xb10b5));
  std::uniform_real_distribution<double> center_dist(0.15, 0.85);

  // distinct cluster centers; resample until pairwise separated
  std::vector<std::vector<double>> centers;
  const double min_sep = 0.1;
  while (static_cast<int>(centers.size()) < k) {
    std::vector<double> c(static_cast<std::size_t>(m));
    for (auto& v : c) v = center_dist(rng);
    bool ok = true;
    for (const auto& other : centers) {
      double d2 = 0;
      for (int j = 0; j < m; ++j) {
        const double d = c[static_cast<std::size_t>(j)] - other[static_cast<std::size_t>(j)];
        d2 += d * d;
      }
      if (std::sqrt(d2) < min_sep) {
        ok = false;
        break;
      }
    }
    if (ok) centers.push_back(std::move(c));
  }

  Dataset ds;
  ds.rows = static_cast<std::size_t>(k) * static_cast<std::size_t>(per_class);
  ds.cols = static_cast<std::size_t>(m);
  ds.num_classes = k;
  ds.features.reserve(ds.rows * ds.cols);
  ds.labels.reserve(ds.rows);

  std::normal_distribution<double> noise(0.0, 1.0);
  for (int c = 0; c < k; ++c) {
    for (int i = 0; i < per_class; ++i) {
      for (int j = 0; j < m; ++j) {
        double v = centers[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)];
        if (spread > 0.0) v += spread * noise(rng);
        ds.features.push_back(std::clamp(v, 0.0, 1.0));
      }
      ds.labels.push_back(c);
    }
  }
  return ds;
}

Dataset synth_purchases(int k, int per_class, int m, double flip_prob,
                        std::uint64_t seed) {
  if (k < 2) fail("synth_purchases: k must be >= 2");
  if (per_class < 1) fail("synth_purchases: per_class must be >= 1");
  if (m < 1) fail("synth_purchases: m must be >= 1");
  if (!(flip_prob >= 0.0 && flip_prob < 0.5))
    fail("synth_purchases: flip_prob must be in [0, 0.5)");

  auto rng = make_rng(derive_seed(seed, 0x9c4a5e));
  std::bernoulli_distribution bit(0.5);

  std::vector<std::vector<char>> prototypes;
  while (static_cast<int>(prototypes.size()) < k) {
    std::vector<char> p(static_cast<std::size_t>(m));
    for (auto& b : p) b = bit(rng) ? 1 : 0;
    if (std::find(prototypes.begin(), prototypes.end(), p) == prototypes.end())
      prototypes.push_back(std::move(p));
  }

  Dataset ds;
  ds.rows = static_cast<std::size_t>(k) * static_cast<std::size_t>(per_class);
  ds.cols = static_cast<std::size_t>(m);
  ds.num_classes = k;
  ds.features.reserve(ds.rows * ds.cols);
  ds.labels.reserve(ds.rows);

  std::bernoulli_distribution flip(flip_prob);
  for (int c = 0; c < k; ++c) {
    for (int i = 0; i < per_class; ++i) {
      for (int j = 0; j < m; ++j) {
        char b = prototypes[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)];
        if (flip_prob > 0.0 && flip(rng)) b = b ? 0 : 1;
        ds.features.push_back(static_cast<double>(b));
      }
      ds.labels.push_back(c);
    }
  }
  return ds;
}

Dataset inject_noise(const Dataset& ds, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0 && sigma <= 1.0))
    fail("inject_noise: sigma must be in [0,1]");
  Dataset out = ds;
  if (sigma == 0.0) return out;
  auto rng = make_rng(derive_seed(seed, 0x401535));
  std::uniform_real_distribution<double> u(0.0, sigma);
  for (auto& v : out.features) v = std::min(1.0, v + u(rng));
  return out;
}

Dataset apply_skew(const Dataset& ds, const SkewConfig& cfg) {
  if (cfg.target_class < 0 || cfg.target_class >= ds.num_classes)
    fail("apply_skew: target class does not exist");
  if (!(cfg.target_fraction > 0.0 && cfg.target_fraction <= 1.0))
    fail("apply_skew: target_fraction must be in (0,1]");

  std::vector<std::size_t> target_idx, other_idx;
  for (std::size_t i = 0; i < ds.rows; ++i) {
    (ds.labels[i] == cfg.target_class ? target_idx : other_idx).push_back(i);
  }
  const double rest = static_cast<double>(other_idx.size());
  const auto keep = static_cast<std::size_t>(
      std::floor(cfg.target_fraction * rest / (1.0 - cfg.target_fraction)));
  if (keep < 1 || keep > target_idx.size())
    fail("apply_skew: unachievable fraction (would keep " +
         std::to_string(keep) + " of " + std::to_string(target_idx.size()) +
         " target instances)");

  auto rng = make_rng(derive_seed(cfg.seed, 0x5ce3));
  std::shuffle(target_idx.begin(), target_idx.end(), rng);
  target_idx.resize(keep);

  std::vector<std::size_t> all = other_idx;
  all.insert(all.end(), target_idx.begin(), target_idx.end());
  std::shuffle(all.begin(), all.end(), rng);
  return subset(ds, all);
}

SplitResult split_in_out(const Dataset& ds, const SplitPlan& plan) {
  if (!(plan.target_train_fraction > 0.0 && plan.target_train_fraction < 1.0))
    fail("split_in_out: target_train_fraction must be in (0,1)");
  if (plan.eval_in_count != plan.eval_out_count)
    fail("split_in_out: eval_in_count must equal eval_out_count");

  std::vector<std::size_t> idx(ds.rows);
  std::iota(idx.begin(), idx.end(), 0);
  auto rng = make_rng(derive_seed(plan.seed, 0x5b117));
  std::shuffle(idx.begin(), idx.end(), rng);

  const auto train_n = static_cast<std::size_t>(
      std::floor(plan.target_train_fraction * static_cast<double>(ds.rows)));
  if (train_n < 1 || train_n >= ds.rows)
    fail("split_in_out: train fraction leaves an empty partition");

  SplitResult res;
  res.train_indices.assign(idx.begin(), idx.begin() + static_cast<long>(train_n));
  std::vector<std::size_t> rest(idx.begin() + static_cast<long>(train_n), idx.end());

  if (plan.eval_in_count > train_n)
    fail("split_in_out: eval_in_count exceeds training set size");
  if (plan.eval_out_count > rest.size())
    fail("split_in_out: eval_out_count exceeds held-out pool size");

  std::vector<std::size_t> train_shuffled = res.train_indices;
  std::shuffle(train_shuffled.begin(), train_shuffled.end(), rng);
  res.eval_in_indices.assign(train_shuffled.begin(),
                             train_shuffled.begin() + static_cast<long>(plan.eval_in_count));
  res.eval_out_indices.assign(rest.begin(),
                              rest.begin() + static_cast<long>(plan.eval_out_count));
  res.holdout_indices.assign(rest.begin() + static_cast<long>(plan.eval_out_count),
                             rest.end());

  res.train = subset(ds, res.train_indices);
  res.eval_in = subset(ds, res.eval_in_indices);
  res.eval_out = subset(ds, res.eval_out_indices);
  if (!res.holdout_indices.empty()) res.holdout = subset(ds, res.holdout_indices);
  return res;
}

Dataset subset(const Dataset& ds, std::span<const std::size_t> indices) {
  Dataset out;
  out.rows = indices.size();
  out.cols = ds.cols;
  out.num_classes = ds.num_classes;
  out.feature_names = ds.feature_names;
  out.class_names = ds.class_names;
  out.features.reserve(out.rows * out.cols);
  out.labels.reserve(out.rows);
  for (const std::size_t i : indices) {
    if (i >= ds.rows) fail("subset: index out of range");
    const auto r = ds.row(i);
    out.features.insert(out.features.end(), r.begin(), r.end());
    out.labels.push_back(ds.labels[i]);
  }
  return out;
}

}  // namespace mpa
