#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <set>

#include "mpa/dataset.hpp"
#include "mpa/models.hpp"

using namespace mpa;

namespace {

struct TempCsv {
  std::string path;
  explicit TempCsv(const std::string& content) {
    static int counter = 0;
    path = "tmp_dataset_test_" + std::to_string(counter++) + ".csv";
    std::ofstream out(path);
    out << content;
  }
  ~TempCsv() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("load_csv maps labels in first-appearance order") {
  TempCsv file("x1,x2,label\n0.1,0.2,A\n0.3,0.4,B\n0.5,0.6,A\n");
  const auto ds = load_csv(file.path, std::string("label"), false);
  CHECK(ds.rows == 3);
  CHECK(ds.cols == 2);
  CHECK(ds.num_classes == 2);
  CHECK(ds.labels == std::vector<int>{0, 1, 0});
  CHECK(ds.class_names == std::vector<std::string>{"A", "B"});
  CHECK(ds.feature_names == std::vector<std::string>{"x1", "x2"});
}

TEST_CASE("load_csv min-max normalization") {
  TempCsv file("f,c,label\n2,5,A\n4,5,B\n6,5,A\n");
  const auto ds = load_csv(file.path, 2, true);
  CHECK(ds.features[0] == doctest::Approx(0.0));
  CHECK(ds.features[2] == doctest::Approx(0.5));
  CHECK(ds.features[4] == doctest::Approx(1.0));
  // constant column maps to 0, not NaN
  CHECK(ds.features[1] == 0.0);
  CHECK(ds.features[3] == 0.0);
  CHECK(ds.features[5] == 0.0);
}

TEST_CASE("load_csv error paths name the offending cell") {
  TempCsv bad_cell("a,b,label\n1,oops,A\n2,3,B\n");
  CHECK_THROWS_WITH_AS(load_csv(bad_cell.path, std::string("label"), false),
                       doctest::Contains("row 2"), std::invalid_argument);

  TempCsv one_class("a,label\n1,A\n2,A\n");
  CHECK_THROWS_WITH_AS(load_csv(one_class.path, std::string("label"), false),
                       doctest::Contains("degenerate label set"),
                       std::invalid_argument);

  TempCsv ragged("a,b,label\n1,2,A\n1,B\n");
  CHECK_THROWS_AS(load_csv(ragged.path, std::string("label"), false),
                  std::invalid_argument);

  TempCsv fine("a,b,label\n1,2,A\n3,4,B\n");
  CHECK_THROWS_WITH_AS(load_csv(fine.path, std::string("missing"), false),
                       doctest::Contains("missing"), std::invalid_argument);
}

TEST_CASE("load_csv by index without header") {
  TempCsv file("0.5,0.25,0\n1.0,0.75,1\n0.0,0.5,0\n");
  const auto ds = load_csv(file.path, 2, false);
  CHECK(ds.rows == 3);
  CHECK(ds.num_classes == 2);
  CHECK(ds.labels == std::vector<int>{0, 1, 0});
}

TEST_CASE("csv round trip") {
  const auto ds = synth_blobs(3, 20, 4, 0.1, 42);
  TempCsv file("");
  write_csv(ds, file.path);
  const auto loaded = load_csv(file.path, std::string("label"), false);
  CHECK(loaded.rows == ds.rows);
  CHECK(loaded.cols == ds.cols);
  CHECK(loaded.num_classes == ds.num_classes);
  CHECK(loaded.labels == ds.labels);
  for (std::size_t i = 0; i < ds.features.size(); ++i)
    CHECK(loaded.features[i] == doctest::Approx(ds.features[i]).epsilon(1e-12));
}

TEST_CASE("normalization is idempotent") {
  auto ds = synth_blobs(2, 50, 6, 0.3, 7);
  const auto once = normalize_min_max(ds);
  const auto twice = normalize_min_max(once);
  CHECK(once.features == twice.features);
}

TEST_CASE("synth_blobs zero spread collapses to centers") {
  const auto ds = synth_blobs(3, 10, 5, 0.0, 9);
  ds.validate();
  for (int c = 0; c < 3; ++c) {
    const auto first = ds.row(static_cast<std::size_t>(c) * 10);
    for (int i = 1; i < 10; ++i) {
      const auto other = ds.row(static_cast<std::size_t>(c) * 10 + static_cast<std::size_t>(i));
      for (std::size_t j = 0; j < ds.cols; ++j) CHECK(first[j] == other[j]);
    }
  }
}

TEST_CASE("synth_blobs is deterministic per seed") {
  const auto a = synth_blobs(4, 25, 8, 0.2, 123);
  const auto b = synth_blobs(4, 25, 8, 0.2, 123);
  const auto c = synth_blobs(4, 25, 8, 0.2, 124);
  CHECK(a.features == b.features);
  CHECK(a.labels == b.labels);
  CHECK(a.features != c.features);
}

TEST_CASE("small-spread blobs are separable by a depth-1 tree") {
  const auto ds = synth_blobs(2, 100, 3, 0.01, 5);
  ModelSpec spec;
  spec.kind = ModelKind::DecisionTree;
  spec.max_depth = 1;
  const auto model = train(spec, ds, Dataset{});
  CHECK(model->train_accuracy() == doctest::Approx(1.0));
}

TEST_CASE("synth_purchases prototypes") {
  const auto clean = synth_purchases(4, 12, 16, 0.0, 3);
  clean.validate();
  for (const double v : clean.features) CHECK((v == 0.0 || v == 1.0));
  // flip_prob 0: every instance equals its class prototype
  std::set<std::vector<double>> prototypes;
  for (int c = 0; c < 4; ++c) {
    const auto first = clean.row(static_cast<std::size_t>(c) * 12);
    prototypes.insert(std::vector<double>(first.begin(), first.end()));
    for (int i = 1; i < 12; ++i) {
      const auto other = clean.row(static_cast<std::size_t>(c) * 12 + static_cast<std::size_t>(i));
      CHECK(std::equal(first.begin(), first.end(), other.begin()));
    }
  }
  CHECK(prototypes.size() == 4);  // distinct prototypes
}

TEST_CASE("synth_purchases mean hamming distance matches flip_prob") {
  const int m = 40, per_class = 400;
  const double flip = 0.15;
  const auto noisy = synth_purchases(2, per_class, m, flip, 11);
  const auto clean = synth_purchases(2, per_class, m, 0.0, 11);
  // same seed: prototypes match, so distance to the clean rows is the flip count
  double total = 0;
  for (std::size_t i = 0; i < noisy.rows; ++i) {
    for (std::size_t j = 0; j < noisy.cols; ++j)
      total += std::abs(noisy.features[i * noisy.cols + j] -
                        clean.features[i * clean.cols + j]);
  }
  const double mean_hamming = total / static_cast<double>(noisy.rows);
  const double expected = m * flip;
  const double se = std::sqrt(m * flip * (1 - flip) /
                              static_cast<double>(noisy.rows));
  CHECK(std::abs(mean_hamming - expected) < 3 * se);
}

TEST_CASE("inject_noise sigma=0 is the identity") {
  const auto ds = synth_blobs(2, 30, 4, 0.2, 21);
  const auto out = inject_noise(ds, 0.0, 99);
  CHECK(out.features == ds.features);
  CHECK(out.labels == ds.labels);
}

TEST_CASE("inject_noise stays within [x, min(1, x+sigma)]") {
  const auto ds = synth_blobs(2, 50, 6, 0.3, 22);
  const double sigma = 0.4;
  const auto out = inject_noise(ds, sigma, 7);
  for (std::size_t i = 0; i < ds.features.size(); ++i) {
    CHECK(out.features[i] >= ds.features[i]);
    CHECK(out.features[i] <= std::min(1.0, ds.features[i] + sigma) + 1e-15);
    CHECK(out.features[i] <= 1.0);
  }
  CHECK_THROWS_AS(inject_noise(ds, 1.5, 0), std::invalid_argument);
  CHECK_THROWS_AS(inject_noise(ds, -0.1, 0), std::invalid_argument);
}

TEST_CASE("inject_noise mean shift on a zeros column") {
  Dataset ds;
  ds.rows = 10000;
  ds.cols = 1;
  ds.num_classes = 2;
  ds.features.assign(ds.rows, 0.0);
  ds.labels.assign(ds.rows, 0);
  for (std::size_t i = 0; i < ds.rows / 2; ++i) ds.labels[i] = 1;
  const auto out = inject_noise(ds, 1.0, 31);
  double mean = 0;
  for (const double v : out.features) mean += v;
  mean /= static_cast<double>(out.features.size());
  CHECK(mean == doctest::Approx(0.5).epsilon(0.04));  // tolerance 0.02 absolute
  CHECK(std::abs(mean - 0.5) < 0.02);
}

TEST_CASE("apply_skew balanced identity and hand-checked counts") {
  const auto ds = synth_blobs(10, 100, 4, 0.2, 17);

  // f = 0.10 on balanced data keeps all 100 (R=900)
  const auto same = apply_skew(ds, SkewConfig{3, 0.10, 5});
  CHECK(same.class_count(3) == 100);
  CHECK(same.rows == 1000);

  // floor(0.02 * 900 / 0.98) = 18
  const auto skewed = apply_skew(ds, SkewConfig{3, 0.02, 5});
  CHECK(skewed.class_count(3) == 18);
  // floor(0.01 * 900 / 0.99) = 9
  const auto skewed2 = apply_skew(ds, SkewConfig{3, 0.01, 5});
  CHECK(skewed2.class_count(3) == 9);
}

TEST_CASE("apply_skew leaves other classes untouched and hits the fraction") {
  const auto ds = synth_blobs(5, 80, 3, 0.25, 41);
  const double f = 0.05;
  const auto skewed = apply_skew(ds, SkewConfig{2, f, 77});

  // other-class instances survive as an exact multiset
  std::multiset<std::vector<double>> before, after;
  for (std::size_t i = 0; i < ds.rows; ++i)
    if (ds.labels[i] != 2)
      before.emplace(ds.row(i).begin(), ds.row(i).end());
  for (std::size_t i = 0; i < skewed.rows; ++i)
    if (skewed.labels[i] != 2)
      after.emplace(skewed.row(i).begin(), skewed.row(i).end());
  CHECK(before == after);

  const double achieved = static_cast<double>(skewed.class_count(2)) /
                          static_cast<double>(skewed.rows);
  const double one_instance = 1.0 / static_cast<double>(skewed.rows);
  CHECK(std::abs(achieved - f) <= one_instance + 1e-12);

  CHECK_THROWS_WITH_AS(apply_skew(ds, SkewConfig{2, 0.9, 1}),
                       doctest::Contains("unachievable"), std::invalid_argument);
}

TEST_CASE("split_in_out sizes and contracts") {
  const auto ds = synth_blobs(2, 500, 4, 0.2, 10);
  SplitPlan plan;
  plan.seed = 3;
  plan.target_train_fraction = 0.5;
  plan.eval_in_count = 100;
  plan.eval_out_count = 100;
  const auto split = split_in_out(ds, plan);
  CHECK(split.train.rows == 500);
  CHECK(split.eval_in.rows == 100);
  CHECK(split.eval_out.rows == 100);
  CHECK(split.holdout.rows == 400);

  const std::set<std::size_t> train_set(split.train_indices.begin(),
                                        split.train_indices.end());
  for (const auto i : split.eval_in_indices) CHECK(train_set.count(i) == 1);
  for (const auto i : split.eval_out_indices) CHECK(train_set.count(i) == 0);
  for (const auto i : split.holdout_indices) CHECK(train_set.count(i) == 0);

  std::set<std::size_t> out_set(split.eval_out_indices.begin(),
                                split.eval_out_indices.end());
  for (const auto i : split.eval_in_indices) CHECK(out_set.count(i) == 0);
  for (const auto i : split.holdout_indices) CHECK(out_set.count(i) == 0);

  // reproducible per seed
  const auto again = split_in_out(ds, plan);
  CHECK(again.train_indices == split.train_indices);
  CHECK(again.eval_in_indices == split.eval_in_indices);
  CHECK(again.eval_out_indices == split.eval_out_indices);

  plan.eval_in_count = 600;
  plan.eval_out_count = 600;
  CHECK_THROWS_AS(split_in_out(ds, plan), std::invalid_argument);
  plan.eval_in_count = 100;
  plan.eval_out_count = 99;
  CHECK_THROWS_AS(split_in_out(ds, plan), std::invalid_argument);
}

TEST_CASE("dataset validate rejects broken invariants") {
  auto ds = synth_blobs(2, 10, 3, 0.1, 1);
  ds.labels[0] = 7;
  CHECK_THROWS_AS(ds.validate(), std::invalid_argument);
  ds = synth_blobs(2, 10, 3, 0.1, 1);
  ds.features[0] = 1.5;
  CHECK_THROWS_AS(ds.validate(), std::invalid_argument);
}
