// Times the serial reference kernels against their OpenMP versions and
// checks that both produce identical output.
#include <chrono>
#include <cstdio>
#include <random>
#include <vector>

#include "mpa/dataset.hpp"
#include "mpa/dp.hpp"
#include "mpa/kernels.hpp"
#include "mpa/models.hpp"

namespace {

using clock_type = std::chrono::steady_clock;

template <typename F>
double time_ms(F&& fn, int reps = 3) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = clock_type::now();
    fn();
    const auto t1 = clock_type::now();
    best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

std::vector<double> random_matrix(std::size_t n, std::size_t m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x(n * m);
  for (auto& v : x) v = u(rng);
  return x;
}

void row(const char* name, double serial_ms, double parallel_ms, bool equal) {
  std::printf("%-28s %10.2f ms %10.2f ms %8.2fx   %s\n", name, serial_ms,
              parallel_ms, serial_ms / parallel_ms, equal ? "match" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  int threads = 0;
  if (argc > 1) threads = std::atoi(argv[1]);
  if (threads > 0) mpa::kernels::set_max_threads(threads);
  std::printf("threads: %d\n", mpa::kernels::max_threads());
  std::printf("%-28s %13s %13s %9s\n", "kernel", "serial", "parallel", "speedup");

  {
    const std::size_t nq = 2000, nr = 4000, m = 32;
    const auto q = random_matrix(nq, m, 1);
    const auto r = random_matrix(nr, m, 2);
    std::vector<double> a, b;
    const double ts = time_ms([&] {
      a = mpa::kernels::min_distances_serial(q.data(), nq, r.data(), nr, m);
    });
    const double tp = time_ms([&] {
      b = mpa::kernels::min_distances_parallel(q.data(), nq, r.data(), nr, m);
    });
    row("min_distances", ts, tp, a == b);
  }

  {
    const std::size_t nq = 1000, nr = 4000, m = 32, k = 8;
    const auto q = random_matrix(nq, m, 3);
    const auto r = random_matrix(nr, m, 4);
    std::vector<std::size_t> a, b;
    const double ts = time_ms([&] {
      a = mpa::kernels::knn_indices_serial(q.data(), nq, r.data(), nr, m, k);
    });
    const double tp = time_ms([&] {
      b = mpa::kernels::knn_indices_parallel(q.data(), nq, r.data(), nr, m, k);
    });
    row("knn_indices", ts, tp, a == b);
  }

  {
    const std::size_t n = 4000, m = 96;
    const auto x = random_matrix(n, m, 5);
    std::vector<double> a, b;
    const double ts =
        time_ms([&] { a = mpa::kernels::covariance_serial(x.data(), n, m); });
    const double tp =
        time_ms([&] { b = mpa::kernels::covariance_parallel(x.data(), n, m); });
    row("covariance", ts, tp, a == b);
  }

  {
    // per-example gradient batches, the dp-sgd inner loop
    const auto data = mpa::synth_blobs(4, 500, 24, 0.2, 7);
    mpa::ModelSpec spec;
    spec.kind = mpa::ModelKind::Mlp;
    spec.hidden = {48};
    spec.seed = 11;
    auto model = mpa::make_mlp(spec, data.num_classes, static_cast<int>(data.cols));
    auto* net = dynamic_cast<mpa::GradientNet*>(model.get());
    const std::size_t dim = net->param_count();
    std::vector<std::vector<double>> grads(data.rows, std::vector<double>(dim));

    const double ts = time_ms([&] {
      mpa::kernels::serial_for(data.rows, [&](std::size_t i) {
        net->example_gradient(data.row(i), data.labels[i], grads[i]);
      });
    });
    auto reference = grads;
    const double tp = time_ms([&] {
      mpa::kernels::parallel_for(data.rows, [&](std::size_t i) {
        net->example_gradient(data.row(i), data.labels[i], grads[i]);
      });
    });
    row("per_example_gradients", ts, tp, grads == reference);
  }

  return 0;
}
