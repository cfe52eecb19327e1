#include "mpa/dp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "mpa/kernels.hpp"
#include "mpa/rng.hpp"

namespace mpa {

double schedule_sigma(const NoiseSchedule& s, int epoch_index) {
  const double i = static_cast<double>(epoch_index);
  double sigma = s.sigma0;
  switch (s.kind) {
    case ScheduleKind::Fixed:
      break;
    case ScheduleKind::LinearDecay: {
      const int horizon = std::max(1, s.epochs - 1);
      sigma = s.sigma0 + (s.sigma_end - s.sigma0) * i / static_cast<double>(horizon);
      break;
    }
    case ScheduleKind::ExpDecay:
      sigma = s.sigma0 * std::exp(-s.rate * i);
      break;
    case ScheduleKind::StepDecay:
      sigma = s.sigma0 * std::pow(s.step_factor,
                                  std::floor(i / std::max(1, s.step_period)));
      break;
    case ScheduleKind::InverseTimeDecay:
      sigma = s.sigma0 / (1.0 + s.rate * i);
      break;
  }
  return sigma;
}

std::vector<double> clip_gradient(std::span<const double> g, double C) {
  if (!(C > 0.0)) throw std::invalid_argument("clip_gradient: C must be positive");
  double sq = 0.0;
  for (const double v : g) {
    if (!std::isfinite(v))
      throw std::invalid_argument("clip_gradient: non-finite gradient entry");
    sq += v * v;
  }
  std::vector<double> out(g.begin(), g.end());
  const double scale = std::max(1.0, std::sqrt(sq) / C);
  if (scale > 1.0)
    for (auto& v : out) v /= scale;
  return out;
}

std::vector<double> noisy_batch_update(
    const std::vector<std::vector<double>>& grads, double C, double sigma,
    int L, std::mt19937_64& rng) {
  if (L < 1) throw std::invalid_argument("noisy_batch_update: L must be >= 1");
  if (sigma < 0.0) throw std::invalid_argument("noisy_batch_update: sigma < 0");
  if (grads.empty() && sigma == 0.0)
    throw std::invalid_argument("noisy_batch_update: empty batch without noise");
  if (static_cast<int>(grads.size()) > L)
    throw std::invalid_argument("noisy_batch_update: batch larger than L");

  const std::size_t dim = grads.empty() ? 0 : grads[0].size();
  std::vector<double> sum(dim, 0.0);
  for (const auto& g : grads) {
    const auto clipped = clip_gradient(g, C);
    for (std::size_t j = 0; j < dim; ++j) sum[j] += clipped[j];
  }
  if (sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, sigma * C);
    for (auto& v : sum) v += noise(rng);
  }
  for (auto& v : sum) v /= static_cast<double>(L);
  return sum;
}

namespace {

void check_finite(const std::vector<double>& params, int epoch) {
  for (const double p : params) {
    if (!std::isfinite(p))
      throw std::runtime_error("training diverged at epoch " +
                               std::to_string(epoch));
  }
}

}  // namespace

void run_sgd(GradientNet& net, const Dataset& data, const SgdOptions& opt) {
  const auto n = data.rows;
  if (n == 0) throw std::invalid_argument("run_sgd: empty training set");
  const int L = std::max(1, std::min<int>(opt.batch_size, static_cast<int>(n)));
  const auto steps_per_epoch =
      static_cast<std::size_t>((n + static_cast<std::size_t>(L) - 1) /
                               static_cast<std::size_t>(L));
  const double q = static_cast<double>(L) / static_cast<double>(n);

  auto shuffle_rng = make_rng(derive_seed(opt.seed, 0x5d9d1));
  auto noise_rng = make_rng(derive_seed(opt.seed, 0x9015e));

  const std::size_t dim = net.param_count();
  std::vector<std::vector<double>> grads;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  long step_counter = 0;
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    const double sigma = schedule_sigma(opt.noise, epoch);
    if (sigma < 0.0) throw std::runtime_error("run_sgd: negative sigma from schedule");

    if (opt.sampling == SamplingMode::Shuffle)
      std::shuffle(order.begin(), order.end(), shuffle_rng);

    for (std::size_t step = 0; step < steps_per_epoch; ++step) {
      std::vector<std::size_t> batch;
      if (opt.sampling == SamplingMode::Shuffle) {
        const std::size_t lo = step * static_cast<std::size_t>(L);
        const std::size_t hi = std::min(n, lo + static_cast<std::size_t>(L));
        batch.assign(order.begin() + static_cast<long>(lo),
                     order.begin() + static_cast<long>(hi));
      } else {
        std::bernoulli_distribution pick(q);
        for (std::size_t i = 0; i < n; ++i)
          if (pick(shuffle_rng)) batch.push_back(i);
      }

      grads.assign(batch.size(), std::vector<double>(dim, 0.0));
      kernels::parallel_for(batch.size(), [&](std::size_t b) {
        net.example_gradient(data.row(batch[b]), data.labels[batch[b]],
                             grads[b]);
      });

      std::vector<double> update;
      if (std::isinf(opt.clip_norm)) {
        // unclipped path: plain mean over L, no noise draw when sigma = 0
        update.assign(dim, 0.0);
        for (const auto& g : grads)
          for (std::size_t j = 0; j < dim; ++j) update[j] += g[j];
        if (sigma > 0.0)
          throw std::runtime_error(
              "run_sgd: noise requires a finite clip norm (sensitivity bound)");
        for (auto& v : update) v /= static_cast<double>(L);
      } else if (batch.empty()) {
        // possible under poisson sampling; the step is noise-only
        update.assign(dim, 0.0);
        if (sigma > 0.0) {
          std::normal_distribution<double> noise(0.0, sigma * opt.clip_norm);
          for (auto& v : update) v = noise(noise_rng) / static_cast<double>(L);
        }
      } else {
        update = noisy_batch_update(grads, opt.clip_norm, sigma, L, noise_rng);
      }

      auto& params = net.params();
      if (opt.l2 > 0.0)
        for (auto& p : params) p *= (1.0 - opt.learning_rate * opt.l2);
      for (std::size_t j = 0; j < dim; ++j) params[j] -= opt.learning_rate * update[j];

      ++step_counter;
      if (opt.accountant && sigma > 0.0) {
        *opt.accountant = charge_step(std::move(*opt.accountant), sigma, q);
        if (opt.epsilon_cap) {
          const auto g = to_guarantee(*opt.accountant);
          if (g.epsilon > *opt.epsilon_cap)
            throw std::runtime_error("privacy budget exhausted at step " +
                                     std::to_string(step_counter));
        }
      }
    }
    check_finite(net.params(), epoch);
  }
}

double calibrate_noise_for_epsilon(double target_epsilon, double delta,
                                   long steps, double q) {
  if (!(target_epsilon > 0.0))
    throw std::invalid_argument("calibrate_noise_for_epsilon: epsilon must be > 0");
  if (steps < 1)
    throw std::invalid_argument("calibrate_noise_for_epsilon: steps must be >= 1");

  const auto eps_at = [&](double sigma) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < AccountantState::order_count(); ++i) {
      const int alpha = AccountantState::order_at(i);
      const double bound = renyi_step_bound(sigma, q, alpha);
      if (!std::isfinite(bound)) continue;
      best = std::min(best, static_cast<double>(steps) * bound +
                                std::log(1.0 / delta) / (alpha - 1.0));
    }
    return best;
  };

  double lo = 1e-2, hi = 1.0;
  while (eps_at(hi) > target_epsilon) {
    hi *= 2.0;
    if (hi > 1e6)
      throw std::runtime_error(
          "calibrate_noise_for_epsilon: target epsilon unreachable");
  }
  for (int iter = 0; iter < 200 && eps_at(lo) < target_epsilon; ++iter) lo /= 2.0;
  for (int iter = 0; iter < 100; ++iter) {
    const double mid = 0.5 * (lo + hi);
    (eps_at(mid) > target_epsilon ? lo : hi) = mid;
  }
  return hi;
}

DpTrainResult dp_train(const ModelSpec& spec, const Dataset& train_set,
                       const Dataset& test_set, const DPConfig& dp,
                       AccountantState accountant) {
  if (spec.kind != ModelKind::LogisticRegression && spec.kind != ModelKind::Mlp)
    throw std::invalid_argument("dp_train: spec must be gradient-trainable");
  if (!(dp.clip_norm > 0.0))
    throw std::invalid_argument("dp_train: clip_norm must be positive");
  if (dp.noise_multiplier < 0.0)
    throw std::invalid_argument("dp_train: noise_multiplier must be >= 0");
  if (dp.batch_size < 1 ||
      static_cast<std::size_t>(dp.batch_size) > train_set.rows)
    throw std::invalid_argument("dp_train: batch_size must be in [1, n]");
  if (dp.epochs < 1) throw std::invalid_argument("dp_train: epochs must be >= 1");

  train_set.validate();
  auto model = spec.kind == ModelKind::LogisticRegression
                   ? make_logistic_regression(spec, train_set.num_classes,
                                              static_cast<int>(train_set.cols))
                   : make_mlp(spec, train_set.num_classes,
                              static_cast<int>(train_set.cols));
  auto* net = dynamic_cast<GradientNet*>(model.get());

  SgdOptions opt;
  opt.learning_rate = dp.learning_rate;
  opt.epochs = dp.epochs;
  opt.batch_size = dp.batch_size;
  opt.seed = dp.seed;
  opt.l2 = spec.l2;
  opt.clip_norm = dp.clip_norm;
  opt.noise = dp.schedule.value_or(
      NoiseSchedule{ScheduleKind::Fixed, dp.noise_multiplier, dp.noise_multiplier,
                    0.0, 1, 1.0, dp.epochs});
  opt.sampling = dp.sampling_mode;
  opt.accountant = &accountant;
  opt.epsilon_cap = dp.epsilon_cap;

  run_sgd(*net, train_set, opt);

  const double train_acc = accuracy(*model, train_set);
  std::optional<double> test_acc;
  if (test_set.rows > 0) test_acc = accuracy(*model, test_set);
  model->set_accuracies(train_acc, test_acc);

  DpGuarantee guarantee{std::numeric_limits<double>::infinity(),
                        accountant.delta, 0};
  if (accountant.steps > 0) guarantee = to_guarantee(accountant);
  return DpTrainResult{std::move(model), std::move(accountant), guarantee};
}

}  // namespace mpa
