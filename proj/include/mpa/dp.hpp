#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "mpa/accountant.hpp"
#include "mpa/dataset.hpp"
#include "mpa/models.hpp"

namespace mpa {

enum class SamplingMode { Shuffle, Poisson };

enum class ScheduleKind { Fixed, LinearDecay, ExpDecay, StepDecay, InverseTimeDecay };

// Noise multiplier per epoch; every decay kind is non-increasing in the
// epoch index (later epochs get smaller sigma) and stays positive.
struct NoiseSchedule {
  ScheduleKind kind = ScheduleKind::Fixed;
  double sigma0 = 1.0;
  double sigma_end = 1.0;   // linear decay target at epoch epochs-1
  double rate = 0.0;        // exp / inverse-time decay rate
  int step_period = 1;      // step decay
  double step_factor = 1.0; // step decay multiplier per period, in (0,1]
  int epochs = 1;           // linear decay horizon
};

double schedule_sigma(const NoiseSchedule& schedule, int epoch_index);

struct DPConfig {
  double clip_norm = 1.0;
  double noise_multiplier = 1.0;
  int batch_size = 32;
  int epochs = 1;
  double learning_rate = 0.1;
  std::optional<NoiseSchedule> schedule;  // defaults to Fixed at noise_multiplier
  SamplingMode sampling_mode = SamplingMode::Shuffle;
  std::uint64_t seed = 0;
  double delta = 1e-5;
  std::optional<double> epsilon_cap;  // hard budget; exceeding it aborts
};

// g / max(1, |g|_2 / C); inputs at or below C come back unchanged.
std::vector<double> clip_gradient(std::span<const double> g, double C);

// (sum of clipped gradients + N(0, sigma^2 C^2 I)) / L.
std::vector<double> noisy_batch_update(
    const std::vector<std::vector<double>>& grads, double C, double sigma,
    int L, std::mt19937_64& rng);

constexpr double kUnboundedClip = std::numeric_limits<double>::infinity();

// Shared minibatch-SGD loop; the non-private trainer is this loop with
// sigma = 0 and clip_norm = kUnboundedClip, so the DP reduction is exact.
struct SgdOptions {
  double learning_rate = 0.1;
  int epochs = 1;
  int batch_size = 32;
  std::uint64_t seed = 0;
  double l2 = 0.0;  // decoupled weight decay
  double clip_norm = kUnboundedClip;
  NoiseSchedule noise;  // sigma0 = 0 disables noise
  SamplingMode sampling = SamplingMode::Shuffle;
  AccountantState* accountant = nullptr;
  std::optional<double> epsilon_cap;
};

void run_sgd(GradientNet& net, const Dataset& data, const SgdOptions& opt);

struct DpTrainResult {
  std::unique_ptr<ProbModel> model;
  AccountantState accountant;
  DpGuarantee guarantee;  // epsilon = +inf when sigma = 0 (nothing charged)
};

DpTrainResult dp_train(const ModelSpec& spec, const Dataset& train_set,
                       const Dataset& test_set, const DPConfig& dp,
                       AccountantState accountant);

// Smallest noise multiplier whose Renyi-accounted epsilon over `steps`
// identical steps at sampling rate q stays at or below target_epsilon.
double calibrate_noise_for_epsilon(double target_epsilon, double delta,
                                   long steps, double q);

}  // namespace mpa
