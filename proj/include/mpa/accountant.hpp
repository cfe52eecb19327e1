#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mpa {

// Renyi-order ledger over the integer grid alpha in {2..64}. Charging adds
// the per-step Renyi divergence bound at every order; conversion takes the
// minimizing order.
struct AccountantState {
  static constexpr int kMinOrder = 2;
  static constexpr int kMaxOrder = 64;

  double delta = 1e-5;
  std::vector<double> rdp_eps;   // one entry per order, accumulated
  std::vector<bool> dropped;     // orders lost to numeric overflow
  std::vector<std::string> notes;
  long steps = 0;
  double last_q = 1.0;
  std::vector<double> sigma_trace;  // per-step noise multipliers

  static std::size_t order_count() {
    return static_cast<std::size_t>(kMaxOrder - kMinOrder + 1);
  }
  static int order_at(std::size_t idx) { return kMinOrder + static_cast<int>(idx); }
};

struct DpGuarantee {
  double epsilon = 0.0;
  double delta = 0.0;
  int achieving_order = 0;
};

AccountantState make_accountant(double delta);

// Calibration from the closed form sigma = sqrt(2 ln(1/delta)) / epsilon,
// valid only for epsilon < 1; larger budgets go through the Renyi ledger.
double gaussian_sigma_for(double epsilon, double delta);

double compose_sequential(std::span<const double> eps_list);
double compose_parallel(std::span<const double> eps_list);

// One Gaussian mechanism step at noise multiplier sigma and sampling rate q.
// q = 1 adds alpha/(2 sigma^2); q < 1 adds the integer-order subsampled
// Gaussian bound (binomial sum, evaluated in log space).
AccountantState charge_step(AccountantState state, double sigma, double q);

// Per-order Renyi bound of a single step (exposed for oracle tests).
double renyi_step_bound(double sigma, double q, int alpha);

DpGuarantee to_guarantee(const AccountantState& state);

struct DpInequalityReport {
  struct Violation {
    double lo, hi;      // the interval event
    double excess;      // amount above the tolerance
    bool swapped;       // true when the D2->D1 direction failed
  };
  std::size_t events_checked = 0;
  std::vector<Violation> violations;
  bool passed() const { return violations.empty(); }
};

// Empirical check of Pr[K(D1) in S] <= e^eps Pr[K(D2) in S] + delta over a
// grid of interval events, both directions, with a 3-standard-error Monte
// Carlo allowance. A statistical test, not a proof.
DpInequalityReport verify_dp_inequality(std::span<const double> samples_d1,
                                        std::span<const double> samples_d2,
                                        double epsilon, double delta,
                                        std::span<const std::pair<double, double>> events);

}  // namespace mpa
