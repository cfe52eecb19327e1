#include "mpa/accountant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mpa {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log_binom(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

double log_sum_exp(std::span<const double> terms) {
  double mx = -kInf;
  for (const double t : terms) mx = std::max(mx, t);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (const double t : terms) s += std::exp(t - mx);
  return mx + std::log(s);
}

}  // namespace

AccountantState make_accountant(double delta) {
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("accountant: delta must be in (0,1)");
  AccountantState st;
  st.delta = delta;
  st.rdp_eps.assign(AccountantState::order_count(), 0.0);
  st.dropped.assign(AccountantState::order_count(), false);
  return st;
}

double gaussian_sigma_for(double epsilon, double delta) {
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("gaussian_sigma_for: delta must be in (0,1)");
  if (!(epsilon > 0.0))
    throw std::invalid_argument("gaussian_sigma_for: epsilon must be positive");
  if (epsilon >= 1.0)
    throw std::invalid_argument(
        "gaussian_sigma_for: closed form requires epsilon < 1; use the Renyi "
        "ledger for larger budgets");
  return std::sqrt(2.0 * std::log(1.0 / delta)) / epsilon;
}

double compose_sequential(std::span<const double> eps_list) {
  if (eps_list.empty())
    throw std::invalid_argument("compose_sequential: empty epsilon list");
  double sum = 0.0;
  for (const double e : eps_list) {
    if (!(e > 0.0)) throw std::invalid_argument("compose_sequential: epsilon <= 0");
    sum += e;
  }
  return sum;
}

double compose_parallel(std::span<const double> eps_list) {
  if (eps_list.empty())
    throw std::invalid_argument("compose_parallel: empty epsilon list");
  double mx = 0.0;
  for (const double e : eps_list) {
    if (!(e > 0.0)) throw std::invalid_argument("compose_parallel: epsilon <= 0");
    mx = std::max(mx, e);
  }
  return mx;
}

double renyi_step_bound(double sigma, double q, int alpha) {
  if (!(sigma > 0.0)) throw std::invalid_argument("renyi_step_bound: sigma must be > 0");
  if (!(q > 0.0 && q <= 1.0))
    throw std::invalid_argument("renyi_step_bound: q must be in (0,1]");
  if (alpha < 2) throw std::invalid_argument("renyi_step_bound: alpha must be >= 2");

  const double a = static_cast<double>(alpha);
  if (q == 1.0) return a / (2.0 * sigma * sigma);

  // log of sum_{j=0}^{alpha} C(alpha,j) (1-q)^(alpha-j) q^j exp(j(j-1)/(2 sigma^2))
  std::vector<double> terms(static_cast<std::size_t>(alpha) + 1);
  const double log_q = std::log(q);
  const double log_1mq = std::log1p(-q);
  for (int j = 0; j <= alpha; ++j) {
    terms[static_cast<std::size_t>(j)] =
        log_binom(alpha, j) + (a - j) * log_1mq + j * log_q +
        static_cast<double>(j) * (j - 1.0) / (2.0 * sigma * sigma);
  }
  return log_sum_exp(terms) / (a - 1.0);
}

AccountantState charge_step(AccountantState state, double sigma, double q) {
  for (std::size_t i = 0; i < state.rdp_eps.size(); ++i) {
    if (state.dropped[i]) continue;
    const int alpha = AccountantState::order_at(i);
    const double bound = renyi_step_bound(sigma, q, alpha);
    if (!std::isfinite(bound) || !std::isfinite(state.rdp_eps[i] + bound)) {
      state.dropped[i] = true;
      state.notes.push_back("order " + std::to_string(alpha) +
                            " dropped: bound overflowed at step " +
                            std::to_string(state.steps + 1));
      continue;
    }
    state.rdp_eps[i] += bound;
  }
  state.steps += 1;
  state.last_q = q;
  state.sigma_trace.push_back(sigma);
  return state;
}

DpGuarantee to_guarantee(const AccountantState& state) {
  double best = kInf;
  int best_order = 0;
  for (std::size_t i = 0; i < state.rdp_eps.size(); ++i) {
    if (state.dropped[i]) continue;
    const int alpha = AccountantState::order_at(i);
    const double eps =
        state.rdp_eps[i] + std::log(1.0 / state.delta) / (alpha - 1.0);
    if (eps < best) {
      best = eps;
      best_order = alpha;
    }
  }
  if (!std::isfinite(best))
    throw std::runtime_error("to_guarantee: every Renyi order overflowed");
  return DpGuarantee{best, state.delta, best_order};
}

DpInequalityReport verify_dp_inequality(
    std::span<const double> samples_d1, std::span<const double> samples_d2,
    double epsilon, double delta,
    std::span<const std::pair<double, double>> events) {
  if (samples_d1.size() < 100 || samples_d2.size() < 100)
    throw std::invalid_argument("verify_dp_inequality: insufficient samples");
  if (events.empty())
    throw std::invalid_argument("verify_dp_inequality: empty event grid");

  const auto frac_in = [](std::span<const double> s, double lo, double hi) {
    std::size_t c = 0;
    for (const double v : s)
      if (v >= lo && v < hi) ++c;
    return static_cast<double>(c) / static_cast<double>(s.size());
  };

  DpInequalityReport report;
  const double e_eps = std::exp(epsilon);
  for (const auto& [lo, hi] : events) {
    for (const bool swapped : {false, true}) {
      const auto& a = swapped ? samples_d2 : samples_d1;
      const auto& b = swapped ? samples_d1 : samples_d2;
      const double pa = frac_in(a, lo, hi);
      const double pb = frac_in(b, lo, hi);
      const double se_a = std::sqrt(std::max(pa * (1 - pa), 1e-12) /
                                    static_cast<double>(a.size()));
      const double se_b = std::sqrt(std::max(pb * (1 - pb), 1e-12) /
                                    static_cast<double>(b.size()));
      const double tolerance =
          3.0 * std::sqrt(se_a * se_a + e_eps * e_eps * se_b * se_b);
      const double excess = pa - (e_eps * pb + delta) - tolerance;
      if (excess > 0.0)
        report.violations.push_back({lo, hi, excess, swapped});
    }
    ++report.events_checked;
  }
  return report;
}

}  // namespace mpa
