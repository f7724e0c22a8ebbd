#pragma once
// SGD on diagonal quadratics: closed-form expected loss (bias/variance) and
// seeded stochastic runs.
//
// Problems live in the Hessian eigenbasis with w* = 0, so the loss gap is
// 0.5 * sum_j lambda_j w_j^2 and the gradient noise has covariance
// sigma^2 diag(lambda).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <thread>
#include <vector>

#include "eigencurve/error.hpp"
#include "eigencurve/schedules.hpp"

namespace eigencurve {

struct QuadraticProblem {
  std::vector<double> lambdas;
  std::vector<double> offset0;  // w_0 - w* per coordinate
  double sigma = 0.0;

  QuadraticProblem() = default;
  QuadraticProblem(std::vector<double> l, std::vector<double> d0, double s)
      : lambdas(std::move(l)), offset0(std::move(d0)), sigma(s) {
    validate();
  }

  void validate() const {
    if (lambdas.empty()) throw NumericError("problem dimension must be >= 1");
    if (lambdas.size() != offset0.size())
      throw NumericError("lambdas and offset0 differ in length");
    for (double l : lambdas)
      if (!(l > 0.0) || !std::isfinite(l))
        throw NumericError("problem eigenvalues must be finite and > 0");
    for (double o : offset0)
      if (!std::isfinite(o)) throw NumericError("non-finite initial offset");
    if (!(sigma >= 0.0) || !std::isfinite(sigma))
      throw NumericError("sigma must be finite and >= 0");
  }

  std::size_t dim() const noexcept { return lambdas.size(); }
  double mu() const { return *std::min_element(lambdas.begin(), lambdas.end()); }
  double L() const { return *std::max_element(lambdas.begin(), lambdas.end()); }

  double loss_gap(const std::vector<double>& w) const {
    double s = 0.0;
    for (std::size_t j = 0; j < lambdas.size(); ++j) s += lambdas[j] * w[j] * w[j];
    return 0.5 * s;
  }

  /// f(w_0) - f(w*).
  double initial_gap() const { return loss_gap(offset0); }
};

struct ExactLossReport {
  std::vector<double> bias_per_coord;
  std::vector<double> var_per_coord;
  double total = 0.0;

  double bias_sum() const {
    double s = 0.0;
    for (double b : bias_per_coord) s += b;
    return s;
  }
  double var_sum() const {
    double s = 0.0;
    for (double v : var_per_coord) s += v;
    return s;
  }
};

namespace detail {

/// bias_j = lambda_j a_j^2 where a_j tracks the noiseless iterate, and
/// var_j = sigma^2 lambda_j^2 v_j with v <- (1 - eta lambda)^2 v + eta^2.
class ExactAccumulator {
 public:
  explicit ExactAccumulator(const QuadraticProblem& p)
      : p_(p), a_(p.offset0), v_(p.dim(), 0.0) {}

  void step(std::size_t j, double eta) {
    const double f = 1.0 - eta * p_.lambdas[j];
    a_[j] = f * a_[j];
    v_[j] = f * f * v_[j] + eta * eta;
  }

  ExactLossReport report() const {
    ExactLossReport r;
    const std::size_t d = p_.dim();
    r.bias_per_coord.resize(d);
    r.var_per_coord.resize(d);
    const double s2 = p_.sigma * p_.sigma;
    for (std::size_t j = 0; j < d; ++j) {
      const double l = p_.lambdas[j];
      r.bias_per_coord[j] = l * a_[j] * a_[j];
      r.var_per_coord[j] = s2 * l * l * v_[j];
    }
    r.total = 0.5 * (r.bias_sum() + r.var_sum());
    return r;
  }

 private:
  const QuadraticProblem& p_;
  std::vector<double> a_;
  std::vector<double> v_;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct SgdOutcome {
  double final_gap = 0.0;
  double ema_gap = 0.0;
};

inline SgdOutcome simulate_sgd(const QuadraticProblem& p, const Schedule& s,
                               std::uint64_t seed, double ema_alpha) {
  p.validate();
  const std::size_t d = p.dim();
  std::vector<double> w(p.offset0);
  std::vector<double> avg(p.offset0);
  std::vector<double> noise_scale(d);
  for (std::size_t j = 0; j < d; ++j) noise_scale[j] = p.sigma * std::sqrt(p.lambdas[j]);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const bool noisy = p.sigma > 0.0;
  const bool averaging = ema_alpha < 1.0;
  for (double eta : s.rates()) {
    for (std::size_t j = 0; j < d; ++j) {
      const double n = noisy ? noise_scale[j] * gauss(rng) : 0.0;
      w[j] = (1.0 - eta * p.lambdas[j]) * w[j] + eta * n;
    }
    if (averaging)
      for (std::size_t j = 0; j < d; ++j)
        avg[j] = ema_alpha * w[j] + (1.0 - ema_alpha) * avg[j];
  }
  SgdOutcome out;
  out.final_gap = p.loss_gap(w);
  out.ema_gap = averaging ? p.loss_gap(avg) : out.final_gap;
  return out;
}

}  // namespace detail

/// Closed-form E[f(w_T) - f(w*)] in O(dT) time and O(d) memory.
inline ExactLossReport exact_expected_loss(const QuadraticProblem& p,
                                           const Schedule& s) {
  p.validate();
  detail::ExactAccumulator acc(p);
  const std::size_t d = p.dim();
  for (double eta : s.rates())
    for (std::size_t j = 0; j < d; ++j) acc.step(j, eta);
  return acc.report();
}

/// Coordinate-wise rates 1/(lambda_j (t+1)) applied over the steps
/// t = 1..T. The bias then telescopes to lambda_j d0_j^2 / (T+1)^2.
inline ExactLossReport exact_expected_loss_per_coordinate_schedule(
    const QuadraticProblem& p, std::size_t T) {
  p.validate();
  const auto sched = build_per_coordinate(p.lambdas, T);
  detail::ExactAccumulator acc(p);
  for (std::size_t t = 1; t <= T; ++t)
    for (std::size_t j = 0; j < p.dim(); ++j) acc.step(j, sched.rate(t, j));
  return acc.report();
}

/// One seeded SGD trajectory w_{t+1} = w_t - eta_t (lambda w_t - n_t),
/// n_t ~ N(0, sigma^2 diag(lambda)). Returns the final loss gap.
inline double sgd_run(const QuadraticProblem& p, const Schedule& s,
                      std::uint64_t seed) {
  return detail::simulate_sgd(p, s, seed, 1.0).final_gap;
}

/// Loss gap of the exponential moving average
/// wbar_t = alpha w_t + (1 - alpha) wbar_{t-1}, wbar_0 = w_0, along the same
/// trajectory sgd_run produces for this seed.
inline double ema_trajectory(const QuadraticProblem& p, const Schedule& s,
                             double alpha, std::uint64_t seed) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw NumericError("EMA alpha must lie in (0, 1]");
  return detail::simulate_sgd(p, s, seed, alpha).ema_gap;
}

struct MonteCarloEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t trials = 0;
};

/// Seed of replica i; fixed per (base, i) so results do not depend on how
/// replicas are spread across threads.
inline std::uint64_t replica_seed(std::uint64_t base, std::size_t i) {
  return detail::splitmix64(base ^ detail::splitmix64(static_cast<std::uint64_t>(i)));
}

inline MonteCarloEstimate monte_carlo_expected_loss(const QuadraticProblem& p,
                                                    const Schedule& s,
                                                    std::size_t trials,
                                                    std::uint64_t seed,
                                                    unsigned threads = 0) {
  if (trials < 2) throw NumericError("Monte Carlo needs at least 2 trials");
  p.validate();
  std::vector<double> samples(trials);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, trials));
  const auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) samples[i] = sgd_run(p, s, replica_seed(seed, i));
  };
  if (threads <= 1) {
    work(0, trials);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (trials + threads - 1) / threads;
    for (unsigned k = 0; k < threads; ++k) {
      const std::size_t b = k * chunk;
      const std::size_t e = std::min(trials, b + chunk);
      if (b < e) pool.emplace_back(work, b, e);
    }
  }
  double sum = 0.0;
  for (double x : samples) sum += x;
  const double n = static_cast<double>(trials);
  const double mean = sum / n;
  double ss = 0.0;
  for (double x : samples) ss += (x - mean) * (x - mean);
  MonteCarloEstimate est;
  est.mean = mean;
  est.standard_error = std::sqrt(ss / (n - 1.0) / n);
  est.trials = trials;
  return est;
}

}  // namespace eigencurve
