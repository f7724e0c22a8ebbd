#pragma once
// Piecewise inverse-time-decay schedule driven by dyadic eigenvalue buckets.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "eigencurve/error.hpp"
#include "eigencurve/schedules.hpp"
#include "eigencurve/spectrum.hpp"

namespace eigencurve {

struct EigencurveParams {
  double mu = 1.0;
  double L = 1.0;
  double kappa = 1.0;
  std::vector<std::size_t> delta;          // phase lengths, one per bucket
  std::vector<std::size_t> t_boundaries;   // t_0 = 0, ..., t_{I_max} = T
  double eta0 = 1.0;
  double beta = 2.0;
  std::vector<double> alpha_bar;           // 1/eta at t_1..t_{I_max}, before eta_min scaling

  std::size_t i_max() const noexcept { return delta.size(); }
  std::size_t horizon() const noexcept { return t_boundaries.back(); }
};

/// Variance part of the phase-length objective:
///   sum_i 2^{i+1} s_i / (kappa + sum_{j<=i+1} Delta_j 2^{j-1}).
inline double variance_surrogate(const DyadicBuckets& b,
                                 const std::vector<double>& delta) {
  double total = 0.0;
  double denom = b.kappa;
  for (std::size_t i = 0; i < b.s.size(); ++i) {
    denom += delta[i] * std::ldexp(1.0, static_cast<int>(i));
    total += std::ldexp(b.s[i], static_cast<int>(i) + 1) / denom;
  }
  return total;
}

inline double variance_surrogate(const DyadicBuckets& b,
                                 const std::vector<std::size_t>& delta) {
  std::vector<double> d(delta.begin(), delta.end());
  return variance_surrogate(b, d);
}

namespace detail {

inline void require_feasible(const DyadicBuckets& b, std::size_t T) {
  if (b.s.empty()) throw NumericError("no dyadic buckets");
  if (T < b.nonempty())
    throw NumericError("infeasible horizon: T=" + std::to_string(T) +
                       " is below the number of nonempty buckets (" +
                       std::to_string(b.nonempty()) + ")");
}

/// Largest-remainder rounding restricted to nonempty buckets, then a floor of
/// one iteration for every nonempty bucket taken from the largest phase.
inline std::vector<std::size_t> round_allocation(const DyadicBuckets& b,
                                                 const std::vector<double>& real,
                                                 std::size_t T) {
  std::vector<std::size_t> support;
  std::vector<double> sub;
  for (std::size_t i = 0; i < b.s.size(); ++i) {
    if (b.s[i] > 0.0) {
      support.push_back(i);
      sub.push_back(real[i]);
    }
  }
  const auto rounded = largest_remainder_round(sub, T);
  std::vector<std::size_t> out(b.s.size(), 0);
  for (std::size_t k = 0; k < support.size(); ++k) out[support[k]] = rounded[k];
  for (std::size_t i : support) {
    if (out[i] == 0) {
      const auto big = std::max_element(out.begin(), out.end());
      --*big;
      out[i] = 1;
    }
  }
  return out;
}

/// Euclidean projection onto {x >= 0, sum x = total}.
inline std::vector<double> project_simplex(const std::vector<double>& y,
                                           double total) {
  std::vector<double> u(y);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumsum = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    cumsum += u[k];
    const double t = (cumsum - total) / static_cast<double>(k + 1);
    if (u[k] - t > 0.0) theta = t;
  }
  std::vector<double> x(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) x[i] = std::max(0.0, y[i] - theta);
  return x;
}

inline std::vector<double> sqrt_allocation_real(const DyadicBuckets& b,
                                                std::size_t T) {
  double norm = 0.0;
  for (double s : b.s) norm += std::sqrt(s);
  std::vector<double> real(b.s.size());
  for (std::size_t i = 0; i < b.s.size(); ++i)
    real[i] = std::sqrt(b.s[i]) / norm * static_cast<double>(T);
  return real;
}

}  // namespace detail

/// Delta_i proportional to sqrt(s_{i-1}), rounded to integers summing to T.
inline std::vector<std::size_t> allocate_delta_sqrt(const DyadicBuckets& b,
                                                    std::size_t T) {
  detail::require_feasible(b, T);
  return detail::round_allocation(b, detail::sqrt_allocation_real(b, T), T);
}

struct NumericAllocationOptions {
  double relative_tolerance = 1e-9;
  std::size_t max_iterations = 100000;
};

/// Minimizes variance_surrogate over the real simplex by projected gradient
/// descent from the sqrt allocation, then rounds. Never returns an allocation
/// worse than allocate_delta_sqrt.
inline std::vector<std::size_t> allocate_delta_numeric(
    const DyadicBuckets& b, std::size_t T, NumericAllocationOptions opts = {}) {
  detail::require_feasible(b, T);
  const auto sqrt_alloc = allocate_delta_sqrt(b, T);

  std::vector<std::size_t> support;
  for (std::size_t i = 0; i < b.s.size(); ++i)
    if (b.s[i] > 0.0) support.push_back(i);
  if (support.size() <= 1) return sqrt_alloc;

  const auto full_delta = [&](const std::vector<double>& x) {
    std::vector<double> d(b.s.size(), 0.0);
    for (std::size_t k = 0; k < support.size(); ++k) d[support[k]] = x[k];
    return d;
  };
  const auto objective = [&](const std::vector<double>& x) {
    return variance_surrogate(b, full_delta(x));
  };
  const auto gradient = [&](const std::vector<double>& x) {
    // dV/dDelta_k = -2^k sum_{i>=k} 2^{i+1} s_i / denom_i^2  (0-based k)
    const auto d = full_delta(x);
    std::vector<double> tail(b.s.size() + 1, 0.0);
    std::vector<double> denom(b.s.size());
    double acc = b.kappa;
    for (std::size_t i = 0; i < b.s.size(); ++i) {
      acc += d[i] * std::ldexp(1.0, static_cast<int>(i));
      denom[i] = acc;
    }
    for (std::size_t i = b.s.size(); i-- > 0;)
      tail[i] = tail[i + 1] +
                std::ldexp(b.s[i], static_cast<int>(i) + 1) / (denom[i] * denom[i]);
    std::vector<double> g(support.size());
    for (std::size_t k = 0; k < support.size(); ++k)
      g[k] = -std::ldexp(tail[support[k]], static_cast<int>(support[k]));
    return g;
  };

  const auto start = detail::sqrt_allocation_real(b, T);
  std::vector<double> x(support.size());
  for (std::size_t k = 0; k < support.size(); ++k) x[k] = start[support[k]];
  const double total = static_cast<double>(T);

  double value = objective(x);
  double step = 1.0;  // as a fraction of T
  for (std::size_t iter = 0; iter < opts.max_iterations; ++iter) {
    const auto g = gradient(x);
    double gnorm2 = 0.0;
    for (double gi : g) gnorm2 += gi * gi;
    if (gnorm2 == 0.0) break;
    bool accepted = false;
    std::vector<double> trial;
    double trial_value = value;
    for (int bt = 0; bt < 60; ++bt) {
      std::vector<double> y(x);
      for (std::size_t k = 0; k < y.size(); ++k) y[k] -= step * g[k] / std::sqrt(gnorm2) * total;
      trial = detail::project_simplex(y, total);
      trial_value = objective(trial);
      double decrease = 0.0;
      for (std::size_t k = 0; k < x.size(); ++k) decrease += g[k] * (x[k] - trial[k]);
      if (trial_value <= value - 1e-4 * decrease && trial_value < value) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    const double improvement = (value - trial_value) / value;
    x = std::move(trial);
    value = trial_value;
    if (improvement < opts.relative_tolerance) break;
    step = std::min(step * 2.0, 1.0);
  }

  const auto numeric = detail::round_allocation(b, full_delta(x), T);
  if (variance_surrogate(b, numeric) <= variance_surrogate(b, sqrt_alloc))
    return numeric;
  return sqrt_alloc;
}

inline EigencurveParams make_eigencurve_params(const DyadicBuckets& b,
                                               std::size_t T,
                                               std::vector<std::size_t> delta,
                                               double eta0, double beta) {
  if (T == 0) throw NumericError("schedule horizon must be >= 1");
  if (delta.size() != b.s.size())
    throw NumericError("delta needs one phase length per bucket");
  if (std::accumulate(delta.begin(), delta.end(), std::size_t{0}) != T)
    throw NumericError("phase lengths must sum to T");
  if (!(eta0 > 0.0)) throw NumericError("eigencurve requires eta0 > 0");
  if (!(beta > 1.0)) throw NumericError("eigencurve requires beta > 1");
  EigencurveParams p;
  p.mu = b.mu;
  p.L = b.L;
  p.kappa = b.kappa;
  p.delta = std::move(delta);
  p.eta0 = eta0;
  p.beta = beta;
  p.t_boundaries.assign(1, 0);
  double acc = 0.0;
  for (std::size_t i = 0; i < p.delta.size(); ++i) {
    p.t_boundaries.push_back(p.t_boundaries.back() + p.delta[i]);
    acc += static_cast<double>(p.delta[i]) * std::pow(beta, static_cast<double>(i));
    p.alpha_bar.push_back((1.0 + acc / p.kappa) / eta0);
  }
  return p;
}

/// Rates of the curve before any eta_min scaling.
inline std::vector<double> eigencurve_rates(const EigencurveParams& p) {
  std::vector<double> r;
  r.reserve(p.horizon());
  double acc = 0.0;  // sum_{j<i} Delta_j beta^{j-1}
  for (std::size_t i = 0; i < p.delta.size(); ++i) {
    const double slope = std::pow(p.beta, static_cast<double>(i)) / p.kappa;
    for (std::size_t t = 0; t < p.delta[i]; ++t)
      r.push_back(p.eta0 /
                  (1.0 + acc / p.kappa + slope * static_cast<double>(t)));
    acc += static_cast<double>(p.delta[i]) * std::pow(p.beta, static_cast<double>(i));
  }
  return r;
}

/// eta_t = eta0 / (1 + (1/kappa) sum_{j<i} Delta_j beta^{j-1}
///                   + (beta^{i-1}/kappa)(t - t_{i-1}))   for t in [t_{i-1}, t_i).
///
/// eta0 = 1/L with beta = 2 is the theoretical curve. With eta_min the curve
/// is mapped affinely so that eta_0 is unchanged and eta_{T-1} = eta_min.
inline Schedule build_eigencurve(const DyadicBuckets& b, std::size_t T,
                                 std::vector<std::size_t> delta, double eta0,
                                 double beta,
                                 std::optional<double> eta_min = std::nullopt) {
  const auto p = make_eigencurve_params(b, T, std::move(delta), eta0, beta);
  auto r = eigencurve_rates(p);
  ParamList params{{"eta0", eta0},
                   {"beta", beta},
                   {"mu", b.mu},
                   {"L", b.L},
                   {"kappa", b.kappa}};
  if (eta_min) {
    if (!(*eta_min < eta0)) throw NumericError("eta_min must be below eta0");
    if (!(*eta_min >= 0.0)) throw NumericError("eta_min must be >= 0");
    if (T < 2) throw NumericError("eta_min scaling needs T >= 2");
    const double last = r.back();
    const double scale = (eta0 - *eta_min) / (eta0 - last);
    for (auto& v : r) v = *eta_min + (v - last) * scale;
    r.front() = eta0;
    r.back() = *eta_min;
    params.emplace_back("eta_min", *eta_min);
  }
  return Schedule(ScheduleKind::eigencurve, std::move(r), std::move(params));
}

/// eta0 = 1/L, beta = 2, sqrt phase allocation.
inline Schedule build_eigencurve_theoretical(const DyadicBuckets& b,
                                             std::size_t T) {
  return build_eigencurve(b, T, allocate_delta_sqrt(b, T), 1.0 / b.L, 2.0);
}

}  // namespace eigencurve
