#pragma once
// Learning-rate schedules as materialized sequences eta_t, t = 0..T-1.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "eigencurve/error.hpp"

namespace eigencurve {

enum class ScheduleKind {
  constant,
  inverse_time,
  inverse_time_practical,
  exponential,
  cosine,
  cosine_power,
  step_decay_ge,
  general_step_decay,
  elastic_step_decay,
  eigencurve,
  external,
};

inline const char* to_string(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::constant: return "constant";
    case ScheduleKind::inverse_time: return "inverse_time";
    case ScheduleKind::inverse_time_practical: return "inverse_time_practical";
    case ScheduleKind::exponential: return "exponential";
    case ScheduleKind::cosine: return "cosine";
    case ScheduleKind::cosine_power: return "cosine_power";
    case ScheduleKind::step_decay_ge: return "step_decay";
    case ScheduleKind::general_step_decay: return "general_step_decay";
    case ScheduleKind::elastic_step_decay: return "elastic_step_decay";
    case ScheduleKind::eigencurve: return "eigencurve";
    case ScheduleKind::external: return "external";
  }
  return "unknown";
}

using ParamList = std::vector<std::pair<std::string, double>>;

/// A learning-rate sequence over a fixed horizon T. Rates are materialized at
/// construction, so rate(t) and materialize() agree bit for bit.
class Schedule {
 public:
  Schedule(ScheduleKind kind, std::vector<double> rates, ParamList params = {})
      : kind_(kind), params_(std::move(params)), rates_(std::move(rates)) {
    if (rates_.empty()) throw NumericError("schedule horizon must be >= 1");
    for (double r : rates_)
      if (!std::isfinite(r) || r < 0.0)
        throw NumericError("schedule rates must be finite and >= 0");
  }

  ScheduleKind kind() const noexcept { return kind_; }
  const ParamList& params() const noexcept { return params_; }
  std::size_t horizon() const noexcept { return rates_.size(); }
  double rate(std::size_t t) const { return rates_.at(t); }
  const std::vector<double>& rates() const noexcept { return rates_; }
  std::vector<double> materialize() const { return rates_; }

  double param(const std::string& name, double fallback = std::nan("")) const {
    for (const auto& [k, v] : params_)
      if (k == name) return v;
    return fallback;
  }

 private:
  ScheduleKind kind_;
  ParamList params_;
  std::vector<double> rates_;
};

namespace detail {

inline void require_horizon(std::size_t T) {
  if (T == 0) throw NumericError("schedule horizon must be >= 1");
}

}  // namespace detail

/// Rounds nonnegative reals summing to `total` into integers with the same
/// sum. Ties in the fractional part go to the lower index.
inline std::vector<std::size_t> largest_remainder_round(
    const std::vector<double>& real, std::size_t total) {
  std::vector<std::size_t> out(real.size(), 0);
  std::vector<std::pair<double, std::size_t>> frac;
  frac.reserve(real.size());
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < real.size(); ++i) {
    const double v = std::max(0.0, real[i]);
    const double f = std::floor(v);
    out[i] = static_cast<std::size_t>(f);
    assigned += out[i];
    frac.emplace_back(v - f, i);
  }
  std::stable_sort(frac.begin(), frac.end(), [](const auto& a, const auto& b) {
    return a.first > b.first;
  });
  // floating error can leave the floors one above or below the target
  std::size_t k = 0;
  while (assigned < total && !frac.empty()) {
    ++out[frac[k % frac.size()].second];
    ++assigned;
    ++k;
  }
  for (std::size_t j = frac.size(); assigned > total && j-- > 0;) {
    const std::size_t i = frac[j].second;
    if (out[i] > 0) {
      --out[i];
      --assigned;
    }
  }
  return out;
}

inline Schedule build_constant(std::size_t T, double eta0) {
  detail::require_horizon(T);
  if (!(eta0 >= 0.0)) throw NumericError("constant rate must be >= 0");
  return Schedule(ScheduleKind::constant, std::vector<double>(T, eta0),
                  {{"eta0", eta0}});
}

/// eta_t = 1/(L + mu t).
inline Schedule build_inverse_time(std::size_t T, double L, double mu) {
  detail::require_horizon(T);
  if (!(mu > 0.0) || !(L >= mu))
    throw NumericError("inverse time decay requires L >= mu > 0");
  std::vector<double> r(T);
  for (std::size_t t = 0; t < T; ++t)
    r[t] = 1.0 / (L + mu * static_cast<double>(t));
  return Schedule(ScheduleKind::inverse_time, std::move(r), {{"L", L}, {"mu", mu}});
}

/// eta_t = eta0/(1 + gamma eta0 t), gamma chosen so eta_{T-1} = eta_min.
inline Schedule build_inverse_time_practical(std::size_t T, double eta0,
                                             double eta_min) {
  detail::require_horizon(T);
  if (T == 1) throw NumericError("inverse time decay needs T >= 2 to fit eta_min");
  if (!(eta0 > eta_min) || !(eta_min > 0.0))
    throw NumericError("inverse time decay requires eta0 > eta_min > 0");
  const double gamma =
      (eta0 / eta_min - 1.0) / (eta0 * static_cast<double>(T - 1));
  std::vector<double> r(T);
  for (std::size_t t = 0; t < T; ++t)
    r[t] = eta0 / (1.0 + gamma * eta0 * static_cast<double>(t));
  return Schedule(ScheduleKind::inverse_time_practical, std::move(r),
                  {{"eta0", eta0}, {"eta_min", eta_min}, {"gamma", gamma}});
}

/// eta_t = gamma^t eta0 with gamma = (eta_min/eta0)^{1/(T-1)}.
inline Schedule build_exponential(std::size_t T, double eta0, double eta_min) {
  detail::require_horizon(T);
  if (T == 1) throw NumericError("exponential decay needs T >= 2 to fit eta_min");
  if (!(eta0 > 0.0) || !(eta_min > 0.0) || eta_min > eta0)
    throw NumericError("exponential decay requires eta0 >= eta_min > 0");
  const double gamma = std::pow(eta_min / eta0, 1.0 / static_cast<double>(T - 1));
  std::vector<double> r(T);
  for (std::size_t t = 0; t < T; ++t)
    r[t] = eta0 * std::pow(gamma, static_cast<double>(t));
  return Schedule(ScheduleKind::exponential, std::move(r),
                  {{"eta0", eta0}, {"eta_min", eta_min}, {"gamma", gamma}});
}

namespace detail {

inline std::vector<double> cosine_power_rates(std::size_t T, double eta0,
                                              double eta_min, double power) {
  std::vector<double> r(T, eta0);
  if (T == 1) return r;
  const double t_max = static_cast<double>(T - 1);
  for (std::size_t t = 0; t < T; ++t) {
    const double base =
        0.5 * (1.0 + std::cos(static_cast<double>(t) / t_max * std::numbers::pi));
    const double shape = power == 1.0 ? base : std::pow(base, power);
    r[t] = eta_min + (eta0 - eta_min) * shape;
  }
  // cos(pi) leaves a tiny positive residue in floating point
  r[T - 1] = eta_min;
  return r;
}

}  // namespace detail

/// Cosine decay without restarts; the argument runs over t/(T-1) so the final
/// iterate uses eta_min.
inline Schedule build_cosine(std::size_t T, double eta0, double eta_min) {
  detail::require_horizon(T);
  if (!(eta0 > eta_min) || !(eta_min >= 0.0))
    throw NumericError("cosine decay requires eta0 > eta_min >= 0");
  return Schedule(ScheduleKind::cosine,
                  detail::cosine_power_rates(T, eta0, eta_min, 1.0),
                  {{"eta0", eta0}, {"eta_min", eta_min}});
}

/// eta_min + (eta0 - eta_min) [ (1 + cos(pi t / t_max)) / 2 ]^power, t_max = T-1.
inline Schedule build_cosine_power(std::size_t T, double eta0, double eta_min,
                                   double power) {
  detail::require_horizon(T);
  if (!(eta0 > eta_min) || !(eta_min >= 0.0))
    throw NumericError("cosine-power decay requires eta0 > eta_min >= 0");
  if (!(power > 0.0)) throw NumericError("cosine-power exponent must be > 0");
  return Schedule(ScheduleKind::cosine_power,
                  detail::cosine_power_rates(T, eta0, eta_min, power),
                  {{"eta0", eta0}, {"eta_min", eta_min}, {"power", power}});
}

/// Step decay halving every ceil(T/K) steps, K = floor(log2 T). Index 0 carries
/// rate 0 so the halving phases occupy t = 1..T-1.
inline Schedule build_step_decay_ge(std::size_t T, double eta1) {
  if (T < 2) throw NumericError("step decay requires T >= 2");
  if (!(eta1 > 0.0)) throw NumericError("step decay requires eta1 > 0");
  const auto K = static_cast<std::size_t>(std::floor(std::log2(static_cast<double>(T))));
  const std::size_t phase = (T + K - 1) / K;
  std::vector<double> r(T, 0.0);
  for (std::size_t t = 1; t < T; ++t) {
    const std::size_t l = std::min(K - 1, (t - 1) / phase);
    r[t] = std::ldexp(eta1, -static_cast<int>(l));
  }
  return Schedule(ScheduleKind::step_decay_ge, std::move(r),
                  {{"eta1", eta1},
                   {"phases", static_cast<double>(K)},
                   {"phase_length", static_cast<double>(phase)}});
}

/// Equal-length intervals (largest-remainder rounding); the rate is divided by
/// decay_factor at each boundary.
inline Schedule build_general_step_decay(std::size_t T, double eta0,
                                         std::size_t num_intervals,
                                         double decay_factor) {
  detail::require_horizon(T);
  if (num_intervals == 0) throw NumericError("need at least one interval");
  if (num_intervals > T) throw NumericError("more intervals than iterations");
  if (!(decay_factor > 1.0)) throw NumericError("decay factor must be > 1");
  if (!(eta0 > 0.0)) throw NumericError("step decay requires eta0 > 0");
  const std::vector<double> share(num_intervals, static_cast<double>(T) /
                                                     static_cast<double>(num_intervals));
  const auto lengths = largest_remainder_round(share, T);
  std::vector<double> r;
  r.reserve(T);
  double eta = eta0;
  for (std::size_t k = 0; k < num_intervals; ++k) {
    r.insert(r.end(), lengths[k], eta);
    eta /= decay_factor;
  }
  return Schedule(ScheduleKind::general_step_decay, std::move(r),
                  {{"eta0", eta0},
                   {"intervals", static_cast<double>(num_intervals)},
                   {"decay_factor", decay_factor}});
}

/// eta_t = eta0 / 2^k for t in [(1 - r^k) T, (1 - r^{k+1}) T). Intervals that
/// contain no integer are skipped.
inline Schedule build_elastic_step_decay(std::size_t T, double eta0, double r) {
  detail::require_horizon(T);
  if (!(r > 0.0 && r < 1.0)) throw NumericError("elastic step decay requires 0 < r < 1");
  if (!(eta0 > 0.0)) throw NumericError("elastic step decay requires eta0 > 0");
  const double horizon = static_cast<double>(T);
  std::vector<double> rates(T);
  int k = 0;
  double next_edge = (1.0 - r) * horizon;  // (1 - r^{k+1}) T
  double rk1 = r;
  for (std::size_t t = 0; t < T; ++t) {
    const double td = static_cast<double>(t);
    // bounded: rates below 2^-1074 eta0 are zero anyway
    while (td >= next_edge && k < 1100) {
      ++k;
      rk1 *= r;
      next_edge = (1.0 - rk1) * horizon;
    }
    rates[t] = std::ldexp(eta0, -k);
  }
  return Schedule(ScheduleKind::elastic_step_decay, std::move(rates),
                  {{"eta0", eta0}, {"r", r}});
}

/// Coordinate-wise rates eta_{t,j} = 1/(lambda_j (t+1)).
class PerCoordinateSchedule {
 public:
  PerCoordinateSchedule(std::vector<double> lambdas, std::size_t T)
      : lambdas_(std::move(lambdas)), T_(T) {
    detail::require_horizon(T);
    for (double l : lambdas_)
      if (!(l > 0.0)) throw NumericError("per-coordinate rates need lambda > 0");
  }

  std::size_t horizon() const noexcept { return T_; }
  std::size_t dim() const noexcept { return lambdas_.size(); }
  double rate(std::size_t t, std::size_t j) const {
    return 1.0 / (lambdas_.at(j) * static_cast<double>(t + 1));
  }

 private:
  std::vector<double> lambdas_;
  std::size_t T_;
};

inline PerCoordinateSchedule build_per_coordinate(std::vector<double> lambdas,
                                                  std::size_t T) {
  return PerCoordinateSchedule(std::move(lambdas), T);
}

}  // namespace eigencurve
