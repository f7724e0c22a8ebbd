#pragma once
// Upper and lower convergence bounds for SGD on quadratics.
//
// Every bound is stated for E[f(w_T) - f(w*)] (the half-weighted loss gap);
// the two diagonal propositions, which bound twice that quantity, are halved.
// Logarithms of T and kappa are base 2.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "eigencurve/error.hpp"
#include "eigencurve/quadsim.hpp"
#include "eigencurve/spectrum.hpp"

namespace eigencurve {

struct BoundReport {
  std::string name;
  double bias_bound = 0.0;
  double variance_bound = 0.0;
  double total_bound = 0.0;
  double extra_term = 0.0;  // variance bound in units of d sigma^2 / T
};

/// (sum_i sqrt(s_i))^2.
inline double sqrt_mass_squared(const DyadicBuckets& b) {
  double s = 0.0;
  for (double v : b.s) s += std::sqrt(v);
  return s * s;
}

/// f0 kappa^2 / Delta_1^2
///   + (15/2) sigma^2 mu sum_i 2^{i+1} s_i / (L + mu sum_{j<=i+1} Delta_j 2^{j-1})
inline BoundReport lemma1_bound(const DyadicBuckets& b,
                                const std::vector<std::size_t>& delta,
                                std::size_t T, double f0_gap, double sigma) {
  if (delta.size() != b.s.size())
    throw NumericError("delta needs one phase length per bucket");
  if (std::accumulate(delta.begin(), delta.end(), std::size_t{0}) != T)
    throw NumericError("phase lengths must sum to T");
  if (delta.front() == 0)
    throw NumericError("lemma 1 bias bound is infinite: first phase is empty");
  double sum = 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < b.s.size(); ++i) {
    acc += static_cast<double>(delta[i]) * std::ldexp(1.0, static_cast<int>(i));
    sum += std::ldexp(b.s[i], static_cast<int>(i) + 1) / (b.L + b.mu * acc);
  }
  const double d1 = static_cast<double>(delta.front());
  BoundReport r;
  r.name = "lemma1";
  r.bias_bound = f0_gap * b.kappa * b.kappa / (d1 * d1);
  r.variance_bound = 7.5 * sigma * sigma * b.mu * sum;
  r.total_bound = r.bias_bound + r.variance_bound;
  r.extra_term = 7.5 * b.mu * sum * static_cast<double>(T) / b.mass();
  return r;
}

/// f0 kappa^2 (sum sqrt s)^2 / (s_0 T^2) + 15 (sum sqrt s)^2 sigma^2 / T
inline BoundReport theorem1_bound(const DyadicBuckets& b, std::size_t T,
                                  double f0_gap, double sigma) {
  if (b.s.empty() || !(b.s.front() > 0.0))
    throw NumericError("theorem 1 bias bound undefined: smallest bucket is empty");
  if (T == 0) throw NumericError("horizon must be >= 1");
  const double root2 = sqrt_mass_squared(b);
  const double t = static_cast<double>(T);
  BoundReport r;
  r.name = "theorem1";
  r.bias_bound = f0_gap * b.kappa * b.kappa * root2 / (b.s.front() * t * t);
  r.variance_bound = 15.0 * root2 * sigma * sigma / t;
  r.total_bound = r.bias_bound + r.variance_bound;
  r.extra_term = 15.0 * root2 / b.mass();
  return r;
}

/// C(alpha) = 15 (1 / (1 - 2^{(1-alpha)/2}))^2.
inline double power_law_constant(double alpha) {
  if (!(alpha > 1.0)) throw NumericError("power-law constant requires alpha > 1");
  const double q = 1.0 / (1.0 - std::pow(2.0, (1.0 - alpha) / 2.0));
  return 15.0 * q * q;
}

/// A single dyadic range (kappa < 2) gives C = 15 for any alpha.
inline double power_law_constant(double alpha, double kappa) {
  const double c = power_law_constant(alpha);
  return kappa < 2.0 ? 15.0 : c;
}

/// (f0 kappa^2 / T^2 + d sigma^2 / T) C(alpha)
inline BoundReport corollary1_bound(const PowerLawSpec& pl, double d,
                                    std::size_t T, double f0_gap, double sigma) {
  const double c = power_law_constant(pl.alpha, pl.kappa());
  if (T == 0) throw NumericError("horizon must be >= 1");
  const double t = static_cast<double>(T);
  const double k = pl.kappa();
  BoundReport r;
  r.name = "corollary1";
  r.bias_bound = f0_gap * k * k / (t * t) * c;
  r.variance_bound = d * sigma * sigma / t * c;
  r.total_bound = r.bias_bound + r.variance_bound;
  r.extra_term = c;
  return r;
}

/// Coordinate-wise optimal rates:
/// 0.5 [ sum lambda d0^2 / (T+1)^2 + T/(T+1)^2 d sigma^2 ].
inline BoundReport prop1_bound(const QuadraticProblem& p, std::size_t T) {
  p.validate();
  double weighted = 0.0;
  for (std::size_t j = 0; j < p.dim(); ++j)
    weighted += p.lambdas[j] * p.offset0[j] * p.offset0[j];
  const double t1 = static_cast<double>(T) + 1.0;
  const double d = static_cast<double>(p.dim());
  BoundReport r;
  r.name = "prop1";
  r.bias_bound = 0.5 * weighted / (t1 * t1);
  r.variance_bound = 0.5 * static_cast<double>(T) / (t1 * t1) * d * p.sigma * p.sigma;
  r.total_bound = r.bias_bound + r.variance_bound;
  r.extra_term = 0.5 * static_cast<double>(T) * static_cast<double>(T) / (t1 * t1);
  return r;
}

/// Inverse time decay 1/(L + mu t):
/// 0.5 [ ((L+mu)/(L+mu T))^2 sum lambda d0^2
///       + sum_j ( lambda_j^2 sigma^2 / ((2 lambda_j - mu)(L + mu T))
///                 + lambda_j^2 sigma^2 / (L + mu T)^2 ) ].
inline BoundReport prop2_bound(const QuadraticProblem& p, std::size_t T) {
  p.validate();
  const double mu = p.mu();
  const double L = p.L();
  const double denom = L + mu * static_cast<double>(T);
  const double s2 = p.sigma * p.sigma;
  double weighted = 0.0;
  double var = 0.0;
  double var_unit = 0.0;
  for (std::size_t j = 0; j < p.dim(); ++j) {
    const double l = p.lambdas[j];
    weighted += l * p.offset0[j] * p.offset0[j];
    const double unit = l * l / ((2.0 * l - mu) * denom) + l * l / (denom * denom);
    var_unit += unit;
    var += unit * s2;
  }
  const double ratio = (L + mu) / denom;
  BoundReport r;
  r.name = "prop2";
  r.bias_bound = 0.5 * ratio * ratio * weighted;
  r.variance_bound = 0.5 * var;
  r.total_bound = r.bias_bound + r.variance_bound;
  r.extra_term = 0.5 * var_unit * static_cast<double>(T) / static_cast<double>(p.dim());
  return r;
}

struct StepDecayLowerBound {
  bool threshold_ok = false;
  bool main_requirement = false;  // T/log T >= max(2^16, 16, sigma^2/(256 min lambda d0^2))
  bool alt_requirement = false;   // T/log T > 1/(8 eta1 mu)
  double t_over_log_t = 0.0;
  double bound_value = 0.0;       // d sigma^2 log T / (1024 T)
};

/// Asymptotic lower bound for halving step decay on a diagonal problem.
inline StepDecayLowerBound step_decay_lower_bound(
    std::size_t d, double sigma, std::size_t T, double eta1,
    const std::vector<double>& lambdas, const std::vector<double>& offsets) {
  if (T < 2) throw NumericError("step decay lower bound needs T >= 2");
  if (lambdas.empty() || lambdas.size() != offsets.size())
    throw NumericError("lambdas and offsets must be nonempty and equal length");
  const double L = *std::max_element(lambdas.begin(), lambdas.end());
  const double mu = *std::min_element(lambdas.begin(), lambdas.end());
  if (!(mu > 0.0)) throw NumericError("eigenvalues must be > 0");
  if (!(eta1 > 0.0) || eta1 > 1.0 / L)
    throw NumericError("step decay lower bound requires 0 < eta1 <= 1/L");
  const double t = static_cast<double>(T);
  const double log_t = std::log2(t);
  StepDecayLowerBound r;
  r.t_over_log_t = t / log_t;
  double min_energy = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < lambdas.size(); ++j)
    min_energy = std::min(min_energy, lambdas[j] * offsets[j] * offsets[j]);
  if (min_energy > 0.0) {
    const double need =
        std::max({65536.0, 16.0, sigma * sigma / (256.0 * min_energy)});
    r.main_requirement = r.t_over_log_t >= need;
  }
  r.alt_requirement = r.t_over_log_t > 1.0 / (8.0 * eta1 * mu);
  r.threshold_ok = r.main_requirement || r.alt_requirement;
  r.bound_value = static_cast<double>(d) * sigma * sigma * log_t / (1024.0 * t);
  return r;
}

struct ExtraTermRow {
  std::string name;
  double inverse_time = 0.0;  // kappa
  double step_decay = 0.0;    // log2 T
  double eigencurve = 0.0;    // (sum sqrt s)^2 / d
  double minimax = 1.0;
};

inline std::vector<ExtraTermRow> extra_term_table(
    const std::vector<std::pair<std::string, DyadicBuckets>>& spectra,
    std::size_t T) {
  if (T < 1) throw NumericError("horizon must be >= 1");
  std::vector<ExtraTermRow> rows;
  rows.reserve(spectra.size());
  for (const auto& [name, b] : spectra) {
    ExtraTermRow row;
    row.name = name;
    row.inverse_time = b.kappa;
    row.step_decay = std::log2(static_cast<double>(T));
    row.eigencurve = sqrt_mass_squared(b) / b.mass();
    rows.push_back(row);
  }
  return rows;
}

inline void write_extra_term_csv(std::ostream& out,
                                 const std::vector<ExtraTermRow>& rows) {
  const auto old = out.precision(10);
  out << "name,inverse_time,step_decay,eigencurve,minimax\n";
  for (const auto& r : rows)
    out << r.name << ',' << r.inverse_time << ',' << r.step_decay << ','
        << r.eigencurve << ',' << r.minimax << '\n';
  out.precision(old);
}

}  // namespace eigencurve
