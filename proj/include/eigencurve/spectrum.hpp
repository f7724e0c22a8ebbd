#pragma once
// Eigenvalue distributions of Hessians: ESD ingestion, preprocessing, dyadic
// bucketing and synthetic power-law spectra.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "eigencurve/error.hpp"

namespace eigencurve {

struct SpectrumEntry {
  double lambda = 0.0;
  double weight = 0.0;  // eigenvalue count or histogram density

  friend bool operator==(const SpectrumEntry&, const SpectrumEntry&) = default;
};

/// Weighted eigenvalue list, kept sorted ascending by lambda.
///
/// Raw spectra straight from a file may hold zero or negative eigenvalues;
/// preprocess() produces the strictly positive form the schedulers consume.
class EigenSpectrum {
 public:
  EigenSpectrum() = default;

  explicit EigenSpectrum(std::vector<SpectrumEntry> entries)
      : entries_(std::move(entries)) {
    if (entries_.empty()) throw NumericError("empty spectrum");
    for (const auto& e : entries_) {
      if (!std::isfinite(e.lambda) || !std::isfinite(e.weight))
        throw NumericError("non-finite spectrum entry");
      if (e.weight < 0.0) throw NumericError("negative spectrum weight");
    }
    std::stable_sort(entries_.begin(), entries_.end(),
                     [](const SpectrumEntry& a, const SpectrumEntry& b) {
                       return a.lambda < b.lambda;
                     });
    mass_ = 0.0;
    for (const auto& e : entries_) mass_ += e.weight;
    if (!(mass_ > 0.0)) throw NumericError("spectrum has zero total mass");
  }

  /// Unit-weight spectrum from explicit eigenvalues.
  static EigenSpectrum from_eigenvalues(const std::vector<double>& lambdas) {
    std::vector<SpectrumEntry> entries;
    entries.reserve(lambdas.size());
    for (double l : lambdas) entries.push_back({l, 1.0});
    return EigenSpectrum(std::move(entries));
  }

  const std::vector<SpectrumEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  double mass() const noexcept { return mass_; }
  double min_lambda() const { return entries_.front().lambda; }
  double max_lambda() const { return entries_.back().lambda; }

  bool all_positive() const {
    return std::all_of(entries_.begin(), entries_.end(),
                       [](const SpectrumEntry& e) { return e.lambda > 0.0; });
  }

  EigenSpectrum scaled(double c) const {
    auto copy = entries_;
    for (auto& e : copy) e.lambda *= c;
    return EigenSpectrum(std::move(copy));
  }

  friend bool operator==(const EigenSpectrum& a, const EigenSpectrum& b) {
    return a.entries_ == b.entries_;
  }

 private:
  std::vector<SpectrumEntry> entries_;
  double mass_ = 0.0;
};

/// Dyadic eigenvalue ranges [mu 2^i, mu 2^{i+1}); the last range is closed at L.
struct DyadicBuckets {
  double mu = 1.0;
  double L = 1.0;
  double kappa = 1.0;
  std::vector<double> s;  // mass per range, size I_max

  std::size_t i_max() const noexcept { return s.size(); }
  double mass() const { return std::accumulate(s.begin(), s.end(), 0.0); }
  std::size_t nonempty() const {
    return static_cast<std::size_t>(
        std::count_if(s.begin(), s.end(), [](double v) { return v > 0.0; }));
  }
};

/// Number of dyadic ranges needed to cover [mu, mu*kappa].
inline std::size_t dyadic_range_count(double kappa) {
  if (!(kappa > 1.0)) return 1;
  const auto n = static_cast<std::size_t>(std::ceil(std::log2(kappa)));
  // log2 of an exact power of two can land one ulp high
  if (n > 1 && std::ldexp(1.0, static_cast<int>(n) - 1) >= kappa) return n - 1;
  return std::max<std::size_t>(n, 1);
}

/// Density p(lambda) = (mu/lambda)^alpha / Z on [mu, L].
struct PowerLawSpec {
  double alpha = 2.0;
  double mu = 1.0;
  double L = 2.0;

  PowerLawSpec() = default;
  PowerLawSpec(double alpha_, double mu_, double L_)
      : alpha(alpha_), mu(mu_), L(L_) {
    if (!(alpha > 1.0)) throw NumericError("power law requires alpha > 1");
    if (!(mu > 0.0)) throw NumericError("power law requires mu > 0");
    if (!(L >= mu)) throw NumericError("power law requires L >= mu");
  }

  double kappa() const { return L / mu; }

  /// Z = integral of (mu/lambda)^alpha over [mu, L].
  double normalizer() const {
    return mu * (1.0 - std::pow(kappa(), 1.0 - alpha)) / (alpha - 1.0);
  }

  double density(double lambda) const {
    if (lambda < mu || lambda > L) return 0.0;
    return std::pow(mu / lambda, alpha) / normalizer();
  }

  /// Inverse of the cumulative distribution, u in [0, 1].
  double quantile(double u) const {
    // (1 - u) + u q avoids the cancellation in 1 - u (1 - q) for steep laws
    const double q = std::pow(L / mu, 1.0 - alpha);
    const double x = mu * std::pow((1.0 - u) + u * q, 1.0 / (1.0 - alpha));
    return std::clamp(x, mu, L);
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' ||
           c == '\v';
  };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    const std::size_t start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

/// Strict decimal (scientific allowed) parse of the whole token.
inline bool parse_double(std::string_view tok, double& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && tok.size() > 0;
}

}  // namespace detail

/// Reads the two-column ESD text format: `<lambda> <weight>` per line,
/// `#` comment lines and blank lines ignored.
inline EigenSpectrum parse_esd(std::istream& in) {
  std::vector<SpectrumEntry> entries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = detail::trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto toks = detail::split_ws(body);
    if (toks.size() != 2)
      throw ParseError("expected '<lambda> <weight>'", lineno);
    SpectrumEntry e;
    if (!detail::parse_double(toks[0], e.lambda) || !std::isfinite(e.lambda))
      throw ParseError("invalid eigenvalue '" + std::string(toks[0]) + "'",
                       lineno);
    if (!detail::parse_double(toks[1], e.weight) || !std::isfinite(e.weight) ||
        e.weight < 0.0)
      throw ParseError("invalid weight '" + std::string(toks[1]) + "'", lineno);
    entries.push_back(e);
  }
  if (entries.empty()) throw ParseError("no spectrum entries", lineno);
  return EigenSpectrum(std::move(entries));
}

inline EigenSpectrum parse_esd_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open spectrum file '" + path + "'");
  return parse_esd(in);
}

inline void write_esd(std::ostream& out, const EigenSpectrum& spec) {
  const auto old = out.precision(17);
  for (const auto& e : spec.entries()) out << e.lambda << ' ' << e.weight << '\n';
  out.precision(old);
}

/// Absolute values plus weight decay; exact zeros become weight_decay.
inline EigenSpectrum preprocess(const EigenSpectrum& raw, double weight_decay) {
  if (!(weight_decay >= 0.0)) throw NumericError("weight decay must be >= 0");
  auto entries = raw.entries();
  for (auto& e : entries) {
    e.lambda = std::abs(e.lambda) + weight_decay;
    if (e.lambda == 0.0)
      throw NumericError("degenerate spectrum: zero eigenvalue with zero weight decay");
  }
  return EigenSpectrum(std::move(entries));
}

/// Index of the dyadic range holding lambda; lambda == L closes the last range.
inline std::size_t dyadic_index(double lambda, double mu, std::size_t i_max) {
  const double ratio = lambda / mu;
  if (ratio < 2.0) return 0;
  auto i = static_cast<long>(std::floor(std::log2(ratio)));
  // correct for log2 rounding at the range edges
  while (i > 0 && lambda < std::ldexp(mu, static_cast<int>(i))) --i;
  while (lambda >= std::ldexp(mu, static_cast<int>(i) + 1)) ++i;
  return std::min(static_cast<std::size_t>(i), i_max - 1);
}

inline DyadicBuckets bucketize(const EigenSpectrum& spec) {
  if (spec.size() == 0) throw NumericError("empty spectrum");
  if (!spec.all_positive())
    throw NumericError("bucketize requires strictly positive eigenvalues");
  DyadicBuckets b;
  b.mu = spec.min_lambda();
  b.L = spec.max_lambda();
  b.kappa = b.L / b.mu;
  b.s.assign(dyadic_range_count(b.kappa), 0.0);
  for (const auto& e : spec.entries())
    b.s[dyadic_index(e.lambda, b.mu, b.s.size())] += e.weight;
  return b;
}

/// Bucket masses of a total mass d distributed by the power law. Ranges below
/// the last get the closed-form integral; the last, truncated at L, receives
/// the remaining mass.
inline DyadicBuckets power_law_buckets(const PowerLawSpec& pl, double d) {
  if (!(pl.alpha > 1.0)) throw NumericError("power law requires alpha > 1");
  if (!(d > 0.0)) throw NumericError("power law mass must be > 0");
  DyadicBuckets b;
  b.mu = pl.mu;
  b.L = pl.L;
  b.kappa = pl.kappa();
  if (b.kappa < 2.0) {
    b.s = {d};
    return b;
  }
  const std::size_t n = dyadic_range_count(b.kappa);
  b.s.assign(n, 0.0);
  const double e = 1.0 - pl.alpha;
  const double head = (std::pow(2.0, e) - 1.0) / (std::pow(b.kappa, e) - 1.0);
  double assigned = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    b.s[i] = d * std::pow(2.0, static_cast<double>(i) * e) * head;
    assigned += b.s[i];
  }
  b.s[n - 1] = std::max(0.0, d - assigned);
  return b;
}

/// n i.i.d. eigenvalues drawn from the power law by inverse-CDF sampling.
inline EigenSpectrum sample_power_law(const PowerLawSpec& pl, std::size_t n,
                                      std::uint64_t seed) {
  if (n == 0) throw NumericError("cannot sample an empty spectrum");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> lambdas(n);
  for (auto& l : lambdas) l = pl.quantile(unif(rng));
  return EigenSpectrum::from_eigenvalues(lambdas);
}

/// d eigenvalues at evenly spaced CDF levels j/(d-1), endpoints included.
inline std::vector<double> power_law_quantiles(const PowerLawSpec& pl,
                                               std::size_t d) {
  if (d == 0) throw NumericError("cannot build an empty spectrum");
  std::vector<double> out(d);
  if (d == 1) {
    out[0] = pl.mu;
    return out;
  }
  for (std::size_t j = 0; j < d; ++j)
    out[j] = pl.quantile(static_cast<double>(j) / static_cast<double>(d - 1));
  out.front() = pl.mu;
  out.back() = pl.L;
  return out;
}

}  // namespace eigencurve
