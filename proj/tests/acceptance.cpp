// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
// Set EIGENCURVE_A4A=/path/to/a4a to run the ridge criterion on real data.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "eigencurve/bounds.hpp"
#include "eigencurve/eigencurve.hpp"
#include "eigencurve/quadsim.hpp"
#include "eigencurve/ridge.hpp"
#include "eigencurve/schedules.hpp"

using namespace eigencurve;

namespace {

int failures = 0;

void report(const char* id, bool ok, const std::string& what, double seconds) {
  std::printf("[%s] %s %s (%.1fs)\n", ok ? "PASS" : "FAIL", id, what.c_str(), seconds);
  std::fflush(stdout);
  if (!ok) ++failures;
}

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void oracle_equivalence() {
  Timer timer;
  std::mt19937_64 rng(2023);
  std::uniform_real_distribution<double> lam(1.0, 100.0);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> l(8), d0(8);
  for (std::size_t j = 0; j < 8; ++j) {
    l[j] = lam(rng);
    d0[j] = g(rng);
  }
  const QuadraticProblem p(l, d0, 0.1);
  const std::size_t T = 1000;
  const double eta = 1.0 / p.L();
  const auto buckets = bucketize(EigenSpectrum::from_eigenvalues(l));
  const std::vector<Schedule> all{
      build_constant(T, 0.5 * eta),
      build_inverse_time(T, p.L(), p.mu()),
      build_exponential(T, eta, 1e-3 * eta),
      build_cosine(T, eta, 0.0),
      build_cosine_power(T, eta, 0.0, 2.0),
      build_step_decay_ge(T, eta),
      build_general_step_decay(T, eta, 4, 10.0),
      build_elastic_step_decay(T, eta, 0.5),
      build_eigencurve_theoretical(buckets, T),
  };
  bool ok = true;
  double worst = 0.0;
  for (std::size_t k = 0; k < all.size(); ++k) {
    const auto mc = monte_carlo_expected_loss(p, all[k], 10000, 100 + k);
    const double exact = exact_expected_loss(p, all[k]).total;
    const double z = std::abs(mc.mean - exact) / mc.standard_error;
    worst = std::max(worst, z);
    ok = ok && z <= 4.0;
  }
  report("1", ok,
         "oracle equivalence: " + std::to_string(all.size()) +
             " families, 1e4 runs each, worst |mean - exact| = " + num(worst) + " SE (<= 4)",
         timer.seconds());
}

void prop1_per_coordinate() {
  Timer timer;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  bool ok = true;
  double worst_ratio = 0.0, worst_bias = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t d = 1 + rng() % 32;
    std::vector<double> l(d), d0(d);
    for (std::size_t j = 0; j < d; ++j) {
      l[j] = std::pow(10.0, 3.0 * u(rng) - 1.0);
      d0[j] = g(rng);
    }
    const QuadraticProblem p(l, d0, 2.0 * u(rng));
    const std::size_t T = 1 + rng() % 5000;
    const auto exact = exact_expected_loss_per_coordinate_schedule(p, T);
    const auto bound = prop1_bound(p, T);
    double weighted = 0.0;
    for (std::size_t j = 0; j < d; ++j) weighted += l[j] * d0[j] * d0[j];
    const double t1 = static_cast<double>(T) + 1.0;
    const double bias_ref = weighted / (t1 * t1);
    const double rel = std::abs(exact.bias_sum() - bias_ref) / bias_ref;
    worst_bias = std::max(worst_bias, rel);
    worst_ratio = std::max(worst_ratio, exact.total / bound.total_bound);
    // the bound is attained with equality, so allow rounding slack
    ok = ok && exact.total <= bound.total_bound * (1.0 + 1e-12) && rel <= 1e-10;
  }
  report("2", ok,
         "coordinate-wise rates: 50 instances, max exact/bound = " + num(worst_ratio) +
             ", max bias rel. error = " + num(worst_bias) + " (<= 1e-10)",
         timer.seconds());
}

void eigencurve_soundness() {
  Timer timer;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  bool ok = true;
  double worst_l = 0.0, worst_t = 0.0;
  const int instances = 250;
  for (int rep = 0; rep < instances; ++rep) {
    const std::size_t d = 1 + rng() % 32;
    const double mu = std::pow(10.0, 2.0 * u(rng) - 1.0);
    const double kappa = std::pow(10.0, 4.0 * u(rng));
    std::vector<double> l(d), d0(d);
    for (std::size_t j = 0; j < d; ++j) {
      l[j] = mu * std::pow(kappa, u(rng));
      d0[j] = g(rng);
    }
    l[0] = mu;
    if (d > 1) l[1] = mu * kappa;
    const QuadraticProblem p(l, d0, 3.0 * u(rng));
    const auto b = bucketize(EigenSpectrum::from_eigenvalues(l));
    const std::size_t T = std::max<std::size_t>(b.nonempty(), 1 + rng() % 5000);
    const auto delta = allocate_delta_sqrt(b, T);
    const auto s = build_eigencurve(b, T, delta, 1.0 / b.L, 2.0);
    const double exact = exact_expected_loss(p, s).total;
    const double f0 = p.initial_gap();
    const double lb = lemma1_bound(b, delta, T, f0, p.sigma).total_bound;
    const double tb = theorem1_bound(b, T, f0, p.sigma).total_bound;
    worst_l = std::max(worst_l, exact / lb);
    worst_t = std::max(worst_t, exact / tb);
    ok = ok && exact <= lb && exact <= tb;
  }
  report("3", ok,
         "eigencurve bound soundness: " + std::to_string(instances) +
             " instances, max exact/lemma = " + num(worst_l) +
             ", max exact/theorem = " + num(worst_t),
         timer.seconds());
}

void log_t_gap() {
  Timer timer;
  const std::size_t T = std::size_t{1} << 21;
  const QuadraticProblem small({1.0, 2.0, 5.0, 10.0}, {1.0, 1.0, 1.0, 1.0}, 1.0);
  const double eta1 = 1.0 / small.L();
  const auto lb = step_decay_lower_bound(small.dim(), small.sigma, T, eta1, small.lambdas,
                                         small.offset0);
  const double step_exact = exact_expected_loss(small, build_step_decay_ge(T, eta1)).total;
  const bool part_a = lb.threshold_ok && step_exact >= lb.bound_value;

  const auto lam = power_law_quantiles(PowerLawSpec(2.0, 1.0, 1024.0), 64);
  const QuadraticProblem pl(lam, std::vector<double>(64, 1.0), 1.0);
  const auto b = bucketize(EigenSpectrum::from_eigenvalues(lam));
  std::vector<double> ratios;
  for (int e : {17, 19, 21}) {
    const std::size_t t = std::size_t{1} << e;
    const double step = exact_expected_loss(pl, build_step_decay_ge(t, 1.0 / pl.L())).total;
    const double eig = exact_expected_loss(pl, build_eigencurve_theoretical(b, t)).total;
    ratios.push_back(step / eig);
  }
  const bool part_b = ratios[2] > 1.0 && ratios[0] < ratios[1] && ratios[1] < ratios[2];
  report("4", part_a && part_b,
         "log T gap: step decay exact " + num(step_exact) + " >= lower bound " +
             num(lb.bound_value) + "; step/eigencurve at T=2^17,2^19,2^21 = " +
             num(ratios[0]) + ", " + num(ratios[1]) + ", " + num(ratios[2]),
         timer.seconds());
}

void skewed_constant() {
  Timer timer;
  DyadicBuckets b;
  b.mu = 1.0;
  b.kappa = std::ldexp(1.0, 100);
  b.L = b.kappa;
  const double d = 1.0;
  b.s.assign(100, 0.01 * d / 99.0);
  b.s[0] = 0.99 * d;
  const double r = sqrt_mass_squared(b) / d;
  report("5", r < 4.0 && std::abs(r - 3.96) < 0.01,
         "skewed spectrum: (sum sqrt s)^2 = " + num(r) + " d (< 4d)", timer.seconds());
}

void power_law_constant_checks() {
  Timer timer;
  bool ok = power_law_constant(3.0) == 60.0;
  double prev = std::numeric_limits<double>::infinity();
  for (double a : {1.1, 1.5, 2.0, 3.0, 5.0, 10.0, 50.0}) {
    const double c = power_law_constant(a);
    ok = ok && c < prev;
    prev = c;
  }
  const double c50 = power_law_constant(50.0);
  ok = ok && std::abs(c50 - 15.0) <= 0.15;
  report("6", ok,
         "power-law constant: C(3) = " + num(power_law_constant(3.0)) +
             ", strictly decreasing on the grid, C(50) = " + num(c50),
         timer.seconds());
}

void ridge_ordering() {
  Timer timer;
  const char* a4a = std::getenv("EIGENCURVE_A4A");
  ridge::Dataset data;
  std::string source;
  if (a4a && *a4a) {
    data = ridge::parse_libsvm_file(a4a);
    source = "a4a";
  } else {
    // planted power-law spectrum standing in for a4a
    data = ridge::make_power_law_dataset(2000, 64, 2.0, 0.01, 1000.0, 1.0, 1);
    source = "synthetic";
  }
  const auto model = ridge::fit_closed_form(data, 1e-3);
  const auto grid = ridge::Grid::paper_default();
  bool ok = true;
  std::string detail;
  double eig5 = 0.0;
  for (std::size_t epochs : {1u, 5u}) {
    const auto run = [&](ridge::Family f) {
      return ridge::grid_search(data, model, f, grid, epochs, 5, {1, 2023, 2.0, 0}).best.mean_gap;
    };
    const double e = run(ridge::Family::eigencurve);
    const double c = run(ridge::Family::cosine);
    const double i = run(ridge::Family::inverse_time);
    if (epochs == 5) eig5 = e;
    ok = ok && e <= c && c <= i;
    detail += " epochs=" + std::to_string(epochs) + ": eigencurve " + num(e) + ", cosine " +
              num(c) + ", inverse " + num(i) + ";";
  }
  if (source == "a4a") {
    const bool close = eig5 >= 0.000676 / 3.0 && eig5 <= 0.000676 * 3.0;
    ok = ok && close;
    detail += " 5-epoch eigencurve within 3x of 6.76e-4: " + std::string(close ? "yes" : "no");
  }
  report("7", ok, "ridge family ordering (" + source + ", 5 trials, full grid):" + detail,
         timer.seconds());
}

}  // namespace

int main() {
  oracle_equivalence();
  prop1_per_coordinate();
  eigencurve_soundness();
  log_t_gap();
  skewed_constant();
  power_law_constant_checks();
  ridge_ordering();
  std::printf("[N/A ] 8 neural-network benchmarks are out of scope; criteria 3 and 4 stand in\n");
  std::printf("%s: %d criterion(s) failed\n", failures ? "FAILED" : "OK", failures);
  return failures ? 1 : 0;
}
