#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "eigencurve/bounds.hpp"
#include "eigencurve/eigencurve.hpp"

using namespace eigencurve;
using Catch::Approx;

namespace {

DyadicBuckets make_buckets(std::vector<double> s, double mu = 1.0) {
  DyadicBuckets b;
  b.mu = mu;
  b.kappa = std::ldexp(1.0, static_cast<int>(s.size()));
  b.L = mu * b.kappa;
  b.s = std::move(s);
  return b;
}

}  // namespace

TEST_CASE("power-law constant", "[bounds][constant]") {
  CHECK(power_law_constant(3.0) == 60.0);
  CHECK(power_law_constant(2.0) == Approx(174.85).epsilon(1e-4));
  CHECK(power_law_constant(50.0) == Approx(15.0).epsilon(0.01));
  CHECK(power_law_constant(3.0, 1.5) == 15.0);
  double prev = power_law_constant(1.01);
  for (double a : {1.1, 1.5, 2.0, 3.0, 5.0, 10.0, 50.0}) {
    const double c = power_law_constant(a);
    CHECK(c < prev);
    CHECK(c > 15.0);
    prev = c;
  }
  CHECK_THROWS_AS(power_law_constant(1.0), NumericError);
}

TEST_CASE("theorem 1 constants", "[bounds][theorem1]") {
  SECTION("skewed spectrum stays below 4d") {
    const double d = 1.0;
    std::vector<double> s(100, 0.01 * d / 99.0);
    s[0] = 0.99 * d;
    const auto b = make_buckets(s);
    const double r = sqrt_mass_squared(b);
    const double expected = std::pow(std::sqrt(0.99) + 99.0 * std::sqrt(0.01 / 99.0), 2);
    CHECK(r == Approx(expected).epsilon(1e-12));
    CHECK(r < 4.0 * d);
    CHECK(r == Approx(3.96).margin(0.01));
  }
  SECTION("single bucket") {
    const auto b = make_buckets({10.0});
    const auto r = theorem1_bound(b, 100, 0.0, 2.0);
    CHECK(r.variance_bound == Approx(15.0 * 10.0 * 4.0 / 100.0));
    CHECK(r.extra_term == Approx(15.0));
    CHECK(r.bias_bound == 0.0);
  }
  SECTION("uniform buckets") {
    const std::size_t n = 10;
    const auto b = make_buckets(std::vector<double>(n, 3.0));
    const double d = 3.0 * n;
    const auto r = theorem1_bound(b, 500, 0.0, 1.0);
    CHECK(r.variance_bound == Approx(15.0 * d * std::log2(b.kappa) / 500.0));
  }
  CHECK_THROWS_AS(theorem1_bound(make_buckets({0.0, 1.0}), 10, 1.0, 1.0), NumericError);
  SECTION("d <= (sum sqrt s)^2 <= I_max d") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 200; ++rep) {
      std::vector<double> s(1 + rng() % 20);
      for (auto& v : s) v = u(rng) < 0.2 ? 0.0 : u(rng) * 10.0;
      s[0] += 0.1;
      const auto b = make_buckets(s);
      const double r = sqrt_mass_squared(b);
      CHECK(r >= b.mass() * (1.0 - 1e-12));
      CHECK(r <= static_cast<double>(b.i_max()) * b.mass() * (1.0 + 1e-12));
      CHECK(theorem1_bound(b, 100, 1.0, 1.0).extra_term >= 15.0 * (1.0 - 1e-12));
    }
  }
}

TEST_CASE("lemma 1", "[bounds][lemma1]") {
  const auto b = make_buckets({6.0}, 0.5);
  const auto r = lemma1_bound(b, {40}, 40, 2.0, 0.3);
  CHECK(r.variance_bound == Approx(7.5 * 0.09 * 0.5 * 2.0 * 6.0 / (b.L + 0.5 * 40.0)));
  CHECK(r.bias_bound == Approx(2.0 * b.kappa * b.kappa / 1600.0));
  CHECK(lemma1_bound(b, {40}, 40, 2.0, 0.0).variance_bound == 0.0);
  CHECK(lemma1_bound(b, {40}, 40, 0.0, 0.0).total_bound == 0.0);
  const auto two = make_buckets({1.0, 1.0});
  CHECK_THROWS_AS(lemma1_bound(two, {0, 10}, 10, 1.0, 1.0), NumericError);
  CHECK_THROWS_AS(lemma1_bound(two, {5, 4}, 10, 1.0, 1.0), NumericError);
}

TEST_CASE("corollary 1", "[bounds][corollary1]") {
  const PowerLawSpec pl(3.0, 1.0, 64.0);
  CHECK(corollary1_bound(pl, 100.0, 10000, 0.0, 1.0).total_bound == Approx(0.6).epsilon(1e-14));
  CHECK(corollary1_bound(pl, 100.0, 10000, 0.0, 0.0).total_bound == 0.0);
  for (double alpha : {1.5, 2.0, 3.0}) {
    for (double kappa : {4.0, 64.0, 1024.0}) {
      const PowerLawSpec spec(alpha, 1.0, kappa);
      const double d = 50.0;
      const auto buckets = power_law_buckets(spec, d);
      for (std::size_t T : {100u, 10000u}) {
        const auto c = corollary1_bound(spec, d, T, 1.0, 1.0);
        const auto t = theorem1_bound(buckets, T, 1.0, 1.0);
        CHECK(c.variance_bound >= t.variance_bound);
        CHECK(c.bias_bound >= t.bias_bound);
      }
    }
  }
}

TEST_CASE("diagonal propositions", "[bounds][prop]") {
  const QuadraticProblem p({1.0, 3.0}, {1.0, 2.0}, 0.5);
  const auto a = prop1_bound(p, 9);
  CHECK(a.bias_bound == Approx(0.5 * 13.0 / 100.0));
  CHECK(a.variance_bound == Approx(0.5 * 9.0 / 100.0 * 2.0 * 0.25));
  QuadraticProblem quiet = p;
  quiet.sigma = 0.0;
  CHECK(prop1_bound(quiet, 1000000).total_bound < 1e-10);
  CHECK(prop2_bound(quiet, 100000000).total_bound < 1e-10);

  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> l(0.5, 100.0);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t d = 1 + rng() % 10;
    std::vector<double> lam(d), off(d);
    for (std::size_t j = 0; j < d; ++j) {
      lam[j] = l(rng);
      off[j] = g(rng);
    }
    const QuadraticProblem q(lam, off, std::abs(g(rng)));
    const std::size_t T = 1 + rng() % 3000;
    CHECK(exact_expected_loss_per_coordinate_schedule(q, T).total <=
          prop1_bound(q, T).total_bound * (1.0 + 1e-12));
    CHECK(exact_expected_loss(q, build_inverse_time(T, q.L(), q.mu())).total <=
          prop2_bound(q, T).total_bound);
  }
}

TEST_CASE("step decay lower bound", "[bounds][steplower]") {
  const std::vector<double> lam{1.0, 2.0, 5.0, 10.0};
  const std::vector<double> off{1.0, 1.0, 1.0, 1.0};
  const std::size_t T = std::size_t{1} << 21;
  const auto r = step_decay_lower_bound(4, 1.0, T, 0.1, lam, off);
  CHECK(r.threshold_ok);
  CHECK(r.main_requirement);
  CHECK(r.bound_value == Approx(4.0 * 21.0 / (1024.0 * static_cast<double>(T))).epsilon(1e-15));

  // small mu keeps the alternative requirement out of reach
  const std::vector<double> wide{0.01, 2.0, 5.0, 10.0};
  const auto small = step_decay_lower_bound(4, 1.0, 100, 0.1, wide, off);
  CHECK_FALSE(small.main_requirement);
  CHECK_FALSE(small.threshold_ok);
  // the alternative requirement alone can pass
  const auto alt = step_decay_lower_bound(2, 1.0, 100, 1e-3, {1e3, 1e3}, {1.0, 1.0});
  CHECK(alt.alt_requirement);
  CHECK_FALSE(alt.main_requirement);
  CHECK(alt.threshold_ok);
  CHECK_THROWS_AS(step_decay_lower_bound(4, 1.0, 100, 0.2, lam, off), NumericError);
}

TEST_CASE("extra-term table", "[bounds][table]") {
  const auto single = make_buckets({5.0});
  const auto two = make_buckets({3.0, 3.0});
  const auto pl = power_law_buckets(PowerLawSpec(2.0, 1.0, 1024.0), 100.0);
  const auto rows = extra_term_table({{"single", single}, {"halves", two}, {"powerlaw", pl}},
                                     std::size_t{1} << 16);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].eigencurve == Approx(1.0));
  CHECK(rows[1].eigencurve == Approx(2.0));
  CHECK(rows[1].step_decay == 16.0);
  CHECK(rows[2].inverse_time == Approx(1024.0));
  CHECK(rows[2].eigencurve < 0.01 * rows[2].inverse_time);
  CHECK(rows[2].minimax == 1.0);

  std::ostringstream out;
  write_extra_term_csv(out, {rows[0], rows[1]});
  const std::string text = out.str();
  CHECK(text.rfind("name,inverse_time,step_decay,eigencurve,minimax\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);
}
