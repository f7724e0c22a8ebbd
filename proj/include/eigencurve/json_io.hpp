#pragma once
// JSON views of problems, buckets and reports (nlohmann/json).

#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

#include "eigencurve/bounds.hpp"
#include "eigencurve/error.hpp"
#include "eigencurve/quadsim.hpp"
#include "eigencurve/schedules.hpp"
#include "eigencurve/spectrum.hpp"

namespace eigencurve {

using json = nlohmann::ordered_json;

/// {"lambdas": [...], "offset0": [...], "sigma": s}
inline QuadraticProblem problem_from_json(const json& j) {
  try {
    return QuadraticProblem(j.at("lambdas").get<std::vector<double>>(),
                            j.at("offset0").get<std::vector<double>>(),
                            j.at("sigma").get<double>());
  } catch (const json::exception& e) {
    throw ParseError(std::string("problem JSON: ") + e.what(), 1);
  }
}

inline json to_json(const QuadraticProblem& p) {
  return {{"lambdas", p.lambdas}, {"offset0", p.offset0}, {"sigma", p.sigma}};
}

inline QuadraticProblem read_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open problem file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("problem JSON: ") + e.what(), 1);
  }
  return problem_from_json(j);
}

inline json to_json(const DyadicBuckets& b) {
  return {{"mu", b.mu},   {"L", b.L},    {"kappa", b.kappa},
          {"I_max", b.i_max()}, {"s", b.s}, {"d", b.mass()}};
}

inline json to_json(const BoundReport& r) {
  return {{"name", r.name},
          {"bias_bound", r.bias_bound},
          {"variance_bound", r.variance_bound},
          {"total_bound", r.total_bound},
          {"extra_term", r.extra_term}};
}

struct SimulationReport {
  std::string schedule_kind;
  std::size_t T = 0;
  std::size_t d = 0;
  double sigma = 0.0;
  double exact_total = 0.0;
  double bias_sum = 0.0;
  double var_sum = 0.0;
  std::optional<MonteCarloEstimate> mc;
};

inline SimulationReport make_simulation_report(const QuadraticProblem& p,
                                               const Schedule& s,
                                               const ExactLossReport& exact) {
  SimulationReport r;
  r.schedule_kind = to_string(s.kind());
  r.T = s.horizon();
  r.d = p.dim();
  r.sigma = p.sigma;
  r.exact_total = exact.total;
  r.bias_sum = exact.bias_sum();
  r.var_sum = exact.var_sum();
  return r;
}

/// {schedule_kind, T, d, sigma, exact_total, mc_mean, mc_stderr, bias_sum, var_sum};
/// the Monte Carlo fields are null for exact-only runs.
inline json to_json(const SimulationReport& r) {
  json j{{"schedule_kind", r.schedule_kind},
         {"T", r.T},
         {"d", r.d},
         {"sigma", r.sigma},
         {"exact_total", r.exact_total},
         {"mc_mean", nullptr},
         {"mc_stderr", nullptr},
         {"bias_sum", r.bias_sum},
         {"var_sum", r.var_sum}};
  if (r.mc) {
    j["mc_mean"] = r.mc->mean;
    j["mc_stderr"] = r.mc->standard_error;
  }
  return j;
}

}  // namespace eigencurve
