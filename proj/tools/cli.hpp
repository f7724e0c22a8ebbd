#pragma once
// Command-line front end. run() is kept separate from main() so the tests can
// drive it in-process.

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "eigencurve/bounds.hpp"
#include "eigencurve/eigencurve.hpp"
#include "eigencurve/error.hpp"
#include "eigencurve/json_io.hpp"
#include "eigencurve/quadsim.hpp"
#include "eigencurve/ridge.hpp"
#include "eigencurve/schedule_io.hpp"
#include "eigencurve/schedules.hpp"
#include "eigencurve/spectrum.hpp"

namespace eigencurve::cli {

namespace detail {

// Writes to --out when given, otherwise to the caller's stream.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : out_(&fallback) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw IoError("cannot open output file '" + path + "'");
      out_ = &file_;
    }
  }
  std::ostream& operator*() { return *out_; }

  void finish() {
    out_->flush();
    if (!*out_) throw IoError("write failed");
  }

 private:
  std::ofstream file_;
  std::ostream* out_;
};

inline std::vector<std::string> header_lines(const std::string& invocation,
                                             std::uint64_t seed) {
  return {"invocation: " + invocation, "seed: " + std::to_string(seed)};
}

inline void write_header(std::ostream& out, const std::vector<std::string>& lines) {
  for (const auto& l : lines) out << "# " << l << '\n';
}

inline void write_json(std::ostream& out, const std::vector<std::string>& header,
                       const json& j) {
  write_header(out, header);
  out << j.dump(2) << '\n';
}

/// JSON text after any leading '#' header lines.
inline json parse_headed_json(std::istream& in) {
  std::string line, body;
  bool in_header = true;
  while (std::getline(in, line)) {
    if (in_header && !line.empty() && line.front() == '#') continue;
    in_header = false;
    body += line;
    body += '\n';
  }
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("JSON: ") + e.what(), 1);
  }
}

struct ProblemFile {
  QuadraticProblem problem;
  std::optional<std::size_t> T;  // optional horizon the problem is meant for
};

inline ProblemFile load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open problem file '" + path + "'");
  const auto j = parse_headed_json(in);
  ProblemFile pf{problem_from_json(j), std::nullopt};
  if (j.contains("T")) {
    try {
      pf.T = j.at("T").get<std::size_t>();
    } catch (const json::exception& e) {
      throw ParseError(std::string("problem JSON: ") + e.what(), 1);
    }
  }
  return pf;
}

inline EigenSpectrum problem_spectrum(const QuadraticProblem& p) {
  return EigenSpectrum::from_eigenvalues(p.lambdas);
}

inline EigenSpectrum load_spectrum(const std::string& esd, const std::string& problem) {
  if (!esd.empty() && !problem.empty())
    throw UsageError("give either --spectrum or --problem, not both");
  if (!esd.empty()) return parse_esd_file(esd);
  if (!problem.empty()) return problem_spectrum(load_problem(problem).problem);
  throw UsageError("a spectrum is required (--spectrum <esd> or --problem <json>)");
}

inline std::vector<std::size_t> allocate(const DyadicBuckets& b, std::size_t T,
                                         const std::string& how) {
  if (how == "sqrt") return allocate_delta_sqrt(b, T);
  if (how == "numeric") return allocate_delta_numeric(b, T);
  throw UsageError("unknown allocation '" + how + "' (sqrt|numeric)");
}

inline double need(const CLI::Option* opt, double value, const std::string& family) {
  if (opt->count() == 0)
    throw UsageError("family '" + family + "' requires " + opt->get_name());
  return value;
}

inline std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) {
    if (!s.empty()) s += ' ';
    s += x;
  }
  return s;
}

inline std::string fmt(double v) {
  std::ostringstream o;
  o.precision(17);
  o << v;
  return o.str();
}

}  // namespace detail

/// Runs the tool on argv[1..]; returns the process exit code.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  using namespace detail;
  const std::string invocation = "eigencurve_cli" + (args.empty() ? "" : " " + join(args));

  CLI::App app{"Eigenvalue-aware learning-rate schedules on quadratics"};
  app.require_subcommand(1);
  std::uint64_t seed = 0;
  std::string out_path;

  // spectrum
  auto* spectrum = app.add_subcommand("spectrum", "parse, preprocess and bucket spectra");
  spectrum->require_subcommand(1);
  std::string esd_path;
  double wd = 0.0;
  auto* sp_parse = spectrum->add_subcommand("parse", "canonical ESD export");
  sp_parse->add_option("file", esd_path, "ESD file")->required();
  sp_parse->add_option("--out", out_path);
  auto* sp_pre = spectrum->add_subcommand("preprocess", "|lambda| + wd");
  sp_pre->add_option("file", esd_path, "ESD file")->required();
  sp_pre->add_option("--wd", wd, "weight decay")->required();
  sp_pre->add_option("--out", out_path);
  auto* sp_bucket = spectrum->add_subcommand("bucketize", "dyadic bucket masses as JSON");
  sp_bucket->add_option("file", esd_path, "ESD file")->required();
  sp_bucket->add_option("--wd", wd, "preprocess with this weight decay first");
  sp_bucket->add_option("--out", out_path);
  auto* sp_pl = spectrum->add_subcommand("powerlaw", "power-law buckets or samples");
  double pl_alpha = 2.0, pl_mu = 1.0, pl_L = 1.0, pl_d = 1.0;
  std::size_t pl_sample = 0;
  sp_pl->add_option("--alpha", pl_alpha)->required();
  sp_pl->add_option("--mu", pl_mu)->required();
  sp_pl->add_option("--L", pl_L)->required();
  sp_pl->add_option("--d", pl_d)->required();
  sp_pl->add_option("--sample", pl_sample, "emit an ESD of n sampled eigenvalues instead");
  sp_pl->add_option("--seed", seed);
  sp_pl->add_option("--out", out_path);

  // schedule build
  auto* schedule = app.add_subcommand("schedule", "build learning-rate schedules");
  schedule->require_subcommand(1);
  auto* build = schedule->add_subcommand("build", "materialize a schedule as t,lr CSV");
  std::string family, spectrum_path, problem_path, allocation = "sqrt";
  std::size_t T = 0, intervals = 0;
  double eta0 = 0, eta_min = 0, L = 0, mu = 0, eta1 = 0, decay = 0, r = 0, power = 1,
         beta = 2;
  build->add_option("--family", family)->required();
  build->add_option("--T", T)->required();
  auto* o_eta0 = build->add_option("--eta0", eta0);
  auto* o_eta_min = build->add_option("--eta-min", eta_min);
  auto* o_L = build->add_option("--L", L);
  auto* o_mu = build->add_option("--mu", mu);
  auto* o_eta1 = build->add_option("--eta1", eta1);
  auto* o_intervals = build->add_option("--intervals", intervals);
  auto* o_decay = build->add_option("--decay", decay);
  auto* o_r = build->add_option("--r", r);
  auto* o_power = build->add_option("--power", power);
  build->add_option("--beta", beta);
  build->add_option("--spectrum", spectrum_path, "ESD file (eigencurve)");
  build->add_option("--problem", problem_path, "problem JSON (eigencurve)");
  build->add_option("--wd", wd);
  build->add_option("--allocation", allocation, "sqrt|numeric");
  build->add_option("--seed", seed);
  build->add_option("--out", out_path);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "exact or Monte Carlo expected loss");
  std::string schedule_path, mode = "exact";
  std::size_t sim_trials = 1000;
  unsigned threads = 0;
  simulate->add_option("--problem", problem_path)->required();
  simulate->add_option("--schedule", schedule_path)->required();
  simulate->add_option("--mode", mode, "exact|mc");
  simulate->add_option("--trials", sim_trials);
  auto* o_sim_T = simulate->add_option("--T", T, "expected horizon");
  simulate->add_option("--threads", threads);
  simulate->add_option("--seed", seed);
  simulate->add_option("--out", out_path);

  // bounds
  auto* bounds = app.add_subcommand("bounds", "evaluate convergence bounds");
  std::string which;
  std::vector<std::string> table_spectra;
  double f0 = 0, sigma = 0, alpha = 2, d = 1;
  bounds->add_option("--which", which, "lemma1|theorem1|corollary1|prop1|prop2|steplower|table")
      ->required();
  bounds->add_option("--T", T)->required();
  bounds->add_option("--spectrum", table_spectra, "ESD file(s)");
  bounds->add_option("--problem", problem_path);
  bounds->add_option("--wd", wd);
  auto* o_f0 = bounds->add_option("--f0", f0, "initial loss gap");
  auto* o_sigma = bounds->add_option("--sigma", sigma);
  bounds->add_option("--alpha", alpha);
  bounds->add_option("--mu", mu);
  bounds->add_option("--L", L);
  bounds->add_option("--d", d);
  auto* o_b_eta1 = bounds->add_option("--eta1", eta1);
  bounds->add_option("--allocation", allocation, "sqrt|numeric");
  bounds->add_option("--out", out_path);

  // ridge
  auto* ridge_cmd = app.add_subcommand("ridge", "ridge regression scheduler comparison");
  std::string data_path, traj_path;
  double alpha_reg = 1e-3;
  std::vector<std::string> families{"constant", "inverse_time", "exponential", "cosine",
                                    "eigencurve"};
  std::vector<std::size_t> epochs{1, 5};
  std::vector<double> grid_eta0;
  std::vector<std::string> grid_eta_min;
  std::size_t batch = 1;
  bool paper_grid = false, all_points = false;
  std::size_t trials = 5;
  ridge_cmd->add_option("--data", data_path, "libsvm file")->required();
  ridge_cmd->add_option("--alpha", alpha_reg);
  ridge_cmd->add_option("--family", families);
  ridge_cmd->add_option("--epochs", epochs);
  ridge_cmd->add_flag("--grid", paper_grid, "search the default eta0 x eta_min grid");
  ridge_cmd->add_option("--eta0", grid_eta0);
  ridge_cmd->add_option("--eta-min", grid_eta_min, "values or 'unrestricted'");
  ridge_cmd->add_option("--trials", trials);
  ridge_cmd->add_option("--batch", batch);
  ridge_cmd->add_option("--beta", beta);
  ridge_cmd->add_option("--threads", threads);
  ridge_cmd->add_flag("--all-points", all_points, "one row per grid point");
  ridge_cmd->add_option("--trajectories", traj_path, "JSON of best-point trajectories");
  ridge_cmd->add_option("--seed", seed);
  ridge_cmd->add_option("--out", out_path);

  // compare
  auto* compare = app.add_subcommand("compare", "exact losses and bounds across schedules");
  std::vector<std::size_t> horizons;
  std::vector<std::string> cmp_families{"inverse_time", "step_decay", "cosine", "eigencurve"};
  compare->add_option("--problem", problem_path)->required();
  compare->add_option("--T", horizons)->required();
  compare->add_option("--families", cmp_families);
  compare->add_option("--out", out_path);

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ErrorKind::usage);
  }

  try {
    const auto header = header_lines(invocation, seed);

    if (spectrum->parsed()) {
      if (sp_pl->parsed()) {
        const PowerLawSpec pl(pl_alpha, pl_mu, pl_L);
        Sink sink(out_path, out);
        if (pl_sample > 0) {
          write_header(*sink, header);
          write_esd(*sink, sample_power_law(pl, pl_sample, seed));
        } else {
          write_json(*sink, header, to_json(power_law_buckets(pl, pl_d)));
        }
        sink.finish();
        return 0;
      }
      auto spec = parse_esd_file(esd_path);
      Sink sink(out_path, out);
      if (sp_parse->parsed()) {
        write_header(*sink, header);
        write_esd(*sink, spec);
      } else if (sp_pre->parsed()) {
        write_header(*sink, header);
        write_esd(*sink, preprocess(spec, wd));
      } else {
        if (wd != 0.0 || !spec.all_positive()) spec = preprocess(spec, wd);
        write_json(*sink, header, to_json(bucketize(spec)));
      }
      sink.finish();
      return 0;
    }

    if (build->parsed()) {
      const auto f = family;
      std::optional<Schedule> s;
      if (f == "constant") {
        s = build_constant(T, need(o_eta0, eta0, f));
      } else if (f == "inverse_time") {
        s = build_inverse_time(T, need(o_L, L, f), need(o_mu, mu, f));
      } else if (f == "inverse_time_practical") {
        s = build_inverse_time_practical(T, need(o_eta0, eta0, f), need(o_eta_min, eta_min, f));
      } else if (f == "exponential") {
        s = build_exponential(T, need(o_eta0, eta0, f), need(o_eta_min, eta_min, f));
      } else if (f == "cosine") {
        s = build_cosine(T, need(o_eta0, eta0, f), eta_min);
      } else if (f == "cosine_power") {
        s = build_cosine_power(T, need(o_eta0, eta0, f), eta_min, need(o_power, power, f));
      } else if (f == "step_decay") {
        s = build_step_decay_ge(T, need(o_eta1, eta1, f));
      } else if (f == "general_step_decay") {
        s = build_general_step_decay(T, need(o_eta0, eta0, f),
                                     static_cast<std::size_t>(
                                         need(o_intervals, static_cast<double>(intervals), f)),
                                     need(o_decay, decay, f));
      } else if (f == "elastic_step_decay") {
        s = build_elastic_step_decay(T, need(o_eta0, eta0, f), need(o_r, r, f));
      } else if (f == "eigencurve") {
        auto spec = load_spectrum(spectrum_path, problem_path);
        if (wd != 0.0 || !spec.all_positive()) spec = preprocess(spec, wd);
        const auto b = bucketize(spec);
        const double e0 = o_eta0->count() ? eta0 : 1.0 / b.L;
        std::optional<double> em;
        if (o_eta_min->count()) em = eta_min;
        s = build_eigencurve(b, T, allocate(b, T, allocation), e0, beta, em);
      } else {
        throw UsageError("unknown schedule family '" + f + "'");
      }
      Sink sink(out_path, out);
      write_schedule_csv(*sink, *s, header);
      sink.finish();
      return 0;
    }

    if (simulate->parsed()) {
      const auto pf = load_problem(problem_path);
      const auto s = read_schedule_csv_file(schedule_path);
      if (pf.T && *pf.T != s.horizon())
        throw NumericError("schedule horizon " + std::to_string(s.horizon()) +
                           " does not match the problem's T=" + std::to_string(*pf.T));
      if (o_sim_T->count() && T != s.horizon())
        throw NumericError("schedule horizon " + std::to_string(s.horizon()) +
                           " does not match --T " + std::to_string(T));
      const auto exact = exact_expected_loss(pf.problem, s);
      auto report = make_simulation_report(pf.problem, s, exact);
      if (mode == "mc") {
        report.mc = monte_carlo_expected_loss(pf.problem, s, sim_trials, seed, threads);
      } else if (mode != "exact") {
        throw UsageError("unknown mode '" + mode + "' (exact|mc)");
      }
      Sink sink(out_path, out);
      write_json(*sink, header, to_json(report));
      sink.finish();
      return 0;
    }

    if (bounds->parsed()) {
      Sink sink(out_path, out);
      if (which == "table") {
        if (table_spectra.empty()) throw UsageError("table needs one or more --spectrum files");
        std::vector<std::pair<std::string, DyadicBuckets>> named;
        for (const auto& p : table_spectra) {
          auto spec = parse_esd_file(p);
          if (wd != 0.0 || !spec.all_positive()) spec = preprocess(spec, wd);
          named.emplace_back(std::filesystem::path(p).stem().string(), bucketize(spec));
        }
        write_header(*sink, header);
        *sink << "# log base 2\n";
        write_extra_term_csv(*sink, extra_term_table(named, T));
        sink.finish();
        return 0;
      }
      if (which == "corollary1") {
        const PowerLawSpec pl(alpha, mu, L);
        write_json(*sink, header, to_json(corollary1_bound(pl, d, T, f0, sigma)));
        sink.finish();
        return 0;
      }
      if (which == "prop1" || which == "prop2" || which == "steplower") {
        if (problem_path.empty()) throw UsageError(which + " needs --problem");
        const auto p = load_problem(problem_path).problem;
        if (which == "steplower") {
          const double e1 = o_b_eta1->count() ? eta1 : 1.0 / p.L();
          const auto lb = step_decay_lower_bound(p.dim(), p.sigma, T, e1, p.lambdas, p.offset0);
          write_json(*sink, header,
                     {{"name", "steplower"},
                      {"threshold_ok", lb.threshold_ok},
                      {"main_requirement", lb.main_requirement},
                      {"alt_requirement", lb.alt_requirement},
                      {"t_over_log_t", lb.t_over_log_t},
                      {"bound_value", lb.bound_value}});
        } else {
          write_json(*sink, header,
                     to_json(which == "prop1" ? prop1_bound(p, T) : prop2_bound(p, T)));
        }
        sink.finish();
        return 0;
      }
      if (which == "lemma1" || which == "theorem1") {
        if (table_spectra.size() > 1) throw UsageError(which + " takes a single spectrum");
        std::optional<QuadraticProblem> p;
        if (!problem_path.empty()) p = load_problem(problem_path).problem;
        auto spec = load_spectrum(table_spectra.empty() ? "" : table_spectra.front(),
                                  problem_path);
        if (wd != 0.0 || !spec.all_positive()) spec = preprocess(spec, wd);
        const auto b = bucketize(spec);
        const double gap = o_f0->count() ? f0 : p ? p->initial_gap() : need(o_f0, f0, which);
        const double sg = o_sigma->count() ? sigma : p ? p->sigma : need(o_sigma, sigma, which);
        const auto rep = which == "lemma1"
                             ? lemma1_bound(b, allocate(b, T, allocation), T, gap, sg)
                             : theorem1_bound(b, T, gap, sg);
        write_json(*sink, header, to_json(rep));
        sink.finish();
        return 0;
      }
      throw UsageError("unknown bound '" + which + "'");
    }

    if (ridge_cmd->parsed()) {
      const auto data = ridge::parse_libsvm_file(data_path);
      const auto model = ridge::fit_closed_form(data, alpha_reg);
      ridge::Grid grid;
      if (paper_grid) {
        grid = ridge::Grid::paper_default();
      } else {
        if (grid_eta0.empty()) throw UsageError("give --grid or at least one --eta0");
        grid.eta0 = grid_eta0;
        if (grid_eta_min.empty()) grid.eta_min.push_back(std::nullopt);
        for (const auto& v : grid_eta_min) {
          if (v == "unrestricted") {
            grid.eta_min.push_back(std::nullopt);
            continue;
          }
          double x = 0.0;
          if (!eigencurve::detail::parse_double(v, x))
            throw UsageError("invalid --eta-min value '" + v + "'");
          grid.eta_min.push_back(x);
        }
      }
      std::vector<ridge::Family> fams;
      for (const auto& f : families) fams.push_back(ridge::family_from_string(f));
      ridge::GridSearchOptions opts{batch, seed, beta, threads};

      auto hdr = header;
      hdr.push_back("n=" + std::to_string(data.n()) + " d=" + std::to_string(data.d()) +
                    " f_star=" + fmt(model.f_star) + " w0=0 final-iterate gaps");
      Sink sink(out_path, out);
      write_header(*sink, hdr);
      *sink << "family,eta0,eta_min,epochs,mean_gap,std_gap\n";
      json trajectories = json::array();
      const auto em_text = [](const std::optional<double>& v) {
        return v ? fmt(*v) : std::string("unrestricted");
      };
      for (auto fam : fams) {
        for (auto ep : epochs) {
          const auto res = ridge::grid_search(data, model, fam, grid, ep, trials, opts);
          const auto emit = [&](const ridge::GridPointResult& pr) {
            *sink << ridge::to_string(fam) << ',' << fmt(pr.point.eta0) << ','
                  << em_text(pr.point.eta_min) << ',' << ep << ',' << fmt(pr.mean_gap) << ','
                  << fmt(pr.std_gap) << '\n';
          };
          if (all_points)
            for (const auto& pr : res.points) emit(pr);
          else
            emit(res.best);
          if (!traj_path.empty()) {
            const std::size_t steps = (data.n() + batch - 1) / batch;
            const auto buckets =
                bucketize(EigenSpectrum::from_eigenvalues(model.hessian_eigenvalues()));
            const auto s =
                ridge::make_family_schedule(fam, ep * steps, res.best.point, buckets, beta);
            json runs = json::array();
            for (std::size_t k = 0; k < trials; ++k) {
              const auto tr =
                  ridge::run_ridge_sgd(data, model, *s, batch, replica_seed(seed, k));
              runs.push_back({{"trial", k}, {"diverged", tr.diverged}, {"gaps", tr.gaps}});
            }
            json entry{{"family", ridge::to_string(fam)},
                       {"epochs", ep},
                       {"eta0", res.best.point.eta0},
                       {"eta_min", nullptr},
                       {"runs", runs}};
            if (res.best.point.eta_min) entry["eta_min"] = *res.best.point.eta_min;
            trajectories.push_back(entry);
          }
        }
      }
      sink.finish();
      if (!traj_path.empty()) {
        Sink tj(traj_path, out);
        write_json(*tj, hdr, trajectories);
        tj.finish();
      }
      return 0;
    }

    if (compare->parsed()) {
      const auto p = load_problem(problem_path).problem;
      const auto b = bucketize(problem_spectrum(p));
      Sink sink(out_path, out);
      write_header(*sink, header);
      *sink << "T,name,kind,value\n";
      const auto row = [&](std::size_t t, const std::string& name, const char* kind,
                           double v) {
        *sink << t << ',' << name << ',' << kind << ',' << fmt(v) << '\n';
      };
      const double f0_gap = p.initial_gap();
      for (auto t : horizons) {
        for (const auto& f : cmp_families) {
          if (f == "per_coordinate") {
            row(t, f, "exact", exact_expected_loss_per_coordinate_schedule(p, t).total);
            continue;
          }
          std::optional<Schedule> s;
          if (f == "inverse_time") s = build_inverse_time(t, p.L(), p.mu());
          else if (f == "step_decay") s = build_step_decay_ge(t, 1.0 / p.L());
          else if (f == "cosine") s = build_cosine(t, 1.0 / p.L(), 0.0);
          else if (f == "constant") s = build_constant(t, 1.0 / p.L());
          else if (f == "eigencurve") s = build_eigencurve_theoretical(b, t);
          else if (f == "eigencurve_numeric")
            s = build_eigencurve(b, t, allocate_delta_numeric(b, t), 1.0 / b.L, 2.0);
          else throw UsageError("unknown compare family '" + f + "'");
          row(t, f, "exact", exact_expected_loss(p, *s).total);
        }
        row(t, "lemma1", "bound",
            lemma1_bound(b, allocate_delta_sqrt(b, t), t, f0_gap, p.sigma).total_bound);
        row(t, "theorem1", "bound", theorem1_bound(b, t, f0_gap, p.sigma).total_bound);
        row(t, "prop1", "bound", prop1_bound(p, t).total_bound);
        row(t, "prop2", "bound", prop2_bound(p, t).total_bound);
        if (t >= 2)
          row(t, "steplower", "bound",
              step_decay_lower_bound(p.dim(), p.sigma, t, 1.0 / p.L(), p.lambdas, p.offset0)
                  .bound_value);
      }
      sink.finish();
      return 0;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const json::exception& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ErrorKind::parse);
  }
  return static_cast<int>(ErrorKind::usage);
}

}  // namespace eigencurve::cli
