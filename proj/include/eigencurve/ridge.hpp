#pragma once
// Ridge regression f(w) = (1/n)||Xw - Y||^2 + alpha ||w||^2: libsvm ingestion,
// closed-form optimum, exact Hessian spectrum and SGD scheduler comparison.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "eigencurve/eigencurve.hpp"
#include "eigencurve/error.hpp"
#include "eigencurve/quadsim.hpp"
#include "eigencurve/schedules.hpp"
#include "eigencurve/spectrum.hpp"

namespace eigencurve::ridge {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Dataset {
  RowMatrix X;  // n x d
  Eigen::VectorXd Y;

  std::size_t n() const noexcept { return static_cast<std::size_t>(X.rows()); }
  std::size_t d() const noexcept { return static_cast<std::size_t>(X.cols()); }
};

/// `<label> <idx>:<val> ...` with 1-based feature indices; d is the largest
/// index seen and absent features are zero.
inline Dataset parse_libsvm(std::istream& in) {
  struct Row {
    double label;
    std::vector<std::pair<std::size_t, double>> features;
  };
  std::vector<Row> rows;
  std::size_t dim = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = detail::trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto toks = detail::split_ws(body);
    Row row{};
    if (!detail::parse_double(toks[0], row.label) || !std::isfinite(row.label))
      throw ParseError("invalid label '" + std::string(toks[0]) + "'", lineno);
    std::vector<std::size_t> seen;
    for (std::size_t k = 1; k < toks.size(); ++k) {
      const auto tok = toks[k];
      const auto colon = tok.find(':');
      if (colon == std::string_view::npos)
        throw ParseError("expected '<index>:<value>' at token " + std::to_string(k + 1) +
                             " ('" + std::string(tok) + "')",
                         lineno);
      const auto idx_tok = tok.substr(0, colon);
      std::size_t idx = 0;
      const auto [ptr, ec] =
          std::from_chars(idx_tok.data(), idx_tok.data() + idx_tok.size(), idx);
      if (ec != std::errc() || ptr != idx_tok.data() + idx_tok.size() || idx == 0)
        throw ParseError("invalid feature index '" + std::string(idx_tok) +
                             "' at token " + std::to_string(k + 1),
                         lineno);
      double val = 0.0;
      if (!detail::parse_double(tok.substr(colon + 1), val) || !std::isfinite(val))
        throw ParseError("invalid feature value '" + std::string(tok.substr(colon + 1)) +
                             "' at token " + std::to_string(k + 1),
                         lineno);
      if (std::find(seen.begin(), seen.end(), idx) != seen.end())
        throw ParseError("duplicate feature index " + std::to_string(idx), lineno);
      seen.push_back(idx);
      row.features.emplace_back(idx, val);
      dim = std::max(dim, idx);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("no samples", lineno);
  if (dim == 0) throw ParseError("no features in any sample", lineno);
  Dataset data;
  data.X = RowMatrix::Zero(static_cast<Eigen::Index>(rows.size()),
                           static_cast<Eigen::Index>(dim));
  data.Y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    data.Y(r) = rows[i].label;
    for (const auto& [idx, val] : rows[i].features)
      data.X(r, static_cast<Eigen::Index>(idx - 1)) = val;
  }
  return data;
}

inline Dataset parse_libsvm_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open libsvm file '" + path + "'");
  return parse_libsvm(in);
}

struct RidgeModel {
  double alpha_reg = 0.0;
  Eigen::VectorXd w_star;
  double f_star = 0.0;
  Eigen::VectorXd H_eigs;      // ascending eigenvalues of H = 2(X^T X/n + alpha I)
  Eigen::MatrixXd H_vectors;   // matching orthonormal eigenvectors
  Eigen::MatrixXd curvature;   // A = X^T X/n + alpha I, so f(w) - f* = (w-w*)^T A (w-w*)
  double residual = 0.0;       // ||(X^T X + n alpha I) w* - X^T Y|| / ||X^T Y||

  std::vector<double> hessian_eigenvalues() const {
    return {H_eigs.data(), H_eigs.data() + H_eigs.size()};
  }
};

inline double ridge_loss(const Dataset& data, double alpha_reg,
                         const Eigen::VectorXd& w) {
  const double n = static_cast<double>(data.n());
  return (data.X * w - data.Y).squaredNorm() / n + alpha_reg * w.squaredNorm();
}

/// Loss gap through the quadratic form, free of the cancellation in
/// f(w) - f*.
inline double loss_gap(const RidgeModel& m, const Eigen::VectorXd& w) {
  const Eigen::VectorXd e = w - m.w_star;
  return e.dot(m.curvature * e);
}

/// The same gap computed in the Hessian eigenbasis: 0.5 sum_i lambda_i c_i^2.
inline double loss_gap_eigenbasis(const RidgeModel& m, const Eigen::VectorXd& w) {
  const Eigen::VectorXd c = m.H_vectors.transpose() * (w - m.w_star);
  return 0.5 * (m.H_eigs.array() * c.array().square()).sum();
}

inline RidgeModel fit_closed_form(const Dataset& data, double alpha_reg) {
  if (!(alpha_reg >= 0.0)) throw NumericError("ridge alpha must be >= 0");
  const double n = static_cast<double>(data.n());
  const Eigen::MatrixXd gram = data.X.transpose() * data.X;
  const Eigen::VectorXd xty = data.X.transpose() * data.Y;
  Eigen::MatrixXd system = gram;
  system.diagonal().array() += n * alpha_reg;

  RidgeModel m;
  m.alpha_reg = alpha_reg;
  Eigen::LLT<Eigen::MatrixXd> llt(system);
  if (llt.info() != Eigen::Success)
    throw NumericError("ridge system is singular (X^T X + n alpha I not positive definite)");
  m.w_star = llt.solve(xty);
  const double rhs_norm = xty.norm();
  m.residual = (system * m.w_star - xty).norm() / (rhs_norm > 0.0 ? rhs_norm : 1.0);
  if (!(m.residual <= 1e-8))
    throw NumericError("ridge solve residual " + std::to_string(m.residual) +
                       " exceeds 1e-8 (ill-conditioned system)");
  m.f_star = ridge_loss(data, alpha_reg, m.w_star);

  m.curvature = gram / n;
  m.curvature.diagonal().array() += alpha_reg;
  const Eigen::MatrixXd H = 2.0 * m.curvature;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(H);
  if (eig.info() != Eigen::Success) throw NumericError("Hessian eigendecomposition failed");
  m.H_eigs = eig.eigenvalues();
  m.H_vectors = eig.eigenvectors();
  return m;
}

/// Loss gaps at w_0 (index 0) and after each full epoch.
struct Trajectory {
  std::vector<double> gaps;
  bool diverged = false;

  double final_gap() const { return gaps.back(); }
};

/// Minibatch SGD with batches drawn uniformly with replacement from w_0 = 0.
/// One epoch is ceil(n / batch_size) steps; the schedule horizon fixes the
/// total step count.
inline Trajectory run_ridge_sgd(const Dataset& data, const RidgeModel& model,
                                const Schedule& schedule, std::size_t batch_size,
                                std::uint64_t seed) {
  if (batch_size == 0) throw NumericError("batch size must be >= 1");
  const std::size_t n = data.n();
  const auto d = static_cast<Eigen::Index>(data.d());
  const std::size_t steps_per_epoch = (n + batch_size - 1) / batch_size;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd grad(d);
  Trajectory tr;
  tr.gaps.push_back(loss_gap(model, w));
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  const double scale = 2.0 / static_cast<double>(batch_size);
  const std::size_t T = schedule.horizon();
  for (std::size_t t = 0; t < T; ++t) {
    grad.setZero();
    for (std::size_t b = 0; b < batch_size; ++b) {
      const auto i = static_cast<Eigen::Index>(pick(rng));
      const double r = data.X.row(i).dot(w) - data.Y(i);
      grad.noalias() += r * data.X.row(i).transpose();
    }
    grad *= scale;
    grad.noalias() += 2.0 * model.alpha_reg * w;
    w.noalias() -= schedule.rate(t) * grad;
    const bool epoch_end = (t + 1) % steps_per_epoch == 0 || t + 1 == T;
    if (epoch_end) {
      const double gap = loss_gap(model, w);
      if (!std::isfinite(gap) || !w.allFinite()) {
        tr.diverged = true;
        const std::size_t total_epochs = (T + steps_per_epoch - 1) / steps_per_epoch;
        tr.gaps.resize(total_epochs + 1, std::numeric_limits<double>::infinity());
        return tr;
      }
      tr.gaps.push_back(gap);
    }
  }
  return tr;
}

enum class Family { constant, inverse_time, exponential, cosine, eigencurve };

inline const char* to_string(Family f) {
  switch (f) {
    case Family::constant: return "constant";
    case Family::inverse_time: return "inverse_time";
    case Family::exponential: return "exponential";
    case Family::cosine: return "cosine";
    case Family::eigencurve: return "eigencurve";
  }
  return "unknown";
}

inline Family family_from_string(const std::string& s) {
  for (auto f : {Family::constant, Family::inverse_time, Family::exponential,
                 Family::cosine, Family::eigencurve})
    if (s == to_string(f)) return f;
  throw UsageError("unknown ridge scheduler family '" + s + "'");
}

/// eta_min = nullopt is the "unrestricted" grid entry.
struct GridPoint {
  double eta0 = 0.0;
  std::optional<double> eta_min;
};

struct Grid {
  std::vector<double> eta0;
  std::vector<std::optional<double>> eta_min;

  /// Initial rates and final rates searched for the a4a comparison.
  static Grid paper_default() {
    return {{0.1, 0.06, 0.03, 0.02, 0.01, 0.006, 0.003, 0.002, 0.001, 0.0006,
             0.0003, 0.0002, 0.0001},
            {0.1, 0.01, 0.001, 0.0001, 0.00001, 0.0, std::nullopt}};
  }
};

/// Schedule of a family at a grid point, or nullopt where the family cannot
/// honour the point (eta_min >= eta0; gamma undefined for eta_min = 0 or
/// unrestricted in inverse-time and exponential decay). Constant decay only
/// takes the unrestricted entry.
inline std::optional<Schedule> make_family_schedule(Family f, std::size_t T,
                                                    const GridPoint& g,
                                                    const DyadicBuckets& buckets,
                                                    double beta = 2.0) {
  if (g.eta_min && *g.eta_min >= g.eta0) return std::nullopt;
  switch (f) {
    case Family::constant:
      if (g.eta_min) return std::nullopt;
      return build_constant(T, g.eta0);
    case Family::inverse_time:
      if (!g.eta_min || *g.eta_min <= 0.0 || T < 2) return std::nullopt;
      return build_inverse_time_practical(T, g.eta0, *g.eta_min);
    case Family::exponential:
      if (!g.eta_min || *g.eta_min <= 0.0 || T < 2) return std::nullopt;
      return build_exponential(T, g.eta0, *g.eta_min);
    case Family::cosine:
      return build_cosine(T, g.eta0, g.eta_min.value_or(0.0));
    case Family::eigencurve:
      if (T < buckets.nonempty()) return std::nullopt;
      if (g.eta_min && T < 2) return std::nullopt;
      return build_eigencurve(buckets, T, allocate_delta_sqrt(buckets, T), g.eta0,
                              beta, g.eta_min);
  }
  return std::nullopt;
}

struct GridPointResult {
  GridPoint point;
  double mean_gap = 0.0;
  double std_gap = 0.0;
  bool diverged = false;  // any trial blew up; mean is +inf
};

struct GridSearchResult {
  Family family = Family::constant;
  std::size_t epochs = 0;
  GridPointResult best;
  std::vector<GridPointResult> points;
};

struct GridSearchOptions {
  std::size_t batch_size = 1;
  std::uint64_t seed = 0;
  double beta = 2.0;
  unsigned threads = 0;
};

namespace detail {

inline bool grid_point_less(const GridPointResult& a, const GridPointResult& b) {
  if (a.mean_gap != b.mean_gap) return a.mean_gap < b.mean_gap;
  if (a.point.eta0 != b.point.eta0) return a.point.eta0 < b.point.eta0;
  // unrestricted sorts after every explicit eta_min
  const double am = a.point.eta_min.value_or(std::numeric_limits<double>::infinity());
  const double bm = b.point.eta_min.value_or(std::numeric_limits<double>::infinity());
  return am < bm;
}

}  // namespace detail

/// Mean final loss gap over `trials` seeds per grid point; the minimum mean
/// wins, ties going to the smaller eta0 and then the smaller eta_min.
inline GridSearchResult grid_search(const Dataset& data, const RidgeModel& model,
                                    Family family, const Grid& grid,
                                    std::size_t epochs, std::size_t trials,
                                    GridSearchOptions opts = {}) {
  if (grid.eta0.empty() || grid.eta_min.empty()) throw NumericError("empty grid");
  if (epochs == 0 || trials == 0) throw NumericError("epochs and trials must be >= 1");
  const std::size_t steps_per_epoch = (data.n() + opts.batch_size - 1) / opts.batch_size;
  const std::size_t T = epochs * steps_per_epoch;
  const auto buckets = bucketize(EigenSpectrum::from_eigenvalues(model.hessian_eigenvalues()));

  struct Job {
    GridPoint point;
    Schedule schedule;
  };
  std::vector<Job> jobs;
  for (double e0 : grid.eta0)
    for (const auto& em : grid.eta_min) {
      GridPoint g{e0, em};
      if (auto s = make_family_schedule(family, T, g, buckets, opts.beta))
        jobs.push_back({g, std::move(*s)});
    }
  if (jobs.empty()) throw NumericError("no feasible grid point for family " +
                                       std::string(to_string(family)));

  const std::size_t total = jobs.size() * trials;
  std::vector<double> finals(total);
  const auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const auto& job = jobs[k / trials];
      const auto tr = run_ridge_sgd(data, model, job.schedule, opts.batch_size,
                                    replica_seed(opts.seed, k % trials));
      finals[k] = tr.diverged ? std::numeric_limits<double>::infinity() : tr.final_gap();
    }
  };
  unsigned threads = opts.threads ? opts.threads
                                  : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, total));
  if (threads <= 1) {
    work(0, total);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (total + threads - 1) / threads;
    for (unsigned k = 0; k < threads; ++k) {
      const std::size_t b = k * chunk;
      const std::size_t e = std::min(total, b + chunk);
      if (b < e) pool.emplace_back(work, b, e);
    }
  }

  GridSearchResult res;
  res.family = family;
  res.epochs = epochs;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    GridPointResult r;
    r.point = jobs[j].point;
    double sum = 0.0;
    for (std::size_t k = 0; k < trials; ++k) {
      const double v = finals[j * trials + k];
      if (!std::isfinite(v)) r.diverged = true;
      sum += v;
    }
    const double n = static_cast<double>(trials);
    r.mean_gap = r.diverged ? std::numeric_limits<double>::infinity() : sum / n;
    if (!r.diverged && trials > 1) {
      double ss = 0.0;
      for (std::size_t k = 0; k < trials; ++k) {
        const double dv = finals[j * trials + k] - r.mean_gap;
        ss += dv * dv;
      }
      r.std_gap = std::sqrt(ss / (n - 1.0));
    }
    res.points.push_back(r);
  }
  res.best = *std::min_element(res.points.begin(), res.points.end(),
                               detail::grid_point_less);
  return res;
}

/// Least-squares data whose Hessian spectrum follows a power law: columns of
/// an orthogonalized Gaussian design are scaled so X^T X / n has eigenvalues
/// at power-law quantiles on [mu, mu kappa].
inline Dataset make_power_law_dataset(std::size_t n, std::size_t d, double alpha,
                                      double mu, double kappa, double noise,
                                      std::uint64_t seed) {
  if (n < d) throw NumericError("synthetic design needs n >= d");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd G(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < G.rows(); ++i)
    for (Eigen::Index j = 0; j < G.cols(); ++j) G(i, j) = gauss(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
  const Eigen::MatrixXd Q =
      qr.householderQ() * Eigen::MatrixXd::Identity(G.rows(), G.cols());
  const auto levels = power_law_quantiles(PowerLawSpec(alpha, mu, mu * kappa), d);
  Dataset data;
  data.X.resize(G.rows(), G.cols());
  const double root_n = std::sqrt(static_cast<double>(n));
  for (Eigen::Index j = 0; j < G.cols(); ++j)
    data.X.col(j) = Q.col(j) * (root_n * std::sqrt(levels[static_cast<std::size_t>(j)]));
  Eigen::VectorXd w_true(G.cols());
  for (Eigen::Index j = 0; j < G.cols(); ++j) w_true(j) = gauss(rng);
  data.Y = data.X * w_true;
  for (Eigen::Index i = 0; i < data.Y.size(); ++i) data.Y(i) += noise * gauss(rng);
  return data;
}

}  // namespace eigencurve::ridge
