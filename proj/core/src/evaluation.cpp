#include "lrtar/evaluation.hpp"

#include "lrtar/io.hpp"
#include "lrtar/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <tuple>

namespace lrtar {

namespace {

using Clock = std::chrono::steady_clock;
using nlohmann::json;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Index rrr_rank(const Dims& ranks) {
  const int d = static_cast<int>(ranks.size()) / 2;
  Index pred = 1, resp = 1;
  for (int i = 0; i < d; ++i) pred *= ranks[static_cast<size_t>(i)];
  for (int i = 0; i < d; ++i) resp *= ranks[static_cast<size_t>(d + i)];
  return std::min(pred, resp);
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

std::string estimator_name(Estimator e) {
  switch (e) {
    case Estimator::OLS: return "OLS";
    case Estimator::RRR: return "RRR";
    case Estimator::LTR: return "LTR";
    case Estimator::SN: return "SN";
    case Estimator::MN: return "MN";
    case Estimator::SSN: return "SSN";
    case Estimator::TSSN: return "TSSN";
    case Estimator::ZERO: return "ZERO";
  }
  throw std::invalid_argument("estimator_name: bad enum value");
}

Estimator parse_estimator(const std::string& name) {
  std::string u = name;
  std::transform(u.begin(), u.end(), u.begin(),
                 [](unsigned char c) { return std::toupper(c); });
  for (Estimator e : {Estimator::OLS, Estimator::RRR, Estimator::LTR,
                      Estimator::SN, Estimator::MN, Estimator::SSN,
                      Estimator::TSSN, Estimator::ZERO})
    if (estimator_name(e) == u) return e;
  throw std::invalid_argument("unknown estimator '" + name +
                              "' (expected OLS|RRR|LTR|SN|MN|SSN|TSSN|ZERO)");
}

int worker_count() {
  if (const char* env = std::getenv("TENSORAR_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<int>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

void parallel_for(Index n, const std::function<void(Index)>& fn) {
  const int workers = std::min<Index>(worker_count(), n);
  if (workers <= 1) {
    for (Index i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<Index> next(0);
  std::atomic<bool> failed(false);
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    while (!failed.load(std::memory_order_relaxed)) {
      const Index i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= n) break;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        failed.store(true, std::memory_order_relaxed);
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::vector<double> harness_lambda_grid(const RegressionDesign& design) {
  // Anchor at the score scale: fit least squares on the first half of the
  // sample and take the cross-moment operator norm of its residuals on the
  // second half. The zero-fit lambda_max used by the library default is
  // inflated by signal variance on persistent processes, which pushes the
  // relevant lambda region off a grid anchored there; the residual anchor
  // tracks the noise level instead. Falls back to a scaled-down zero-fit
  // anchor when the half-sample is too short for least squares.
  double anchor = 0.0;
  const Eigen::Index n = design.predictor.rows();
  const Eigen::Index half = n / 2;
  if (half > design.predictor.cols()) {
    RegressionDesign head = design;
    head.predictor = design.predictor.topRows(half);
    head.response = design.response.topRows(half);
    const Eigen::MatrixXd coef =
        matricize(fit_ols(head).estimate, response_modes(design.d()));
    RegressionDesign tail = design;
    tail.predictor = design.predictor.bottomRows(n - half);
    tail.response = design.response.bottomRows(n - half) -
                    tail.predictor * coef.transpose();
    anchor = ssn_lambda_max(tail);
  }
  if (!(anchor > 0.0) || !std::isfinite(anchor))
    anchor = 0.05 * ssn_lambda_max(design);

  // 12 rungs over two decades: per-replication tuning averages out the rung
  // quantization, and fewer rungs bound the cost of the slow mid-transition
  // fits that never win the selection.
  std::vector<double> grid(12);
  const double lo = std::log(0.05 * anchor);
  const double hi = std::log(5.0 * anchor);
  for (size_t i = 0; i < grid.size(); ++i)
    grid[i] = std::exp(lo + (hi - lo) * static_cast<double>(i) /
                                static_cast<double>(grid.size() - 1));
  return grid;
}

namespace {

std::vector<double> harness_grid(const RegressionDesign& design) {
  return harness_lambda_grid(design);
}

// Fits one estimator against a known truth, recording errors and failures.
void fit_cell(ResultCell& cell, Estimator est, const RegressionDesign& design,
              const DenseTensor& truth, const Dims& ranks,
              std::optional<BicSelection>& ssn_selection) {
  const auto start = Clock::now();
  try {
    DenseTensor estimate;
    switch (est) {
      case Estimator::OLS:
        estimate = fit_ols(design).estimate;
        break;
      case Estimator::RRR:
        estimate = fit_rrr(design, rrr_rank(ranks)).estimate;
        break;
      case Estimator::LTR:
        estimate = fit_ltr(design, ranks).estimate;
        break;
      case Estimator::MN:
        estimate = select_lambda_bic(design, RegEstimator::MN,
                                     harness_grid(design)).fit.estimate;
        break;
      case Estimator::SN:
        estimate = select_lambda_bic(design, RegEstimator::SN,
                                     harness_grid(design)).fit.estimate;
        break;
      case Estimator::SSN:
      case Estimator::TSSN: {
        if (!ssn_selection)
          ssn_selection =
              select_lambda_bic(design, RegEstimator::SSN, harness_grid(design));
        if (est == Estimator::SSN) {
          estimate = ssn_selection->fit.estimate;
        } else {
          const double gamma =
              default_gamma(ssn_selection->lambda, design.d());
          estimate = truncate_tssn(ssn_selection->fit.estimate, gamma).estimate;
        }
        break;
      }
      case Estimator::ZERO:
        throw std::invalid_argument("ZERO is a forecast baseline, not an estimator");
    }
    cell.fro_error = (estimate - truth).norm();
    cell.sq_error = cell.fro_error * cell.fro_error;
  } catch (const std::exception& e) {
    cell.ok = false;
    cell.message = e.what();
  }
  cell.runtime_s = seconds_since(start);
}

}  // namespace

std::vector<ResultCell> run_experiment(const ExperimentSpec& spec,
                                       const std::string& case_name) {
  if (spec.replications < 1)
    throw std::invalid_argument("run_experiment: replications must be >= 1");
  if (spec.sample_sizes.empty() || spec.estimators.empty())
    throw std::invalid_argument("run_experiment: empty sample sizes or estimators");
  if (spec.noise_scale <= 0.0)
    throw std::invalid_argument("run_experiment: noise_scale must be > 0");
  for (Estimator e : spec.estimators)
    if (e == Estimator::ZERO)
      throw std::invalid_argument("run_experiment: ZERO is not an estimator");

  const Index n_t = static_cast<Index>(spec.sample_sizes.size());
  const Index n_est = static_cast<Index>(spec.estimators.size());
  const Index cells = n_t * spec.replications;
  std::vector<ResultCell> results(static_cast<size_t>(cells * n_est));

  parallel_for(cells, [&](Index cell_idx) {
    const Index ti = cell_idx / spec.replications;
    const int rep = static_cast<int>(cell_idx % spec.replications);
    const Index t = spec.sample_sizes[static_cast<size_t>(ti)];

    // Each replication repeats the whole generating process: fresh model
    // draw, fresh path. The draw is shared across sample sizes so the error
    // decay in T is measured on matched processes.
    const std::uint64_t rep_seed =
        mix_seed(spec.root_seed, static_cast<std::uint64_t>(rep) + 1);
    LrtarModel base = make_dgp(spec.dims, spec.ranks, rep_seed);
    LrtarModel model =
        spec.noise_scale == 1.0
            ? std::move(base)
            : LrtarModel(base.transition(),
                         spec.noise_scale * spec.noise_scale *
                             Matrix::Identity(base.p(), base.p()),
                         base.tucker());
    const DenseTensor& truth = model.transition();

    const std::uint64_t sim_seed =
        mix_seed(rep_seed, static_cast<std::uint64_t>(ti) + 1);
    TensorSeries series = model.simulate(t, spec.burn_in, sim_seed);
    RegressionDesign design = RegressionDesign::from_series(series);

    std::optional<BicSelection> ssn_selection;
    for (Index ei = 0; ei < n_est; ++ei) {
      ResultCell& cell = results[static_cast<size_t>(cell_idx * n_est + ei)];
      cell.case_name = case_name;
      cell.estimator = spec.estimators[static_cast<size_t>(ei)];
      cell.t = t;
      cell.replication = rep;
      fit_cell(cell, cell.estimator, design, truth, spec.ranks, ssn_selection);
    }
  });
  return results;
}

std::vector<ScalingPointSpec> scaling_case_points(const std::string& case_name) {
  auto square = [](Index p, Index t) {
    return ScalingPointSpec{"p1=" + std::to_string(p), {p, p}, {2, 2, 2, 2}, t};
  };
  std::vector<ScalingPointSpec> pts;
  if (case_name == "a") {
    for (Index p : {5, 7, 9, 10, 11}) pts.push_back(square(p, 500));
  } else if (case_name == "b") {
    for (Index t : {200, 400, 600, 800, 1000}) {
      auto pt = square(8, t);
      pt.label = "T=" + std::to_string(t);
      pts.push_back(pt);
    }
  } else if (case_name == "c") {
    for (Dims r : {Dims{1, 1, 1, 1}, Dims{1, 2, 1, 2}, Dims{2, 2, 2, 2},
                   Dims{2, 3, 2, 3}, Dims{3, 3, 3, 3}}) {
      std::string label = "r=" + std::to_string(r[0]) + std::to_string(r[1]) +
                          std::to_string(r[2]) + std::to_string(r[3]);
      pts.push_back({label, {8, 8}, r, 500});
    }
  } else if (case_name == "d") {
    for (Index p1 : {3, 4, 6, 8, 12})
      pts.push_back({"p1=" + std::to_string(p1), {p1, 144 / p1}, {1, 1, 1, 1}, 1000});
  } else if (case_name == "e") {
    for (Dims p : {Dims{4, 4, 4}, Dims{4, 4, 5}, Dims{4, 5, 5}, Dims{5, 5, 5},
                   Dims{5, 5, 6}}) {
      std::string label = "p=" + std::to_string(p[0]) + std::to_string(p[1]) +
                          std::to_string(p[2]);
      pts.push_back({label, p, {2, 2, 2, 2, 2, 2}, 1000});
    }
  } else if (case_name == "f") {
    for (Index t : {600, 800, 1000, 1200, 1400})
      pts.push_back({"T=" + std::to_string(t), {5, 5, 5}, {2, 2, 2, 2, 2, 2}, t});
  } else if (case_name == "g") {
    for (Dims r : {Dims{1, 1, 1, 1, 1, 1}, Dims{1, 1, 2, 1, 1, 2},
                   Dims{1, 2, 2, 1, 2, 2}, Dims{2, 2, 2, 2, 2, 2},
                   Dims{2, 2, 3, 2, 2, 3}}) {
      std::string label = "r=";
      for (Index x : r) label += std::to_string(x);
      pts.push_back({label, {5, 5, 5}, r, 1000});
    }
  } else if (case_name == "h") {
    for (Dims p : {Dims{2, 2, 36}, Dims{3, 3, 16}, Dims{4, 4, 9},
                   Dims{3, 4, 12}, Dims{4, 6, 6}}) {
      std::string label = "p=" + std::to_string(p[0]) + "x" +
                          std::to_string(p[1]) + "x" + std::to_string(p[2]);
      pts.push_back({label, p, {1, 1, 1, 1, 1, 1}, 1000});
    }
  } else {
    throw std::invalid_argument("unknown scaling case '" + case_name +
                                "' (expected one of a,b,c,d,e,f,g,h)");
  }
  return pts;
}

std::vector<ScalingResult> error_scaling_study(const std::string& case_name,
                                               int replications,
                                               std::uint64_t root_seed) {
  return error_scaling_study(scaling_case_points(case_name), replications,
                             root_seed);
}

std::vector<ScalingResult> error_scaling_study(
    const std::vector<ScalingPointSpec>& points, int replications,
    std::uint64_t root_seed) {
  if (replications < 1)
    throw std::invalid_argument("error_scaling_study: replications must be >= 1");
  if (points.empty())
    throw std::invalid_argument("error_scaling_study: empty sweep");
  std::vector<ScalingResult> results(points.size());

  for (size_t pi = 0; pi < points.size(); ++pi) {
    const auto& pt = points[pi];
    const std::uint64_t point_seed =
        mix_seed(root_seed, static_cast<std::uint64_t>(pi));

    ScalingResult& res = results[pi];
    res.point = pt;
    res.sq_errors.assign(static_cast<size_t>(replications), 0.0);

    // One independent draw of the generating process per replication, each
    // with its own BIC-tuned lambda; averaging over draws (rather than
    // conditioning on a single model) is what the sweep summarizes.
    std::vector<double> lambdas(static_cast<size_t>(replications), 0.0);
    parallel_for(replications, [&](Index i) {
      const size_t rep = static_cast<size_t>(i);
      const std::uint64_t rep_seed =
          mix_seed(point_seed, static_cast<std::uint64_t>(rep) + 1);
      LrtarModel model = make_dgp(pt.dims, pt.ranks, rep_seed);
      TensorSeries series = model.simulate(pt.t, 200, mix_seed(rep_seed, 1));
      RegressionDesign design = RegressionDesign::from_series(series);
      BicSelection sel =
          select_lambda_bic(design, RegEstimator::SSN, harness_grid(design));
      lambdas[rep] = sel.lambda;
      res.sq_errors[rep] =
          std::pow((sel.fit.estimate - model.transition()).norm(), 2);
    });

    res.lambda = mean_of(lambdas);
    res.mean_sq_error = mean_of(res.sq_errors);
    res.sd_sq_error = sd_of(res.sq_errors);
  }
  return results;
}

InSampleErrors in_sample_errors(const DenseTensor& fit,
                                const TensorSeries& series) {
  Dims expected = series.dims;
  expected.insert(expected.end(), series.dims.begin(), series.dims.end());
  if (fit.dims() != expected)
    throw std::invalid_argument("in_sample_errors: fit shape mismatch");
  if (series.length() < 2)
    throw std::invalid_argument("in_sample_errors: need at least 2 observations");

  const Matrix b = matricize(fit, response_modes(static_cast<int>(series.dims.size())));
  const Matrix all = series.to_matrix();
  InSampleErrors out;
  const Index n = series.length() - 1;
  for (Index t = 1; t <= n; ++t) {
    Vector resid = all.row(t).transpose() - b * all.row(t - 1).transpose();
    out.mean_l2 += resid.norm();
    out.mean_linf += resid.cwiseAbs().maxCoeff();
  }
  out.mean_l2 /= static_cast<double>(n);
  out.mean_linf /= static_cast<double>(n);
  return out;
}

ForecastReport rolling_forecast(const TensorSeries& series,
                                const ForecastOptions& opts,
                                Index start_origin) {
  const Index t_total = series.length();
  if (start_origin < 2 || start_origin >= t_total)
    throw std::invalid_argument(
        "rolling_forecast: start_origin must be in [2, T)");
  if ((opts.estimator == Estimator::LTR || opts.estimator == Estimator::RRR) &&
      opts.ranks.empty() && !opts.oracle)
    throw std::invalid_argument("rolling_forecast: LTR/RRR need ranks");
  if (opts.retune_every < 1)
    throw std::invalid_argument("rolling_forecast: retune_every must be >= 1");

  const int d = static_cast<int>(series.dims.size());
  const Matrix all = series.to_matrix();
  const auto s2 = response_modes(d);

  ForecastReport report;
  std::optional<DenseTensor> warm;
  double lambda_current = opts.reg.lambda;
  const bool fixed_lambda = opts.reg.lambda > 0.0;
  Index origins_done = 0;

  std::vector<double> l2s, linfs;
  for (Index origin = start_origin; origin < t_total; ++origin, ++origins_done) {
    OriginRecord rec;
    rec.origin = origin;
    try {
      Vector forecast = Vector::Zero(all.cols());
      if (opts.oracle) {
        forecast = matricize(*opts.oracle, s2) * all.row(origin - 1).transpose();
      } else if (opts.estimator != Estimator::ZERO) {
        TensorSeries prefix;
        prefix.dims = series.dims;
        prefix.observations.assign(
            series.observations.begin(),
            series.observations.begin() + static_cast<std::ptrdiff_t>(origin));
        RegressionDesign design = RegressionDesign::from_series(prefix);

        DenseTensor estimate;
        switch (opts.estimator) {
          case Estimator::OLS:
            estimate = fit_ols(design).estimate;
            break;
          case Estimator::RRR:
            estimate = fit_rrr(design, rrr_rank(opts.ranks)).estimate;
            break;
          case Estimator::LTR:
            estimate = fit_ltr(design, opts.ranks, warm).estimate;
            break;
          case Estimator::MN:
          case Estimator::SN:
          case Estimator::SSN:
          case Estimator::TSSN: {
            const RegEstimator reg_kind =
                opts.estimator == Estimator::MN
                    ? RegEstimator::MN
                    : (opts.estimator == Estimator::SN ? RegEstimator::SN
                                                       : RegEstimator::SSN);
            const bool retune = !fixed_lambda &&
                                (lambda_current <= 0.0 ||
                                 origins_done % opts.retune_every == 0);
            if (retune) {
              BicSelection sel =
                  select_lambda_bic(design, reg_kind, opts.lambda_grid, opts.reg);
              lambda_current = sel.lambda;
              estimate = sel.fit.estimate;
            } else {
              RegOptions ro = opts.reg;
              ro.lambda = lambda_current;
              FitReport fit;
              switch (reg_kind) {
                case RegEstimator::MN: fit = fit_mn(design, ro, warm); break;
                case RegEstimator::SN: fit = fit_sn(design, ro, warm); break;
                case RegEstimator::SSN: fit = fit_ssn(design, ro, warm); break;
              }
              estimate = fit.estimate;
            }
            warm = estimate;  // warm-start the next origin pre-truncation
            if (opts.estimator == Estimator::TSSN)
              estimate = truncate_tssn(estimate,
                                       default_gamma(lambda_current, d)).estimate;
            break;
          }
          default:
            throw std::invalid_argument("rolling_forecast: bad estimator");
        }
        if (opts.estimator == Estimator::LTR) warm = estimate;
        forecast = matricize(estimate, s2) * all.row(origin - 1).transpose();
      }
      Vector resid = all.row(origin).transpose() - forecast;
      rec.l2 = resid.norm();
      rec.linf = resid.cwiseAbs().maxCoeff();
      l2s.push_back(rec.l2);
      linfs.push_back(rec.linf);
    } catch (const std::exception& e) {
      rec.ok = false;
      rec.message = e.what();
      ++report.missing;
    }
    report.origins.push_back(std::move(rec));
  }
  report.mean_l2 = mean_of(l2s);
  report.mean_linf = mean_of(linfs);
  return report;
}

void write_results_csv(const std::vector<ResultCell>& results,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "case,estimator,T,replication,fro_error,sq_error,runtime_s,ok,message\n";
  for (const auto& r : results)
    out << r.case_name << ',' << estimator_name(r.estimator) << ',' << r.t
        << ',' << r.replication << ',' << format_double(r.fro_error) << ','
        << format_double(r.sq_error) << ',' << format_double(r.runtime_s)
        << ',' << (r.ok ? 1 : 0) << ',' << r.message << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string results_summary_json(const std::vector<ResultCell>& results) {
  struct Group {
    std::vector<double> errors;
    int failures = 0;
  };
  std::map<std::tuple<std::string, std::string, Index>, Group> groups;
  for (const auto& r : results) {
    Group& g = groups[{r.case_name, estimator_name(r.estimator), r.t}];
    if (r.ok)
      g.errors.push_back(r.fro_error);
    else
      ++g.failures;
  }
  json out = json::array();
  for (const auto& [key, g] : groups) {
    json row;
    row["case"] = std::get<0>(key);
    row["estimator"] = std::get<1>(key);
    row["T"] = std::get<2>(key);
    row["replications"] = g.errors.size() + static_cast<size_t>(g.failures);
    row["failures"] = g.failures;
    row["mean_fro_error"] = mean_of(g.errors);
    row["sd_fro_error"] = sd_of(g.errors);
    out.push_back(std::move(row));
  }
  return out.dump(2);
}

void write_scaling_csv(const std::vector<ScalingResult>& results,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "label,T,lambda,replication,sq_error\n";
  for (const auto& r : results)
    for (size_t i = 0; i < r.sq_errors.size(); ++i)
      out << r.point.label << ',' << r.point.t << ','
          << format_double(r.lambda) << ',' << i << ','
          << format_double(r.sq_errors[i]) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string scaling_summary_json(const std::vector<ScalingResult>& results) {
  json out = json::array();
  for (const auto& r : results) {
    json row;
    row["label"] = r.point.label;
    row["dims"] = r.point.dims;
    row["ranks"] = r.point.ranks;
    row["T"] = r.point.t;
    row["lambda"] = r.lambda;
    row["replications"] = r.sq_errors.size();
    row["mean_sq_error"] = r.mean_sq_error;
    row["sd_sq_error"] = r.sd_sq_error;
    out.push_back(std::move(row));
  }
  return out.dump(2);
}

void write_forecast_csv(const ForecastReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "origin,l2,linf,ok,message\n";
  for (const auto& r : report.origins)
    out << r.origin << ',' << format_double(r.l2) << ','
        << format_double(r.linf) << ',' << (r.ok ? 1 : 0) << ',' << r.message
        << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string forecast_json(const ForecastReport& report) {
  json out;
  out["mean_l2"] = report.mean_l2;
  out["mean_linf"] = report.mean_linf;
  out["missing"] = report.missing;
  out["origins"] = json::array();
  for (const auto& r : report.origins)
    out["origins"].push_back({{"origin", r.origin},
                              {"l2", r.l2},
                              {"linf", r.linf},
                              {"ok", r.ok},
                              {"message", r.message}});
  return out.dump(2);
}

}  // namespace lrtar
