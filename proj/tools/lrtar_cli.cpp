// lrtar: command-line front end for the low-rank tensor autoregression
// library. Exit codes: 0 success (including soft solver nonconvergence),
// 1 diff-tensor mismatch, 2 usage/validation errors, 3 write failures.

#include "lrtar/evaluation.hpp"
#include "lrtar/io.hpp"
#include "lrtar/rng.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <iostream>
#include <optional>
#include <string>

namespace {

using namespace lrtar;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitDiff = 1;
constexpr int kExitUsage = 2;
constexpr int kExitWrite = 3;

Dims parse_index_list(const std::string& s) {
  Dims out;
  size_t pos = 0;
  while (pos <= s.size()) {
    size_t comma = s.find(',', pos);
    std::string item = s.substr(
        pos, comma == std::string::npos ? std::string::npos : comma - pos);
    size_t used = 0;
    long long v = std::stoll(item, &used);
    if (used != item.size() || v < 1)
      throw std::invalid_argument("bad index list: " + s);
    out.push_back(static_cast<Index>(v));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  size_t pos = 0;
  while (pos <= s.size()) {
    size_t comma = s.find(',', pos);
    std::string item = s.substr(
        pos, comma == std::string::npos ? std::string::npos : comma - pos);
    out.push_back(parse_double(item));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

int usage_error(const std::string& message) {
  std::cerr << "error: " << message << "\n";
  return kExitUsage;
}

int write_error(const std::string& message) {
  std::cerr << "write error: " << message << "\n";
  return kExitWrite;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!(out << '\n')) throw std::runtime_error("write failed: " + path);
}

// ---------------------------------------------------------------- simulate

struct SimulateOpts {
  std::string dims, ranks, out, model_out;
  Index t = 1000, burn_in = 200;
  std::uint64_t seed = 0;
  bool binary = false;
};

int run_simulate(const SimulateOpts& o) {
  std::optional<LrtarModel> model;
  std::optional<TensorSeries> series;
  try {
    Dims dims = parse_index_list(o.dims);
    Dims ranks = parse_index_list(o.ranks);
    model = make_dgp(dims, ranks, o.seed);
    series = model->simulate(o.t, o.burn_in, mix_seed(o.seed, 1));
  } catch (const std::exception& e) {
    return usage_error(e.what());
  }
  try {
    write_series(*series, o.out, o.binary);
    if (!o.model_out.empty()) write_model_json(*model, o.model_out);
  } catch (const std::exception& e) {
    return write_error(e.what());
  }
  return kExitOk;
}

// --------------------------------------------------------------------- fit

struct FitOpts {
  std::string in, estimator = "LTR", ranks, out, report, grid;
  std::string gamma = "auto";
  double lambda = 0.0;  // <= 0 selects by BIC
  double rho = 1.0;
  double tol = 1e-6;  // ALS relative objective tolerance
  double tol_primal = 1e-5, tol_dual = 1e-5;
  int max_iter = 500;
  bool binary = false;
};

int run_fit(const FitOpts& o) {
  FitReport fit;
  json report;
  try {
    TensorSeries series = read_series(o.in);
    RegressionDesign design = RegressionDesign::from_series(series);
    const Estimator est = parse_estimator(o.estimator);
    report["estimator"] = estimator_name(est);

    RegOptions reg;
    reg.lambda = o.lambda;
    reg.rho = o.rho;
    reg.max_iter = o.max_iter;
    reg.tol_primal = o.tol_primal;
    reg.tol_dual = o.tol_dual;

    switch (est) {
      case Estimator::OLS:
        fit = fit_ols(design);
        break;
      case Estimator::RRR:
      case Estimator::LTR: {
        if (o.ranks.empty())
          throw std::invalid_argument("--ranks is required for LTR/RRR");
        Dims ranks = parse_index_list(o.ranks);
        if (est == Estimator::LTR) {
          AlsOptions als;
          als.tol = o.tol;
          als.max_iter = o.max_iter;
          fit = fit_ltr(design, ranks, std::nullopt, als);
        } else {
          Index s = 1;
          const int d = design.d();
          Index pred = 1, resp = 1;
          if (static_cast<int>(ranks.size()) != 2 * d)
            throw std::invalid_argument("--ranks must have 2d entries");
          for (int i = 0; i < d; ++i) pred *= ranks[static_cast<size_t>(i)];
          for (int i = 0; i < d; ++i) resp *= ranks[static_cast<size_t>(d + i)];
          s = std::min(pred, resp);
          fit = fit_rrr(design, s);
        }
        break;
      }
      case Estimator::MN:
      case Estimator::SN:
      case Estimator::SSN:
      case Estimator::TSSN: {
        const RegEstimator kind =
            est == Estimator::MN
                ? RegEstimator::MN
                : (est == Estimator::SN ? RegEstimator::SN : RegEstimator::SSN);
        if (o.lambda > 0.0) {
          switch (kind) {
            case RegEstimator::MN: fit = fit_mn(design, reg); break;
            case RegEstimator::SN: fit = fit_sn(design, reg); break;
            case RegEstimator::SSN: fit = fit_ssn(design, reg); break;
          }
        } else {
          std::vector<double> grid;
          if (!o.grid.empty()) grid = parse_double_list(o.grid);
          BicSelection sel = select_lambda_bic(design, kind, grid, reg);
          fit = std::move(sel.fit);
          json table = json::array();
          for (const auto& e : sel.table)
            table.push_back({{"lambda", e.lambda},
                             {"bic", e.bic},
                             {"rss", e.rss},
                             {"df", e.df},
                             {"iterations", e.iterations},
                             {"converged", e.converged}});
          report["bic_table"] = std::move(table);
        }
        if (est == Estimator::TSSN) {
          double gamma = o.gamma == "auto"
                             ? default_gamma(fit.lambda, design.d())
                             : parse_double(o.gamma);
          TruncationResult tr = truncate_tssn(fit.estimate, gamma);
          fit.estimate = std::move(tr.estimate);
          fit.ranks = tr.ranks;
          fit.gamma = gamma;
          fit.rank_floored = tr.rank_floored;
        }
        break;
      }
      case Estimator::ZERO:
        throw std::invalid_argument("ZERO is a forecast baseline, not a fit estimator");
    }

    report["converged"] = fit.converged;
    report["iterations"] = fit.iterations;
    report["objective_trace"] = fit.objective_trace;
    if (fit.lambda > 0.0) report["lambda"] = fit.lambda;
    if (fit.gamma > 0.0) report["gamma"] = fit.gamma;
    if (fit.ranks) report["ranks"] = *fit.ranks;
    report["rank_floored"] = fit.rank_floored;
    if (!fit.primal_residuals.empty()) {
      report["primal_residuals"] = fit.primal_residuals;
      report["dual_residuals"] = fit.dual_residuals;
    }
  } catch (const std::exception& e) {
    return usage_error(e.what());
  }
  try {
    write_tensor(fit.estimate, o.out, o.binary);
    if (!o.report.empty()) write_text(o.report, report.dump(2));
  } catch (const std::exception& e) {
    return write_error(e.what());
  }
  return kExitOk;
}

// ---------------------------------------------------------------- forecast

struct ForecastCliOpts {
  std::string in, estimator = "SSN", ranks, model, csv, report, grid;
  Index start_origin = 0;  // 1-based origin t0 (forecast targets t0..T)
  double lambda = 0.0;
  int retune_every = 12;
};

int run_forecast(const ForecastCliOpts& o) {
  ForecastReport rep;
  try {
    TensorSeries series = read_series(o.in);
    ForecastOptions fo;
    fo.estimator = parse_estimator(o.estimator);
    if (!o.ranks.empty()) fo.ranks = parse_index_list(o.ranks);
    fo.reg.lambda = o.lambda;
    fo.retune_every = o.retune_every;
    if (!o.grid.empty()) fo.lambda_grid = parse_double_list(o.grid);
    if (!o.model.empty()) fo.oracle = read_model_json(o.model).transition();
    if (o.start_origin < 1)
      throw std::invalid_argument("--start-origin is required (1-based)");
    rep = rolling_forecast(series, fo, o.start_origin - 1);
  } catch (const std::exception& e) {
    return usage_error(e.what());
  }
  try {
    if (!o.csv.empty()) write_forecast_csv(rep, o.csv);
    if (!o.report.empty()) write_text(o.report, forecast_json(rep));
  } catch (const std::exception& e) {
    return write_error(e.what());
  }
  std::cout << "origins=" << rep.origins.size() << " missing=" << rep.missing
            << " mean_l2=" << format_double(rep.mean_l2)
            << " mean_linf=" << format_double(rep.mean_linf) << "\n";
  return kExitOk;
}

// ------------------------------------------------------------------- bench

struct BenchOpts {
  std::string case_name, csv, report;
  int reps = 50;
  std::vector<Index> t;
  std::uint64_t seed = 0;
};

int run_bench(const BenchOpts& o) {
  static const std::map<std::string, std::pair<Dims, bool>> kCases = {
      // dims, regularized-family flag
      {"1a", {{5, 5}, false}},    {"1b", {{10, 10}, false}},
      {"2a", {{5, 5, 5}, false}}, {"2b", {{7, 7, 7}, false}},
      {"3a", {{5, 5}, true}},     {"3b", {{10, 10}, true}},
      {"4a", {{5, 5, 5}, true}},  {"4b", {{7, 7, 7}, true}},
  };
  try {
    if (o.reps < 1) throw std::invalid_argument("--reps must be >= 1");
    if (o.case_name.size() == 1 && o.case_name[0] >= 'a' &&
        o.case_name[0] <= 'h') {
      auto results = error_scaling_study(o.case_name, o.reps, o.seed);
      try {
        if (!o.csv.empty()) write_scaling_csv(results, o.csv);
        if (!o.report.empty())
          write_text(o.report, scaling_summary_json(results));
      } catch (const std::exception& e) {
        return write_error(e.what());
      }
      std::cout << scaling_summary_json(results) << "\n";
      return kExitOk;
    }
    auto it = kCases.find(o.case_name);
    if (it == kCases.end()) {
      std::string names;
      for (const auto& [k, v] : kCases) names += k + " ";
      throw std::invalid_argument("unknown case '" + o.case_name +
                                  "' (valid: " + names + "a b c d e f g h)");
    }
    ExperimentSpec spec;
    spec.dims = it->second.first;
    spec.ranks.assign(spec.dims.size() * 2, 2);
    spec.sample_sizes = o.t.empty() ? std::vector<Index>{1000} : o.t;
    spec.estimators =
        it->second.second
            ? std::vector<Estimator>{Estimator::SN, Estimator::MN,
                                     Estimator::SSN, Estimator::TSSN}
            : std::vector<Estimator>{Estimator::LTR, Estimator::RRR,
                                     Estimator::OLS};
    spec.replications = o.reps;
    spec.root_seed = o.seed;
    auto results = run_experiment(spec, o.case_name);
    try {
      if (!o.csv.empty()) write_results_csv(results, o.csv);
      if (!o.report.empty())
        write_text(o.report, results_summary_json(results));
    } catch (const std::exception& e) {
      return write_error(e.what());
    }
    std::cout << results_summary_json(results) << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    return usage_error(e.what());
  }
}

// ------------------------------------------------------------------ ingest

struct IngestOpts {
  std::string in, dims, out;
  bool demean = false, header = false, binary = false;
};

int run_ingest(const IngestOpts& o) {
  TensorSeries series;
  try {
    Dims dims = parse_index_list(o.dims);
    const Index p = dims_product(dims);
    CsvTable table = read_csv(o.in);
    std::vector<std::vector<std::string>> rows;
    if (!o.header && !table.header.empty()) rows.push_back(table.header);
    rows.insert(rows.end(), table.rows.begin(), table.rows.end());
    if (rows.empty()) throw std::invalid_argument("empty CSV: " + o.in);

    Matrix m(static_cast<Index>(rows.size()), p);
    for (size_t r = 0; r < rows.size(); ++r) {
      if (static_cast<Index>(rows[r].size()) != p)
        throw std::invalid_argument(
            "row " + std::to_string(r + 1) + " has " +
            std::to_string(rows[r].size()) + " columns, expected " +
            std::to_string(p));
      for (Index c = 0; c < p; ++c)
        m(static_cast<Index>(r), c) = parse_double(rows[r][static_cast<size_t>(c)]);
    }
    if (o.demean) m.rowwise() -= m.colwise().mean();
    series = TensorSeries::from_matrix(m, dims);
  } catch (const std::exception& e) {
    return usage_error(e.what());
  }
  try {
    write_series(series, o.out, o.binary);
  } catch (const std::exception& e) {
    return write_error(e.what());
  }
  return kExitOk;
}

// ------------------------------------------------------------- diff-tensor

struct DiffOpts {
  std::string a, b;
  double tol = 1e-6;
};

int run_diff(const DiffOpts& o) {
  try {
    DenseTensor a = read_tensor(o.a);
    DenseTensor b = read_tensor(o.b);
    if (a.dims() != b.dims()) {
      std::cout << "shape mismatch\n";
      return kExitDiff;
    }
    const double fro = (a - b).norm();
    const double max_abs =
        a.size() ? (a.data() - b.data()).cwiseAbs().maxCoeff() : 0.0;
    std::cout << "fro_diff=" << format_double(fro)
              << " max_abs_diff=" << format_double(max_abs) << "\n";
    return fro <= o.tol ? kExitOk : kExitDiff;
  } catch (const std::exception& e) {
    return usage_error(e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"low-rank tensor autoregression toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value config file; flags take precedence");

  SimulateOpts sim;
  auto* c_sim = app.add_subcommand("simulate", "simulate a series from a random low-rank model");
  c_sim->add_option("--dims", sim.dims, "observation dims p1,...,pd")->required();
  c_sim->add_option("--ranks", sim.ranks, "multilinear ranks r1,...,r2d")->required();
  c_sim->add_option("--T", sim.t, "series length")->check(CLI::PositiveNumber);
  c_sim->add_option("--burn-in", sim.burn_in)->check(CLI::NonNegativeNumber);
  c_sim->add_option("--seed", sim.seed, "RNG seed");
  c_sim->add_option("--out", sim.out, "output series file")->required();
  c_sim->add_option("--model-out", sim.model_out, "output model JSON");
  c_sim->add_flag("--binary", sim.binary, "binary series body");

  FitOpts fit;
  auto* c_fit = app.add_subcommand("fit", "fit a transition tensor to a series");
  c_fit->add_option("--in", fit.in, "input series file")->required();
  c_fit->add_option("--estimator", fit.estimator, "OLS|RRR|LTR|SN|MN|SSN|TSSN");
  c_fit->add_option("--ranks", fit.ranks, "ranks for LTR/RRR");
  c_fit->add_option("--lambda", fit.lambda, "penalty level; omit for BIC tuning");
  c_fit->add_option("--grid", fit.grid, "explicit BIC lambda grid l1,l2,...");
  c_fit->add_option("--gamma", fit.gamma, "TSSN truncation threshold or 'auto'");
  c_fit->add_option("--rho", fit.rho, "ADMM penalty parameter");
  c_fit->add_option("--tol", fit.tol, "ALS relative objective tolerance");
  c_fit->add_option("--tol-primal", fit.tol_primal);
  c_fit->add_option("--tol-dual", fit.tol_dual);
  c_fit->add_option("--max-iter", fit.max_iter)->check(CLI::PositiveNumber);
  c_fit->add_option("--out", fit.out, "output estimate tensor file")->required();
  c_fit->add_option("--report", fit.report, "diagnostics JSON path");
  c_fit->add_flag("--binary", fit.binary);

  ForecastCliOpts fc;
  auto* c_fc = app.add_subcommand("forecast", "expanding-window one-step forecasts");
  c_fc->add_option("--in", fc.in)->required();
  c_fc->add_option("--estimator", fc.estimator, "OLS|RRR|LTR|SN|MN|SSN|TSSN|ZERO");
  c_fc->add_option("--ranks", fc.ranks);
  c_fc->add_option("--model", fc.model, "oracle model JSON (skip fitting)");
  c_fc->add_option("--start-origin", fc.start_origin, "first forecast origin (1-based)")->required();
  c_fc->add_option("--lambda", fc.lambda, "fixed penalty; omit for BIC tuning");
  c_fc->add_option("--grid", fc.grid);
  c_fc->add_option("--retune-every", fc.retune_every)->check(CLI::PositiveNumber);
  c_fc->add_option("--csv", fc.csv, "per-origin error CSV");
  c_fc->add_option("--report", fc.report, "summary JSON");

  BenchOpts bench;
  auto* c_bench = app.add_subcommand("bench", "simulation studies (cases 1a-4b, a-h)");
  c_bench->add_option("--case", bench.case_name)->required();
  c_bench->add_option("--reps", bench.reps, "replications");
  c_bench->add_option("--T", bench.t, "sample sizes (numbered cases)");
  c_bench->add_option("--seed", bench.seed);
  c_bench->add_option("--csv", bench.csv);
  c_bench->add_option("--report", bench.report);

  IngestOpts ing;
  auto* c_ing = app.add_subcommand("ingest", "convert a CSV panel to a series file");
  c_ing->add_option("--in", ing.in)->required();
  c_ing->add_option("--dims", ing.dims)->required();
  c_ing->add_option("--out", ing.out)->required();
  c_ing->add_flag("--demean", ing.demean, "subtract per-column means");
  c_ing->add_flag("--header", ing.header, "skip the first CSV row");
  c_ing->add_flag("--binary", ing.binary);

  DiffOpts diff;
  auto* c_diff = app.add_subcommand("diff-tensor", "compare two tensor files");
  c_diff->add_option("--a", diff.a)->required();
  c_diff->add_option("--b", diff.b)->required();
  c_diff->add_option("--tol", diff.tol, "Frobenius tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (c_sim->parsed()) return run_simulate(sim);
  if (c_fit->parsed()) return run_fit(fit);
  if (c_fc->parsed()) return run_forecast(fc);
  if (c_bench->parsed()) return run_bench(bench);
  if (c_ing->parsed()) return run_ingest(ing);
  if (c_diff->parsed()) return run_diff(diff);
  return kExitUsage;
}
