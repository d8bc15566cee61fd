#pragma once

// Command-line front end. Exit status: 0 pass, 1 failed assertion, 2 usage error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wbound/harness.hpp"
#include "wbound/json_io.hpp"

namespace wbound {

namespace cli_detail {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

inline void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "Experiment config (flat JSON)");
  sub->add_option("--seed", c.seed, "Master seed (overrides the config)");
  sub->add_option("--out", c.out, "Output path (default: config output, else stdout)");
}

inline ExperimentConfig resolve_config(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (!c.out.empty()) cfg.output = c.out;
  return cfg;
}

/// Writes through fn to the output path or stdout.
template <class Fn>
void emit(const std::string& path, Fn&& fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write '" + path + "'");
  fn(os);
}

inline Metric metric_from_string(const std::string& s) {
  if (s == "euclidean") return Metric::euclidean;
  if (s == "boundary") return Metric::boundary;
  throw ConfigError("metric must be 'euclidean' or 'boundary'");
}

inline CostSpec cost_from(const std::string& metric, double p, int d, double side, double scale) {
  return metric_from_string(metric) == Metric::euclidean ? CostSpec::euclidean(p, scale)
                                                        : CostSpec::boundary(Box(d, side), p, scale);
}

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cli_detail

inline int run_cli(int argc, const char* const* argv, std::ostream& err = std::cerr) {
  using namespace cli_detail;
  CLI::App app{"wbound: optimal transport with boundary costs, checks and Monte Carlo runs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "wbound 1.0");

  int status = 0;
  std::function<void()> action;

  // sample
  Common c_sample;
  std::optional<double> sample_side;
  auto* s_sample = app.add_subcommand("sample", "Draw a point cloud from the configured sampler");
  add_common(s_sample, c_sample);
  s_sample->add_option("--side", sample_side, "Box side (default: first ladder entry)");
  s_sample->callback([&] {
    action = [&] {
      auto cfg = resolve_config(c_sample);
      const Box box(cfg.dimension, sample_side.value_or(cfg.ladder.front()));
      RngStream rng(cfg.seed, 0);
      auto mu = sample(box, sampler_for(cfg, box), rng);
      emit(cfg.output, [&](std::ostream& os) { write_point_cloud(os, mu); });
    };
  });

  // solve
  Common c_solve;
  std::string mu_path, lambda_path, metric = "euclidean";
  std::optional<double> solve_p, solve_side;
  double solve_scale = 1.0;
  auto* s_solve = app.add_subcommand("solve", "Solve one transport instance and print the solution JSON");
  add_common(s_solve, c_solve);
  s_solve->add_option("--mu", mu_path, "Point cloud of mu (targets)")->required();
  s_solve->add_option("--lambda", lambda_path, "Point cloud of lambda (sources)")->required();
  s_solve->add_option("--metric", metric, "euclidean or boundary");
  s_solve->add_option("--p", solve_p, "Cost exponent (default: config p)");
  s_solve->add_option("--side", solve_side, "Box side for the boundary metric (default: first ladder entry)");
  s_solve->add_option("--scale", solve_scale, "Cost scale t");
  s_solve->callback([&] {
    action = [&] {
      auto cfg = resolve_config(c_solve);
      auto mu = read_point_cloud_file(mu_path);
      auto lambda = read_point_cloud_file(lambda_path);
      auto cost = cost_from(metric, solve_p.value_or(cfg.p), mu.dim(), solve_side.value_or(cfg.ladder.front()), solve_scale);
      auto sol = solve(mu, lambda, cost);
      emit(cfg.output, [&](std::ostream& os) { os << solution_to_json(sol, cost).dump(2) << '\n'; });
    };
  });

  // transform
  Common c_tr;
  std::string pot_path, query_path, direction = "c", tr_metric = "euclidean";
  std::optional<double> tr_p, tr_side;
  double tr_scale = 1.0;
  auto* s_tr = app.add_subcommand("transform", "Apply the c-transform (or its dual) to a potential file");
  add_common(s_tr, c_tr);
  s_tr->add_option("--potential", pot_path, "Point cloud whose last column is the potential")->required();
  s_tr->add_option("--queries", query_path, "Point cloud of query points (last column ignored)")->required();
  s_tr->add_option("--direction", direction, "c: min over the support; hat: max over the support")
      ->check(CLI::IsMember({"c", "hat"}));
  s_tr->add_option("--metric", tr_metric, "euclidean or boundary");
  s_tr->add_option("--p", tr_p, "Cost exponent");
  s_tr->add_option("--side", tr_side, "Box side for the boundary metric");
  s_tr->add_option("--scale", tr_scale, "Cost scale t");
  s_tr->callback([&] {
    action = [&] {
      auto cfg = resolve_config(c_tr);
      std::ifstream pin(pot_path), qin(query_path);
      if (!pin) throw UsageError("cannot open '" + pot_path + "'");
      if (!qin) throw UsageError("cannot open '" + query_path + "'");
      auto [P, vals] = read_point_table(pin);
      auto [Q, ignored] = read_point_table(qin);
      auto cost = cost_from(tr_metric, tr_p.value_or(cfg.p), P.dim(), tr_side.value_or(cfg.ladder.front()), tr_scale);
      auto out = direction == "c" ? c_transform(P, vals, cost, Q) : hat_transform(P, vals, cost, Q);
      emit(cfg.output, [&](std::ostream& os) { write_point_cloud(os, Q, out); });
    };
  });

  // verify
  Common c_verify;
  std::string check_name;
  auto* s_verify = app.add_subcommand("verify", "Run a batch of inequality checks and write the report CSV");
  add_common(s_verify, c_verify);
  s_verify->add_option("check", check_name, "Check name")->required()->check(CLI::IsMember(verify_check_names()));
  s_verify->callback([&] {
    action = [&] {
      auto cfg = resolve_config(c_verify);
      auto rows = run_verify(check_name, cfg);
      emit(cfg.output, [&](std::ostream& os) { write_verify_csv(os, rows); });
      std::size_t failed = 0, flagged = 0;
      for (const auto& r : rows) {
        failed += r.report.asserted && !r.report.pass;
        flagged += !r.report.flag.empty();
      }
      err << check_name << ": " << rows.size() << " instances, " << failed << " failed, " << flagged << " flagged\n";
      status = batch_passes(rows) ? 0 : 1;
    };
  });

  // estimate
  Common c_est;
  auto* s_est = app.add_subcommand("estimate", "Monte Carlo estimates of w(L), wb(L) and their gap");
  add_common(s_est, c_est);
  s_est->callback([&] {
    action = [&] {
      auto cfg = resolve_config(c_est);
      auto run = estimate_costs(cfg);
      emit(cfg.output, [&](std::ostream& os) { write_estimates_csv(os, run.records); });
      err << "redrawn " << run.redrawn << ", skipped " << run.skipped << ", order violations " << run.order_violations
          << '\n';
      status = run.order_violations ? 1 : 0;
    };
  });

  // pde
  Common c_pde;
  auto* s_pde = app.add_subcommand("pde", "Poisson energies of rasterized samples over the ladder");
  add_common(s_pde, c_pde);
  s_pde->callback([&] {
    action = [&] {
      auto cfg = resolve_config(c_pde);
      auto recs = run_pde(cfg);
      emit(cfg.output, [&](std::ostream& os) { write_pde_csv(os, recs); });
      std::size_t bad = 0;
      for (const auto& r : recs) bad += r.order_violations;
      status = bad ? 1 : 0;
    };
  });

  // variance
  Common c_var;
  auto* s_var = app.add_subcommand("variance", "Inner-region variance of the boundary potential against block solves");
  add_common(s_var, c_var);
  s_var->callback([&] {
    action = [&] {
      auto cfg = resolve_config(c_var);
      auto recs = run_variance_bound(cfg);
      emit(cfg.output, [&](std::ostream& os) { write_variance_csv(os, recs); });
    };
  });

  // report
  Common c_rep;
  std::vector<std::string> inputs;
  auto* s_rep = app.add_subcommand("report", "Convergence report from estimate CSVs");
  add_common(s_rep, c_rep);
  s_rep->add_option("inputs", inputs, "Estimate CSV files")->required();
  s_rep->callback([&] {
    action = [&] {
      auto cfg = resolve_config(c_rep);
      std::vector<EstimateRecord> recs;
      for (const auto& path : inputs) {
        std::ifstream in(path);
        if (!in) throw UsageError("cannot open '" + path + "'");
        auto part = read_estimates_csv(in);
        recs.insert(recs.end(), part.begin(), part.end());
      }
      auto rep = convergence_report(recs);
      emit(cfg.output, [&](std::ostream& os) { write_convergence_csv(os, rep); });
      status = rep.pass ? 0 : 1;
    };
  });

  // calibrate
  Common c_cal;
  auto* s_cal = app.add_subcommand("calibrate", "Fit the frozen constants of the implicit-constant checks");
  add_common(s_cal, c_cal);
  s_cal->callback([&] {
    action = [&] {
      auto cfg = resolve_config(c_cal);
      std::vector<CalibrationResult> results;
      for (auto c : implicit_checks) {
        results.push_back(calibrate(c));
        const auto& r = results.back();
        err << to_string(c) << ": median " << r.median << ", max " << r.max << ", max/median " << r.max / r.median
            << ", constant " << r.constant << '\n';
      }
      emit(cfg.output, [&](std::ostream& os) { write_calibration_header(os, results); });
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream out;
    const int code = app.exit(e, out, err);
    std::cout << out.str();
    return code == 0 ? 0 : 2;
  }
  try {
    if (action) action();
  } catch (const ConfigError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return status;
}

}  // namespace wbound
