#pragma once

// Seeded Monte Carlo runs: cost estimates over a ladder of box sides,
// convergence report, variance bound, batch checks and CSV output.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "wbound/analysis.hpp"
#include "wbound/measures.hpp"
#include "wbound/parallel.hpp"
#include "wbound/rng.hpp"
#include "wbound/stats.hpp"
#include "wbound/transport.hpp"
#include "wbound/verify.hpp"

namespace wbound {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ExperimentConfig {
  int dimension = 3;
  double p = 2.0;
  SamplerSpec sampler;
  std::vector<double> ladder{4.0, 6.0, 8.0, 10.0};
  std::size_t replications = 8;
  double grid_per_unit = 2.0;
  double delta = 0.25;
  double epsilon = 0.5;
  double block_side = 2.0;  // L0 for block decompositions
  std::uint64_t seed = 1;
  std::string output;

  void validate() const {
    if (dimension < 1) throw ConfigError("dimension must be >= 1");
    if (!(p >= 1.0)) throw ConfigError("p must be >= 1");
    if (ladder.empty()) throw ConfigError("ladder must not be empty");
    for (std::size_t i = 0; i < ladder.size(); ++i) {
      if (!(ladder[i] > 0.0)) throw ConfigError("ladder sides must be positive");
      if (i && !(ladder[i] > ladder[i - 1])) throw ConfigError("ladder must be strictly increasing");
    }
    if (replications < 2) throw ConfigError("replications must be >= 2");
    if (!(grid_per_unit >= 1.0)) throw ConfigError("grid_per_unit must be >= 1");
    if (!(delta > 0.0) || delta > 0.25) throw ConfigError("delta must lie in (0, 1/4]");
    if (!(epsilon > 0.0) || epsilon > 1.0) throw ConfigError("epsilon must lie in (0, 1]");
    if (!(block_side > 0.0)) throw ConfigError("block_side must be positive");
    if (!(sampler.intensity > 0.0)) throw ConfigError("intensity must be positive");
    if (!(sampler.dt > 0.0)) throw ConfigError("dt must be positive");
  }
};

inline nlohmann::json to_json(const ExperimentConfig& c) {
  return {{"dimension", c.dimension},
          {"p", c.p},
          {"sampler", to_string(c.sampler.kind)},
          {"intensity", c.sampler.intensity},
          {"n", c.sampler.n},
          {"radius", c.sampler.radius},
          {"kill_radius", c.sampler.kill_radius},
          {"dt", c.sampler.dt},
          {"ladder", c.ladder},
          {"replications", c.replications},
          {"grid_per_unit", c.grid_per_unit},
          {"delta", c.delta},
          {"epsilon", c.epsilon},
          {"block_side", c.block_side},
          {"seed", c.seed},
          {"output", c.output}};
}

/// Flat JSON object with the field names of to_json; unknown keys rejected.
inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& k = it.key();
      const auto& v = it.value();
      if (k == "dimension") c.dimension = v.get<int>();
      else if (k == "p") c.p = v.get<double>();
      else if (k == "sampler") c.sampler.kind = sampler_kind_from_string(v.get<std::string>());
      else if (k == "intensity") c.sampler.intensity = v.get<double>();
      else if (k == "n") c.sampler.n = v.get<std::size_t>();
      else if (k == "radius") c.sampler.radius = v.get<double>();
      else if (k == "kill_radius") c.sampler.kill_radius = v.get<double>();
      else if (k == "dt") c.sampler.dt = v.get<double>();
      else if (k == "ladder") c.ladder = v.get<std::vector<double>>();
      else if (k == "replications") c.replications = v.get<std::size_t>();
      else if (k == "grid_per_unit") c.grid_per_unit = v.get<double>();
      else if (k == "delta") c.delta = v.get<double>();
      else if (k == "epsilon") c.epsilon = v.get<double>();
      else if (k == "block_side") c.block_side = v.get<double>();
      else if (k == "seed") c.seed = v.get<std::uint64_t>();
      else if (k == "output") c.output = v.get<std::string>();
      else throw ConfigError("unknown config key '" + k + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

/// Sampler for a box of the ladder; iid_uniform with n = 0 uses intensity * volume points.
inline SamplerSpec sampler_for(const ExperimentConfig& c, const Box& box) {
  SamplerSpec s = c.sampler;
  if (s.kind == SamplerKind::iid_uniform && s.n == 0)
    s.n = static_cast<std::size_t>(std::max(1L, std::lround(s.intensity * box.volume())));
  return s;
}

/// Non-empty sample; empty draws are redrawn from the same stream and counted.
inline PointMeasure sample_nonempty(const Box& box, const SamplerSpec& spec, RngStream& rng, std::size_t& redraws) {
  for (int attempt = 0; attempt < 10000; ++attempt) {
    auto mu = sample(box, spec, rng);
    if (!mu.empty()) return mu;
    ++redraws;
  }
  throw EmptyMeasure("sampler produced only empty measures");
}

inline std::uint64_t stream_index(std::size_t rung, std::size_t rep) {
  return (static_cast<std::uint64_t>(rung) << 32) | static_cast<std::uint64_t>(rep);
}

struct EstimateRecord {
  std::string sampler;
  int d = 0;
  double p = 2.0;
  double L = 0.0;
  std::string quantity;  // w, wb or gap
  double mean = 0.0;
  double se = 0.0;
  std::size_t reps = 0;
  double grid = 0.0;
};

struct EstimateRun {
  std::vector<EstimateRecord> records;
  std::size_t redrawn = 0;          // empty samples drawn again
  std::size_t skipped = 0;          // instances over solver capacity
  std::size_t order_violations = 0; // instances with wb > w
  double max_certificate_gap = 0.0;
};

/// w(L) = W^p/L^d, wb(L) = Wb^p/L^d and their paired gap over the ladder.
inline EstimateRun estimate_costs(const ExperimentConfig& cfg, const SolveOptions& opt = {}) {
  cfg.validate();
  EstimateRun run;
  for (std::size_t li = 0; li < cfg.ladder.size(); ++li) {
    const Box box(cfg.dimension, cfg.ladder[li]);
    const auto spec = sampler_for(cfg, box);
    const int g = cells_for(box, cfg.grid_per_unit);
    const double vol = box.volume();
    const std::size_t R = cfg.replications;
    std::vector<double> w(R), wb(R), cert(R, 0.0);
    std::vector<std::size_t> redraws(R, 0);
    std::vector<char> ok(R, 0), bad(R, 0);
    parallel_for(R, [&](std::size_t r) {
      RngStream rng(cfg.seed, stream_index(li, r));
      auto mu = sample_nonempty(box, spec, rng, redraws[r]);
      auto lambda = discretize_lebesgue(box, g, mu.total_mass());
      try {
        auto a = solve(mu, lambda, CostSpec::euclidean(cfg.p), opt);
        auto b = solve(mu, lambda, CostSpec::boundary(box, cfg.p), opt);
        w[r] = a.value / vol;
        wb[r] = b.value / vol;
        cert[r] = std::max(a.certificate.gap, b.certificate.gap);
        bad[r] = b.value > a.value * (1.0 + 1e-9) + 1e-12;
        ok[r] = 1;
      } catch (const CapacityExceeded&) {
      }
    });
    std::vector<double> ws, wbs, gs;
    for (std::size_t r = 0; r < R; ++r) {
      run.redrawn += redraws[r];
      if (!ok[r]) {
        ++run.skipped;
        continue;
      }
      run.order_violations += bad[r];
      run.max_certificate_gap = std::max(run.max_certificate_gap, cert[r]);
      ws.push_back(w[r]);
      wbs.push_back(wb[r]);
      gs.push_back(w[r] - wb[r]);
    }
    const std::pair<const char*, const std::vector<double>*> qs[] = {{"w", &ws}, {"wb", &wbs}, {"gap", &gs}};
    for (const auto& [name, xs] : qs) {
      auto ms = mean_se(*xs);
      run.records.push_back({to_string(cfg.sampler.kind), cfg.dimension, cfg.p, cfg.ladder[li], name, ms.mean, ms.se,
                             ms.n, cfg.grid_per_unit});
    }
  }
  return run;
}

struct GapRow {
  double L = 0.0;
  double gap = 0.0;
  double se = 0.0;
};

struct ConvergenceReport {
  std::vector<GapRow> rows;
  double z = 0.0;          // (gap bottom - gap top) / combined se
  double slope = 0.0;      // log-log slope of gap against L
  double slope_se = 0.0;
  bool slope_defined = false;
  bool pass = false;
  std::string flag;        // "persistent gap" when the test fails
};

/// One-sided 95% test that the gap at the top of the ladder is below the gap
/// at the bottom, plus a log-log slope.
inline ConvergenceReport convergence_report(const std::vector<EstimateRecord>& records) {
  std::map<double, GapRow> rows;
  std::map<double, std::map<std::string, const EstimateRecord*>> by_L;
  for (const auto& r : records) by_L[r.L][r.quantity] = &r;
  for (const auto& [L, q] : by_L) {
    GapRow row{L, 0.0, 0.0};
    if (q.count("gap")) {
      row.gap = q.at("gap")->mean;
      row.se = q.at("gap")->se;
    } else if (q.count("w") && q.count("wb")) {
      row.gap = q.at("w")->mean - q.at("wb")->mean;
      row.se = std::hypot(q.at("w")->se, q.at("wb")->se);
    } else {
      continue;
    }
    rows[L] = row;
  }
  if (rows.size() < 3) throw std::invalid_argument("convergence_report: need at least 3 ladder points");
  ConvergenceReport rep;
  for (const auto& [L, row] : rows) rep.rows.push_back(row);
  const auto& lo = rep.rows.front();
  const auto& hi = rep.rows.back();
  const double diff = lo.gap - hi.gap;
  const double se = std::hypot(lo.se, hi.se);
  bool all_zero = true;
  for (const auto& r : rep.rows) all_zero = all_zero && r.gap == 0.0 && r.se == 0.0;
  if (all_zero) {
    rep.pass = true;
  } else {
    rep.z = se > 0.0 ? diff / se : (diff > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    rep.pass = diff > z95 * se && diff > 0.0;
  }
  std::vector<double> lx, ly;
  for (const auto& r : rep.rows)
    if (r.gap > 0.0) {
      lx.push_back(std::log(r.L));
      ly.push_back(std::log(r.gap));
    }
  if (lx.size() >= 2) {
    auto f = fit_line(lx, ly);
    rep.slope = f.slope;
    rep.slope_se = f.slope_se;
    rep.slope_defined = true;
  }
  if (!rep.pass) rep.flag = "persistent gap";
  return rep;
}

struct VarianceRecord {
  double L = 0.0;
  std::size_t reps = 0;
  std::size_t skipped = 0;       // instances with an empty block
  MeanSe variance_per_volume;    // Var_{inner(r)}(u) / L^d
  MeanSe variance_scaled;        // Var_{inner(r)}(u) / L^{d+2}
  MeanSe bracket_per_volume;     // Wb - (1+eps)^{-1} sum Wb_k + eps^{-1} W^2(lambda-bar, lambda), per volume
  MeanSe rhs_per_volume;         // diam^2 bracket + |Omega| max diam_k^4, per volume
};

/// Variance of the boundary potential in the inner region against the
/// block super-additivity defect (p = 2, d >= 3).
inline std::vector<VarianceRecord> run_variance_bound(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.dimension < 3) throw ConfigError("variance bound needs d >= 3");
  if (cfg.p != 2.0) throw ConfigError("variance bound needs p = 2");
  std::vector<VarianceRecord> out;
  const double eps = cfg.epsilon;
  for (std::size_t li = 0; li < cfg.ladder.size(); ++li) {
    const double L = cfg.ladder[li];
    if (!is_power_of_two_ratio(L, cfg.block_side)) throw ConfigError("L / block_side must be a power of two");
    const Box box(cfg.dimension, L);
    const int m = static_cast<int>(std::lround(L / cfg.block_side));
    const int g = cells_for(box, cfg.grid_per_unit);
    if (g % m != 0) throw ConfigError("grid must refine the blocks");
    const double vol = box.volume();
    const std::size_t R = cfg.replications;
    std::vector<double> var(R), bracket(R), rhs(R);
    std::vector<char> ok(R, 0);
    std::vector<std::size_t> redraws(R, 0);
    const auto spec = sampler_for(cfg, box);
    parallel_for(R, [&](std::size_t r) {
      RngStream rng(cfg.seed, stream_index(li, r));
      auto mu = sample_nonempty(box, spec, rng, redraws[r]);
      auto mu_parts = split_by_blocks(mu, box, m);
      for (const auto& part : mu_parts)
        if (part.empty()) return;
      auto lambda = discretize_lebesgue(box, g, mu.total_mass());
      auto lam_parts = split_by_blocks(lambda, box, m);
      const auto cost = CostSpec::boundary(box, 2.0);
      auto whole = solve(mu, lambda, cost);
      auto v = normalize_potential_S0(whole.v, mu.points(), box, 2.0);
      ScalarGridField u(box, g, c_transform(mu.points(), v, cost, lambda.points()));
      var[r] = inner_variance(u, cfg.delta * L);
      auto blocks = partition_box(box, m);
      double sum = 0.0;
      for (std::size_t k = 0; k < blocks.size(); ++k) {
        auto lk = lam_parts[k].scaled(mu_parts[k].total_mass() / lam_parts[k].total_mass());
        sum += solve(mu_parts[k], lk, CostSpec::boundary(blocks[k], 2.0, 1.0 + eps)).value;
      }
      auto lbar = detail::block_averaged(mu_parts, lam_parts, box.dim());
      const double coupling = solve(lbar, lambda, CostSpec::euclidean(2.0)).value;
      bracket[r] = whole.value - sum + coupling / eps;
      const double dk = blocks[0].diameter();
      rhs[r] = box.diameter() * box.diameter() * bracket[r] + vol * std::pow(dk, 4.0);
      ok[r] = 1;
    });
    VarianceRecord rec;
    rec.L = L;
    std::vector<double> a, b, c, e;
    for (std::size_t r = 0; r < R; ++r) {
      if (!ok[r]) {
        ++rec.skipped;
        continue;
      }
      a.push_back(var[r] / vol);
      b.push_back(var[r] / (vol * L * L));
      c.push_back(bracket[r] / vol);
      e.push_back(rhs[r] / vol);
    }
    rec.reps = a.size();
    rec.variance_per_volume = mean_se(a);
    rec.variance_scaled = mean_se(b);
    rec.bracket_per_volume = mean_se(c);
    rec.rhs_per_volume = mean_se(e);
    out.push_back(rec);
  }
  return out;
}

/// PDE statistics over the ladder, L0 = block_side.
inline std::vector<PdeAnsatzRecord> run_pde(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<PdeAnsatzRecord> out;
  for (std::size_t li = 0; li < cfg.ladder.size(); ++li) {
    const Box box(cfg.dimension, cfg.ladder[li]);
    out.push_back(pde_ansatz_stats(box, cfg.sampler.intensity, cells_for(box, cfg.grid_per_unit), cfg.block_side,
                                   cfg.replications, cfg.seed, stream_index(li, 0)));
  }
  return out;
}

// ---- batch checks ----

struct VerifyRow {
  std::string check;
  std::uint64_t seed = 0;
  int d = 0;
  double L = 0.0;
  double p = 2.0;
  int m = 0;
  double epsilon = 0.0;
  double delta = 0.0;
  IneqReport report;
};

inline const std::vector<std::string>& verify_check_names() {
  static const std::vector<std::string> names{"subadditivity", "superadditivity", "displacement", "tv-bound",
                                              "potential-bounds", "peyre", "magic-identity", "stability",
                                              "main-bound"};
  return names;
}

/// Instance i uses seed cfg.seed + i. Geometric checks run on the ladder;
/// the implicit-constant checks run on their calibration families with the
/// frozen constants, except main-bound, which uses the config box and delta.
inline std::vector<VerifyRow> run_verify(const std::string& check, const ExperimentConfig& cfg) {
  cfg.validate();
  const auto& names = verify_check_names();
  if (std::find(names.begin(), names.end(), check) == names.end()) throw ConfigError("unknown check '" + check + "'");
  struct Job {
    double L;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (double L : cfg.ladder)
    for (std::size_t i = 0; i < cfg.replications; ++i) jobs.push_back({L, cfg.seed + i});
  std::vector<VerifyRow> rows(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t j) {
    const auto [L, seed] = jobs[j];
    VerifyRow row;
    row.check = check;
    row.seed = seed;
    row.d = cfg.dimension;
    row.L = L;
    row.p = cfg.p;
    row.epsilon = cfg.epsilon;
    row.delta = cfg.delta;
    const Box box(cfg.dimension, L);
    RngStream rng(seed, 0);
    auto draw = [&] {
      std::size_t redraws = 0;
      return sample_nonempty(box, sampler_for(cfg, box), rng, redraws);
    };
    const int g = cells_for(box, cfg.grid_per_unit);
    const int m = std::max(1, static_cast<int>(std::lround(L / cfg.block_side)));
    if (check == "subadditivity" || check == "superadditivity") {
      row.m = m;
      if (check == "superadditivity") row.p = 2.0;
      auto mu = draw();
      const int gg = (g % m == 0) ? g : m * ((g + m - 1) / m);
      row.report = check == "subadditivity" ? check_subadditivity(mu, box, m, cfg.p, cfg.epsilon, gg)
                                            : check_superadditivity_glue(mu, box, m, cfg.epsilon, gg);
    } else if (check == "displacement" || check == "potential-bounds") {
      row.m = g;
      auto mu = draw();
      auto lambda = discretize_lebesgue(box, g, mu.total_mass());
      auto sol = solve(mu, lambda, CostSpec::boundary(box, cfg.p));
      row.report = check == "displacement" ? check_displacement(sol, mu, lambda, box, cfg.p)
                                           : check_potential_bounds(sol, mu, box, cfg.p);
    } else if (check == "tv-bound") {
      row.m = g;
      auto lambda = discretize_lebesgue(box, g, 1.0);
      std::vector<double> w(lambda.size());
      for (auto& x : w) x = rng.uniform(0.5, 1.5);
      double s = 0.0;
      for (double x : w) s += x;
      for (auto& x : w) x /= s;
      PointMeasure mu(lambda.points(), w);
      row.report = check_tv_bound(mu, lambda.scaled(mu.total_mass() / lambda.total_mass()), box, cfg.p);
    } else if (check == "main-bound") {
      row.m = g;
      row.p = 2.0;
      auto mu = draw();
      row.report = check_main_bound(mu, box, cfg.delta, cfg.epsilon, g, frozen_constant(ImplicitCheck::main_bound));
    } else {
      const ImplicitCheck c = check == "peyre"            ? ImplicitCheck::peyre
                              : check == "magic-identity" ? ImplicitCheck::magic_identity
                                                          : ImplicitCheck::stability;
      const ImplicitFamily fam;
      row.report = run_implicit_instance(c, seed, frozen_constant(c), fam);
      row.p = 2.0;
      if (c == ImplicitCheck::peyre) {
        row.d = fam.peyre_dim;
        row.L = 1.0;
        row.m = fam.peyre_m;
      } else if (c == ImplicitCheck::magic_identity) {
        row.d = fam.field_dim;
        row.L = fam.field_side;
        row.m = fam.field_grid;
        row.delta = fam.magic_delta;
      } else {
        row.d = fam.field_dim;
        row.L = fam.stability_side;
        row.m = fam.stability_grid;
        row.delta = 0.0;
      }
    }
    row.report.meta["seed"] = static_cast<double>(seed);
    rows[j] = std::move(row);
  });
  return rows;
}

/// A batch fails when an asserted report fails.
inline bool batch_passes(const std::vector<VerifyRow>& rows) {
  for (const auto& r : rows)
    if (r.report.asserted && !r.report.pass) return false;
  return true;
}

// ---- calibration of the implicit constants ----

struct CalibrationResult {
  ImplicitCheck check;
  std::vector<double> ratios;  // lhs / bare rhs per calibration seed
  double median = 0.0;
  double max = 0.0;
  double constant = 0.0;       // calibration_margin * max
};

inline std::vector<double> implicit_ratios(ImplicitCheck c, const std::vector<std::uint64_t>& seeds, double constant,
                                           const ImplicitFamily& fam = {}) {
  std::vector<double> out(seeds.size());
  parallel_for(seeds.size(), [&](std::size_t i) {
    auto rep = run_implicit_instance(c, seeds[i], constant, fam);
    out[i] = rep.ratio.value_or(std::numeric_limits<double>::infinity());
  });
  return out;
}

inline CalibrationResult calibrate(ImplicitCheck c, const ImplicitFamily& fam = {}) {
  CalibrationResult res{c, implicit_ratios(c, calibration_seeds(), 1.0, fam)};
  res.median = median(res.ratios);
  for (double r : res.ratios) res.max = std::max(res.max, r);
  res.constant = calibration_margin * res.max;
  return res;
}

inline void write_calibration_header(std::ostream& os, const std::vector<CalibrationResult>& results) {
  os << "#pragma once\n\n// Frozen constants for the implicit-constant checks.\n"
        "// Generated by `wbound calibrate`; do not edit by hand.\n\nnamespace wbound::calibration {\n\n";
  char buf[160];
  for (const auto& r : results) {
    std::string name = to_string(r.check);
    std::snprintf(buf, sizeof buf, "// median ratio %.6g, max ratio %.6g over %zu seeds\n", r.median, r.max,
                  r.ratios.size());
    os << buf;
    std::snprintf(buf, sizeof buf, "inline constexpr double %s = %.17g;\n", name.c_str(), r.constant);
    os << buf;
  }
  os << "\n}  // namespace wbound::calibration\n";
}

// ---- CSV output ----

inline std::string fmt_num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline void write_estimates_csv(std::ostream& os, const std::vector<EstimateRecord>& recs) {
  os << "sampler,d,p,L,quantity,mean,stderr,reps,grid\n";
  for (const auto& r : recs)
    os << r.sampler << ',' << r.d << ',' << fmt_num(r.p) << ',' << fmt_num(r.L) << ',' << r.quantity << ','
       << fmt_num(r.mean) << ',' << fmt_num(r.se) << ',' << r.reps << ',' << fmt_num(r.grid) << '\n';
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline std::vector<EstimateRecord> read_estimates_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "sampler,d,p,L,quantity,mean,stderr,reps,grid")
    throw std::runtime_error("estimates CSV: bad header");
  std::vector<EstimateRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto c = split_csv_line(line);
    if (c.size() != 9) throw std::runtime_error("estimates CSV: expected 9 columns");
    try {
      out.push_back({c[0], std::stoi(c[1]), std::stod(c[2]), std::stod(c[3]), c[4], std::stod(c[5]), std::stod(c[6]),
                     static_cast<std::size_t>(std::stoull(c[7])), std::stod(c[8])});
    } catch (const std::logic_error&) {
      throw std::runtime_error("estimates CSV: bad number in '" + line + "'");
    }
  }
  return out;
}

inline void write_verify_csv(std::ostream& os, const std::vector<VerifyRow>& rows) {
  os << "check,seed,d,L,p,m,epsilon,delta,ell,lhs,rhs,ratio,pass,flag\n";
  for (const auto& r : rows) {
    const auto& rep = r.report;
    auto ell = rep.meta.find("ell");
    os << r.check << ',' << r.seed << ',' << r.d << ',' << fmt_num(r.L) << ',' << fmt_num(r.p) << ',' << r.m << ','
       << fmt_num(r.epsilon) << ',' << fmt_num(r.delta) << ',' << (ell != rep.meta.end() ? fmt_num(ell->second) : "")
       << ',' << fmt_num(rep.lhs) << ',' << fmt_num(rep.rhs) << ',' << (rep.ratio ? fmt_num(*rep.ratio) : "") << ','
       << (rep.pass ? 1 : 0) << ',' << rep.flag << '\n';
  }
}

inline void write_convergence_csv(std::ostream& os, const ConvergenceReport& rep) {
  os << "L,gap,stderr\n";
  for (const auto& r : rep.rows) os << fmt_num(r.L) << ',' << fmt_num(r.gap) << ',' << fmt_num(r.se) << '\n';
  os << "# z," << fmt_num(rep.z) << "\n# slope," << (rep.slope_defined ? fmt_num(rep.slope) : "") << "\n# slope_stderr,"
     << (rep.slope_defined ? fmt_num(rep.slope_se) : "") << "\n# pass," << (rep.pass ? 1 : 0) << "\n# flag," << rep.flag
     << '\n';
}

inline void write_variance_csv(std::ostream& os, const std::vector<VarianceRecord>& recs) {
  os << "L,reps,skipped,var_per_volume,var_per_volume_se,var_scaled,var_scaled_se,bracket_per_volume,"
        "bracket_per_volume_se,rhs_per_volume,rhs_per_volume_se\n";
  for (const auto& r : recs)
    os << fmt_num(r.L) << ',' << r.reps << ',' << r.skipped << ',' << fmt_num(r.variance_per_volume.mean) << ','
       << fmt_num(r.variance_per_volume.se) << ',' << fmt_num(r.variance_scaled.mean) << ','
       << fmt_num(r.variance_scaled.se) << ',' << fmt_num(r.bracket_per_volume.mean) << ','
       << fmt_num(r.bracket_per_volume.se) << ',' << fmt_num(r.rhs_per_volume.mean) << ','
       << fmt_num(r.rhs_per_volume.se) << '\n';
}

inline void write_pde_csv(std::ostream& os, const std::vector<PdeAnsatzRecord>& recs) {
  os << "L,L0,m,reps,dirichlet_energy,dirichlet_energy_se,neumann_energy,neumann_energy_se,u_squared,u_squared_se,"
        "glued_energy,glued_energy_se,order_violations\n";
  for (const auto& r : recs)
    os << fmt_num(r.L) << ',' << fmt_num(r.L0) << ',' << r.m << ',' << r.reps << ',' << fmt_num(r.dirichlet_energy.mean)
       << ',' << fmt_num(r.dirichlet_energy.se) << ',' << fmt_num(r.neumann_energy.mean) << ','
       << fmt_num(r.neumann_energy.se) << ',' << fmt_num(r.u_squared.mean) << ',' << fmt_num(r.u_squared.se) << ','
       << fmt_num(r.glued_energy.mean) << ',' << fmt_num(r.glued_energy.se) << ',' << r.order_violations << '\n';
}

}  // namespace wbound
