// Acceptance runner. `wbound_acceptance N` runs criterion N; no argument runs all.
// Prints one "criterion N: PASS|FAIL ..." line each and exits 1 if any failed.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "../oracles.hpp"
#include "wbound/harness.hpp"

using namespace wbound;

namespace {

// pinned tolerances
constexpr double kOracleTol = 1e-9;        // 1: absolute, scaled by max(1, value)
constexpr double kDualityTol = 1e-9;       // 2: relative
constexpr double kD2Lo = 0.75, kD2Hi = 1.25;  // 4: band around 1/(4 pi)
constexpr double kZ95 = 1.6448536269514722;   // 5, 6
constexpr double kEigenTol = 0.01;         // 7
constexpr double kGlueSe = 2.0;            // 7
constexpr double kMaxOverMedian = 10.0;    // 8
constexpr double kPoissonSe = 3.0;         // 9
constexpr double kSlopeBand = 0.5;         // 10: relative to 2 - d

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... a) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

Outcome c1_oracle() {
  RngStream rng(101, 0);
  int bad = 0, runs = 0;
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const int d = 1 + t % 3;
    const double p = 1.0 + (t / 3) % 3;
    const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 8.0);
    auto mu = oracle::random_cloud(d, n, 3.0, rng, true);
    auto la = oracle::random_cloud(d, n, 3.0, rng, true);
    for (auto cost : {CostSpec::euclidean(p), CostSpec::boundary(Box(d, 3.0), p)}) {
      const double ref = oracle::brute_force_matching(mu, la, cost);
      const double got = solve(mu, la, cost).value;
      const double err = std::abs(got - ref) / std::max(1.0, ref);
      worst = std::max(worst, err);
      bad += err > kOracleTol;
      ++runs;
    }
  }
  return {bad == 0, fmt("%d instances, %d mismatches, max scaled error %.3g", runs, bad, worst)};
}

Outcome c2_duality() {
  RngStream rng(202, 0);
  int bad = 0;
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const int d = 1 + t % 3;
    // every tenth instance at full size
    const std::size_t nmu = t % 10 == 0 ? 512 : 2 + static_cast<std::size_t>(rng.uniform() * 254);
    const std::size_t nla = t % 10 == 0 ? 1024 : 2 + static_cast<std::size_t>(rng.uniform() * 510);
    const double side = 4.0;
    auto mu = oracle::random_cloud(d, nmu, side, rng, false);
    auto la = oracle::random_cloud(d, nla, side, rng, false);
    la = la.scaled(mu.total_mass() / la.total_mass());
    const double p = 1.0 + (t % 4) * 0.5;
    const auto cost = t % 2 ? CostSpec::boundary(Box(d, side), p) : CostSpec::euclidean(p);
    auto sol = solve(mu, la, cost);
    auto a = oracle::audit(sol, mu, la, cost);
    const double scale = mu.total_mass() * std::pow(Box(d, side).diameter(), p);
    const double rel = std::abs(a.primal - a.dual) / std::max(std::abs(a.primal), 1e-300);
    const double viol = a.dual_violation / scale;
    worst = std::max(worst, std::max(rel, viol));
    bad += (rel > kDualityTol && std::abs(a.primal - a.dual) > 1e-12 * scale) || viol > kDualityTol ||
           a.marginal_error > 1e-9 * mu.total_mass();
  }
  return {bad == 0, fmt("200 instances up to 512x1024, %d failures, worst relative defect %.3g", bad, worst)};
}

Outcome c3_exact_suite() {
  const Box box(3, 8.0);
  const int g = 8, m = 2;
  const double eps = 0.5;
  int f_order = 0, f_sub = 0, f_tv = 0, f_glue = 0, f_disp = 0, f_osc = 0;
  for (std::uint64_t s = 1; s <= 50; ++s) {
    RngStream rng(s, 0);
    std::size_t redraws = 0;
    SamplerSpec spec;
    auto mu = sample_nonempty(box, spec, rng, redraws);
    auto lambda = discretize_lebesgue(box, g, mu.total_mass());
    const double w = solve(mu, lambda, CostSpec::euclidean(2.0)).value;
    auto sb = solve(mu, lambda, CostSpec::boundary(box, 2.0));
    f_order += sb.value > w * (1.0 + 1e-12);
    f_sub += !check_subadditivity(mu, box, m, 2.0, eps, g).pass;
    // TV against a positive reweighting of the reference grid
    std::vector<double> wts(lambda.size());
    for (auto& x : wts) x = rng.uniform(0.5, 1.5);
    PointMeasure nu(lambda.points(), wts);
    f_tv += !check_tv_bound(nu.scaled(lambda.total_mass() / nu.total_mass()), lambda, box, 2.0).pass;
    f_glue += !check_superadditivity_glue(mu, box, m, eps, g).pass;
    f_disp += !check_displacement(sb, mu, lambda, box, 2.0).pass;
    f_osc += !check_potential_bounds(sb, mu, box, 2.0).pass;
  }
  const int total = f_order + f_sub + f_tv + f_glue + f_disp + f_osc;
  return {total == 0, fmt("50 seeds: failures order=%d subadd=%d tv=%d glue=%d displacement=%d potential=%d", f_order,
                          f_sub, f_tv, f_glue, f_disp, f_osc)};
}

MeanSe w_per_volume(int d, double L, std::size_t reps, std::uint64_t seed) {
  const Box box(d, L);
  const int g = cells_for(box, 2.0);
  std::vector<double> vals(reps);
  parallel_for(reps, [&](std::size_t r) {
    RngStream rng(seed, r);
    std::size_t redraws = 0;
    auto mu = sample_nonempty(box, SamplerSpec{}, rng, redraws);
    auto lambda = discretize_lebesgue(box, g, mu.total_mass());
    vals[r] = solve(mu, lambda, CostSpec::euclidean(2.0)).value / box.volume();
  });
  return mean_se(vals);
}

Outcome c4_d2_constant() {
  const double target = 1.0 / (4.0 * std::numbers::pi);
  auto w8 = w_per_volume(2, 8.0, 100, 408);
  auto w16 = w_per_volume(2, 16.0, 100, 416);
  auto w32 = w_per_volume(2, 32.0, 200, 432);
  const double q = w32.mean / std::log(32.0 * 32.0);
  const std::vector<double> x{std::log(8.0), std::log(16.0), std::log(32.0)}, y{w8.mean, w16.mean, w32.mean};
  auto fit = fit_line(x, y);
  const bool pass = q >= kD2Lo * target && q <= kD2Hi * target;
  return {pass, fmt("w(32)/log(L^2) = %.4f (band [%.4f, %.4f]); w(8)=%.3f w(16)=%.3f w(32)=%.3f+-%.3f; "
                    "fit w = %.4f log L + %.3f (slope/(1/(2pi)) = %.2f)",
                    q, kD2Lo * target, kD2Hi * target, w8.mean, w16.mean, w32.mean, w32.se, fit.slope, fit.intercept,
                    fit.slope / (2.0 * target))};
}

ExperimentConfig ladder_config(SamplerKind kind, std::size_t reps) {
  ExperimentConfig c;
  c.dimension = 3;
  c.p = 2.0;
  c.ladder = {4.0, 6.0, 8.0, 10.0};
  c.replications = reps;
  c.grid_per_unit = 2.0;
  c.sampler.kind = kind;
  c.seed = 5;
  return c;
}

std::string gap_rows(const ConvergenceReport& r) {
  std::string s;
  for (const auto& g : r.rows) s += fmt(" gap(%g)=%.4f+-%.4f", g.L, g.gap, g.se);
  return s;
}

Outcome c5_trend() {
  auto run = estimate_costs(ladder_config(SamplerKind::poisson, 100));
  auto rep = convergence_report(run.records);
  const bool pass = run.order_violations == 0 && run.skipped == 0 && rep.z > kZ95;
  return {pass, fmt("order violations %zu, skipped %zu, z=%.2f (need > %.3f);", run.order_violations, run.skipped,
                    rep.z, kZ95) +
                    gap_rows(rep)};
}

Outcome c6_contrast() {
  auto run = estimate_costs(ladder_config(SamplerKind::shifted_grid, 30));
  auto rep = convergence_report(run.records);
  const std::string verdict = rep.z > kZ95 ? "significant decrease (not the expected contrast)" : "no significant decrease";
  return {true, "reported only: " + verdict + fmt(", z=%.2f, flag '%s';", rep.z, rep.flag.c_str()) + gap_rows(rep)};
}

Outcome c7_pde() {
  // a) Dirichlet <= Neumann on random zero-mean data
  int order_bad = 0;
  for (int t = 0; t < 50; ++t) {
    RngStream rng(700 + t, 0);
    const int d = 1 + t % 3;
    const int m = d == 3 ? 8 : 16;
    ScalarGridField f(Box(d, rng.uniform(1.0, 10.0)), m);
    for (std::size_t k = 0; k < f.size(); ++k) f[k] = rng.normal();
    detail::remove_mean(f.values());
    const double eD = grad_energy(solve_poisson(f, BoundaryCondition::dirichlet), BoundaryCondition::dirichlet);
    const double eN = grad_energy(solve_poisson(f, BoundaryCondition::neumann), BoundaryCondition::neumann);
    order_bad += eD > eN * (1.0 + 1e-12);
  }
  // b) first Neumann eigenfunction
  double eig_err = 0.0;
  for (double L : {1.0, 4.0, 10.0}) {
    Box b(1, L);
    ScalarGridField f(b, 256);
    for (std::size_t k = 0; k < f.size(); ++k) f[k] = std::cos(std::numbers::pi * f.cell_center(k)[0] / L);
    const double exact = std::pow(L / std::numbers::pi, 2) * L / 2.0;
    eig_err = std::max(eig_err, std::abs(grad_energy(solve_poisson(f, BoundaryCondition::neumann)) - exact) / exact);
  }
  // c) int u^2 / L^{d+2} decreasing, d=3
  std::vector<MeanSe> uu;
  for (double L : {8.0, 16.0, 32.0}) {
    const int m = static_cast<int>(L);
    uu.push_back(pde_ansatz_stats(Box(3, L), 1.0, m, L, 50, 77, static_cast<std::uint64_t>(L) << 32).u_squared);
  }
  const bool decreasing = uu[0].mean > uu[1].mean && uu[1].mean > uu[2].mean;
  // d) glued blocks of side 8 inside L=16 against independent single blocks of side 8
  auto glued = pde_ansatz_stats(Box(3, 16.0), 1.0, 16, 8.0, 50, 78).glued_energy;
  auto single = pde_ansatz_stats(Box(3, 8.0), 1.0, 8, 8.0, 50, 79).dirichlet_energy;
  const double se = std::hypot(glued.se, single.se);
  const bool glue_ok = std::abs(glued.mean - single.mean) <= kGlueSe * se;
  const bool pass = order_bad == 0 && eig_err <= kEigenTol && decreasing && glue_ok;
  return {pass, fmt("order failures %d/50; eigen rel error %.2e; u^2: %.4g > %.4g > %.4g %s; glued %.4f+-%.4f vs single "
                    "%.4f+-%.4f (%.2f se)",
                    order_bad, eig_err, uu[0].mean, uu[1].mean, uu[2].mean, decreasing ? "yes" : "no", glued.mean,
                    glued.se, single.mean, single.se, se > 0 ? std::abs(glued.mean - single.mean) / se : 0.0)};
}

Outcome c8_implicit() {
  bool pass = true;
  std::string s;
  for (auto c : implicit_checks) {
    auto ratios = implicit_ratios(c, calibration_seeds(), 1.0);
    const double med = median(ratios);
    double mx = 0.0;
    for (double r : ratios) mx = std::max(mx, r);
    const double spread = med > 0.0 ? mx / med : std::numeric_limits<double>::infinity();
    std::vector<IneqReport> val(validation_seeds().size());
    const auto seeds = validation_seeds();
    parallel_for(seeds.size(), [&](std::size_t i) { val[i] = run_implicit_instance(c, seeds[i], frozen_constant(c)); });
    int fails = 0;
    for (const auto& r : val) fails += !r.pass;
    const bool ok = spread <= kMaxOverMedian && fails == 0;
    pass = pass && ok;
    s += fmt(" %s: max/median=%.2f validation failures=%d;", to_string(c), spread, fails);
  }
  return {pass, s};
}

Outcome c9_samplers() {
  // Poisson counts on (0,4)^2
  const Box q(2, 4.0);
  const std::size_t n = 10000;
  std::vector<double> counts(n);
  for (std::size_t i = 0; i < n; ++i) {
    RngStream rng(909, i);
    counts[i] = sample_poisson(q, 1.0, rng).total_mass();
  }
  auto ms = mean_se(counts);
  double m2 = 0.0, m4 = 0.0;
  for (double c : counts) {
    const double z = c - ms.mean;
    m2 += z * z;
    m4 += z * z * z * z;
  }
  m2 /= n;
  m4 /= n;
  const double var = m2 * n / (n - 1.0);
  const double var_se = std::sqrt((m4 - m2 * m2) / n);
  const bool pois_ok = std::abs(var - q.volume()) <= kPoissonSe * var_se;

  auto occupation = [](int d, std::size_t draws, std::uint64_t seed) {
    const Box b(d, 1.0);
    SamplerSpec s;
    s.kind = SamplerKind::interlacement;
    s.dt = 1e-2;
    std::vector<double> m(draws);
    parallel_for(draws, [&](std::size_t i) {
      RngStream rng(seed, i);
      m[i] = sample(b, s, rng).total_mass();
    });
    return mean_se(m);
  };
  auto i3 = occupation(3, 1000, 903);
  auto i5 = occupation(5, 100, 905);
  const bool pass = pois_ok && i3.mean >= 0.9 && i3.mean <= 1.1 && i5.mean >= 0.7 && i5.mean <= 1.3;
  return {pass, fmt("Poisson Var=%.3f vs 16 (se %.3f); interlacement d=3 mean %.3f+-%.3f, d=5 mean %.3f+-%.3f", var,
                    var_se, i3.mean, i3.se, i5.mean, i5.se)};
}

Outcome c10_dyadic() {
  const Box box(3, 16.0);
  const std::vector<double> L0s{2.0, 4.0, 8.0};
  const std::size_t reps = 100;
  std::vector<std::vector<double>> vals(L0s.size(), std::vector<double>(reps));
  parallel_for(reps, [&](std::size_t r) {
    RngStream rng(1010, r);
    auto mu = sample_poisson(box, 1.0, rng);
    auto scan = dyadic_block_norm_scan(mu, box, L0s, 16);
    for (std::size_t k = 0; k < L0s.size(); ++k) vals[k][r] = scan[k].norm_sq_per_volume;
  });
  std::vector<double> x, y;
  std::string s;
  for (std::size_t k = 0; k < L0s.size(); ++k) {
    auto ms = mean_se(vals[k]);
    x.push_back(std::log(L0s[k]));
    y.push_back(std::log(ms.mean));
    s += fmt(" L0=%g: %.4g+-%.2g", L0s[k], ms.mean, ms.se);
  }
  auto fit = fit_line(x, y);
  const double target = 2.0 - 3.0;
  const bool pass = std::abs(fit.slope - target) <= kSlopeBand * std::abs(target);
  return {pass, fmt("slope %.3f (target %.1f +- 50%%);", fit.slope, target) + s};
}

Outcome c11_reproducible() {
  ExperimentConfig c;
  c.dimension = 2;
  c.ladder = {3.0, 4.0, 5.0};
  c.replications = 8;
  c.seed = 1111;
  auto est_csv = [&] {
    std::ostringstream os;
    write_estimates_csv(os, estimate_costs(c).records);
    return os.str();
  };
  auto ver_csv = [&] {
    std::ostringstream os;
    for (const auto& chk : {"subadditivity", "displacement"}) write_verify_csv(os, run_verify(chk, c));
    return os.str();
  };
  const bool a = est_csv() == est_csv();
  const bool b = ver_csv() == ver_csv();
  return {a && b, fmt("estimate CSV identical: %s; verify CSV identical: %s", a ? "yes" : "no", b ? "yes" : "no")};
}

const std::vector<std::function<Outcome()>> kCriteria{c1_oracle,  c2_duality,   c3_exact_suite, c4_d2_constant,
                                                       c5_trend,   c6_contrast,  c7_pde,         c8_implicit,
                                                       c9_samplers, c10_dyadic, c11_reproducible};

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> which;
  if (argc > 1) {
    const int n = std::atoi(argv[1]);
    if (n < 1 || n > static_cast<int>(kCriteria.size())) {
      std::cerr << "usage: wbound_acceptance [1-" << kCriteria.size() << "]\n";
      return 2;
    }
    which.push_back(n);
  } else {
    for (int i = 1; i <= static_cast<int>(kCriteria.size()); ++i) which.push_back(i);
  }
  bool all = true;
  for (int n : which) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = kCriteria[n - 1]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << "criterion " << n << ": " << (o.pass ? "PASS" : "FAIL") << " (" << fmt("%.1fs", secs) << ") "
              << o.detail << std::endl;
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
