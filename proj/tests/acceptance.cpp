// Acceptance run: one PASS/FAIL/SKIP line per criterion.
//
//   acceptance [--long] [--only K]
//
// Criterion 10 (scaling law) only runs with --long, FRACPOS_LONG_RUN=1 in
// the environment, or a build configured with -DFRACPOS_LONG_RUN=ON.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "fracpos/fracpos.hpp"
#include "oracles.hpp"

using namespace fracpos;

namespace {

struct Outcome {
  enum class Kind { Pass, Fail, Skip } kind = Kind::Fail;
  std::string detail;
};

Outcome pass_if(bool ok, std::string detail) {
  return {ok ? Outcome::Kind::Pass : Outcome::Kind::Fail, std::move(detail)};
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

bool within(double value, double target, double rel) {
  return std::abs(value / target - 1.0) <= rel;
}

std::string data_file(const std::string& name) {
  return std::string(FRACPOS_DATA_DIR) + "/" + name;
}

TriMesh imported(const std::string& stem) {
  return load_triangle_format(data_file(stem + ".node"), data_file(stem + ".ele"));
}

const FracOperator& single_half() {
  static const FracOperator op = FracOperator::single(0.5);
  return op;
}

const FracOperator& multi_term() {
  static const FracOperator op = FracOperator::multi({{1.0, 0.5}, {1.0, 0.2}});
  return op;
}

const FracOperator& distributed_exp() {
  static const FracOperator op =
      FracOperator::distributed([](double a) { return std::exp(a); }, "exp");
  return op;
}

std::vector<const FracOperator*> all_cases() {
  return {&single_half(), &multi_term(), &distributed_exp()};
}

TriMesh mesh_a() { return uniform_square(10); }
TriMesh mesh_b() { return nondelaunay_b(5); }
TriMesh mesh_e() { return nondelaunay_e(10, 1e-3); }

// --- criteria ---------------------------------------------------------------

Outcome kernel_oracle() {
  const auto grid = log_grid(1e-4, 10.0, 8);  // 5 decades, 41 points
  std::vector<double> ts(grid.begin(), grid.begin() + 40);
  ts.back() = 10.0;
  double worst = 0.0;
  for (double alpha : {0.5, 0.75}) {
    const auto op = FracOperator::single(alpha);
    for (double lambda : {1.0, 10.0, 100.0}) {
      for (double t : ts) {
        const double ref = oracle::mittag_leffler_neg(alpha, lambda * std::pow(t, alpha));
        worst = std::max(worst, std::abs(u_lambda(op, lambda, t) - ref));
      }
    }
  }
  return pass_if(worst <= 1e-8, fmt("max abs error %.2e over 240 points", worst));
}

Outcome table1() {
  const TriMesh mesh = mesh_a();
  const auto sg = build_fem_system(mesh, FemMethod::SG);
  const auto fve = build_fem_system(mesh, FemMethod::FVE);
  struct Cell {
    const char* name;
    double target;
    std::function<ThresholdReport()> run;
  };
  const std::vector<Cell> cells = {
      {"SD SG", 1.96e-4, [&] { return positivity_threshold(sg, single_half()); }},
      {"SD FVE", 1.46e-4, [&] { return positivity_threshold(fve, single_half()); }},
      {"FD SG", 2.85e-5, [&] { return fd_positivity_threshold(sg, single_half()); }},
      {"FD FVE", 1.98e-5, [&] { return fd_positivity_threshold(fve, single_half()); }},
      {"multi SD SG", 2.11e-4, [&] { return positivity_threshold(sg, multi_term()); }},
      {"dist SD SG", 1.64e-2, [&] { return positivity_threshold(sg, distributed_exp()); }},
  };
  bool ok = true;
  std::string detail;
  for (const auto& c : cells) {
    const auto r = c.run();
    const bool cell_ok = r.found() && within(r.value, c.target, 0.1);
    ok = ok && cell_ok;
    detail += fmt("%s%s %.3g/%.3g", detail.empty() ? "" : ", ", c.name, r.value, c.target);
  }
  return pass_if(ok, detail);
}

Outcome table2() {
  const auto lm = build_fem_system(mesh_b(), FemMethod::LM);
  const auto sd = positivity_threshold(lm, single_half());
  const auto fd = fd_positivity_threshold(lm, single_half());
  const bool ok = sd.found() && fd.found() && within(sd.value, 1.17e-4, 0.1) &&
                  within(fd.value, 2.21e-4, 0.1);
  return pass_if(ok, fmt("SD LM %.3g/%.3g, FD LM %.3g/%.3g", sd.value, 1.17e-4, fd.value, 2.21e-4));
}

Outcome lm_dichotomy() {
  const ScanSpec scan;
  const auto grid = scan.grid();
  bool ok = true;
  std::string detail;

  auto good = [&](const char* name, const TriMesh& mesh) {
    const auto sys = build_fem_system(mesh, FemMethod::LM);
    const double tol = default_tolerance(sys);
    double sd_min = 0.0, fd_min = 0.0;
    for (double t : grid) {
      sd_min = std::min(sd_min, solution_min_entry(sys, single_half(), t));
      fd_min = std::min(fd_min, first_step_min_entry(sys, single_half(), t));
    }
    const bool pass = sd_min >= -tol && fd_min >= -1e-13;
    ok = ok && pass;
    detail += fmt("%s%s min %.1e/%.1e", detail.empty() ? "" : ", ", name, sd_min, fd_min);
  };
  good("a4", uniform_square(4));
  good("a10", uniform_square(10));
  good("c1", imported("lshape_1"));
  good("d1", imported("disk_1"));

  auto bad = [&](const char* name, const TriMesh& mesh) {
    const auto sys = build_fem_system(mesh, FemMethod::LM);
    const double sd = solution_min_entry(sys, single_half(), 1e-8);
    const double fd = first_step_min_entry(sys, single_half(), 1e-8);
    const bool pass = sd < 0.0 && fd < 0.0;
    ok = ok && pass;
    detail += fmt(", %s min %.1e/%.1e", name, sd, fd);
  };
  bad("b", mesh_b());
  bad("e", mesh_e());
  return pass_if(ok, detail);
}

Outcome small_time_failure() {
  bool ok = true;
  std::string detail;
  const std::vector<std::pair<const char*, TriMesh>> meshes = {
      {"a", mesh_a()}, {"b", mesh_b()}, {"e", mesh_e()}};
  for (const auto& [name, mesh] : meshes) {
    for (auto method : {FemMethod::SG, FemMethod::FVE}) {
      const auto sys = build_fem_system(mesh, method);
      const double tol = default_tolerance(sys);
      const double sd = solution_min_entry(sys, single_half(), 1e-8);
      const double fd = first_step_min_entry(sys, single_half(), 1e-8);
      ok = ok && sd < -tol && fd < -tol;
      detail += fmt("%s%s/%s %.1e/%.1e", detail.empty() ? "" : ", ", name,
                    std::string(to_string(method)).c_str(), sd, fd);
    }
  }
  return pass_if(ok, detail);
}

Outcome weight_signs() {
  constexpr int n = 1000;
  bool ok = true;
  double worst_rel = 0.0;
  for (const auto* op : all_cases()) {
    for (double tau : {0.1, 1.0}) {
      const auto w = cq_weights(*op, tau, n);
      ok = ok && w[0] > 0.0;
      double partial = 0.0;
      for (int j = 0; j <= n; ++j) {
        if (j > 0) ok = ok && w[j] < 0.0;
        partial += w[j];
        ok = ok && partial > 0.0;
        if (op == &single_half()) {
          const double ref = std::pow(tau, -0.5) * oracle::binomial_partial_sum(0.5, j);
          worst_rel = std::max(worst_rel, std::abs(partial / ref - 1.0));
        }
      }
    }
  }
  ok = ok && worst_rel <= 1e-12;
  return pass_if(ok, fmt("signs %s, closed-form rel error %.1e", ok ? "ok" : "violated",
                         worst_rel));
}

Outcome convergence() {
  const auto sys = build_fem_system(uniform_square(4), FemMethod::LM);
  std::vector<int> steps;
  for (int k = 4; k <= 10; ++k) steps.push_back(1 << k);
  bool ok = true;
  std::string detail;
  for (const auto* op : all_cases()) {
    const auto r = convergence_rate(sys, *op, 0.1, steps);
    ok = ok && r.rate >= 0.85 && r.rate <= 1.3;
    detail += fmt("%s%s %.3f", detail.empty() ? "" : ", ", op->describe().c_str(), r.rate);
  }
  return pass_if(ok, "rates " + detail);
}

Outcome contractivity() {
  bool ok = true;
  double worst = 0.0;
  for (int m : {4, 10}) {
    const auto sys = build_fem_system(uniform_square(m), FemMethod::LM);
    for (const auto* op : all_cases()) {
      const auto r = max_norm_contractivity_check(sys, *op, {1e-4, 1e-2, 1.0}, 100);
      ok = ok && r.diagonally_dominant && r.implication_holds;
      for (const auto& row : r.rows) worst = std::max(worst, row.max_norm);
    }
  }
  ok = ok && worst <= 1.0 + 1e-10;
  return pass_if(ok, fmt("max |E_n|_inf - 1 = %.1e", worst - 1.0));
}

Outcome asymptotics() {
  bool ok = true;
  std::string detail;
  auto check = [&](const char* label, const FracOperator& op, double t, bool small,
                   double band) {
    for (double lambda : {1.0, 10.0}) {
      const double u = u_lambda(op, lambda, t);
      const double ratio =
          small ? (1.0 - u) / (lambda * beta0(op, t)) : lambda * u / beta_inf(op, t);
      ok = ok && std::abs(ratio - 1.0) <= band;
      detail += fmt("%s%s(%g) %.3f", detail.empty() ? "" : ", ", label, lambda, ratio);
    }
  };
  check("I0", single_half(), 1e-8, true, 0.05);
  check("I0m", multi_term(), 1e-8, true, 0.05);
  check("Iinf", single_half(), 1e8, false, 0.10);
  check("Iinfm", multi_term(), 1e8, false, 0.10);
  check("II0", distributed_exp(), 1e-6, true, 0.20);
  check("IIinf", distributed_exp(), 1e8, false, 0.20);
  return pass_if(ok, "ratios " + detail);
}

Outcome scaling_law() {
  // omega_max depends on the mesh only, so one bisection serves both orders
  std::vector<double> hs, omegas;
  for (int m : {10, 20, 40}) {
    const TriMesh mesh = uniform_square(m);
    const auto bound = first_step_positivity_omega(build_fem_system(mesh, FemMethod::SG));
    if (bound.status != OmegaBound::Status::Bounded) {
      return {Outcome::Kind::Fail, fmt("no finite omega bound at M=%d", m)};
    }
    hs.push_back(mesh_size(mesh));
    omegas.push_back(bound.omega_max);
  }
  bool ok = true;
  std::string detail;
  for (double alpha : {0.5, 0.75}) {
    const auto op = FracOperator::single(alpha);
    std::vector<double> taus;
    for (double w : omegas) taus.push_back(tau_for_omega0(op, w));
    const double slope = log_log_slope(hs, taus);
    ok = ok && std::abs(slope - 2.0 / alpha) <= 0.5;
    detail += fmt("%salpha %.2f slope %.3f (tau0 %.3g..%.3g)", detail.empty() ? "" : ", ",
                  alpha, slope, taus.front(), taus.back());
  }
  return pass_if(ok, detail);
}

Outcome example_e() {
  const auto sys = build_fem_system(mesh_e(), FemMethod::LM);
  const auto inv = h_inverse(sys);
  const bool inv_negative = inv.minCoeff() < 0.0;
  const auto power = h_eventually_positive(sys, 3);
  const bool cube_positive = strictly_positive(inv * inv * inv);
  const auto report = positivity_threshold(sys, single_half(), ScanSpec{1e-8, 1e3, 25});
  double max_min = -std::numeric_limits<double>::infinity();
  for (const auto& [t, m] : report.curve) max_min = std::max(max_min, m);
  const bool never = report.status == ThresholdReport::Status::NoneFound &&
                     max_min < -report.tolerance;
  return pass_if(inv_negative && cube_positive && never,
                 fmt("min H^-1 %.2e, first positive power %d, curve max %.2e (%s)",
                     inv.minCoeff(), power ? *power : -1, max_min,
                     std::string(to_string(report.status)).c_str()));
}

}  // namespace

int main(int argc, char** argv) {
  bool long_run = false;
#ifdef FRACPOS_LONG_RUN
  long_run = true;
#endif
  if (const char* env = std::getenv("FRACPOS_LONG_RUN"); env && std::strcmp(env, "1") == 0) {
    long_run = true;
  }
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--long") == 0) {
      long_run = true;
    } else if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: %s [--long] [--only K]\n", argv[0]);
      return 2;
    }
  }

  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
    bool gated = false;
  };
  const std::vector<Criterion> criteria = {
      {1, "kernel oracle equivalence", kernel_oracle},
      {2, "uniform-mesh thresholds", table1},
      {3, "crossed-rectangle lumped-mass thresholds", table2},
      {4, "lumped-mass Delaunay dichotomy", lm_dichotomy},
      {5, "small-time negativity of SG and FVE", small_time_failure},
      {6, "CQ weight signs and partial sums", weight_signs},
      {7, "time-stepping convergence rate", convergence},
      {8, "max-norm contractivity", contractivity},
      {9, "kernel asymptotics", asymptotics},
      {10, "threshold scaling law", scaling_law, true},
      {11, "flattened-triangle anomaly", example_e},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    if (only && c.id != only) continue;
    if (c.gated && !long_run) {
      std::printf("SKIP C%-2d %s (long run; pass --long)\n", c.id, c.name);
      continue;
    }
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {Outcome::Kind::Fail, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const char* tag = out.kind == Outcome::Kind::Pass ? "PASS" : "FAIL";
    if (out.kind != Outcome::Kind::Pass) ++failures;
    std::printf("%s C%-2d %s: %s [%.1f s]\n", tag, c.id, c.name, out.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
