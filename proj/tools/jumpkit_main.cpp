#include <CLI11.hpp>
#include <cstdio>
#include <random>

#include "jumpkit/kinodyn.hpp"
#include "jumpkit/qp.hpp"
#include "jumpkit/scenario.hpp"

using namespace jumpkit;

namespace {

int cmd_run(const std::string& scenario_file, RunFlags flags, bool plan_only) {
  flags.plan_only = plan_only;
  Scenario sc = load_scenario(scenario_file);
  RunResult r = run_scenario(sc, flags);
  std::printf("[%s] exit=%d %s\n", sc.name.c_str(), r.exit_code,
              r.message.c_str());
  std::printf("  planner: converged=%d residual=%.3e cost=%.4g (%.1fs)\n",
              r.metrics.planner_converged, r.metrics.planner_residual,
              r.metrics.planner_cost, r.metrics.planner_seconds);
  if (!plan_only && r.exit_code != 2) {
    std::printf("  apex rise %.3f m (commanded %.3f), landing_success=%d\n",
                r.metrics.apex_com_rise, r.metrics.commanded_apex_rise,
                r.metrics.landing_success);
  }
  return r.exit_code;
}

int cmd_validate(const std::string& scenario_file, const std::string& plan_file) {
  Scenario sc = load_scenario(scenario_file);
  DecisionTrajectory plan = load_trajectory(plan_file, sc.tree);
  DecisionTrajectory seed = seed_guess(sc.tree, sc.schedule, sc.task);
  CostWeights w = default_weights(sc.tree, seed);
  TranscribedNLP nlp = build_problem(sc.tree, sc.schedule, sc.task, w);
  ValidationReport vr = validate(plan, nlp);
  std::printf("%-22s %12s %6s\n", "family", "max|res|", "knot");
  for (const auto& f : vr.equality_families)
    std::printf("%-22s %12.3e %6d\n", f.family.c_str(), f.max_abs, f.knot);
  std::printf("%-22s %12.3e %6d\n", "friction_cone", vr.friction_violation,
              vr.friction_knot);
  std::printf("%-22s %12.3e %6d\n", "bounds", vr.bound_violation, vr.bound_knot);
  bool ok = vr.ok(sc.planner.tol_eq, sc.planner.tol_ineq);
  std::printf("overall: %s (tol_eq=%.1e tol_ineq=%.1e)\n", ok ? "OK" : "VIOLATED",
              sc.planner.tol_eq, sc.planner.tol_ineq);
  return ok ? 0 : 1;
}

int cmd_bench_qp(int n, int me, int mi, int count) {
  std::mt19937 rng(7);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> times;
  QPSolver solver;
  for (int it = 0; it < count; ++it) {
    QuadraticProgram qp;
    MatX B(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) B(i, j) = g(rng);
    qp.H = B.transpose() * B + MatX::Identity(n, n);
    qp.g = VecX::NullaryExpr(n, [&](int) { return g(rng); });
    qp.A = MatX::NullaryExpr(me, n, [&](int, int) { return g(rng); });
    qp.b = VecX::NullaryExpr(me, [&](int) { return g(rng); });
    qp.C = MatX::NullaryExpr(mi, n, [&](int, int) { return g(rng); });
    qp.d = VecX::NullaryExpr(mi, [&](int) { return g(rng) + 1.0; });
    auto t0 = std::chrono::steady_clock::now();
    QPSolution s = solver.solve(qp);
    auto t1 = std::chrono::steady_clock::now();
    if (s.status != QPStatus::Infeasible)
      times.push_back(std::chrono::duration<double>(t1 - t0).count());
  }
  std::sort(times.begin(), times.end());
  if (times.empty()) {
    std::printf("no feasible instances\n");
    return 1;
  }
  std::printf("solved %zu/%d  median %.3f ms  p90 %.3f ms  max %.3f ms\n",
              times.size(), count, 1e3 * times[times.size() / 2],
              1e3 * times[times.size() * 9 / 10], 1e3 * times.back());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bipedal jumping toolkit: plan, simulate, analyze"};
  app.require_subcommand(1);

  std::string scenario_file, out_dir = "out", plan_file, use_plan;
  unsigned seed = 0;
  bool have_seed = false, no_lp = false, true_fb = false, plan_only = false;

  auto add_common = [&](CLI::App* c) {
    c->add_option("--scenario", scenario_file, "scenario YAML file")->required();
    c->add_option("--out", out_dir, "output directory");
    c->add_option("--seed", seed, "override simulation seed")
        ->each([&](const std::string&) { have_seed = true; });
  };

  CLI::App* plan = app.add_subcommand("plan", "solve the jump NLP only");
  add_common(plan);

  CLI::App* run = app.add_subcommand("run", "plan and run the closed loop");
  add_common(run);
  run->add_flag("--plan-only", plan_only, "stop after planning");
  run->add_flag("--no-landing-planner", no_lp,
                "disable the momentum-feedback landing update");
  run->add_flag("--true-state-feedback", true_fb,
                "bypass the estimator in the control loop");
  run->add_option("--use-plan", use_plan, "reuse a plan CSV instead of solving");

  CLI::App* val = app.add_subcommand("validate", "check a plan CSV against a scenario");
  val->add_option("--scenario", scenario_file)->required();
  val->add_option("--plan", plan_file, "plan CSV")->required();

  std::string dir_a, dir_b, cmp_out;
  CLI::App* cmp = app.add_subcommand("compare", "diff two run directories");
  cmp->add_option("dir_a", dir_a)->required();
  cmp->add_option("dir_b", dir_b)->required();
  cmp->add_option("--out", cmp_out, "divergence CSV");

  int bn = 28, bme = 12, bmi = 16, bcount = 50;
  CLI::App* bench = app.add_subcommand("bench-qp", "time controller-sized QPs");
  bench->add_option("--n", bn);
  bench->add_option("--me", bme);
  bench->add_option("--mi", bmi);
  bench->add_option("--count", bcount);

  CLI11_PARSE(app, argc, argv);

  try {
    RunFlags flags;
    flags.out_dir = out_dir;
    if (have_seed) flags.seed = seed;
    flags.no_landing_planner = no_lp;
    flags.true_state_feedback = true_fb;
    flags.use_plan = use_plan;
    if (plan->parsed()) return cmd_run(scenario_file, flags, true);
    if (run->parsed()) return cmd_run(scenario_file, flags, plan_only);
    if (val->parsed()) return cmd_validate(scenario_file, plan_file);
    if (cmp->parsed()) {
      CompareResult r = compare_runs(dir_a, dir_b, cmp_out);
      std::printf("%s", r.report.c_str());
      return 0;
    }
    if (bench->parsed()) return cmd_bench_qp(bn, bme, bmi, bcount);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 10;
  }
  return 0;
}
