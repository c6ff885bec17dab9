// kslab: 2D Keller-Segel numerics lab.
//
// Subcommands: simulate | rescaled | profile | spectrum |
// verify-inequalities | scenario <name|all>. Output root resolution:
// --out flag, else $KSLAB_OUT, else ./out. Exit code 0 iff every assertion
// of the invoked command passed.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "kslab/experiments.hpp"

namespace {

using namespace kslab;

std::string resolve_out(const std::string& cli_out) {
  if (!cli_out.empty()) return cli_out;
  if (const char* env = std::getenv("KSLAB_OUT"); env && *env) return env;
  return "out";
}

SimConfig load_config(const std::string& config_path, SimConfig base) {
  if (config_path.empty()) return base;
  return parse_config(config_path, std::move(base));
}

void write_json(const std::string& dir, const std::string& name, const json& j) {
  std::filesystem::create_directories(dir);
  write_text_file((std::filesystem::path(dir) / name).string(), j.dump(2) + "\n");
}

int cmd_run(const SimConfig& cfg0, Regime regime, const std::string& out_dir) {
  SimConfig cfg = cfg0;
  cfg.regime = regime;
  const TrajectoryRecord rec =
      cfg.field_path.empty() ? run(cfg) : run(cfg, load_field(cfg.field_path).f);
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path root(out_dir);
  write_trajectory_csv((root / "trajectory.csv").string(), rec);
  dump_field(rec.final_f, (root / "final").string(), "final", rec.final_t);

  json summary;
  summary["command"] = regime == Regime::physical ? "simulate" : "rescaled";
  summary["config"] = config_to_json(cfg);
  summary["blew_up"] = rec.blew_up;
  if (rec.blew_up) {
    summary["blowup_time"] = rec.blowup_time;
    summary["blowup_reason"] = rec.blowup_reason;
  }
  summary["final_t"] = rec.final_t;
  if (!rec.samples.empty()) {
    const TrajectorySample& q = rec.samples.back();
    summary["final_sample"] = json{{"t", q.t},   {"mass", q.mass}, {"m2", q.m2},
                                   {"H", q.H},   {"F", q.F},       {"E", q.E},
                                   {"l43", q.l43}, {"linf", q.linf}};
    const double drift =
        std::abs(q.mass - rec.samples.front().mass) / rec.samples.front().mass;
    summary["mass_drift"] = drift;
  }
  write_json(out_dir, "summary.json", summary);
  std::printf("%s: %zu samples, final t=%.6g%s -> %s\n",
              summary["command"].get<std::string>().c_str(), rec.samples.size(),
              rec.final_t, rec.blew_up ? " (blow-up)" : "", out_dir.c_str());
  return 0;
}

int cmd_profile(double mass, int nodes, double rmax, double omega, double tol,
                const std::string& out_dir) {
  const RadialGrid rg = make_radial_grid(nodes, rmax > 0 ? rmax : default_r_max(mass));
  const ProfileResult p = solve_profile(mass, rg, omega, tol);
  const RadialField gp = profile_derivative(p);

  std::filesystem::create_directories(out_dir);
  std::string csv = "r,G,U,attraction,Gprime\n";
  for (int i = 0; i < rg.n; ++i) {
    char buf[200];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", rg.r[i],
                  p.G.v[i], p.U.v[i], p.attraction.v[i], gp.v[i]);
    csv += buf;
  }
  write_text_file((std::filesystem::path(out_dir) / "profile.csv").string(), csv);

  const EnvelopeReport env = envelope_check(p, 0.05);
  json summary;
  summary["command"] = "profile";
  summary["mass"] = p.M;
  summary["nodes"] = rg.n;
  summary["r_max"] = rg.r_max;
  summary["picard_iters"] = p.picard_iters;
  summary["picard_residual_l1"] = p.residual_l1;
  summary["stationary_residual"] = p.stationary_residual;
  summary["Z"] = p.Z;
  summary["m2"] = p.M2;
  summary["converged"] = p.converged;
  summary["envelope"] = json{{"eps", env.eps},
                             {"c_lower", env.c_lower},
                             {"c_upper", env.c_upper},
                             {"pass", env.pass}};
  write_json(out_dir, "summary.json", summary);
  std::printf("profile: M=%.6g iters=%ld residual=%.3g m2=%.9g -> %s\n", p.M,
              p.picard_iters, p.stationary_residual, p.M2, out_dir.c_str());
  return p.converged && env.pass ? 0 : 1;
}

int cmd_spectrum(double mass, const std::vector<int>& modes, int count, int nodes,
                 double rmax, const std::string& out_dir) {
  const RadialGrid rg = make_radial_grid(nodes, rmax > 0 ? rmax : default_r_max(mass));
  const ProfileResult p = solve_profile(mass, rg);
  json per_mode = json::array();
  for (int m : modes) {
    const LinearizedOperator op = assemble_linearized(p, m);
    const SpectrumResult sr = eigen_spectrum(op, count);
    json eigs = json::array();
    for (const EigenPair& ep : sr.pairs)
      eigs.push_back(json{{"re", ep.re},
                          {"im", ep.im},
                          {"residual", ep.residual},
                          {"real", ep.real}});
    per_mode.push_back(json{{"mode", m}, {"eigenvalues", eigs}});
    std::printf("spectrum: mode %d leading eigenvalues:", m);
    for (std::size_t i = 0; i < sr.pairs.size() && i < 4; ++i)
      std::printf(" %.6g%+.2gi", sr.pairs[i].re, sr.pairs[i].im);
    std::printf("\n");
  }
  json summary;
  summary["command"] = "spectrum";
  summary["mass"] = mass;
  summary["nodes"] = nodes;
  summary["count"] = count;
  summary["modes"] = per_mode;
  write_json(out_dir, "summary.json", summary);
  return 0;
}

int cmd_verify_inequalities(const SimConfig& cfg, const std::string& out_dir) {
  Field2D f = cfg.field_path.empty() ? initial_datum(cfg)
                                     : load_field(cfg.field_path).f;
  const std::vector<InequalityReport> reports = check_inequalities(f);
  json arr = json::array();
  bool all_pass = true;
  for (const InequalityReport& r : reports) {
    arr.push_back(report_to_json(r));
    if (!r.skipped && !r.pass) all_pass = false;
    if (r.skipped)
      std::printf("  %-24s skipped (%s)\n", r.name.c_str(), r.witness.c_str());
    else if (r.is_ratio)
      std::printf("  %-24s ratio=%-12.6g %s\n", r.name.c_str(), r.slack,
                  r.pass ? "ok" : "FAIL");
    else
      std::printf("  %-24s slack=%-12.6g %s\n", r.name.c_str(), r.slack,
                  r.pass ? "ok" : "FAIL");
  }
  json summary;
  summary["command"] = "verify-inequalities";
  summary["config"] = config_to_json(cfg);
  summary["reports"] = arr;
  summary["passed"] = all_pass;
  write_json(out_dir, "inequalities.json", summary);
  std::printf("verify-inequalities: %s -> %s\n", all_pass ? "pass" : "FAIL",
              out_dir.c_str());
  return all_pass ? 0 : 1;
}

int cmd_scenario(const std::string& name, const std::string& config_path,
                 const std::string& out_root, int jobs, bool seed_set,
                 std::uint64_t seed) {
  std::vector<std::string> names;
  if (name == "all")
    names = scenario_names();
  else
    names.push_back(name);

  std::vector<Scenario> list;
  for (const std::string& n : names) {
    Scenario s;
    s.name = n;
    s.config = load_config(config_path, scenario_default_config(n));
    if (seed_set) s.config.seed = seed;
    s.out_dir = (std::filesystem::path(out_root) / n).string();
    list.push_back(std::move(s));
  }
  const std::vector<ScenarioResult> results = run_scenarios(list, jobs);
  int failed = 0;
  for (const ScenarioResult& r : results) {
    if (!r.passed) ++failed;
    std::printf("scenario %-24s %s\n", r.name.c_str(), r.passed ? "pass" : "FAIL");
    for (const json& f : r.failures)
      std::printf("    %s: %s\n", f.value("check", "?").c_str(),
                  f.value("detail", "").c_str());
  }
  return failed;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"kslab: 2D parabolic-elliptic Keller-Segel numerics lab"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  int jobs = 1;

  auto add_common = [&](CLI::App* sub, bool with_jobs) {
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--out", out_dir, "output directory (default $KSLAB_OUT or ./out)");
    sub->add_option("--seed", seed, "RNG seed override");
    if (with_jobs) sub->add_option("--jobs", jobs, "parallel scenario workers");
    return sub;
  };

  CLI::App* simulate = add_common(app.add_subcommand("simulate", "physical-regime run"), false);
  CLI::App* rescaled = add_common(app.add_subcommand("rescaled", "rescaled-regime run"), false);

  CLI::App* profile = app.add_subcommand("profile", "solve the self-similar profile");
  double mass = 4.0 * M_PI, rmax = 0.0, omega = 0.5, tol = 1e-10;
  int nodes = 2048, count = 8;
  profile->add_option("--mass", mass, "total mass (must be < 8 pi)");
  profile->add_option("--nodes", nodes, "radial nodes");
  profile->add_option("--rmax", rmax, "radial domain (default 8 + 2 sqrt(M))");
  profile->add_option("--omega", omega, "Picard damping in (0, 1]");
  profile->add_option("--tol", tol, "Picard L1 tolerance");
  profile->add_option("--out", out_dir, "output directory");

  CLI::App* spectrum = app.add_subcommand("spectrum", "linearized spectrum per mode");
  std::vector<int> modes = {0, 1, 2};
  spectrum->add_option("--mass", mass, "total mass (must be < 8 pi)");
  spectrum->add_option("--modes", modes, "angular modes");
  spectrum->add_option("--count", count, "eigenvalues per mode");
  spectrum->add_option("--nodes", nodes, "radial nodes")->default_val(1024);
  spectrum->add_option("--rmax", rmax, "radial domain (default 8 + 2 sqrt(M))");
  spectrum->add_option("--out", out_dir, "output directory");

  CLI::App* verify = add_common(
      app.add_subcommand("verify-inequalities", "functional-inequality audit"), false);

  CLI::App* scenario = app.add_subcommand("scenario", "named experiment scenario");
  std::string scenario_name;
  scenario->add_option("name", scenario_name, "scenario name or 'all'")->required();
  add_common(scenario, true);

  CLI11_PARSE(app, argc, argv);

  try {
    const std::string out = resolve_out(out_dir);
    if (simulate->parsed() || rescaled->parsed()) {
      CLI::App* active = simulate->parsed() ? simulate : rescaled;
      SimConfig cfg = load_config(config_path, SimConfig{});
      if (active->count("--seed")) cfg.seed = seed;
      return cmd_run(cfg, simulate->parsed() ? Regime::physical : Regime::rescaled, out);
    }
    if (profile->parsed()) return cmd_profile(mass, nodes, rmax, omega, tol, out);
    if (spectrum->parsed()) return cmd_spectrum(mass, modes, count, nodes, rmax, out);
    if (verify->parsed()) {
      SimConfig cfg = load_config(config_path, SimConfig{});
      if (verify->count("--seed")) cfg.seed = seed;
      return cmd_verify_inequalities(cfg, out);
    }
    if (scenario->parsed())
      return cmd_scenario(scenario_name, config_path, out, jobs,
                          scenario->count("--seed") > 0, seed);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
