// declqg — batch front end for decentralized team / LQG problems.
//
// Subcommands: analyze, solve-team, solve-lqg, simulate, generate.
// Exit codes: 0 success, 1 internal error, 2 parse/validation failure,
//             3 substitutability assumption violated, 4 invariance broken.

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <iostream>
#include <string>

#include "declqg/io.hpp"
#include "declqg/lqg.hpp"
#include "declqg/random_gen.hpp"
#include "declqg/static_team.hpp"
#include "declqg/strategy_transform.hpp"

namespace {

using namespace declqg;

void emit(const Json& report, const std::string& output) {
  if (output.empty()) {
    std::cout << report.dump(2) << "\n";
  } else {
    save_json(output, report);
  }
}

TeamProblem load_team(const std::string& path) {
  TeamProblem p = infer_blocks(team_from_json(load_json(path)));
  const auto issues = validate(p);
  if (!issues.empty()) {
    std::string msg = "invalid team problem '" + path + "':";
    for (const auto& i : issues) msg += "\n  - " + i;
    throw ParseError(msg);
  }
  return p;
}

LqgProblem load_lqg(const std::string& path, bool allow_psd_noise) {
  LqgProblem p = lqg_from_json(load_json(path));
  const auto issues = validate(p, allow_psd_noise);
  if (!issues.empty()) {
    std::string msg = "invalid lqg problem '" + path + "':";
    for (const auto& i : issues) msg += "\n  - " + i;
    throw ParseError(msg);
  }
  return p;
}

Json precedence_to_json(const PrecedenceStructure& st) {
  Json j;
  j["partially_nested"] = st.partially_nested;
  Json prec = Json::array(), crit = Json::array();
  for (size_t t = 0; t < st.precedents.size(); ++t) {
    Json row = Json::array();
    for (int s : st.precedents[t]) row.push_back(s);
    prec.push_back(std::move(row));
  }
  for (size_t t = 0; t < st.critical.size(); ++t) {
    for (int s : st.critical[t]) {
      crit.push_back(Json{{"s", s}, {"t", static_cast<int>(t) + 1}});
    }
  }
  j["precedents"] = std::move(prec);
  j["critical_pairs"] = std::move(crit);
  return j;
}

Json certificates_to_json(const CertificateMap& certs) {
  Json arr = Json::array();
  for (const auto& [pair, cert] : certs) {
    arr.push_back(Json{{"s", cert.s},
                       {"t", cert.t},
                       {"k", cert.k},
                       {"lambda", mat_to_json(cert.lambda)},
                       {"containment_residual", cert.containment_residual}});
  }
  return arr;
}

Json trace_to_json(const TransformTrace& trace) {
  Json arr = Json::array();
  for (const auto& it : trace.iterations) {
    arr.push_back(Json{{"l", it.l},
                       {"t", it.t},
                       {"s", it.s},
                       {"k", it.k},
                       {"nu_drift", it.nu_drift},
                       {"z_drift", it.z_drift},
                       {"violations_after", it.violations_after}});
  }
  return arr;
}

int cmd_analyze(const std::string& input, const std::string& output,
                double tol) {
  const TeamProblem p = load_team(input);
  const PrecedenceStructure st = analyze_precedence(p);
  Json report;
  report["command"] = "analyze";
  report["input"] = input;
  report["precedence"] = precedence_to_json(st);
  if (st.partially_nested) {
    report["verdict"] = "partially nested; nothing to do";
    emit(report, output);
    return 0;
  }
  const Tolerance tolerance{tol, tol};
  try {
    const CertificateMap certs = certify_substitutability(p, st, tolerance);
    report["certificates"] = certificates_to_json(certs);
    report["verdict"] = "not partially nested; substitutable";
    emit(report, output);
    return 0;
  } catch (const AssumptionViolated& e) {
    report["verdict"] = "not partially nested; not substitutable";
    report["error"] = e.what();
    emit(report, output);
    throw;
  }
}

int cmd_solve_team(const std::string& input, const std::string& output,
                   const std::string& pi_override, double tol,
                   double zero_threshold, bool drift_checks) {
  const TeamProblem p = load_team(input);
  const PrecedenceStructure st = analyze_precedence(p);
  const Tolerance tolerance{tol, tol};
  CertificateMap certs;
  if (!st.partially_nested) {
    certs = certify_substitutability(p, st, tolerance);
  }
  const ExpandedProblem ex = expand(p, st);
  const StaticObservations obs = to_static(ex);
  StaticStrategy pi = pi_override.empty()
                          ? solve_static(p, obs, tolerance)
                          : static_strategy_from_pi(
                                p, obs, pi_from_json(load_json(pi_override)));
  const LinearTeamStrategy realized = realize_static_strategy(ex, obs, pi);
  const double cost_expanded = expected_cost(ex, realized);

  TransformOptions topts;
  topts.zero_threshold = zero_threshold;
  topts.drift_checks = drift_checks;
  topts.drift_tol = tol;
  const TransformResult result = transform_strategy(realized, ex, st, certs, topts);
  const double cost_final = expected_cost(p, result.final);

  Json report;
  report["command"] = "solve-team";
  report["input"] = input;
  report["precedence"] = precedence_to_json(st);
  report["certificates"] = certificates_to_json(certs);
  Json pij = Json::array();
  for (const auto& mat : pi.pi) pij.push_back(mat_to_json(mat));
  report["pi"] = std::move(pij);
  report["pi_system_residual"] = pi.system_residual;
  report["expanded_strategy"] = strategy_to_json(realized);
  report["transform_trace"] = trace_to_json(result.trace);
  report["final_strategy"] = strategy_to_json(result.final);
  report["cost_expanded"] = cost_expanded;
  report["cost_final"] = cost_final;
  emit(report, output);
  const double scale = 1.0 + std::abs(cost_expanded);
  if (std::abs(cost_final - cost_expanded) > tol * scale) {
    throw InvarianceBroken("final cost " + std::to_string(cost_final) +
                           " deviates from expanded-structure optimum " +
                           std::to_string(cost_expanded));
  }
  return 0;
}

Json schedule_to_json(const GainSchedule& schedule) {
  Json j;
  Json lambdas = Json::array(), ks = Json::array(), ls = Json::array();
  for (const auto& mat : schedule.lambda) lambdas.push_back(mat_to_json(mat));
  for (const auto& mat : schedule.k) ks.push_back(mat_to_json(mat));
  for (const auto& mat : schedule.l) ls.push_back(mat_to_json(mat));
  j["lambda"] = std::move(lambdas);
  j["K"] = std::move(ks);
  j["L"] = std::move(ls);
  return j;
}

int cmd_solve_lqg(const std::string& input, const std::string& output,
                  double tol, std::uint64_t seed, int paths,
                  bool allow_psd_noise) {
  const LqgProblem p = load_lqg(input, allow_psd_noise);
  SynthesisOptions opts;
  opts.tol = Tolerance{tol, tol};
  opts.allow_psd_noise = allow_psd_noise;
  const GainSchedule schedule = synthesize(p, opts);
  const double cost_c = exact_cost(p, schedule, SimMode::centralized);
  const double cost_d = exact_cost(p, schedule, SimMode::decentralized);

  Json report;
  report["command"] = "solve-lqg";
  report["input"] = input;
  report["schedule"] = schedule_to_json(schedule);
  Json dec = Json::array();
  for (const auto& per_controller : decentralized_gains(p, schedule)) {
    Json row = Json::array();
    for (const auto& mat : per_controller) row.push_back(mat_to_json(mat));
    dec.push_back(std::move(row));
  }
  report["decentralized_gains"] = std::move(dec);
  report["cost_centralized"] = cost_c;
  report["cost_decentralized"] = cost_d;
  report["rowsum_identity_residual"] = rowsum_identity_residual(p, schedule);

  // with exact per-controller state observation the filter collapses and the
  // controller states become coordinate embeddings of the state estimate
  double obs_gap = 0.0;
  const Mat c = p.c();
  for (const auto& l : schedule.l) {
    const Mat gap = Mat::Identity(p.d_x(), p.d_x()) - l * c;
    obs_gap = std::max(obs_gap, gap.cwiseAbs().maxCoeff());
  }
  report["perfect_observation"] = obs_gap <= tol;

  if (paths > 0) {
    const SimulationResult sim =
        simulate(p, schedule, SimMode::both, paths, seed);
    report["simulation"] = Json{
        {"seed", sim.seed},
        {"paths", sim.paths},
        {"mean_centralized", sim.mean_centralized},
        {"se_centralized", sim.se_centralized},
        {"mean_decentralized", sim.mean_decentralized},
        {"se_decentralized", sim.se_decentralized},
        {"max_state_sum_residual", sim.max_state_sum_residual}};
  }
  emit(report, output);
  const double scale = 1.0 + std::abs(cost_c);
  if (std::abs(cost_c - cost_d) > tol * scale) {
    throw InvarianceBroken(
        "decentralized exact cost " + std::to_string(cost_d) +
        " deviates from centralized cost " + std::to_string(cost_c));
  }
  return 0;
}

int cmd_simulate(const std::string& input, const std::string& output,
                 double tol, std::uint64_t seed, int paths,
                 const std::string& mode_name, bool allow_psd_noise) {
  SimMode mode = SimMode::both;
  if (mode_name == "centralized") {
    mode = SimMode::centralized;
  } else if (mode_name == "decentralized") {
    mode = SimMode::decentralized;
  } else if (mode_name != "both") {
    throw ParseError("unknown simulation mode '" + mode_name + "'");
  }
  const LqgProblem p = load_lqg(input, allow_psd_noise);
  SynthesisOptions opts;
  opts.tol = Tolerance{tol, tol};
  opts.allow_psd_noise = allow_psd_noise;
  const GainSchedule schedule = synthesize(p, opts);
  const SimulationResult sim = simulate(p, schedule, mode, paths, seed);

  Json report;
  report["command"] = "simulate";
  report["input"] = input;
  report["mode"] = mode_name;
  report["seed"] = sim.seed;
  report["paths"] = sim.paths;
  if (mode != SimMode::decentralized) {
    report["mean_centralized"] = sim.mean_centralized;
    report["se_centralized"] = sim.se_centralized;
    report["exact_centralized"] = exact_cost(p, schedule, SimMode::centralized);
  }
  if (mode != SimMode::centralized) {
    report["mean_decentralized"] = sim.mean_decentralized;
    report["se_decentralized"] = sim.se_decentralized;
    report["exact_decentralized"] =
        exact_cost(p, schedule, SimMode::decentralized);
  }
  if (mode == SimMode::both) {
    report["max_state_sum_residual"] = sim.max_state_sum_residual;
  }
  emit(report, output);
  return 0;
}

int cmd_generate(const std::string& kind, const std::string& output,
                 std::uint64_t seed, int n, int dim, int horizon) {
  Json j;
  if (kind == "team") {
    TeamGenConfig cfg;
    if (n > 0) cfg.n = n;
    if (dim > 0) cfg.d_xi = dim;
    j = team_to_json(generate_team_problem(cfg, seed));
  } else if (kind == "lqg") {
    LqgGenConfig cfg;
    if (n > 0) cfg.n = n;
    if (dim > 0) cfg.d_x = dim;
    if (horizon > 0) cfg.T = horizon;
    j = lqg_to_json(generate_lqg_problem(cfg, seed));
  } else {
    throw ParseError("generate: kind must be 'team' or 'lqg'");
  }
  emit(j, output);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"decentralized team / LQG solver"};
  app.require_subcommand(1);

  std::string input, output, pi_override, mode = "both", kind;
  double tol = 1e-9;
  double zero_threshold = 0.0;
  std::uint64_t seed = 0;
  int paths = 256;
  int gen_n = 0, gen_dim = 0, gen_horizon = 0;
  bool allow_psd_noise = false, no_drift_checks = false;

  auto add_common = [&](CLI::App* sub, bool needs_input) {
    if (needs_input) {
      sub->add_option("input", input, "problem file")->required();
    }
    sub->add_option("--tol", tol, "numerical tolerance");
    sub->add_option("--output", output, "write the report here (default stdout)");
  };

  CLI::App* analyze = app.add_subcommand("analyze", "information structure report");
  add_common(analyze, true);

  CLI::App* solve_team = app.add_subcommand("solve-team", "solve and transform a team problem");
  add_common(solve_team, true);
  solve_team->add_option("--pi-override", pi_override,
                         "file with a user-supplied static solution");
  solve_team->add_option("--zero-threshold", zero_threshold,
                         "prune coefficients below this before counting uses");
  solve_team->add_flag("--no-drift-checks", no_drift_checks,
                       "skip per-iteration invariance verification");

  CLI::App* solve_lqg = app.add_subcommand("solve-lqg", "synthesize decentralized controllers");
  add_common(solve_lqg, true);
  solve_lqg->add_option("--seed", seed, "simulation seed");
  solve_lqg->add_option("--paths", paths, "Monte Carlo paths (0 disables)");
  solve_lqg->add_flag("--allow-psd-noise", allow_psd_noise,
                      "accept positive semidefinite measurement noise");

  CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo rollout");
  add_common(simulate, true);
  simulate->add_option("--seed", seed, "simulation seed");
  simulate->add_option("--paths", paths, "Monte Carlo paths")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--mode", mode, "centralized | decentralized | both");
  simulate->add_flag("--allow-psd-noise", allow_psd_noise,
                     "accept positive semidefinite measurement noise");

  CLI::App* generate = app.add_subcommand("generate", "draw a random solvable instance");
  generate->add_option("kind", kind, "team | lqg")->required();
  generate->add_option("--seed", seed, "generator seed");
  generate->add_option("--members", gen_n, "number of members/controllers");
  generate->add_option("--dim", gen_dim, "exogenous/state dimension");
  generate->add_option("--horizon", gen_horizon, "horizon (lqg only)");
  generate->add_option("--tol", tol, "ignored; accepted for uniformity");
  generate->add_option("--output", output, "write the instance here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (analyze->parsed()) return cmd_analyze(input, output, tol);
    if (solve_team->parsed()) {
      return cmd_solve_team(input, output, pi_override, tol, zero_threshold,
                            !no_drift_checks);
    }
    if (solve_lqg->parsed()) {
      return cmd_solve_lqg(input, output, tol, seed, paths, allow_psd_noise);
    }
    if (simulate->parsed()) {
      return cmd_simulate(input, output, tol, seed, paths, mode,
                          allow_psd_noise);
    }
    if (generate->parsed()) {
      return cmd_generate(kind, output, seed, gen_n, gen_dim, gen_horizon);
    }
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const AssumptionViolated& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const InvarianceBroken& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
