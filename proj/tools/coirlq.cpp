// Command-line front end: problem generation, solving, the brute-force
// oracle, recovery-condition calculators, and the phase-transition harness.
//
// Exit codes: 0 success, 1 usage/input error, 2 numerical failure,
// 3 infeasible configuration.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "coirlq/bench.hpp"
#include "coirlq/io.hpp"
#include "coirlq/linops.hpp"
#include "coirlq/model.hpp"
#include "coirlq/oracle.hpp"
#include "coirlq/solver.hpp"
#include "coirlq/theory.hpp"

namespace {

using nlohmann::json;

void print_json(const json& j, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw coirlq::IoError("cannot open '" + out_path + "' for writing");
    out << j.dump(2) << '\n';
  }
}

void write_trace_csv(const coirlq::SolverResult& res, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw coirlq::IoError("cannot open '" + path + "' for writing");
  out << "k,F,eps,diff_inf\n";
  for (const auto& row : res.trace)
    out << row.k << ',' << coirlq::detail::format_value(row.objective) << ','
        << coirlq::detail::format_value(row.eps) << ','
        << coirlq::detail::format_value(row.diff_inf) << '\n';
  if (!out) throw coirlq::IoError("write failed for '" + path + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cosparse signal recovery via iteratively reweighted lq-analysis minimization"};
  app.require_subcommand(1);
  app.fallthrough(true);

  std::uint64_t seed = 1;
  std::string out_path;
  int threads = 1;
  bool as_json = false;
  bool as_csv = false;
  auto* seed_opt = app.add_option("--seed", seed, "base seed (64-bit)");
  app.add_option("--out", out_path, "output path");
  app.add_option("--threads", threads, "worker threads for phase sweeps")->check(CLI::PositiveNumber);
  auto* json_flag = app.add_flag("--json", as_json, "JSON output where applicable");
  app.add_flag("--csv", as_csv, "CSV output where applicable")->excludes(json_flag);

  // ---- gen ----
  auto* gen = app.add_subcommand("gen", "generate a problem instance directory");
  coirlq::Index gen_d = 0, gen_p = 0, gen_m = 0, gen_l = 0;
  double gen_sigma = 0.0;
  gen->add_option("--d", gen_d, "signal dimension")->required();
  gen->add_option("--p", gen_p, "analysis operator rows")->required();
  gen->add_option("--m", gen_m, "measurement count")->required();
  gen->add_option("--l", gen_l, "target cosparsity")->required();
  gen->add_option("--sigma", gen_sigma, "noise level (default 0)");

  // ---- solve ----
  auto* solve_cmd = app.add_subcommand("solve", "run the iteratively reweighted solver");
  std::string solve_a, solve_y, solve_omega, solve_trace;
  coirlq::SolverConfig scfg;
  solve_cmd->add_option("--A", solve_a, "measurement matrix file")->required();
  solve_cmd->add_option("--y", solve_y, "observation vector file")->required();
  solve_cmd->add_option("--omega", solve_omega, "analysis operator file")->required();
  solve_cmd->add_option("--q", scfg.q, "lq exponent in (0,1]");
  solve_cmd->add_option("--lambda", scfg.lambda, "regularization weight");
  solve_cmd->add_option("--l", scfg.l, "cosparsity order statistic for the eps update")->required();
  solve_cmd->add_option("--shrink", scfg.shrink, "eps shrink factor in (0,1)");
  solve_cmd->add_option("--tau", scfg.tau, "iterate-diff stopping tolerance");
  solve_cmd->add_option("--max-iter", scfg.max_iter, "iteration cap");
  solve_cmd->add_option("--eps0", scfg.eps0, "initial smoothing");
  solve_cmd->add_option("--eps-floor", scfg.eps_floor, "smoothing floor treated as zero");
  solve_cmd->add_option("--alpha", scfg.alpha, "weight exponent (solve requires 2)");
  solve_cmd->add_flag("--no-project", "return the raw final iterate instead of the cosupport-projected fit")
      ->each([&scfg](const std::string&) { scfg.project_cosupport = false; });
  solve_cmd->add_option("--trace", solve_trace, "per-iteration trace CSV path");

  // ---- oracle ----
  auto* oracle_cmd = app.add_subcommand("oracle", "brute-force global lq-analysis solve");
  std::string or_a, or_y, or_omega;
  double or_q = 1.0, or_noise = 0.0;
  coirlq::Index or_lmin = 1;
  oracle_cmd->add_option("--A", or_a, "measurement matrix file")->required();
  oracle_cmd->add_option("--y", or_y, "observation vector file")->required();
  oracle_cmd->add_option("--omega", or_omega, "analysis operator file")->required();
  oracle_cmd->add_option("--q", or_q, "lq exponent in (0,1]");
  oracle_cmd->add_option("--noise-bound", or_noise, "residual feasibility bound");
  oracle_cmd->add_option("--l-min", or_lmin, "smallest cosupport size to enumerate");

  // ---- theory ----
  auto* theory = app.add_subcommand("theory", "recovery-condition calculators");
  theory->require_subcommand(1);
  theory->fallthrough(true);
  coirlq::TheoryInputs tin;
  auto* constants = theory->add_subcommand("constants", "error-bound constants C1, C2");
  constants->add_option("--delta-rs", tin.delta_rho_s, "RIP constant of order rho*S");
  constants->add_option("--delta-r1s", tin.delta_rho1_s, "RIP constant of order (rho+1)*S");
  constants->add_option("--kappa", tin.kappa, "operator condition number");
  constants->add_option("--rho", tin.block_ratio, "block ratio >= 2")->required();
  constants->add_option("--q", tin.q, "lq exponent");
  constants->add_option("--sigma-min", tin.sigma_min, "smallest singular value of the operator");
  constants->add_option("--s", tin.s, "sparsity of the analysis coefficients");

  auto* threshold = theory->add_subcommand("threshold", "admissible RIP threshold");
  double th_kappa = 1.0, th_q = 1.0, th_rho = 0.0;
  threshold->add_option("--kappa", th_kappa, "operator condition number");
  threshold->add_option("--q", th_q, "lq exponent");
  threshold->add_option("--rho", th_rho, "block ratio >= 2")->required();

  auto* check = theory->add_subcommand("check", "evaluate the recovery condition");
  check->add_option("--delta-rs", tin.delta_rho_s, "RIP constant of order rho*S");
  check->add_option("--delta-r1s", tin.delta_rho1_s, "RIP constant of order (rho+1)*S");
  check->add_option("--kappa", tin.kappa, "operator condition number");
  check->add_option("--rho", tin.block_ratio, "block ratio >= 2")->required();
  check->add_option("--q", tin.q, "lq exponent");

  auto* sq = theory->add_subcommand("sq", "sparsity range S_q from S_1");
  long sq_s1 = 0;
  double sq_rho1 = 0.0, sq_q = 0.5;
  sq->add_option("--s1", sq_s1, "sparsity at q = 1")->required();
  sq->add_option("--rho1", sq_rho1, "block ratio at q = 1")->required();
  sq->add_option("--q", sq_q, "target lq exponent")->required();

  auto* bound = theory->add_subcommand("bound", "reconstruction error bound");
  double b_delta = 0.0, b_lambda = 1e-4, b_f0 = 0.0, b_noise = 0.0;
  bound->add_option("--delta", b_delta, "RIP constant of order 2l-p")->required();
  bound->add_option("--lambda", b_lambda, "regularization weight");
  bound->add_option("--f0", b_f0, "initial objective value F(x0, eps0)")->required();
  bound->add_option("--noise", b_noise, "noise norm bound");

  auto* feasq = theory->add_subcommand("feasible-q", "smallest grid q satisfying the condition");
  double f_delta = 0.0, f_kappa = 1.0;
  std::vector<double> f_qgrid, f_rhogrid;
  feasq->add_option("--delta", f_delta, "RIP constant to beat")->required();
  feasq->add_option("--kappa", f_kappa, "operator condition number");
  feasq->add_option("--q-grid", f_qgrid, "candidate q values (default 0.05:0.05:1)");
  feasq->add_option("--rho-grid", f_rhogrid, "candidate rho values (default 2:1:100)");

  // ---- phase ----
  auto* phase = app.add_subcommand("phase", "run a phase-transition sweep");
  std::string phase_preset, phase_config;
  long phase_trials = 0;
  auto* preset_opt = phase->add_option("--preset", phase_preset, "preset name");
  phase->add_option("--config", phase_config, "experiment config JSON")->excludes(preset_opt);
  phase->add_option("--trials", phase_trials, "override trials per cell");

  // ---- preset ----
  auto* preset_cmd = app.add_subcommand("preset", "print a preset experiment config");
  std::string preset_name;
  preset_cmd->add_option("--name", preset_name, "one of figure1, figure2-m, figure2-l, figure3-m, figure3-l")
      ->required();

  try {
    app.parse(argc, argv);

    if (*gen) {
      const coirlq::Problem prob =
          coirlq::make_problem(gen_d, gen_p, gen_m, gen_l, gen_sigma, seed);
      if (out_path.empty()) throw coirlq::ConfigError("gen: --out directory is required");
      coirlq::save_problem(prob, out_path);
      std::cout << "wrote problem (m=" << gen_m << ", d=" << gen_d << ", p=" << gen_p
                << ", l=" << gen_l << ", sigma=" << gen_sigma << ", seed=" << seed << ") to "
                << out_path << '\n';
    } else if (*solve_cmd) {
      if (out_path.empty()) throw coirlq::ConfigError("solve: --out <file> is required");
      const coirlq::Matrix A = coirlq::read_matrix(solve_a);
      const coirlq::Vector y = coirlq::read_vector(solve_y);
      const coirlq::Matrix omega = coirlq::read_matrix(solve_omega);
      const coirlq::SolverResult res = coirlq::solve(A, y, omega, scfg);
      coirlq::write_vector(res.x_hat, out_path);
      if (!solve_trace.empty()) write_trace_csv(res, solve_trace);
      json summary = {{"iterations", res.iterations},
                      {"converged", res.converged},
                      {"objective", res.trace.back().objective},
                      {"eps", res.trace.back().eps},
                      {"nonmonotone_iterations", res.nonmonotone_iterations}};
      if (as_json) {
        std::cout << summary.dump(2) << '\n';
      } else {
        std::cout << "iterations " << res.iterations << (res.converged ? " (converged)" : " (hit cap)")
                  << ", final objective " << res.trace.back().objective << ", eps "
                  << res.trace.back().eps << '\n';
        if (!res.nonmonotone_iterations.empty())
          std::cerr << "warning: objective rose beyond tolerance at "
                    << res.nonmonotone_iterations.size() << " iteration(s)\n";
      }
    } else if (*oracle_cmd) {
      const coirlq::Matrix A = coirlq::read_matrix(or_a);
      const coirlq::Vector y = coirlq::read_vector(or_y);
      const coirlq::Matrix omega = coirlq::read_matrix(or_omega);
      const coirlq::OracleResult res =
          coirlq::brute_force_lq(A, y, omega, or_q, or_noise, or_lmin);
      json j;
      j["feasible"] = res.feasible;
      if (res.feasible)
        j["objective"] = res.objective;
      else
        j["objective"] = nullptr;
      j["cosupport"] = res.cosupport;
      j["x_star"] = std::vector<double>(res.x_star.data(), res.x_star.data() + res.x_star.size());
      print_json(j, out_path);
    } else if (*theory) {
      json j;
      if (*constants) {
        const coirlq::BoundConstants c = coirlq::bound_constants(tin);
        j = {{"c1", c.c1}, {"c2", c.c2}};
      } else if (*threshold) {
        j = {{"threshold", coirlq::strong_threshold(th_kappa, th_q, th_rho)}};
      } else if (*check) {
        j = {{"holds", coirlq::check_condition(tin)}};
      } else if (*sq) {
        const coirlq::SparsityMap mp = coirlq::sq_from_s1(sq_s1, sq_rho1, sq_q);
        j = {{"s_q", mp.s_q}, {"rho_q", mp.rho_q}};
      } else if (*bound) {
        j = {{"bound", coirlq::recovery_error_bound(b_delta, b_lambda, b_f0, b_noise)}};
      } else if (*feasq) {
        const auto qg = f_qgrid.empty() ? coirlq::default_q_grid() : f_qgrid;
        const auto rg = f_rhogrid.empty() ? coirlq::default_rho_grid() : f_rhogrid;
        const auto found = coirlq::min_feasible_q(f_delta, f_kappa, qg, rg);
        j["found"] = found.has_value();
        if (found) {
          j["q"] = found->q;
          j["rho"] = found->rho;
        }
      }
      print_json(j, out_path);
    } else if (*phase) {
      coirlq::ExperimentConfig cfg;
      if (!phase_preset.empty()) {
        cfg = coirlq::preset(phase_preset);
      } else if (!phase_config.empty()) {
        std::ifstream in(phase_config, std::ios::binary);
        if (!in) throw coirlq::IoError("cannot open '" + phase_config + "' for reading");
        json j;
        in >> j;
        cfg = coirlq::config_from_json(j);
      } else {
        throw coirlq::ConfigError("phase: provide --preset or --config");
      }
      if (phase_trials > 0) cfg.trials = phase_trials;
      if (seed_opt->count() > 0) cfg.base_seed = seed;
      const auto cells = coirlq::phase_grid(cfg, threads, [&](const coirlq::CellResult& c) {
        std::cerr << "cell q=" << c.q << " m=" << c.m << " l=" << c.l << ": " << c.successes << "/"
                  << c.trials << " successes (skips " << c.skips << "), mean_rel_err "
                  << c.mean_rel_err << ", lambda " << c.lambda << '\n';
      });
      if (as_json) {
        json arr = json::array();
        for (const auto& c : cells)
          arr.push_back({{"q", c.q},
                         {"m", c.m},
                         {"l", c.l},
                         {"sigma", c.sigma},
                         {"trials", c.trials},
                         {"skips", c.skips},
                         {"successes", c.successes},
                         {"success_rate", c.success_rate()},
                         {"mean_rel_err", c.mean_rel_err},
                         {"mean_iters", c.mean_iters},
                         {"lambda", c.lambda}});
        print_json(arr, out_path);
      } else if (out_path.empty()) {
        coirlq::emit_csv(cells, std::cout);
      } else {
        coirlq::emit_csv(cells, out_path);
      }
    } else if (*preset_cmd) {
      print_json(coirlq::to_json(coirlq::preset(preset_name)), out_path);
    }
    return 0;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const coirlq::InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return 3;
  } catch (const coirlq::NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
