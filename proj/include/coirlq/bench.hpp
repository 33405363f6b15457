#ifndef COIRLQ_BENCH_HPP
#define COIRLQ_BENCH_HPP

#include <atomic>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "io.hpp"
#include "model.hpp"
#include "solver.hpp"
#include "types.hpp"

// Seeded phase-transition harness: sweeps measurement counts / cosparsity
// levels across q values, aggregates per-cell success rates, emits CSV.

namespace coirlq {

struct ExperimentConfig {
  Index d = 120;
  Index p = 144;
  std::vector<Index> m_values;
  std::vector<Index> l_values;
  std::vector<double> q_values;
  double sigma = 0.0;
  long trials = 50;
  std::uint64_t base_seed = 1729;
  SolverConfig solver;
  double success_threshold = 1e-4;
  // sigma > 0 presets search this grid per cell and keep the best mean
  // relative error; empty means {solver.lambda}
  std::vector<double> lambda_grid;
  std::string name;
};

struct CellResult {
  double q = 0.0;
  Index m = 0;
  Index l = 0;
  double sigma = 0.0;
  long trials = 0;  // completed trials (skips excluded)
  long skips = 0;
  long successes = 0;
  double mean_rel_err = std::numeric_limits<double>::quiet_NaN();
  double mean_iters = std::numeric_limits<double>::quiet_NaN();
  // lambda the cell was scored with (grid winner); logged, not part of the CSV
  double lambda = std::numeric_limits<double>::quiet_NaN();

  double success_rate() const {
    return trials > 0 ? static_cast<double>(successes) / static_cast<double>(trials)
                      : std::numeric_limits<double>::quiet_NaN();
  }
};

// Cell-content-keyed trial seeds: adding grid points never perturbs the
// stream of an existing cell.
inline std::uint64_t trial_seed(std::uint64_t base_seed, double q, Index m, Index l, double sigma,
                                long trial) {
  std::uint64_t h = splitmix64(std::bit_cast<std::uint64_t>(q));
  h = mix_seed(h, static_cast<std::uint64_t>(m));
  h = mix_seed(h, static_cast<std::uint64_t>(l));
  h = mix_seed(h, std::bit_cast<std::uint64_t>(sigma));
  h = mix_seed(h, static_cast<std::uint64_t>(trial));
  return base_seed ^ h;
}

struct TrialOutcome {
  RecoveryMetrics metrics;
  SolverResult result;
};

// Generate (tight frame -> cosparse signal -> measurements -> observation),
// solve, score. Infeasible cosparsity draws are retried on a derived seed up
// to 8 times before the trial is abandoned.
inline TrialOutcome run_trial(Index d, Index p, Index m, Index l, double q, double sigma,
                              std::uint64_t seed, const SolverConfig& solver_template,
                              double success_threshold = 1e-4) {
  SolverConfig cfg = solver_template;
  cfg.q = q;
  cfg.l = l;

  Problem prob;
  bool generated = false;
  std::string reason;
  for (int attempt = 0; attempt <= 8 && !generated; ++attempt) {
    const std::uint64_t s = attempt == 0 ? seed : derive_seed(seed, 0x7265747279ULL + attempt);
    try {
      prob = make_problem(d, p, m, l, sigma, s);
      generated = true;
    } catch (const InfeasibleError& e) {
      reason = e.what();
    }
  }
  if (!generated) throw InfeasibleError("run_trial: giving up after 8 retries: " + reason);

  TrialOutcome out;
  out.result = solve(prob.A, prob.y, prob.omega, cfg);
  out.metrics.relative_error = relative_error(out.result.x_hat, prob.x_true);
  out.metrics.success = out.metrics.relative_error <= success_threshold;
  out.metrics.iterations = out.result.iterations;
  return out;
}

namespace detail {

struct TrialRow {
  bool skipped = false;
  // one entry per lambda in the grid
  std::vector<double> rel_err;
  std::vector<long> iters;
};

template <typename Fn>
inline void parallel_for(long n, int threads, Fn&& body) {
  if (threads <= 1 || n <= 1) {
    for (long i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<long> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
  std::vector<std::thread> pool;
  const int workers = static_cast<int>(std::min<long>(threads, n));
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (long i = next.fetch_add(1); i < n; i = next.fetch_add(1)) body(i);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
        next.store(n);
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace detail

using CellCallback = std::function<void(const CellResult&)>;

// Full sweep: cells ordered by (q, m, l); trial t of a cell runs on
// trial_seed(base_seed, cell, t). Aggregation is keyed by trial index, so
// any thread count produces identical results.
inline std::vector<CellResult> phase_grid(const ExperimentConfig& cfg, int threads = 1,
                                          const CellCallback& on_cell = {}) {
  if (cfg.d < 1 || cfg.p < cfg.d) throw ConfigError("phase_grid: need p >= d >= 1");
  if (cfg.trials < 1) throw ConfigError("phase_grid: trials must be >= 1");
  if (cfg.m_values.empty() || cfg.l_values.empty() || cfg.q_values.empty())
    throw ConfigError("phase_grid: m, l and q value lists must be non-empty");
  for (const Index m : cfg.m_values)
    if (m < 1 || m > cfg.d) throw ConfigError("phase_grid: every m must satisfy 1 <= m <= d");
  for (const Index l : cfg.l_values)
    if (l < 1 || l > cfg.p) throw ConfigError("phase_grid: every l must satisfy 1 <= l <= p");

  std::vector<double> qs = cfg.q_values;
  std::vector<Index> ms = cfg.m_values;
  std::vector<Index> ls = cfg.l_values;
  std::sort(qs.begin(), qs.end());
  std::sort(ms.begin(), ms.end());
  std::sort(ls.begin(), ls.end());

  std::vector<double> lambdas = cfg.lambda_grid;
  if (lambdas.empty()) lambdas.push_back(cfg.solver.lambda);

  std::vector<CellResult> cells;
  for (const double q : qs)
    for (const Index m : ms)
      for (const Index l : ls) {
        std::vector<detail::TrialRow> rows(static_cast<std::size_t>(cfg.trials));
        detail::parallel_for(cfg.trials, threads, [&](long t) {
          detail::TrialRow& row = rows[static_cast<std::size_t>(t)];
          const std::uint64_t seed = trial_seed(cfg.base_seed, q, m, l, cfg.sigma, t);
          for (const double lambda : lambdas) {
            SolverConfig tpl = cfg.solver;
            tpl.lambda = lambda;
            try {
              const TrialOutcome out =
                  run_trial(cfg.d, cfg.p, m, l, q, cfg.sigma, seed, tpl, cfg.success_threshold);
              row.rel_err.push_back(out.metrics.relative_error);
              row.iters.push_back(out.metrics.iterations);
            } catch (const InfeasibleError&) {
              row.skipped = true;
              return;
            }
          }
        });

        // score each lambda over the completed trials; keep the best mean
        long skips = 0;
        for (const auto& row : rows)
          if (row.skipped) ++skips;
        const long completed = cfg.trials - skips;

        std::size_t best = 0;
        double best_mean = std::numeric_limits<double>::infinity();
        std::vector<double> means(lambdas.size(), std::numeric_limits<double>::quiet_NaN());
        for (std::size_t li = 0; li < lambdas.size(); ++li) {
          if (completed == 0) break;
          double sum = 0.0;
          for (const auto& row : rows)
            if (!row.skipped) sum += row.rel_err[li];
          means[li] = sum / static_cast<double>(completed);
          if (means[li] < best_mean) {
            best_mean = means[li];
            best = li;
          }
        }

        CellResult cell;
        cell.q = q;
        cell.m = m;
        cell.l = l;
        cell.sigma = cfg.sigma;
        cell.trials = completed;
        cell.skips = skips;
        cell.lambda = lambdas[best];
        if (completed > 0) {
          long successes = 0;
          double err_sum = 0.0;
          double iter_sum = 0.0;
          for (const auto& row : rows) {
            if (row.skipped) continue;
            err_sum += row.rel_err[best];
            iter_sum += static_cast<double>(row.iters[best]);
            if (row.rel_err[best] <= cfg.success_threshold) ++successes;
          }
          cell.successes = successes;
          cell.mean_rel_err = err_sum / static_cast<double>(completed);
          cell.mean_iters = iter_sum / static_cast<double>(completed);
        }
        if (on_cell) on_cell(cell);
        cells.push_back(cell);
      }
  return cells;
}

inline void emit_csv(const std::vector<CellResult>& results, std::ostream& out) {
  if (results.empty()) throw ConfigError("emit_csv: no results");
  std::vector<CellResult> sorted = results;
  std::stable_sort(sorted.begin(), sorted.end(), [](const CellResult& a, const CellResult& b) {
    if (a.q != b.q) return a.q < b.q;
    if (a.m != b.m) return a.m < b.m;
    return a.l < b.l;
  });
  out << "q,m,l,sigma,trials,skips,successes,success_rate,mean_rel_err,mean_iters\n";
  for (const auto& c : sorted) {
    out << detail::format_value(c.q) << ',' << c.m << ',' << c.l << ','
        << detail::format_value(c.sigma) << ',' << c.trials << ',' << c.skips << ','
        << c.successes << ',' << detail::format_value(c.success_rate()) << ','
        << detail::format_value(c.mean_rel_err) << ',' << detail::format_value(c.mean_iters)
        << '\n';
  }
}

inline void emit_csv(const std::vector<CellResult>& results, const std::string& path) {
  if (results.empty()) throw ConfigError("emit_csv: no results");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  emit_csv(results, out);
  if (!out) throw IoError("write failed for '" + path + "'");
}

namespace detail {

inline double parse_csv_double(const std::string& tok, long line, long col) {
  if (tok == "nan" || tok == "-nan") return std::numeric_limits<double>::quiet_NaN();
  if (tok == "inf") return std::numeric_limits<double>::infinity();
  if (tok == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw ParseError("bad CSV number '" + tok + "'", line, col);
  return v;
}

inline long parse_csv_long(const std::string& tok, long line, long col) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw ParseError("bad CSV integer '" + tok + "'", line, col);
  return v;
}

}  // namespace detail

inline std::vector<CellResult> parse_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line))
    throw ParseError("empty CSV", 1, 1);
  if (line == "q,m,l,sigma,trials,skips,successes,success_rate,mean_rel_err,mean_iters\r")
    line.pop_back();
  if (line != "q,m,l,sigma,trials,skips,successes,success_rate,mean_rel_err,mean_iters")
    throw ParseError("unexpected CSV header '" + line + "'", 1, 1);
  std::vector<CellResult> cells;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> toks;
    std::string cur;
    for (const char ch : line) {
      if (ch == ',') {
        toks.push_back(cur);
        cur.clear();
      } else if (ch != '\r') {
        cur.push_back(ch);
      }
    }
    toks.push_back(cur);
    if (toks.size() != 10) throw ParseError("expected 10 CSV fields", lineno, 1);
    CellResult c;
    c.q = detail::parse_csv_double(toks[0], lineno, 1);
    c.m = detail::parse_csv_long(toks[1], lineno, 2);
    c.l = detail::parse_csv_long(toks[2], lineno, 3);
    c.sigma = detail::parse_csv_double(toks[3], lineno, 4);
    c.trials = detail::parse_csv_long(toks[4], lineno, 5);
    c.skips = detail::parse_csv_long(toks[5], lineno, 6);
    c.successes = detail::parse_csv_long(toks[6], lineno, 7);
    detail::parse_csv_double(toks[7], lineno, 8);  // success_rate is derived
    c.mean_rel_err = detail::parse_csv_double(toks[8], lineno, 9);
    c.mean_iters = detail::parse_csv_double(toks[9], lineno, 10);
    cells.push_back(c);
  }
  return cells;
}

inline std::vector<CellResult> parse_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return parse_csv(in);
}

// Benchmark presets mirroring the simulated studies; sweep ranges are
// documented in the README. Noiseless presets pin lambda = 1e-4; noisy ones
// grid-search {1e-4, 1e-3, 1e-2} per cell.
inline ExperimentConfig preset(const std::string& name) {
  ExperimentConfig cfg;
  cfg.name = name;
  cfg.d = 120;
  cfg.p = 144;
  cfg.trials = 50;
  cfg.base_seed = 1729;
  cfg.solver = SolverConfig{};
  cfg.solver.lambda = 1e-4;
  if (name == "figure1") {
    cfg.m_values = {80};
    cfg.l_values = {99};
    cfg.q_values = {0.7};
    cfg.sigma = 0.0;
  } else if (name == "figure2-m") {
    cfg.m_values = {60, 70, 80, 90, 100};
    cfg.l_values = {99};
    cfg.q_values = {0.7, 1.0};
    cfg.sigma = 0.0;
  } else if (name == "figure2-l") {
    cfg.m_values = {90};
    cfg.l_values = {85, 90, 95, 100, 105, 110};
    cfg.q_values = {0.7, 1.0};
    cfg.sigma = 0.0;
  } else if (name == "figure3-m") {
    cfg.m_values = {70, 90, 110};
    cfg.l_values = {99};
    cfg.q_values = {0.7, 1.0};
    cfg.sigma = 0.01;
    cfg.lambda_grid = {1e-4, 1e-3, 1e-2};
  } else if (name == "figure3-l") {
    cfg.m_values = {90};
    cfg.l_values = {85, 90, 95, 100, 105, 110};
    cfg.q_values = {0.7, 1.0};
    cfg.sigma = 0.01;
    cfg.lambda_grid = {1e-4, 1e-3, 1e-2};
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  return cfg;
}

// --- JSON config and problem persistence -------------------------------

inline nlohmann::json to_json(const SolverConfig& s) {
  return {{"q", s.q},       {"alpha", s.alpha},         {"lambda", s.lambda},
          {"l", s.l},       {"shrink", s.shrink},       {"tau", s.tau},
          {"eps0", s.eps0}, {"eps_floor", s.eps_floor}, {"max_iter", s.max_iter},
          {"project_cosupport", s.project_cosupport}};
}

inline SolverConfig solver_from_json(const nlohmann::json& j) {
  SolverConfig s;
  s.q = j.value("q", s.q);
  s.alpha = j.value("alpha", s.alpha);
  s.lambda = j.value("lambda", s.lambda);
  s.l = j.value("l", s.l);
  s.shrink = j.value("shrink", s.shrink);
  s.tau = j.value("tau", s.tau);
  s.eps0 = j.value("eps0", s.eps0);
  s.eps_floor = j.value("eps_floor", s.eps_floor);
  s.max_iter = j.value("max_iter", s.max_iter);
  s.project_cosupport = j.value("project_cosupport", s.project_cosupport);
  return s;
}

inline nlohmann::json to_json(const ExperimentConfig& c) {
  return {{"d", c.d},
          {"p", c.p},
          {"m_values", c.m_values},
          {"l_values", c.l_values},
          {"q_values", c.q_values},
          {"sigma", c.sigma},
          {"trials", c.trials},
          {"base_seed", c.base_seed},
          {"solver", to_json(c.solver)},
          {"success_threshold", c.success_threshold},
          {"lambda_grid", c.lambda_grid},
          {"name", c.name}};
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  c.d = j.value("d", c.d);
  c.p = j.value("p", c.p);
  c.m_values = j.value("m_values", std::vector<Index>{});
  c.l_values = j.value("l_values", std::vector<Index>{});
  c.q_values = j.value("q_values", std::vector<double>{});
  c.sigma = j.value("sigma", c.sigma);
  c.trials = j.value("trials", c.trials);
  c.base_seed = j.value("base_seed", c.base_seed);
  if (j.contains("solver")) c.solver = solver_from_json(j.at("solver"));
  c.success_threshold = j.value("success_threshold", c.success_threshold);
  c.lambda_grid = j.value("lambda_grid", std::vector<double>{});
  c.name = j.value("name", std::string{});
  return c;
}

// A problem directory holds A.txt, y.txt, omega.txt, x_true.txt and
// meta.json with {m, d, p, l, sigma, seed, cosupport}.
inline void save_problem(const Problem& prob, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());
  const std::filesystem::path base(dir);
  write_matrix(prob.A, (base / "A.txt").string());
  write_vector(prob.y, (base / "y.txt").string());
  write_matrix(prob.omega, (base / "omega.txt").string());
  write_vector(prob.x_true, (base / "x_true.txt").string());
  nlohmann::json meta = {{"m", prob.A.rows()},
                         {"d", prob.A.cols()},
                         {"p", prob.omega.rows()},
                         {"l", prob.cosupport_target.size()},
                         {"sigma", prob.sigma},
                         {"seed", prob.seed},
                         {"cosupport", prob.cosupport_target}};
  std::ofstream out(base / "meta.json", std::ios::binary);
  if (!out) throw IoError("cannot open '" + (base / "meta.json").string() + "' for writing");
  out << meta.dump(2) << '\n';
  if (!out) throw IoError("write failed for meta.json");
}

inline Problem load_problem(const std::string& dir) {
  const std::filesystem::path base(dir);
  Problem prob;
  prob.A = read_matrix((base / "A.txt").string());
  prob.y = read_vector((base / "y.txt").string());
  prob.omega = read_matrix((base / "omega.txt").string());
  prob.x_true = read_vector((base / "x_true.txt").string());
  std::ifstream in(base / "meta.json", std::ios::binary);
  if (!in) throw IoError("cannot open '" + (base / "meta.json").string() + "' for reading");
  nlohmann::json meta;
  in >> meta;
  prob.sigma = meta.value("sigma", 0.0);
  prob.seed = meta.value("seed", std::uint64_t{0});
  prob.cosupport_target = meta.value("cosupport", std::vector<Index>{});
  return prob;
}

}  // namespace coirlq

#endif
