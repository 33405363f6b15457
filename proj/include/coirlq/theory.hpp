#ifndef COIRLQ_THEORY_HPP
#define COIRLQ_THEORY_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "types.hpp"

// Recovery-condition and error-bound calculators for lq-analysis
// minimization. RIP constants are caller-supplied (certifying them for a
// concrete matrix is NP-hard); everything here is a pure formula evaluator.
// Internals run in long double so inputs with exact rational answers
// round to exactly those doubles.

namespace coirlq {

struct TheoryInputs {
  double delta_rho_s = 0.0;   // RIP constant of order rho*S
  double delta_rho1_s = 0.0;  // RIP constant of order (rho+1)*S
  double kappa = 1.0;         // condition number of the analysis operator
  double block_ratio = 2.0;   // the rho >= 2 of the condition (not the eps shrink)
  double q = 1.0;
  long s = 1;                 // sparsity of Omega x
  double sigma_min = 1.0;     // smallest singular value of Omega
};

struct BoundConstants {
  double c1 = 0.0;
  double c2 = 0.0;
};

namespace detail {

inline void validate_theory_scalars(double kappa, double q, double block_ratio) {
  if (!(kappa >= 1.0)) throw ConfigError("theory: kappa must be >= 1");
  if (!(q > 0.0 && q <= 1.0)) throw ConfigError("theory: q must lie in (0, 1]");
  if (!(block_ratio >= 2.0)) throw ConfigError("theory: block ratio must be >= 2");
}

inline void validate_delta(double delta, const char* name) {
  if (!(delta >= 0.0 && delta < 1.0))
    throw ConfigError(std::string("theory: ") + name + " must lie in [0, 1)");
}

// pow with the half-integer exponents routed through sqrt, so the exact
// rational cases (q = 1) stay exact.
inline long double pow_ld(long double base, long double e) {
  if (e == 1.0L) return base;
  if (e == -1.0L) return 1.0L / base;
  if (e == 2.0L) return base * base;
  if (e == 0.5L) return std::sqrt(base);
  if (e == -0.5L) return 1.0L / std::sqrt(base);
  return std::pow(base, e);
}

// t = kappa^{-q} rho^{1 - q/2} - 1; the admissibility conditions are stated
// through t^{2/q}.
inline long double condition_base(double kappa, double q, double block_ratio) {
  const auto lq = static_cast<long double>(q);
  return pow_ld(static_cast<long double>(kappa), -lq) *
             pow_ld(static_cast<long double>(block_ratio), 1.0L - lq / 2.0L) -
         1.0L;
}

}  // namespace detail

// delta_rhoS + t^{2/q} delta_(rho+1)S < t^{2/q} - 1, with t > 0 required.
inline bool check_condition(const TheoryInputs& in) {
  detail::validate_theory_scalars(in.kappa, in.q, in.block_ratio);
  detail::validate_delta(in.delta_rho_s, "delta_rho_s");
  detail::validate_delta(in.delta_rho1_s, "delta_rho1_s");
  const long double t = detail::condition_base(in.kappa, in.q, in.block_ratio);
  if (!(t > 0.0L))
    throw InfeasibleError("check_condition: condition-number hypothesis violated (t <= 0)");
  const long double t2q = detail::pow_ld(t, 2.0L / static_cast<long double>(in.q));
  const long double lhs = static_cast<long double>(in.delta_rho_s) +
                          t2q * static_cast<long double>(in.delta_rho1_s);
  return lhs < t2q - 1.0L;
}

// (t^{2/q} - 1) / (t^{2/q} + 1): the bound on delta_(rho+1)S in the slightly
// stronger sufficient condition.
inline double strong_threshold(double kappa, double q, double block_ratio) {
  detail::validate_theory_scalars(kappa, q, block_ratio);
  const long double t = detail::condition_base(kappa, q, block_ratio);
  if (!(t > 0.0L))
    throw InfeasibleError("strong_threshold: condition-number hypothesis violated (t <= 0)");
  const long double t2q = detail::pow_ld(t, 2.0L / static_cast<long double>(q));
  return static_cast<double>((t2q - 1.0L) / (t2q + 1.0L));
}

// C1 = 1 / [ (1-d2)^{q/2} (1 - k^q r) - k^q r (1+d1)^{q/2} ],  r = rho^{q/2-1}
// C2 = (2 sigma_min^{-q} r / (1 - k^q r)) [ C1 (1+d1)^{q/2} + 1 ]
inline BoundConstants bound_constants(const TheoryInputs& in) {
  detail::validate_theory_scalars(in.kappa, in.q, in.block_ratio);
  detail::validate_delta(in.delta_rho_s, "delta_rho_s");
  detail::validate_delta(in.delta_rho1_s, "delta_rho1_s");
  if (!(in.sigma_min > 0.0)) throw ConfigError("theory: sigma_min must be positive");

  const long double q = in.q;
  const long double r = detail::pow_ld(static_cast<long double>(in.block_ratio), q / 2.0L - 1.0L);
  const long double kq = detail::pow_ld(static_cast<long double>(in.kappa), q);
  const long double d1 = in.delta_rho_s;
  const long double d2 = in.delta_rho1_s;
  const long double denom =
      detail::pow_ld(1.0L - d2, q / 2.0L) * (1.0L - kq * r) - kq * r * detail::pow_ld(1.0L + d1, q / 2.0L);
  if (!(denom > 0.0L))
    throw InfeasibleError("bound_constants: admissibility condition fails (denominator <= 0)");
  const long double c1 = 1.0L / denom;
  const long double c2 = (2.0L * detail::pow_ld(static_cast<long double>(in.sigma_min), -q) * r /
                          (1.0L - kq * r)) *
                         (c1 * detail::pow_ld(1.0L + d1, q / 2.0L) + 1.0L);
  return {static_cast<double>(c1), static_cast<double>(c2)};
}

struct SparsityMap {
  long s_q = 0;
  double rho_q = 0.0;
};

// S_q = floor((rho1+1) / (rho1^{1/(2-q)} + 1)) * S1 and
// rho_q = (rho1+1) S1 / S_q - 1, with the product identity
// (rho_q + 1) S_q == (rho1 + 1) S1 exact in double arithmetic.
inline SparsityMap sq_from_s1(long s1, double rho1, double q) {
  if (s1 < 1) throw ConfigError("sq_from_s1: S1 must be a positive integer");
  if (!(rho1 >= 2.0)) throw ConfigError("sq_from_s1: rho1 must be >= 2");
  if (!(q > 0.0 && q <= 1.0)) throw ConfigError("sq_from_s1: q must lie in (0, 1]");

  const double product = (rho1 + 1.0) * static_cast<double>(s1);
  if (!(product <= 9.007199254740992e15))
    throw ConfigError("sq_from_s1: (rho1+1)*S1 too large for exact integer arithmetic");
  const auto total = static_cast<std::int64_t>(std::llround(product));
  if (std::abs(product - static_cast<double>(total)) > 1e-9 * (1.0 + std::abs(product)))
    throw ConfigError("sq_from_s1: (rho1+1)*S1 must be an integer");

  long multiplier = 1;
  if (q < 1.0) {
    const long double w =
        std::pow(static_cast<long double>(rho1), 1.0L / (2.0L - static_cast<long double>(q)));
    const long double ratio = (static_cast<long double>(rho1) + 1.0L) / (w + 1.0L);
    multiplier = static_cast<long>(std::floor(ratio));
  }
  if (multiplier < 1) throw InfeasibleError("sq_from_s1: no valid S_q (floor collapses)");

  SparsityMap out;
  out.s_q = multiplier * s1;
  const double target = static_cast<double>(total);
  const double sq = static_cast<double>(out.s_q);
  double ratio = target / sq;  // rho_q + 1
  if (ratio * sq != target) {
    // nudge to the representable neighbor whose product is exact
    for (int step = 0; step < 2 && ratio * sq != target; ++step) {
      const double up = std::nextafter(ratio, std::numeric_limits<double>::infinity());
      const double dn = std::nextafter(ratio, -std::numeric_limits<double>::infinity());
      if (up * sq == target)
        ratio = up;
      else if (dn * sq == target)
        ratio = dn;
      else
        ratio = (std::abs(up * sq - target) < std::abs(dn * sq - target)) ? up : dn;
    }
  }
  out.rho_q = ratio - 1.0;
  return out;
}

struct FeasibleQ {
  double q = 0.0;
  double rho = 0.0;
};

inline std::vector<double> default_q_grid() {
  std::vector<double> g;
  for (int i = 1; i <= 20; ++i) g.push_back(static_cast<double>(i) / 20.0);
  return g;
}

inline std::vector<double> default_rho_grid() {
  std::vector<double> g;
  for (int i = 2; i <= 100; ++i) g.push_back(static_cast<double>(i));
  return g;
}

// Smallest q on the grid for which some rho makes the strong threshold
// exceed delta; empty result when no grid point qualifies.
inline std::optional<FeasibleQ> min_feasible_q(double delta, double kappa,
                                               const std::vector<double>& q_grid,
                                               const std::vector<double>& rho_grid) {
  detail::validate_delta(delta, "delta");
  if (!(kappa >= 1.0)) throw ConfigError("theory: kappa must be >= 1");
  if (q_grid.empty() || rho_grid.empty()) throw ConfigError("min_feasible_q: grids must be non-empty");

  std::optional<FeasibleQ> best;
  for (const double q : q_grid) {
    if (!(q > 0.0 && q <= 1.0)) throw ConfigError("min_feasible_q: grid q must lie in (0, 1]");
    if (best && best->q <= q) continue;
    for (const double rho : rho_grid) {
      if (!(rho >= 2.0)) throw ConfigError("min_feasible_q: grid rho must be >= 2");
      const long double t = detail::condition_base(kappa, q, rho);
      if (!(t > 0.0L)) continue;
      const long double t2q = detail::pow_ld(t, 2.0L / static_cast<long double>(q));
      const long double threshold = (t2q - 1.0L) / (t2q + 1.0L);
      if (threshold > static_cast<long double>(delta)) {
        best = FeasibleQ{q, rho};
        break;
      }
    }
  }
  return best;
}

// (sqrt(2 F0) + noise) / sqrt(1 - delta): reconstruction error bound from
// the initial objective value F0 = F(x0, eps0). F0 already carries lambda;
// lambda is accepted for interface parity and validated only.
inline double recovery_error_bound(double delta_2l_p, double lambda, double f0, double noise) {
  if (!(delta_2l_p >= 0.0)) throw ConfigError("recovery_error_bound: delta must be nonnegative");
  if (delta_2l_p >= 1.0)
    throw InfeasibleError("recovery_error_bound: requires delta_{2l-p} < 1");
  if (!(lambda > 0.0)) throw ConfigError("recovery_error_bound: lambda must be positive");
  if (f0 < 0.0) throw ConfigError("recovery_error_bound: F0 must be nonnegative");
  if (noise < 0.0) throw ConfigError("recovery_error_bound: noise must be nonnegative");
  const long double num = std::sqrt(2.0L * static_cast<long double>(f0)) +
                          static_cast<long double>(noise);
  return static_cast<double>(num / std::sqrt(1.0L - static_cast<long double>(delta_2l_p)));
}

}  // namespace coirlq

#endif
