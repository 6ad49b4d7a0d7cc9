#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "arena/errors.hpp"
#include "arena/game.hpp"

namespace arena {

/// Independent mixing probabilities of strategy 0 for each player.
struct MixedProfile {
  double p1_prob_strategy0 = 0.0;
  double p2_prob_strategy0 = 0.0;
};

struct EquilibriumReport {
  std::vector<std::pair<int, int>> pure_equilibria;  // row-major profile order
  std::optional<MixedProfile> mixed_equilibrium;
  std::string mixed_note;  // why mixed_equilibrium is absent, when it is
  std::optional<int> dominant_p1;
  std::optional<int> dominant_p2;
  std::optional<double> zero_sum_value;
  bool pd_ordering_ok = false;
};

/// Absolute tolerance for payoff comparisons. All bundled games use small
/// integer payoffs, so ties are exact; the tolerance guards derived values.
inline constexpr double kEqTolerance = 1e-9;

namespace detail {

/// Payoff as seen by `player` at profile (r, c), negated under minimize so
/// "better" is always "greater".
inline double gain(const GameSpec& g, int player, int r, int c) {
  const PayoffPair& cell = g.matrix.at(r, c);
  double v = player == 0 ? cell.p1 : cell.p2;
  return g.objective == Objective::minimize ? -v : v;
}

}  // namespace detail

/// All pure Nash equilibria by best-response intersection, row-major order.
inline std::vector<std::pair<int, int>> pure_nash(const GameSpec& spec,
                                                  double tol = kEqTolerance) {
  // Best-response sets: br1[c] = rows that maximize player 1's gain given
  // column c, and symmetrically for player 2.
  std::array<std::array<bool, 2>, 2> br1{};
  std::array<std::array<bool, 2>, 2> br2{};
  for (int c = 0; c < 2; ++c) {
    double g0 = detail::gain(spec, 0, 0, c);
    double g1 = detail::gain(spec, 0, 1, c);
    br1[0][c] = g0 >= g1 - tol;
    br1[1][c] = g1 >= g0 - tol;
  }
  for (int r = 0; r < 2; ++r) {
    double g0 = detail::gain(spec, 1, r, 0);
    double g1 = detail::gain(spec, 1, r, 1);
    br2[r][0] = g0 >= g1 - tol;
    br2[r][1] = g1 >= g0 - tol;
  }
  std::vector<std::pair<int, int>> out;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c)
      if (br1[r][c] && br2[r][c]) out.emplace_back(r, c);
  return out;
}

/// Strictly dominant strategy per player, if any.
inline std::pair<std::optional<int>, std::optional<int>> dominant_strategies(
    const GameSpec& spec, double tol = kEqTolerance) {
  std::optional<int> d1;
  std::optional<int> d2;
  for (int s = 0; s < 2; ++s) {
    int o = 1 - s;
    bool p1_strict = detail::gain(spec, 0, s, 0) > detail::gain(spec, 0, o, 0) + tol &&
                     detail::gain(spec, 0, s, 1) > detail::gain(spec, 0, o, 1) + tol;
    bool p2_strict = detail::gain(spec, 1, 0, s) > detail::gain(spec, 1, 0, o) + tol &&
                     detail::gain(spec, 1, 1, s) > detail::gain(spec, 1, 1, o) + tol;
    if (p1_strict) d1 = s;
    if (p2_strict) d2 = s;
  }
  return {d1, d2};
}

/// Interior mixed equilibrium of a 2x2 game from the indifference equations:
///   p1 = (d2-c2)/(a2-b2-c2+d2),  p2 = (d1-b1)/(a1-c1-b1+d1)
/// with cells (a,b,c,d) row-major. Requires no strict dominance and nonzero
/// denominators.
inline MixedProfile mixed_nash_2x2(const GameSpec& spec, double tol = kEqTolerance) {
  auto [d1, d2] = dominant_strategies(spec, tol);
  if (d1.has_value() || d2.has_value())
    throw DegenerateGameError("use dominant_strategies: a player has a strictly dominant strategy");

  double a1 = detail::gain(spec, 0, 0, 0), b1 = detail::gain(spec, 0, 0, 1);
  double c1 = detail::gain(spec, 0, 1, 0), dd1 = detail::gain(spec, 0, 1, 1);
  double a2 = detail::gain(spec, 1, 0, 0), b2 = detail::gain(spec, 1, 0, 1);
  double c2 = detail::gain(spec, 1, 1, 0), dd2 = detail::gain(spec, 1, 1, 1);

  double den1 = a2 - b2 - c2 + dd2;
  double den2 = a1 - c1 - b1 + dd1;
  if (std::abs(den1) <= tol || std::abs(den2) <= tol)
    throw DegenerateGameError("degenerate game: zero indifference denominator");

  MixedProfile mp{(dd2 - c2) / den1, (dd1 - b1) / den2};
  if (mp.p1_prob_strategy0 < -tol || mp.p1_prob_strategy0 > 1.0 + tol ||
      mp.p2_prob_strategy0 < -tol || mp.p2_prob_strategy0 > 1.0 + tol)
    throw DegenerateGameError("degenerate game: indifference point outside [0,1]");
  mp.p1_prob_strategy0 = std::min(1.0, std::max(0.0, mp.p1_prob_strategy0));
  mp.p2_prob_strategy0 = std::min(1.0, std::max(0.0, mp.p2_prob_strategy0));
  return mp;
}

/// Player 1's expected payoff (in original payoff units) at a mixed profile.
inline double expected_payoff_p1(const GameSpec& spec, const MixedProfile& mp) {
  double p = mp.p1_prob_strategy0;
  double q = mp.p2_prob_strategy0;
  double v = 0.0;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c)
      v += (r == 0 ? p : 1 - p) * (c == 0 ? q : 1 - q) * spec.matrix.at(r, c).p1;
  return v;
}

/// Value of a zero-sum game for player 1: the pure saddle point if one
/// exists, otherwise the expected payoff at the mixed equilibrium.
inline double zero_sum_value(const GameSpec& spec, double tol = kEqTolerance) {
  ValidationReport report = validate_game(spec);
  if (!report.zero_sum.value_or(false)) throw ValidationError("not zero-sum");

  // Under minimize, player 1 minimizes its own payoff; solve the mirrored
  // maximize game and restore the original sign at the end.
  double sign = spec.objective == Objective::minimize ? -1.0 : 1.0;
  auto u = [&](int r, int c) { return sign * spec.matrix.at(r, c).p1; };

  double maximin = std::max(std::min(u(0, 0), u(0, 1)), std::min(u(1, 0), u(1, 1)));
  double minimax = std::min(std::max(u(0, 0), u(1, 0)), std::max(u(0, 1), u(1, 1)));
  if (std::abs(maximin - minimax) <= tol) return sign * maximin;

  return expected_payoff_p1(spec, mixed_nash_2x2(spec, tol));
}

/// Classic dilemma ordering test for both players, read in reward sense:
/// T > R > P > S and 2R > T + S, with `cooperate` as the designated
/// cooperative strategy.
inline bool is_prisoners_dilemma(const GameSpec& spec, const StrategyId& cooperate) {
  int coop = cooperate.index;
  int defect = 1 - coop;
  for (int player = 0; player < 2; ++player) {
    auto payoff = [&](int own, int other) {
      return player == 0 ? detail::gain(spec, 0, own, other) : detail::gain(spec, 1, other, own);
    };
    double reward = payoff(coop, coop);
    double sucker = payoff(coop, defect);
    double temptation = payoff(defect, coop);
    double punishment = payoff(defect, defect);
    if (!(temptation > reward && reward > punishment && punishment > sucker)) return false;
    if (!(2.0 * reward > temptation + sucker)) return false;
  }
  return true;
}

/// Full analysis used by the `solve` command.
inline EquilibriumReport analyze_game(const GameSpec& spec, double tol = kEqTolerance) {
  EquilibriumReport report;
  report.pure_equilibria = pure_nash(spec, tol);
  auto [d1, d2] = dominant_strategies(spec, tol);
  report.dominant_p1 = d1;
  report.dominant_p2 = d2;
  try {
    report.mixed_equilibrium = mixed_nash_2x2(spec, tol);
  } catch (const DegenerateGameError& e) {
    report.mixed_note = e.what();
  }
  if (validate_game(spec).zero_sum.value_or(false)) report.zero_sum_value = zero_sum_value(spec, tol);
  report.pd_ordering_ok = is_prisoners_dilemma(spec, spec.strategy(spec.cooperate_index));
  return report;
}

}  // namespace arena
