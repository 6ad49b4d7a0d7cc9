#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "arena/errors.hpp"
#include "arena/text.hpp"

namespace arena {

/// One of the two moves available in a game. `index` is the analysis-stable
/// identity; `label` is display text and may be localized.
struct StrategyId {
  int index = 0;  // 0 or 1
  std::string label;

  friend bool operator==(const StrategyId& a, const StrategyId& b) {
    return a.index == b.index;
  }
};

/// Per-cell payoff pair, row player first.
struct PayoffPair {
  double p1 = 0.0;
  double p2 = 0.0;
};

/// 2x2 bimatrix: cells[r][c] is the outcome when player 1 picks strategy r
/// and player 2 picks strategy c.
struct PayoffMatrix {
  std::array<std::array<PayoffPair, 2>, 2> cells{};

  const PayoffPair& at(int row, int col) const { return cells[row][col]; }
  PayoffPair& at(int row, int col) { return cells[row][col]; }
};

enum class Objective { maximize, minimize };

inline std::string to_string(Objective o) {
  return o == Objective::maximize ? "maximize" : "minimize";
}

/// A fully-specified 2x2 game.
struct GameSpec {
  std::string id;
  std::array<StrategyId, 2> strategies;
  PayoffMatrix matrix;
  int n_rounds = 1;
  Objective objective = Objective::maximize;
  /// Which strategy index reciprocal policies treat as the cooperative
  /// opening. Display metadata; the payoffs are authoritative.
  int cooperate_index = 0;

  const StrategyId& strategy(int index) const { return strategies[index]; }
};

struct RoundRecord {
  int round_index = 0;  // 1-based
  int choice_p1 = 0;
  int choice_p2 = 0;
  double payoff_p1 = 0.0;
  double payoff_p2 = 0.0;
};

/// Ordered play history of one game run. Value type: apply_round returns a
/// new transcript.
struct Transcript {
  const GameSpec* game = nullptr;
  std::vector<RoundRecord> rounds;
  uint64_t seed = 0;

  bool complete() const { return game != nullptr && static_cast<int>(rounds.size()) >= game->n_rounds; }
};

struct ValidationFinding {
  std::string check;
  bool ok = true;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationFinding> findings;
  std::optional<bool> zero_sum;
  std::string objective;

  bool ok() const {
    for (const auto& f : findings)
      if (!f.ok) return false;
    return true;
  }

  void add(std::string check, bool ok, std::string detail = "") {
    findings.push_back({std::move(check), ok, std::move(detail)});
  }
};

namespace detail {
inline std::string normalized_label(const std::string& label) {
  std::string folded = case_fold(nfc(label));
  std::string out;
  for (char c : folded)
    if (!is_ascii_space(c)) out.push_back(c);
  return out;
}
}  // namespace detail

/// Structural checks plus the zero-sum flag (every cell sums to zero).
inline ValidationReport validate_game(const GameSpec& spec) {
  ValidationReport report;
  report.objective = to_string(spec.objective);

  bool labels_ok = !spec.strategies[0].label.empty() && !spec.strategies[1].label.empty();
  bool labels_distinct =
      detail::normalized_label(spec.strategies[0].label) !=
      detail::normalized_label(spec.strategies[1].label);
  report.add("strategy_count", spec.strategies[0].index == 0 && spec.strategies[1].index == 1,
             "expected strategy indices 0 and 1");
  report.add("strategy_labels", labels_ok && labels_distinct,
             labels_ok ? "labels must be distinct after normalization" : "labels must be non-empty");

  bool finite = true;
  bool zero_sum = true;
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c) {
      const PayoffPair& cell = spec.matrix.at(r, c);
      if (!std::isfinite(cell.p1) || !std::isfinite(cell.p2)) finite = false;
      if (cell.p1 + cell.p2 != 0.0) zero_sum = false;
    }
  }
  report.add("finite_payoffs", finite, finite ? "" : "non-finite payoff cell");
  report.add("rounds", spec.n_rounds >= 1, "n_rounds must be >= 1");
  report.zero_sum = finite ? std::optional<bool>(zero_sum) : std::nullopt;
  return report;
}

/// Exact cell lookup, pure.
inline std::pair<double, double> payoff_for(const PayoffMatrix& m, int choice_p1, int choice_p2) {
  const PayoffPair& cell = m.at(choice_p1, choice_p2);
  return {cell.p1, cell.p2};
}

inline std::pair<double, double> payoff_for(const PayoffMatrix& m, const StrategyId& c1,
                                            const StrategyId& c2) {
  return payoff_for(m, c1.index, c2.index);
}

/// Appends one round; payoffs are recomputed from the matrix, never trusted
/// from the caller.
inline Transcript apply_round(const Transcript& t, int choice_p1, int choice_p2) {
  if (t.game == nullptr) throw ValidationError("transcript has no game");
  if (t.complete()) throw ValidationError("transcript full");
  Transcript out = t;
  auto [p1, p2] = payoff_for(t.game->matrix, choice_p1, choice_p2);
  out.rounds.push_back({static_cast<int>(t.rounds.size()) + 1, choice_p1, choice_p2, p1, p2});
  return out;
}

/// Componentwise sum over rounds; empty transcript sums to (0, 0).
inline std::pair<double, double> total_payoffs(const Transcript& t) {
  double a = 0.0;
  double b = 0.0;
  for (const RoundRecord& r : t.rounds) {
    a += r.payoff_p1;
    b += r.payoff_p2;
  }
  return {a, b};
}

/// Which per-round value a normalization (or outcome extraction) refers to.
enum class OutcomeChannel { agent1, agent2, joint_mean };

namespace detail {
inline double channel_value(const PayoffPair& cell, OutcomeChannel ch) {
  switch (ch) {
    case OutcomeChannel::agent1: return cell.p1;
    case OutcomeChannel::agent2: return cell.p2;
    case OutcomeChannel::joint_mean: return 0.5 * (cell.p1 + cell.p2);
  }
  return cell.p1;
}
}  // namespace detail

/// [min, max] attainable per-round value over the matrix for a channel.
inline std::pair<double, double> attainable_range(const GameSpec& spec, OutcomeChannel ch) {
  double lo = detail::channel_value(spec.matrix.at(0, 0), ch);
  double hi = lo;
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c) {
      double v = detail::channel_value(spec.matrix.at(r, c), ch);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  return {lo, hi};
}

/// Affine map of a per-round value onto [-1, 1]: -1 at the minimum attainable
/// cell value for the channel, +1 at the maximum.
inline double normalize_outcome(double value, const GameSpec& spec,
                                OutcomeChannel ch = OutcomeChannel::agent1) {
  auto [lo, hi] = attainable_range(spec, ch);
  if (lo == hi) throw DegenerateGameError("degenerate range: min == max attainable payoff");
  return -1.0 + 2.0 * (value - lo) / (hi - lo);
}

}  // namespace arena
