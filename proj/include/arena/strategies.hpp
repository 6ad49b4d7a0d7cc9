#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "arena/equilibrium.hpp"
#include "arena/errors.hpp"
#include "arena/game.hpp"
#include "arena/hashing.hpp"

namespace arena {

/// What a policy is allowed to see when deciding: its own seat, the visible
/// history, and optionally the total round count.
struct PolicyView {
  int own_index = 1;  // 1 or 2
  std::vector<std::pair<int, int>> history;  // (own_choice, opponent_choice)
  int round_index = 1;  // 1-based
  std::optional<int> n_rounds_known;
  const GameSpec* game = nullptr;
};

enum class PolicyKind {
  always_first,
  always_second,
  tit_for_tat,
  grim_trigger,
  random_mixed,
  nash_mixed,
  fixed_sequence,
};

struct ScriptedPolicy {
  PolicyKind kind = PolicyKind::always_first;
  double p = 1.0;                 // random_mixed: probability of strategy 0
  std::vector<int> sequence;      // fixed_sequence
  uint64_t seed = 0;              // stochastic kinds

  static ScriptedPolicy of(PolicyKind kind) {
    ScriptedPolicy s;
    s.kind = kind;
    return s;
  }
  static ScriptedPolicy always_first() { return of(PolicyKind::always_first); }
  static ScriptedPolicy always_second() { return of(PolicyKind::always_second); }
  static ScriptedPolicy tit_for_tat() { return of(PolicyKind::tit_for_tat); }
  static ScriptedPolicy grim_trigger() { return of(PolicyKind::grim_trigger); }
  static ScriptedPolicy random_mixed(double p, uint64_t seed) {
    ScriptedPolicy s = of(PolicyKind::random_mixed);
    s.p = p;
    s.seed = seed;
    return s;
  }
  static ScriptedPolicy nash_mixed(uint64_t seed) {
    ScriptedPolicy s = of(PolicyKind::nash_mixed);
    s.seed = seed;
    return s;
  }
  static ScriptedPolicy fixed_sequence(std::vector<int> seq) {
    ScriptedPolicy s = of(PolicyKind::fixed_sequence);
    s.sequence = std::move(seq);
    return s;
  }
};

inline std::string to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::always_first: return "always_first";
    case PolicyKind::always_second: return "always_second";
    case PolicyKind::tit_for_tat: return "tit_for_tat";
    case PolicyKind::grim_trigger: return "grim_trigger";
    case PolicyKind::random_mixed: return "random_mixed";
    case PolicyKind::nash_mixed: return "nash_mixed";
    case PolicyKind::fixed_sequence: return "fixed_sequence";
  }
  return "?";
}

namespace detail {

/// One uniform draw per (seed, seat, round); counter-based, so concurrent
/// execution order cannot change it.
inline double policy_draw(const ScriptedPolicy& policy, const PolicyView& view) {
  return unit_uniform(derive_seed(policy.seed, static_cast<uint64_t>(view.own_index),
                                  static_cast<uint64_t>(view.round_index)));
}

}  // namespace detail

/// Deterministic decision for (policy, seed, view).
inline int decide(const ScriptedPolicy& policy, const PolicyView& view) {
  if (static_cast<int>(view.history.size()) != view.round_index - 1)
    throw ValidationError("policy view inconsistent: history length != round_index - 1");
  switch (policy.kind) {
    case PolicyKind::always_first:
      return 0;
    case PolicyKind::always_second:
      return 1;
    case PolicyKind::tit_for_tat:
      return view.history.empty() ? 0 : view.history.back().second;
    case PolicyKind::grim_trigger:
      for (const auto& [own, theirs] : view.history)
        if (theirs == 1) return 1;
      return 0;
    case PolicyKind::random_mixed:
      return detail::policy_draw(policy, view) < policy.p ? 0 : 1;
    case PolicyKind::nash_mixed: {
      if (view.game == nullptr) throw ValidationError("nash_mixed needs the game spec in the view");
      // Dominance-solvable games have a pure Nash strategy; only otherwise
      // does the indifference mix apply.
      auto [d1, d2] = dominant_strategies(*view.game);
      std::optional<int> own_dominant = view.own_index == 1 ? d1 : d2;
      if (own_dominant.has_value()) return *own_dominant;
      MixedProfile mp = mixed_nash_2x2(*view.game);
      double p0 = view.own_index == 1 ? mp.p1_prob_strategy0 : mp.p2_prob_strategy0;
      return detail::policy_draw(policy, view) < p0 ? 0 : 1;
    }
    case PolicyKind::fixed_sequence: {
      size_t i = static_cast<size_t>(view.round_index) - 1;
      if (i >= policy.sequence.size()) throw ValidationError("sequence exhausted");
      return policy.sequence[i];
    }
  }
  throw ValidationError("unknown policy kind");
}

}  // namespace arena
