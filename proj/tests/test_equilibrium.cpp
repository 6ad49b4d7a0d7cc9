#include <catch2/catch_amalgamated.hpp>

#include "arena/equilibrium.hpp"
#include "helpers.hpp"

using namespace arena;
using testutil::pd_game;
using testutil::zero_sum_game;

namespace {

// Independent oracle: profile-wise deviation scan. A profile is an
// equilibrium iff neither player gains by a unilateral switch.
double oracle_gain(const GameSpec& g, int player, int r, int c) {
  double v = player == 0 ? g.matrix.at(r, c).p1 : g.matrix.at(r, c).p2;
  return g.objective == Objective::minimize ? -v : v;
}

std::vector<std::pair<int, int>> oracle_pure_nash(const GameSpec& g, double tol = 1e-9) {
  std::vector<std::pair<int, int>> out;
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c) {
      bool p1_deviates = oracle_gain(g, 0, 1 - r, c) > oracle_gain(g, 0, r, c) + tol;
      bool p2_deviates = oracle_gain(g, 1, r, 1 - c) > oracle_gain(g, 1, r, c) + tol;
      if (!p1_deviates && !p2_deviates) out.emplace_back(r, c);
    }
  }
  return out;
}

std::pair<std::optional<int>, std::optional<int>> oracle_dominant(const GameSpec& g,
                                                                  double tol = 1e-9) {
  std::optional<int> d1, d2;
  for (int s = 0; s < 2; ++s) {
    bool all1 = true, all2 = true;
    for (int other = 0; other < 2; ++other) {
      if (!(oracle_gain(g, 0, s, other) > oracle_gain(g, 0, 1 - s, other) + tol)) all1 = false;
      if (!(oracle_gain(g, 1, other, s) > oracle_gain(g, 1, other, 1 - s) + tol)) all2 = false;
    }
    if (all1) d1 = s;
    if (all2) d2 = s;
  }
  return {d1, d2};
}

GameSpec negated(const GameSpec& g) {
  GameSpec out = g;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) {
      out.matrix.at(r, c).p1 = -g.matrix.at(r, c).p1;
      out.matrix.at(r, c).p2 = -g.matrix.at(r, c).p2;
    }
  out.objective =
      g.objective == Objective::maximize ? Objective::minimize : Objective::maximize;
  return out;
}

GameSpec swapped_players(const GameSpec& g) {
  GameSpec out = g;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c)
      out.matrix.at(r, c) = {g.matrix.at(c, r).p2, g.matrix.at(c, r).p1};
  return out;
}

GameSpec all_equal_game() {
  GameSpec g = zero_sum_game();
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) g.matrix.at(r, c) = {1.0, 1.0};
  return g;
}

}  // namespace

TEST_CASE("pure_nash on the reference games") {
  // Reward reading of the dilemma: mutual defection is the only equilibrium.
  auto pd = pure_nash(pd_game());
  REQUIRE(pd.size() == 1);
  CHECK(pd[0] == std::pair{1, 1});

  CHECK(pure_nash(zero_sum_game()).empty());  // matching-pennies structure

  CHECK(pure_nash(all_equal_game()).size() == 4);
}

TEST_CASE("dominant_strategies on the reference games") {
  auto [d1, d2] = dominant_strategies(pd_game());
  CHECK(d1 == 1);
  CHECK(d2 == 1);

  auto [z1, z2] = dominant_strategies(zero_sum_game());
  CHECK_FALSE(z1.has_value());
  CHECK_FALSE(z2.has_value());

  auto [e1, e2] = dominant_strategies(all_equal_game());
  CHECK_FALSE(e1.has_value());
  CHECK_FALSE(e2.has_value());
}

TEST_CASE("mixed_nash_2x2 solves the zero-sum game at (0.5, 0.5)") {
  MixedProfile mp = mixed_nash_2x2(zero_sum_game());
  CHECK(mp.p1_prob_strategy0 == Catch::Approx(0.5).margin(1e-12));
  CHECK(mp.p2_prob_strategy0 == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("mixed_nash_2x2 on a symmetric coordination game") {
  GameSpec g = zero_sum_game();
  g.matrix.at(0, 0) = {2, 2};
  g.matrix.at(0, 1) = {0, 0};
  g.matrix.at(1, 0) = {0, 0};
  g.matrix.at(1, 1) = {2, 2};
  MixedProfile mp = mixed_nash_2x2(g);
  CHECK(mp.p1_prob_strategy0 == Catch::Approx(0.5));
  CHECK(mp.p2_prob_strategy0 == Catch::Approx(0.5));
}

TEST_CASE("mixed_nash_2x2 defers to dominance on the dilemma") {
  CHECK_THROWS_WITH(mixed_nash_2x2(pd_game()),
                    Catch::Matchers::ContainsSubstring("use dominant_strategies"));
}

TEST_CASE("mixed_nash_2x2 rejects zero denominators") {
  GameSpec g = all_equal_game();
  CHECK_THROWS_AS(mixed_nash_2x2(g), DegenerateGameError);
}

TEST_CASE("zero_sum_value of the reference games") {
  CHECK(zero_sum_value(zero_sum_game()) == Catch::Approx(0.0).margin(1e-12));
  CHECK_THROWS_WITH(zero_sum_value(pd_game()), Catch::Matchers::ContainsSubstring("not zero-sum"));

  GameSpec saddle = zero_sum_game();
  saddle.matrix.at(0, 0) = {1, -1};
  saddle.matrix.at(0, 1) = {1, -1};
  saddle.matrix.at(1, 0) = {0, 0};
  saddle.matrix.at(1, 1) = {0, 0};
  CHECK(zero_sum_value(saddle) == Catch::Approx(1.0));
}

TEST_CASE("is_prisoners_dilemma checks both orderings") {
  GameSpec pd = pd_game();
  CHECK(is_prisoners_dilemma(pd, pd.strategy(0)));
  CHECK_FALSE(is_prisoners_dilemma(pd, pd.strategy(1)));  // wrong cooperate designation

  GameSpec penalties = pd_game(Objective::minimize);
  CHECK_FALSE(is_prisoners_dilemma(penalties, penalties.strategy(0)));

  GameSpec zs = zero_sum_game();
  CHECK_FALSE(is_prisoners_dilemma(zs, zs.strategy(0)));
}

TEST_CASE("pure_nash and dominance agree with brute-force scans on random games") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    GameSpec g = testutil::random_game(rng);
    CHECK(pure_nash(g) == oracle_pure_nash(g));
    auto mine = dominant_strategies(g);
    auto ref = oracle_dominant(g);
    CHECK(mine.first == ref.first);
    CHECK(mine.second == ref.second);
  }
}

TEST_CASE("mixed equilibrium makes both players indifferent") {
  std::mt19937_64 rng(77);
  int solved = 0;
  for (int trial = 0; trial < 2000 && solved < 200; ++trial) {
    GameSpec g = testutil::random_game(rng, /*integer_payoffs=*/false);
    MixedProfile mp;
    try {
      mp = mixed_nash_2x2(g);
    } catch (const DegenerateGameError&) {
      continue;
    }
    ++solved;
    double q = mp.p2_prob_strategy0;
    double u1_row0 = q * oracle_gain(g, 0, 0, 0) + (1 - q) * oracle_gain(g, 0, 0, 1);
    double u1_row1 = q * oracle_gain(g, 0, 1, 0) + (1 - q) * oracle_gain(g, 0, 1, 1);
    CHECK(u1_row0 == Catch::Approx(u1_row1).margin(1e-9));
    double p = mp.p1_prob_strategy0;
    double u2_col0 = p * oracle_gain(g, 1, 0, 0) + (1 - p) * oracle_gain(g, 1, 1, 0);
    double u2_col1 = p * oracle_gain(g, 1, 0, 1) + (1 - p) * oracle_gain(g, 1, 1, 1);
    CHECK(u2_col0 == Catch::Approx(u2_col1).margin(1e-9));
  }
  CHECK(solved >= 200);
}

TEST_CASE("sense duality: maximize(G) solves like minimize(-G)") {
  std::mt19937_64 rng(4242);
  for (int trial = 0; trial < 300; ++trial) {
    GameSpec g = testutil::random_game(rng);
    g.objective = Objective::maximize;
    GameSpec neg = negated(g);
    CHECK(pure_nash(g) == pure_nash(neg));
    auto [a1, a2] = dominant_strategies(g);
    auto [b1, b2] = dominant_strategies(neg);
    CHECK(a1 == b1);
    CHECK(a2 == b2);
  }
}

TEST_CASE("zero-sum value duality and antisymmetry") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> ints(-5, 5);
  for (int trial = 0; trial < 300; ++trial) {
    GameSpec g = zero_sum_game();
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) {
        double v = ints(rng);
        g.matrix.at(r, c) = {v, -v};
      }
    double value;
    try {
      value = zero_sum_value(g);
    } catch (const DegenerateGameError&) {
      continue;  // no saddle and degenerate mixing
    }
    // Negating payoffs and flipping the sense leaves an equivalent game with
    // the value negated.
    CHECK(zero_sum_value(negated(g)) == Catch::Approx(-value).margin(1e-9));
    // Swapping seats negates the value.
    CHECK(zero_sum_value(swapped_players(g)) == Catch::Approx(-value).margin(1e-9));
  }
}

TEST_CASE("analyze_game assembles the full report") {
  EquilibriumReport zs = analyze_game(zero_sum_game());
  CHECK(zs.pure_equilibria.empty());
  REQUIRE(zs.mixed_equilibrium.has_value());
  REQUIRE(zs.zero_sum_value.has_value());
  CHECK(*zs.zero_sum_value == Catch::Approx(0.0).margin(1e-12));
  CHECK_FALSE(zs.pd_ordering_ok);

  EquilibriumReport pd = analyze_game(pd_game());
  CHECK(pd.dominant_p1 == 1);
  CHECK(pd.dominant_p2 == 1);
  CHECK_FALSE(pd.mixed_equilibrium.has_value());
  CHECK(pd.pd_ordering_ok);
  CHECK_FALSE(pd.zero_sum_value.has_value());
}
