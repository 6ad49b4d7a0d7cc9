#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "arena/game.hpp"

namespace testutil {

/// Table 2-shaped one-shot zero-sum game (matching-pennies structure).
inline arena::GameSpec zero_sum_game() {
  arena::GameSpec g;
  g.id = "zero_sum";
  g.strategies = {arena::StrategyId{0, "Option A"}, arena::StrategyId{1, "Option B"}};
  g.matrix.at(0, 0) = {2, -2};
  g.matrix.at(0, 1) = {-2, 2};
  g.matrix.at(1, 0) = {-2, 2};
  g.matrix.at(1, 1) = {2, -2};
  g.n_rounds = 1;
  g.objective = arena::Objective::maximize;
  return g;
}

/// Table 3-shaped repeated dilemma, reward reading (strategy 0 cooperates).
inline arena::GameSpec pd_game(arena::Objective objective = arena::Objective::maximize) {
  arena::GameSpec g;
  g.id = "pd";
  g.strategies = {arena::StrategyId{0, "Stay silent"}, arena::StrategyId{1, "Confess"}};
  g.matrix.at(0, 0) = {6, 6};
  g.matrix.at(0, 1) = {0, 10};
  g.matrix.at(1, 0) = {10, 0};
  g.matrix.at(1, 1) = {2, 2};
  g.n_rounds = 10;
  g.objective = objective;
  g.cooperate_index = 0;
  return g;
}

/// Uniform random 2x2 bimatrix with small integer payoffs (ties likely).
inline arena::GameSpec random_game(std::mt19937_64& rng, bool integer_payoffs = true) {
  std::uniform_int_distribution<int> ints(-5, 5);
  std::uniform_real_distribution<double> reals(-5.0, 5.0);
  arena::GameSpec g;
  g.id = "random";
  g.strategies = {arena::StrategyId{0, "first"}, arena::StrategyId{1, "second"}};
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c)
      g.matrix.at(r, c) = integer_payoffs
                              ? arena::PayoffPair{double(ints(rng)), double(ints(rng))}
                              : arena::PayoffPair{reals(rng), reals(rng)};
  g.n_rounds = 1;
  g.objective = rng() % 2 == 0 ? arena::Objective::maximize : arena::Objective::minimize;
  return g;
}

struct TempDir {
  std::filesystem::path path;

  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("arena-test-" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << content;
}

inline std::filesystem::path data_dir() { return ARENA_DATA_DIR; }

}  // namespace testutil
