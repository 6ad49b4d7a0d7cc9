#pragma once

#include <array>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "arena/errors.hpp"
#include "arena/game.hpp"
#include "arena/gateway.hpp"
#include "arena/hashing.hpp"
#include "arena/strategies.hpp"

namespace arena {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

/// Default master seed when neither the config nor --seed provides one.
inline constexpr uint64_t kDefaultMasterSeed = 424242;

struct AgentBackend {
  enum class Kind { scripted, mock, provider };
  Kind kind = Kind::scripted;
  ScriptedPolicy policy;                    // scripted + policy-backed mock
  std::vector<std::string> replies;         // reply-list mock
  bool use_replies = false;
  std::string provider_id;                  // provider kind
  std::optional<ScriptedPolicy> mock_fallback;  // used by --mock for provider kind
};

struct AgentSpec {
  std::string name;
  AgentBackend backend;
};

/// A game plus its prompting binding (template kind + verbatim weights).
struct ConfiguredGame {
  GameSpec spec;
  std::string template_kind;
  std::vector<std::string> weights;  // rendered verbatim into {weight1..N}
  std::optional<std::vector<bool>> rounds_known_override;
  std::optional<std::vector<bool>> opponent_known_override;
};

struct ExperimentConfig {
  std::string experiment_id;
  uint64_t master_seed = kDefaultMasterSeed;
  int repetitions = 1;
  std::filesystem::path language_pack;  // resolved against the config file
  std::vector<std::string> languages;
  std::vector<std::array<std::string, 2>> personalities;
  bool personalities_ordered = false;
  std::vector<bool> rounds_known{false};
  std::vector<bool> opponent_known{false};
  std::vector<ConfiguredGame> games;
  std::array<AgentSpec, 2> agents;
  std::map<std::string, ProviderConfig> providers;
  std::string config_hash;

  const ConfiguredGame* find_game(const std::string& id) const {
    for (const auto& g : games)
      if (g.spec.id == id) return &g;
    return nullptr;
  }
};

namespace config_detail {

inline ScriptedPolicy parse_policy(const json& j) {
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "always_first") return ScriptedPolicy::always_first();
  if (kind == "always_second") return ScriptedPolicy::always_second();
  if (kind == "tit_for_tat") return ScriptedPolicy::tit_for_tat();
  if (kind == "grim_trigger") return ScriptedPolicy::grim_trigger();
  if (kind == "random_mixed") {
    double p = j.at("p").get<double>();
    if (p < 0.0 || p > 1.0) throw ConfigError("random_mixed: p must be in [0,1]");
    return ScriptedPolicy::random_mixed(p, j.value("seed", 0ull));
  }
  if (kind == "nash_mixed") return ScriptedPolicy::nash_mixed(j.value("seed", 0ull));
  if (kind == "fixed_sequence") {
    auto seq = j.at("sequence").get<std::vector<int>>();
    if (seq.empty()) throw ConfigError("fixed_sequence: sequence must be non-empty");
    for (int v : seq)
      if (v != 0 && v != 1) throw ConfigError("fixed_sequence: entries must be 0 or 1");
    return ScriptedPolicy::fixed_sequence(seq);
  }
  throw ConfigError("unknown policy kind: " + kind);
}

inline AgentBackend parse_backend(const json& j) {
  AgentBackend b;
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "scripted") {
    b.kind = AgentBackend::Kind::scripted;
    b.policy = parse_policy(j.at("policy"));
  } else if (kind == "mock") {
    b.kind = AgentBackend::Kind::mock;
    if (j.contains("replies")) {
      b.use_replies = true;
      b.replies = j.at("replies").get<std::vector<std::string>>();
    } else {
      b.policy = parse_policy(j.at("policy"));
    }
  } else if (kind == "provider") {
    b.kind = AgentBackend::Kind::provider;
    b.provider_id = j.at("provider").get<std::string>();
    if (j.contains("mock_policy")) b.mock_fallback = parse_policy(j.at("mock_policy"));
  } else {
    throw ConfigError("unknown backend kind: " + kind);
  }
  return b;
}

inline std::string weight_to_string(const json& w) {
  if (w.is_string()) return w.get<std::string>();
  return w.dump();
}

}  // namespace config_detail

/// Structural checks over the raw config document. Collects every finding
/// rather than stopping at the first, for `validate` output.
inline std::vector<ValidationFinding> check_config(const json& j) {
  std::vector<ValidationFinding> out;
  auto fail = [&](const std::string& check, const std::string& detail) {
    out.push_back({check, false, detail});
  };
  auto pass = [&](const std::string& check) { out.push_back({check, true, ""}); };

  for (const char* key : {"games", "agents", "languages"})
    if (!j.contains(key)) fail("required_keys", std::string("missing key: ") + key);

  if (j.contains("languages")) {
    if (!j["languages"].is_array() || j["languages"].empty())
      fail("languages", "languages must be a non-empty array");
    else
      pass("languages");
  }
  if (j.contains("personalities") && (!j["personalities"].is_array() || j["personalities"].empty()))
    fail("personalities", "personalities must be a non-empty array of [trait, trait] pairs");
  if (j.contains("repetitions") && (!j["repetitions"].is_number_integer() || j["repetitions"].get<int>() < 1))
    fail("repetitions", "repetitions must be a positive integer");
  if (j.contains("rounds_known") && (!j["rounds_known"].is_array() || j["rounds_known"].empty()))
    fail("rounds_known", "rounds_known must be a non-empty array of booleans");
  if (j.contains("opponent_personality_known") &&
      (!j["opponent_personality_known"].is_array() || j["opponent_personality_known"].empty()))
    fail("opponent_personality_known", "must be a non-empty array of booleans");

  if (j.contains("agents")) {
    if (!j["agents"].is_array() || j["agents"].size() != 2)
      fail("agents", "exactly two agents are required");
    else
      pass("agents");
  }

  if (j.contains("games")) {
    if (!j["games"].is_array() || j["games"].empty()) {
      fail("games", "games must be a non-empty array");
    } else {
      for (const auto& g : j["games"]) {
        std::string id = g.value("id", "<unnamed>");
        auto gfail = [&](const std::string& check, const std::string& detail) {
          fail(check, id + ": " + detail);
        };
        if (!g.contains("strategies") || !g["strategies"].is_array() || g["strategies"].size() != 2)
          gfail("strategies", "exactly two strategy labels are required");
        if (!g.contains("matrix") || !g["matrix"].is_array() || g["matrix"].size() != 2) {
          gfail("matrix", "matrix must be a 2x2 grid of [p1, p2] pairs");
        } else {
          static const char* kRowNames[2] = {"A", "B"};
          for (int r = 0; r < 2; ++r) {
            if (!g["matrix"][r].is_array() || g["matrix"][r].size() != 2) {
              gfail("matrix", std::string("row ") + kRowNames[r] + " must have two cells");
              continue;
            }
            for (int c = 0; c < 2; ++c) {
              const auto& cell = g["matrix"][r][c];
              if (cell.is_null())
                gfail("matrix", std::string("missing cell (") + kRowNames[r] + "," + kRowNames[c] + ")");
              else if (!cell.is_array() || cell.size() != 2 || !cell[0].is_number() || !cell[1].is_number())
                gfail("matrix", std::string("cell (") + kRowNames[r] + "," + kRowNames[c] +
                                    ") must be a [p1, p2] number pair");
            }
          }
        }
        if (g.contains("n_rounds") && (!g["n_rounds"].is_number_integer() || g["n_rounds"].get<int>() < 1))
          gfail("n_rounds", "n_rounds must be >= 1");
        if (g.contains("objective")) {
          std::string o = g["objective"].get<std::string>();
          if (o != "maximize" && o != "minimize") gfail("objective", "objective must be maximize or minimize");
        }
        if (g.contains("weights") && (!g["weights"].is_array() || g["weights"].empty()))
          gfail("weights", "weights must be a non-empty array");
      }
    }
  }
  return out;
}

/// Parses a validated document. Throws ConfigError listing every finding if
/// the structure is bad.
inline ExperimentConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
  auto findings = check_config(j);
  std::string problems;
  for (const auto& f : findings)
    if (!f.ok) problems += (problems.empty() ? "" : "; ") + f.check + ": " + f.detail;
  if (!problems.empty()) throw ConfigError("invalid config: " + problems);

  ExperimentConfig cfg;
  cfg.experiment_id = j.value("experiment_id", "experiment");
  cfg.master_seed = j.value("master_seed", kDefaultMasterSeed);
  cfg.repetitions = j.value("repetitions", 1);
  if (j.contains("language_pack")) {
    std::filesystem::path p = j["language_pack"].get<std::string>();
    cfg.language_pack = p.is_absolute() ? p : base_dir / p;
  }
  cfg.languages = j.at("languages").get<std::vector<std::string>>();
  for (auto& tag : cfg.languages) tag = case_fold(tag);

  cfg.personalities_ordered = j.value("personalities_ordered", false);
  if (j.contains("personalities")) {
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& p : j["personalities"]) {
      std::array<std::string, 2> pair{p.at(0).get<std::string>(), p.at(1).get<std::string>()};
      if (!cfg.personalities_ordered) {
        auto key = std::minmax(pair[0], pair[1]);
        if (!seen.insert(key).second) continue;  // unordered: (C,S) == (S,C)
      }
      cfg.personalities.push_back(pair);
    }
  } else {
    cfg.personalities.push_back({"", ""});  // personality axis unused
  }
  if (j.contains("rounds_known")) cfg.rounds_known = j["rounds_known"].get<std::vector<bool>>();
  if (j.contains("opponent_personality_known"))
    cfg.opponent_known = j["opponent_personality_known"].get<std::vector<bool>>();

  for (const auto& g : j.at("games")) {
    ConfiguredGame game;
    game.spec.id = g.at("id").get<std::string>();
    game.template_kind = g.value("template", game.spec.id);
    auto labels = g.at("strategies").get<std::vector<std::string>>();
    game.spec.strategies = {StrategyId{0, labels[0]}, StrategyId{1, labels[1]}};
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c)
        game.spec.matrix.at(r, c) = {g.at("matrix")[r][c][0].get<double>(),
                                     g.at("matrix")[r][c][1].get<double>()};
    game.spec.n_rounds = g.value("n_rounds", 1);
    game.spec.objective =
        g.value("objective", std::string("maximize")) == "minimize" ? Objective::minimize
                                                                    : Objective::maximize;
    game.spec.cooperate_index = g.value("cooperate_index", 0);
    if (g.contains("weights"))
      for (const auto& w : g["weights"]) game.weights.push_back(config_detail::weight_to_string(w));
    if (g.contains("rounds_known"))
      game.rounds_known_override = g["rounds_known"].get<std::vector<bool>>();
    if (g.contains("opponent_personality_known"))
      game.opponent_known_override = g["opponent_personality_known"].get<std::vector<bool>>();

    ValidationReport report = validate_game(game.spec);
    if (!report.ok()) {
      std::string detail;
      for (const auto& f : report.findings)
        if (!f.ok) detail += (detail.empty() ? "" : "; ") + f.check + ": " + f.detail;
      throw ConfigError("invalid game " + game.spec.id + ": " + detail);
    }
    cfg.games.push_back(std::move(game));
  }

  const auto& agents = j.at("agents");
  for (int i = 0; i < 2; ++i) {
    cfg.agents[i].name = agents[i].value("name", "Agent" + std::to_string(i + 1));
    cfg.agents[i].backend = config_detail::parse_backend(agents[i].at("backend"));
  }

  if (j.contains("providers")) {
    for (const auto& [id, pj] : j["providers"].items()) {
      ProviderConfig pc;
      pc.provider_id = id;
      pc.endpoint_url = pj.value("endpoint_url", "");
      pc.model_id = pj.value("model_id", id);
      pc.temperature = pj.value("temperature", 1.0);
      pc.top_p = pj.value("top_p", 1.0);
      if (pj.contains("top_k")) pc.top_k = pj["top_k"].get<int>();
      pc.api_key_env = pj.value("api_key_env", "");
      pc.max_retries = pj.value("max_retries", 3);
      pc.timeout_ms = pj.value("timeout_ms", 30000);
      pc.rate_limit_per_min = pj.value("rate_limit_per_min", 600);
      pc.max_concurrent = pj.value("max_concurrent", 4);
      pc.validate();
      cfg.providers[id] = pc;
    }
  }
  for (const AgentSpec& agent : cfg.agents) {
    if (agent.backend.kind == AgentBackend::Kind::provider &&
        !cfg.providers.count(agent.backend.provider_id))
      throw ConfigError("agent " + agent.name + " references unknown provider: " +
                        agent.backend.provider_id);
  }

  cfg.config_hash = [&] {
    std::ostringstream hex;
    hex << std::hex << fnv1a64(j.dump());
    return hex.str();
  }();
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(j, path.parent_path());
}

inline json read_config_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

inline json game_spec_to_json(const GameSpec& spec) {
  json j;
  j["strategies"] = {spec.strategies[0].label, spec.strategies[1].label};
  j["matrix"] = {{{spec.matrix.at(0, 0).p1, spec.matrix.at(0, 0).p2},
                  {spec.matrix.at(0, 1).p1, spec.matrix.at(0, 1).p2}},
                 {{spec.matrix.at(1, 0).p1, spec.matrix.at(1, 0).p2},
                  {spec.matrix.at(1, 1).p1, spec.matrix.at(1, 1).p2}}};
  j["n_rounds"] = spec.n_rounds;
  j["objective"] = to_string(spec.objective);
  j["cooperate_index"] = spec.cooperate_index;
  return j;
}

inline GameSpec game_spec_from_json(const std::string& id, const json& j) {
  GameSpec spec;
  spec.id = id;
  auto labels = j.at("strategies").get<std::vector<std::string>>();
  spec.strategies = {StrategyId{0, labels.at(0)}, StrategyId{1, labels.at(1)}};
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c)
      spec.matrix.at(r, c) = {j.at("matrix")[r][c][0].get<double>(),
                              j.at("matrix")[r][c][1].get<double>()};
  spec.n_rounds = j.at("n_rounds").get<int>();
  spec.objective = j.at("objective").get<std::string>() == "minimize" ? Objective::minimize
                                                                      : Objective::maximize;
  spec.cooperate_index = j.value("cooperate_index", 0);
  return spec;
}

}  // namespace arena
