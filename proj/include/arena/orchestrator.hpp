#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "arena/config.hpp"
#include "arena/errors.hpp"
#include "arena/game.hpp"
#include "arena/gateway.hpp"
#include "arena/hashing.hpp"
#include "arena/http_provider.hpp"
#include "arena/prompting.hpp"
#include "arena/strategies.hpp"

namespace arena {

/// One concrete playthrough: a point in the config's axis cross-product.
struct GameInstance {
  int index = 0;               // position in expansion order
  std::string instance_id;     // canonical axis string, injective by construction
  const ConfiguredGame* game = nullptr;
  std::string language;
  std::array<std::string, 2> personalities;
  bool rounds_known = false;
  bool opponent_known = false;
  int repetition = 1;          // 1-based
  uint64_t derived_seed = 0;
};

enum class RunStatus { complete, invalid_decision, provider_error };

inline std::string to_string(RunStatus s) {
  switch (s) {
    case RunStatus::complete: return "complete";
    case RunStatus::invalid_decision: return "invalid_decision";
    case RunStatus::provider_error: return "provider_error";
  }
  return "?";
}

struct DecisionMeta {
  int round = 0;
  int agent = 0;  // 1 or 2
  std::string prompt;
  Decision decision;
  std::string model;
  bool failed = false;
};

struct RunRecord {
  GameInstance instance;
  RunStatus status = RunStatus::complete;
  Transcript transcript;
  std::vector<DecisionMeta> decisions;
  std::string model_id;
  std::string error;
};

struct ExperimentManifest {
  std::string experiment_id;
  std::string config_hash;
  uint64_t master_seed = 0;
  int instances = 0;
  int complete = 0;
  int invalid_decision = 0;
  int provider_error = 0;
  int64_t decisions = 0;
  int64_t started_unix_ms = 0;
  int64_t duration_ms = 0;
  int parallelism = 1;
  bool mock_mode = false;
};

/// Deterministic ordered cross-product of the config axes. One-shot games
/// collapse the rounds-knowledge axis to a single value.
inline std::vector<GameInstance> expand_config(const ExperimentConfig& cfg) {
  if (cfg.games.empty()) throw ConfigError("empty axis: games");
  if (cfg.languages.empty()) throw ConfigError("empty axis: languages");
  if (cfg.personalities.empty()) throw ConfigError("empty axis: personalities");
  if (cfg.repetitions < 1) throw ConfigError("repetitions must be >= 1");

  std::vector<GameInstance> out;
  for (const ConfiguredGame& game : cfg.games) {
    std::vector<bool> rk =
        game.rounds_known_override ? *game.rounds_known_override : cfg.rounds_known;
    std::vector<bool> ok =
        game.opponent_known_override ? *game.opponent_known_override : cfg.opponent_known;
    if (rk.empty()) throw ConfigError("empty axis: rounds_known for game " + game.spec.id);
    if (ok.empty())
      throw ConfigError("empty axis: opponent_personality_known for game " + game.spec.id);
    if (game.spec.n_rounds == 1) rk = {false};  // no round count to disclose

    for (const std::string& lang : cfg.languages) {
      for (const auto& pers : cfg.personalities) {
        for (bool opp_known : ok) {
          for (bool rounds_known : rk) {
            for (int rep = 1; rep <= cfg.repetitions; ++rep) {
              GameInstance inst;
              inst.index = static_cast<int>(out.size());
              inst.game = &game;
              inst.language = lang;
              inst.personalities = pers;
              inst.rounds_known = rounds_known;
              inst.opponent_known = opp_known;
              inst.repetition = rep;
              std::ostringstream id;
              id << "game=" << game.spec.id << "|lang=" << lang << "|pers=" << pers[0] << "+"
                 << pers[1] << "|rk=" << (rounds_known ? 1 : 0) << "|ok=" << (opp_known ? 1 : 0)
                 << "|rep=" << rep;
              inst.instance_id = id.str();
              inst.derived_seed = derive_seed(cfg.master_seed, inst.instance_id);
              out.push_back(std::move(inst));
            }
          }
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Execution environment
// ---------------------------------------------------------------------------

/// Resolved per-agent backend used during a run.
struct ResolvedAgent {
  std::string name;
  AgentBackend::Kind kind = AgentBackend::Kind::scripted;
  ScriptedPolicy policy;          // scripted kind
  std::string gateway_provider;   // mock/provider kinds: id registered in the gateway
  std::string model_label;
};

struct RunEnvironment {
  const ExperimentConfig* config = nullptr;
  const LanguagePack* pack = nullptr;
  Gateway* gateway = nullptr;
  std::array<ResolvedAgent, 2> agents;
};

namespace orch_detail {

inline std::string policy_label(const AgentBackend& b) {
  if (b.use_replies) return "replies";
  return to_string(b.policy.kind);
}

}  // namespace orch_detail

inline ProviderConfig mock_provider_config(const std::string& id, const std::string& model_label) {
  ProviderConfig pc;
  pc.provider_id = id;
  pc.model_id = model_label;
  pc.max_retries = 3;
  pc.rate_limit_per_min = std::numeric_limits<int>::max();  // offline: never throttle
  return pc;
}

/// Registers each agent's backend with the gateway. With `mock_mode`,
/// provider backends are replaced by their mock fallback policy (default
/// nash_mixed) so no network is ever touched.
inline std::array<ResolvedAgent, 2> resolve_agents(const ExperimentConfig& cfg, Gateway& gateway,
                                                   bool mock_mode) {
  std::array<ResolvedAgent, 2> out;
  for (int i = 0; i < 2; ++i) {
    const AgentSpec& agent = cfg.agents[i];
    ResolvedAgent& r = out[i];
    r.name = agent.name;
    r.kind = agent.backend.kind;

    if (agent.backend.kind == AgentBackend::Kind::scripted) {
      r.policy = agent.backend.policy;
      r.gateway_provider = "scripted:" + orch_detail::policy_label(agent.backend);
      r.model_label = r.gateway_provider;
      continue;
    }

    if (agent.backend.kind == AgentBackend::Kind::provider && !mock_mode) {
      const ProviderConfig& pc = cfg.providers.at(agent.backend.provider_id);
      r.gateway_provider = pc.provider_id;
      r.model_label = pc.model_id;
      if (!gateway.has_provider(pc.provider_id))
        gateway.add_provider(pc, std::make_shared<HttpProvider>(pc));
      continue;
    }

    // Mock backend, or a provider backend forced offline by --mock.
    std::string id = "mock:agent" + std::to_string(i + 1);
    std::shared_ptr<Provider> provider;
    std::string label;
    if (agent.backend.kind == AgentBackend::Kind::provider) {
      ScriptedPolicy policy = agent.backend.mock_fallback.value_or(ScriptedPolicy::nash_mixed(0));
      provider = std::make_shared<MockProvider>(policy);
      label = "mock:" + to_string(policy.kind);
    } else if (agent.backend.use_replies) {
      provider = std::make_shared<MockProvider>(agent.backend.replies);
      label = "mock:replies";
    } else {
      provider = std::make_shared<MockProvider>(agent.backend.policy);
      label = "mock:" + to_string(agent.backend.policy.kind);
    }
    r.kind = AgentBackend::Kind::mock;
    r.gateway_provider = id;
    r.model_label = label;
    if (!gateway.has_provider(id)) gateway.add_provider(mock_provider_config(id, label), provider);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Single-instance execution
// ---------------------------------------------------------------------------

/// The placeholder values one agent sees for the upcoming round.
inline PlaceholderMap build_placeholders(const GameInstance& inst, const PromptTemplate& tmpl,
                                         const RunEnvironment& env, const Transcript& transcript,
                                         int agent_index, int round) {
  const ConfiguredGame& game = *inst.game;
  int other = 1 - agent_index;
  PlaceholderMap values;
  values["currentPlayerName"] = env.agents[agent_index].name;
  values["opponent1"] = env.agents[other].name;
  values["personality"] = inst.personalities[agent_index];
  if (inst.opponent_known) values["opponentPersonality"] = inst.personalities[other];
  values["strategy1"] = tmpl.strategy_labels[0];
  values["strategy2"] = tmpl.strategy_labels[1];
  for (size_t i = 0; i < game.weights.size(); ++i)
    values["weight" + std::to_string(i + 1)] = game.weights[i];
  values["nRounds"] = std::to_string(game.spec.n_rounds);
  values["currentRound"] = std::to_string(round);
  values["history"] = format_history(transcript, tmpl, agent_index + 1, env.agents[other].name);
  return values;
}

inline FlagSet build_flags(const GameInstance& inst, int agent_index) {
  FlagSet flags;
  if (!inst.personalities[agent_index].empty()) flags.insert("intro");
  if (inst.rounds_known) flags.insert("gameLength");
  if (inst.opponent_known) flags.insert("opponentPersonalityKnown");
  return flags;
}

/// Plays one instance to completion. Rounds run strictly in order; both
/// prompts for a round are rendered from the same transcript before either
/// decision is requested, so neither agent can see the other's current move.
inline RunRecord run_game_instance(const GameInstance& inst, const RunEnvironment& env) {
  const ConfiguredGame& game = *inst.game;
  const PromptTemplate& tmpl = env.pack->at(game.template_kind).at(inst.language);

  RunRecord record;
  record.instance = inst;
  record.model_id = env.agents[0].model_label == env.agents[1].model_label
                        ? env.agents[0].model_label
                        : env.agents[0].model_label + "+" + env.agents[1].model_label;
  record.transcript.game = &game.spec;
  record.transcript.seed = inst.derived_seed;

  for (int round = 1; round <= game.spec.n_rounds; ++round) {
    std::array<std::string, 2> prompts;
    std::array<PolicyView, 2> views;
    for (int a = 0; a < 2; ++a) {
      views[a].own_index = a + 1;
      views[a].round_index = round;
      views[a].game = &game.spec;
      if (inst.rounds_known) views[a].n_rounds_known = game.spec.n_rounds;
      for (const RoundRecord& r : record.transcript.rounds)
        views[a].history.emplace_back(a == 0 ? r.choice_p1 : r.choice_p2,
                                      a == 0 ? r.choice_p2 : r.choice_p1);
      prompts[a] = render(tmpl, build_placeholders(inst, tmpl, env, record.transcript, a, round),
                          build_flags(inst, a));
    }

    std::array<Decision, 2> decisions;
    for (int a = 0; a < 2; ++a) {
      const ResolvedAgent& agent = env.agents[a];
      bool failed = false;
      try {
        if (agent.kind == AgentBackend::Kind::scripted) {
          ScriptedPolicy policy = agent.policy;
          policy.seed = derive_seed(inst.derived_seed, policy.seed);
          int choice = decide(policy, views[a]);
          decisions[a].chosen = choice;
          decisions[a].chosen_label = tmpl.strategy_labels[choice];
          decisions[a].raw_reply = tmpl.strategy_labels[choice];
          decisions[a].attempts = 1;
          decisions[a].provider_id = agent.gateway_provider;
        } else {
          DecisionContext ctx;
          ctx.view = views[a];
          ctx.labels = {tmpl.strategy_labels[0], tmpl.strategy_labels[1]};
          ctx.draw_seed = inst.derived_seed;
          decisions[a] = env.gateway->request_decision(agent.gateway_provider, prompts[a], ctx);
        }
      } catch (const UnparseableDecisionError& e) {
        record.status = RunStatus::invalid_decision;
        record.error = e.what();
        failed = true;
      } catch (const ProviderError& e) {
        record.status = RunStatus::provider_error;
        record.error = e.what();
        failed = true;
      }
      record.decisions.push_back(
          {round, a + 1, prompts[a], decisions[a], env.agents[a].model_label, failed});
      if (failed) return record;  // partial transcript preserved
    }

    record.transcript = apply_round(record.transcript, decisions[0].chosen, decisions[1].chosen);
  }
  return record;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace orch_detail {

inline void append_axes(ordered_json& j, const GameInstance& inst) {
  j["instance_id"] = inst.instance_id;
  j["game"] = inst.game->spec.id;
  j["language"] = inst.language;
  j["personalities"] = inst.personalities;
  j["rounds_known"] = inst.rounds_known;
  j["opponent_known"] = inst.opponent_known;
  j["repetition"] = inst.repetition;
}

}  // namespace orch_detail

/// One line per decision followed by one line per run; `seq` fixes the order
/// within an instance.
inline std::vector<ordered_json> run_record_lines(const RunRecord& record) {
  std::vector<ordered_json> lines;
  int seq = 0;
  for (const DecisionMeta& d : record.decisions) {
    ordered_json j;
    j["type"] = "decision";
    j["instance_index"] = record.instance.index;
    j["seq"] = seq++;
    orch_detail::append_axes(j, record.instance);
    j["round"] = d.round;
    j["agent"] = d.agent;
    j["model"] = d.model;
    j["provider"] = d.decision.provider_id;
    j["status"] = d.failed ? "failed" : "ok";
    j["prompt"] = d.prompt;
    j["raw_reply"] = d.decision.raw_reply;
    if (d.failed) {
      j["chosen_index"] = nullptr;
      j["chosen_label"] = nullptr;
    } else {
      j["chosen_index"] = d.decision.chosen;
      j["chosen_label"] = d.decision.chosen_label;
    }
    j["attempts"] = d.decision.attempts;
    j["latency_ms"] = d.decision.latency_ms;
    lines.push_back(std::move(j));
  }
  ordered_json j;
  j["type"] = "run";
  j["instance_index"] = record.instance.index;
  j["seq"] = seq;
  orch_detail::append_axes(j, record.instance);
  j["model"] = record.model_id;
  j["status"] = to_string(record.status);
  j["seed"] = record.instance.derived_seed;
  j["objective"] = to_string(record.instance.game->spec.objective);
  ordered_json rounds = ordered_json::array();
  for (const RoundRecord& r : record.transcript.rounds) {
    rounds.push_back({{"round", r.round_index},
                      {"choice_p1", r.choice_p1},
                      {"choice_p2", r.choice_p2},
                      {"payoff_p1", r.payoff_p1},
                      {"payoff_p2", r.payoff_p2}});
  }
  j["rounds"] = std::move(rounds);
  auto totals = total_payoffs(record.transcript);
  j["totals"] = {totals.first, totals.second};
  j["error"] = record.error;
  lines.push_back(std::move(j));
  return lines;
}

struct RunOptions {
  std::filesystem::path out_dir;
  int parallelism = 1;
  bool mock_mode = false;
  std::optional<uint64_t> seed_override;
};

inline ordered_json manifest_to_json(const ExperimentManifest& m) {
  ordered_json j;
  j["experiment_id"] = m.experiment_id;
  j["config_hash"] = m.config_hash;
  j["master_seed"] = m.master_seed;
  j["instances"] = m.instances;
  j["complete"] = m.complete;
  j["invalid_decision"] = m.invalid_decision;
  j["provider_error"] = m.provider_error;
  j["decisions"] = m.decisions;
  j["started_unix_ms"] = m.started_unix_ms;
  j["duration_ms"] = m.duration_ms;
  j["parallelism"] = m.parallelism;
  j["mock_mode"] = m.mock_mode;
  return j;
}

/// Refuses to write into a results directory produced from a different config.
inline void guard_results_dir(const std::filesystem::path& out_dir, const std::string& config_hash) {
  namespace fs = std::filesystem;
  fs::path manifest = out_dir / "manifest.json";
  if (fs::exists(manifest)) {
    std::ifstream in(manifest);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || j.value("config_hash", "") != config_hash)
      throw ConfigError("stale results directory: " + out_dir.string() +
                        " holds results for a different config");
  } else if (fs::exists(out_dir / "results.jsonl")) {
    throw ConfigError("stale results directory: " + out_dir.string() +
                      " has results but no manifest");
  }
}

namespace orch_detail {

/// Thread-safe JSONL sink for the verbatim request/reply audit log.
class RequestLogFile {
 public:
  explicit RequestLogFile(const std::filesystem::path& path)
      : out_(path, std::ios::trunc | std::ios::binary) {}

  void operator()(const RequestLogEntry& e) {
    ordered_json j;
    j["provider"] = e.provider_id;
    j["model"] = e.model_id;
    j["attempt"] = e.attempt;
    j["prompt"] = e.prompt;
    j["reply"] = e.reply;
    j["error"] = e.error;
    j["latency_ms"] = e.latency_ms;
    std::lock_guard<std::mutex> lock(mutex_);
    out_ << j.dump() << "\n";
    out_.flush();
  }

 private:
  std::mutex mutex_;
  std::ofstream out_;
};

/// Renders round-1 prompts for every distinct axis combination so template
/// gaps surface before any run starts.
inline void probe_render(const std::vector<GameInstance>& instances, const RunEnvironment& env) {
  std::set<std::string> probed;
  for (const GameInstance& inst : instances) {
    std::string key = inst.game->spec.id + "|" + inst.language + "|" + inst.personalities[0] +
                      "+" + inst.personalities[1] + "|" + (inst.rounds_known ? "1" : "0") + "|" +
                      (inst.opponent_known ? "1" : "0");
    if (!probed.insert(key).second) continue;
    const PromptTemplate& tmpl = env.pack->at(inst.game->template_kind).at(inst.language);
    Transcript empty;
    empty.game = &inst.game->spec;
    for (int a = 0; a < 2; ++a)
      render(tmpl, build_placeholders(inst, tmpl, env, empty, a, 1), build_flags(inst, a));
  }
}

}  // namespace orch_detail

/// Executes every instance (parallel up to `parallelism`), persists records
/// incrementally to per-worker shards, then merges them into results.jsonl
/// in instance order. Failed instances are retried once at end-of-run.
inline ExperimentManifest run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
  namespace fs = std::filesystem;
  ExperimentConfig effective = cfg;
  if (opts.seed_override) effective.master_seed = *opts.seed_override;

  std::vector<GameInstance> instances = expand_config(effective);
  fs::create_directories(opts.out_dir);
  guard_results_dir(opts.out_dir, effective.config_hash);

  // Offline backends get a fixed clock: instant backoff, zero latencies,
  // byte-stable outputs.
  bool touches_network = false;
  for (const AgentSpec& agent : effective.agents)
    if (agent.backend.kind == AgentBackend::Kind::provider && !opts.mock_mode)
      touches_network = true;
  FixedClock fixed_clock;
  Clock& clock = touches_network ? system_clock() : static_cast<Clock&>(fixed_clock);

  auto log_file =
      std::make_shared<orch_detail::RequestLogFile>(opts.out_dir / "requests.jsonl");
  Gateway gateway(clock, [log_file](const RequestLogEntry& e) { (*log_file)(e); });

  RunEnvironment env;
  env.config = &effective;
  env.gateway = &gateway;
  LanguagePack pack = load_language_pack(effective.language_pack);
  env.pack = &pack;
  env.agents = resolve_agents(effective, gateway, opts.mock_mode);

  // Every (game, language) pair must resolve to a template.
  for (const ConfiguredGame& game : effective.games) {
    auto kind_it = pack.find(game.template_kind);
    if (kind_it == pack.end())
      throw ConfigError("language pack has no game kind '" + game.template_kind + "'");
    for (const std::string& lang : effective.languages)
      if (!kind_it->second.count(lang))
        throw ConfigError("language pack misses language '" + lang + "' for game kind '" +
                          game.template_kind + "'");
  }
  orch_detail::probe_render(instances, env);

  int parallelism = std::max(1, opts.parallelism);
  auto started = std::chrono::steady_clock::now();
  int64_t started_unix_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                std::chrono::system_clock::now().time_since_epoch())
                                .count();

  std::vector<std::vector<ordered_json>> per_instance(instances.size());
  std::vector<RunStatus> statuses(instances.size(), RunStatus::complete);
  std::vector<fs::path> shard_paths;

  auto run_one = [&](const GameInstance& inst, std::ofstream& shard, bool keep_only_improvement) {
    RunRecord record;
    try {
      record = run_game_instance(inst, env);
    } catch (const std::exception& e) {
      record = RunRecord{};
      record.instance = inst;
      record.status = RunStatus::provider_error;
      record.error = e.what();
    }
    if (keep_only_improvement && record.status != RunStatus::complete) return;
    statuses[inst.index] = record.status;
    per_instance[inst.index] = run_record_lines(record);
    for (const ordered_json& line : per_instance[inst.index]) shard << line.dump() << "\n";
    shard.flush();
  };

  {
    std::atomic<size_t> next{0};
    std::vector<std::thread> workers;
    for (int w = 0; w < parallelism; ++w) {
      fs::path shard_path = opts.out_dir / ("results.shard-" + std::to_string(w) + ".jsonl");
      shard_paths.push_back(shard_path);
      workers.emplace_back([&, shard_path] {
        std::ofstream shard(shard_path, std::ios::trunc | std::ios::binary);
        for (;;) {
          size_t i = next.fetch_add(1);
          if (i >= instances.size()) break;
          run_one(instances[i], shard, /*keep_only_improvement=*/false);
        }
      });
    }
    for (auto& t : workers) t.join();
  }

  // One retry pass for failures; a retry only replaces the original record
  // when it completes, so a second failure cannot mask the first diagnosis.
  {
    fs::path shard_path = opts.out_dir / "results.shard-retry.jsonl";
    std::ofstream shard(shard_path, std::ios::trunc | std::ios::binary);
    bool any = false;
    for (const GameInstance& inst : instances) {
      if (statuses[inst.index] == RunStatus::complete) continue;
      any = true;
      run_one(inst, shard, /*keep_only_improvement=*/true);
    }
    shard.close();
    if (any)
      shard_paths.push_back(shard_path);
    else
      fs::remove(shard_path);
  }

  ExperimentManifest manifest;
  manifest.experiment_id = effective.experiment_id;
  manifest.config_hash = effective.config_hash;
  manifest.master_seed = effective.master_seed;
  manifest.instances = static_cast<int>(instances.size());
  manifest.parallelism = parallelism;
  manifest.mock_mode = opts.mock_mode;
  manifest.started_unix_ms = started_unix_ms;
  {
    std::ofstream out(opts.out_dir / "results.jsonl", std::ios::trunc | std::ios::binary);
    for (const auto& lines : per_instance)
      for (const ordered_json& line : lines) out << line.dump() << "\n";
  }
  for (const fs::path& shard : shard_paths) fs::remove(shard);

  for (RunStatus s : statuses) {
    switch (s) {
      case RunStatus::complete: ++manifest.complete; break;
      case RunStatus::invalid_decision: ++manifest.invalid_decision; break;
      case RunStatus::provider_error: ++manifest.provider_error; break;
    }
  }
  for (const auto& lines : per_instance)
    manifest.decisions += static_cast<int64_t>(lines.size()) - 1;  // last line is the run record
  manifest.duration_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::steady_clock::now() - started)
                             .count();

  std::ofstream mf(opts.out_dir / "manifest.json", std::ios::trunc | std::ios::binary);
  mf << manifest_to_json(manifest).dump(2) << "\n";

  // Self-describing results: the analysis side needs the payoff matrices to
  // re-normalize outcomes.
  json games(json::value_t::object);
  for (const ConfiguredGame& game : effective.games)
    games[game.spec.id] = game_spec_to_json(game.spec);
  json games_doc;
  games_doc["games"] = std::move(games);
  std::ofstream gf(opts.out_dir / "games.json", std::ios::trunc | std::ios::binary);
  gf << games_doc.dump(2) << "\n";
  return manifest;
}

}  // namespace arena
