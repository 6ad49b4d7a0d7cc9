#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <thread>

#include "httplib.h"

#include "arena/orchestrator.hpp"
#include "arena/report.hpp"
#include "helpers.hpp"

using namespace arena;
using testutil::TempDir;
using testutil::data_dir;
using testutil::read_file;

namespace {

json pd_game_json() {
  return {{"id", "pd"},
          {"template", "prisoners_dilemma"},
          {"n_rounds", 10},
          {"objective", "maximize"},
          {"cooperate_index", 0},
          {"strategies", {"Stay silent", "Confess"}},
          {"matrix", {{{6, 6}, {0, 10}}, {{10, 0}, {2, 2}}}},
          {"weights", {"6", "0", "10", "2"}}};
}

json zero_sum_game_json() {
  return {{"id", "zero_sum"},
          {"template", "zero_sum"},
          {"n_rounds", 1},
          {"objective", "maximize"},
          {"cooperate_index", 0},
          {"strategies", {"Option A", "Option B"}},
          {"matrix", {{{2, -2}, {-2, 2}}, {{-2, 2}, {2, -2}}}},
          {"weights", {"2", "-2"}}};
}

json mock_agent(const std::string& name, const std::string& policy) {
  return {{"name", name}, {"backend", {{"kind", "mock"}, {"policy", {{"kind", policy}}}}}};
}

json base_config() {
  return {{"experiment_id", "test"},
          {"master_seed", 7},
          {"repetitions", 1},
          {"language_pack", (data_dir() / "packs" / "default").string()},
          {"languages", {"en"}},
          {"personalities", json::array({json::array({"cooperative", "selfish"})})},
          {"rounds_known", {true}},
          {"opponent_personality_known", {false}},
          {"games", json::array({pd_game_json()})},
          {"agents", json::array({mock_agent("Agent1", "tit_for_tat"),
                                  mock_agent("Agent2", "always_second")})},
          {"providers", json::object()}};
}

std::vector<json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::vector<json> out;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(json::parse(line));
  return out;
}

}  // namespace

TEST_CASE("expand_config covers the full cross-product") {
  json doc = base_config();
  doc["languages"] = {"en", "fr", "ar", "vi", "zh"};
  doc["personalities"] = json::array({json::array({"cooperative", "cooperative"}),
                                      json::array({"cooperative", "selfish"}),
                                      json::array({"selfish", "selfish"})});
  doc["rounds_known"] = {true, false};
  doc["repetitions"] = 10;
  ExperimentConfig cfg = parse_config(doc, ".");
  CHECK(expand_config(cfg).size() == 300);  // 1 * 5 * 3 * 2 * 10
}

TEST_CASE("expansion reproduces the 7200-decision arithmetic") {
  // 18 distinct games: the one-shot over 3 personality pairs x 2 opponent-
  // knowledge settings (6) plus the repeated game over 3 x 2 x 2 rounds-
  // knowledge settings (12). Per model: 18 x 5 languages x 10 repetitions
  // instances, 2 decisions per round; 4 models bring the per-round total
  // to 7200.
  json doc = base_config();
  json zs = zero_sum_game_json();
  doc["languages"] = {"en", "fr", "ar", "vi", "zh"};
  doc["personalities"] = json::array({json::array({"cooperative", "cooperative"}),
                                      json::array({"cooperative", "selfish"}),
                                      json::array({"selfish", "selfish"})});
  doc["rounds_known"] = {true, false};
  doc["opponent_personality_known"] = {false, true};
  doc["games"] = json::array({zs, pd_game_json()});
  doc["repetitions"] = 10;
  ExperimentConfig cfg = parse_config(doc, ".");

  auto instances = expand_config(cfg);
  CHECK(instances.size() == 900);  // 18 games-per-language-per-rep... x 5 x 10

  int games_per_rep_lang = 0;
  for (const auto& inst : instances)
    if (inst.language == "en" && inst.repetition == 1) ++games_per_rep_lang;
  CHECK(games_per_rep_lang == 18);

  int64_t decisions_per_round_one_model = int64_t(instances.size()) * 2;
  CHECK(decisions_per_round_one_model * 4 == 7200);
}

TEST_CASE("empty axes are config errors") {
  json doc = base_config();
  doc["languages"] = json::array();
  CHECK_THROWS_AS(parse_config(doc, "."), ConfigError);

  json doc2 = base_config();
  doc2["games"] = json::array();
  CHECK_THROWS_AS(parse_config(doc2, "."), ConfigError);
}

TEST_CASE("one-shot games ignore the rounds_known axis") {
  json doc = base_config();
  doc["games"] = json::array({zero_sum_game_json()});
  doc["rounds_known"] = {true, false};
  ExperimentConfig cfg = parse_config(doc, ".");
  CHECK(expand_config(cfg).size() == 1);
}

TEST_CASE("unordered personality pairs collapse to one instance") {
  json doc = base_config();
  doc["personalities"] = json::array(
      {json::array({"cooperative", "selfish"}), json::array({"selfish", "cooperative"})});
  CHECK(expand_config(parse_config(doc, ".")).size() == 1);

  doc["personalities_ordered"] = true;
  CHECK(expand_config(parse_config(doc, ".")).size() == 2);
}

TEST_CASE("mock tit-for-tat vs always-defect reproduces the hand trace") {
  TempDir dir;
  ExperimentConfig cfg = parse_config(base_config(), ".");
  RunOptions opts;
  opts.out_dir = dir.path / "results";
  ExperimentManifest manifest = run_experiment(cfg, opts);
  CHECK(manifest.instances == 1);
  CHECK(manifest.complete == 1);
  CHECK(manifest.decisions == 20);

  auto lines = read_jsonl(dir.path / "results" / "results.jsonl");
  REQUIRE(lines.size() == 21);
  const json& run = lines.back();
  REQUIRE(run["type"] == "run");
  CHECK(run["status"] == "complete");
  CHECK(run["totals"][0] == 18.0);
  CHECK(run["totals"][1] == 28.0);
  CHECK(run["rounds"].size() == 10);
  CHECK(run["rounds"][0]["choice_p1"] == 0);
  CHECK(run["rounds"][0]["choice_p2"] == 1);
  CHECK(run["rounds"][5]["choice_p1"] == 1);
  CHECK(run["model"] == "mock:tit_for_tat+mock:always_second");
}

TEST_CASE("mock-backed agents replay the pure scripted tournament") {
  // The gateway route (policy -> label reply -> parse) and the direct
  // scripted route must produce identical transcripts.
  TempDir dir;
  json mock_doc = base_config();
  json scripted_doc = base_config();
  for (auto& agent : scripted_doc["agents"]) agent["backend"]["kind"] = "scripted";
  ExperimentConfig mock_cfg = parse_config(mock_doc, ".");
  ExperimentConfig scripted_cfg = parse_config(scripted_doc, ".");

  RunOptions a;
  a.out_dir = dir.path / "mock";
  RunOptions b;
  b.out_dir = dir.path / "scripted";
  run_experiment(mock_cfg, a);
  run_experiment(scripted_cfg, b);

  auto mock_run = read_jsonl(dir.path / "mock" / "results.jsonl").back();
  auto scripted_run = read_jsonl(dir.path / "scripted" / "results.jsonl").back();
  CHECK(mock_run["rounds"] == scripted_run["rounds"]);
  CHECK(mock_run["totals"] == scripted_run["totals"]);
}

TEST_CASE("report CSVs are rewritten deterministically") {
  TempDir dir;
  ExperimentConfig cfg = parse_config(base_config(), ".");
  RunOptions opts;
  opts.out_dir = dir.path / "results";
  run_experiment(cfg, opts);

  LoadedResults results = load_results({dir.path / "results"});
  auto tensors = build_tensors(results);
  auto reports = compute_all_metrics(tensors);
  for (int i = 0; i < 2; ++i) {
    write_boxplot_csv(dir.path / ("box" + std::to_string(i) + ".csv"), results);
    write_rounds_csv(dir.path / ("rounds" + std::to_string(i) + ".csv"), tensors);
    write_radar_csv(dir.path / ("radar" + std::to_string(i) + ".csv"), reports);
  }
  CHECK(read_file(dir.path / "box0.csv") == read_file(dir.path / "box1.csv"));
  CHECK(read_file(dir.path / "rounds0.csv") == read_file(dir.path / "rounds1.csv"));
  CHECK(read_file(dir.path / "radar0.csv") == read_file(dir.path / "radar1.csv"));
  CHECK_FALSE(read_file(dir.path / "box0.csv").empty());
}

TEST_CASE("identical config and seed give byte-identical results") {
  json doc = base_config();
  doc["languages"] = {"en", "fr"};
  doc["repetitions"] = 2;
  doc["agents"] = json::array({mock_agent("Agent1", "nash_mixed"),
                               mock_agent("Agent2", "nash_mixed")});
  doc["games"] = json::array({zero_sum_game_json(), pd_game_json()});
  ExperimentConfig cfg = parse_config(doc, ".");

  TempDir dir;
  RunOptions a;
  a.out_dir = dir.path / "a";
  RunOptions b;
  b.out_dir = dir.path / "b";
  b.parallelism = 4;  // parallel execution must not change the merged bytes
  run_experiment(cfg, a);
  run_experiment(cfg, b);
  std::string ra = read_file(dir.path / "a" / "results.jsonl");
  CHECK_FALSE(ra.empty());
  CHECK(ra == read_file(dir.path / "b" / "results.jsonl"));
}

TEST_CASE("instance seeds are independent of the surrounding experiment") {
  json small = base_config();
  json big = base_config();
  big["languages"] = {"fr", "en"};
  big["repetitions"] = 3;
  ExperimentConfig cfg_small = parse_config(small, ".");
  ExperimentConfig cfg_big = parse_config(big, ".");
  auto inst_small = expand_config(cfg_small);
  auto inst_big = expand_config(cfg_big);
  for (const GameInstance& a : inst_small) {
    bool found = false;
    for (const GameInstance& b : inst_big)
      if (b.instance_id == a.instance_id) {
        CHECK(b.derived_seed == a.derived_seed);
        found = true;
      }
    CHECK(found);
  }
}

TEST_CASE("prompts are a pure function of the prior transcript") {
  // Re-render every logged prompt from the stored transcript prefix; equality
  // proves no same-round information leaked into either agent's prompt.
  TempDir dir;
  json doc = base_config();
  doc["agents"] = json::array({mock_agent("Agent1", "random_mixed"), mock_agent("Agent2", "random_mixed")});
  doc["agents"][0]["backend"]["policy"]["p"] = 0.5;
  doc["agents"][0]["backend"]["policy"]["seed"] = 11;
  doc["agents"][1]["backend"]["policy"]["p"] = 0.5;
  doc["agents"][1]["backend"]["policy"]["seed"] = 12;
  doc["rounds_known"] = {false};
  ExperimentConfig cfg = parse_config(doc, ".");
  RunOptions opts;
  opts.out_dir = dir.path / "results";
  run_experiment(cfg, opts);

  auto lines = read_jsonl(dir.path / "results" / "results.jsonl");
  const json& run = lines.back();
  LanguagePack pack = load_language_pack(cfg.language_pack);
  Gateway gateway;
  RunEnvironment env;
  env.config = &cfg;
  env.pack = &pack;
  env.gateway = &gateway;
  env.agents = resolve_agents(cfg, gateway, false);

  GameInstance inst;
  inst.game = &cfg.games[0];
  inst.language = run["language"];
  inst.personalities = {run["personalities"][0], run["personalities"][1]};
  inst.rounds_known = run["rounds_known"];
  inst.opponent_known = run["opponent_known"];

  const PromptTemplate& tmpl = pack.at("prisoners_dilemma").at(inst.language);
  int checked = 0;
  for (const json& line : lines) {
    if (line["type"] != "decision") continue;
    int round = line["round"];
    int agent = line["agent"];
    Transcript prefix;
    prefix.game = &cfg.games[0].spec;
    for (const json& r : run["rounds"]) {
      if (r["round"].get<int>() >= round) break;
      prefix = apply_round(prefix, r["choice_p1"].get<int>(), r["choice_p2"].get<int>());
    }
    std::string expected = render(
        tmpl, build_placeholders(inst, tmpl, env, prefix, agent - 1, round), build_flags(inst, agent - 1));
    CHECK(line["prompt"].get<std::string>() == expected);
    ++checked;
  }
  CHECK(checked == 20);
}

TEST_CASE("unreachable providers are recorded, retried, and counted") {
  TempDir dir;
  json doc = base_config();
  doc["games"] = json::array({zero_sum_game_json()});
  doc["agents"] = json::array(
      {json{{"name", "Agent1"}, {"backend", {{"kind", "provider"}, {"provider", "dead"}}}},
       json{{"name", "Agent2"}, {"backend", {{"kind", "provider"}, {"provider", "dead"}}}}});
  doc["providers"] = {{"dead",
                       {{"endpoint_url", "http://127.0.0.1:1/v1/chat/completions"},
                        {"model_id", "dead-model"},
                        {"max_retries", 0},
                        {"timeout_ms", 300}}}};
  ExperimentConfig cfg = parse_config(doc, ".");
  RunOptions opts;
  opts.out_dir = dir.path / "results";
  ExperimentManifest manifest = run_experiment(cfg, opts);
  CHECK(manifest.provider_error == 1);
  CHECK(manifest.complete == 0);

  auto lines = read_jsonl(dir.path / "results" / "results.jsonl");
  const json& run = lines.back();
  CHECK(run["status"] == "provider_error");
  CHECK(run["rounds"].empty());
}

TEST_CASE("--mock style runs never touch the network") {
  TempDir dir;
  json doc = base_config();
  doc["agents"] = json::array(
      {json{{"name", "Agent1"},
            {"backend",
             {{"kind", "provider"}, {"provider", "dead"}, {"mock_policy", {{"kind", "tit_for_tat"}}}}}},
       json{{"name", "Agent2"}, {"backend", {{"kind", "provider"}, {"provider", "dead"}}}}});
  doc["providers"] = {{"dead",
                       {{"endpoint_url", "http://127.0.0.1:1/v1/chat/completions"},
                        {"model_id", "dead-model"},
                        {"api_key_env", "ARENA_NO_SUCH_KEY"}}}};
  ExperimentConfig cfg = parse_config(doc, ".");

  uint64_t before = network_attempts().load();
  RunOptions opts;
  opts.out_dir = dir.path / "results";
  opts.mock_mode = true;
  ExperimentManifest manifest = run_experiment(cfg, opts);
  CHECK(manifest.complete == manifest.instances);
  CHECK(network_attempts().load() == before);

  auto lines = read_jsonl(dir.path / "results" / "results.jsonl");
  CHECK(lines.back()["model"] == "mock:tit_for_tat+mock:nash_mixed");
}

TEST_CASE("decision counts equal twice the completed rounds") {
  TempDir dir;
  json doc = base_config();
  doc["games"] = json::array({zero_sum_game_json(), pd_game_json()});
  doc["repetitions"] = 2;
  ExperimentConfig cfg = parse_config(doc, ".");
  RunOptions opts;
  opts.out_dir = dir.path / "results";
  ExperimentManifest manifest = run_experiment(cfg, opts);
  CHECK(manifest.complete == manifest.instances);

  auto lines = read_jsonl(dir.path / "results" / "results.jsonl");
  int64_t decisions = 0;
  int64_t rounds = 0;
  for (const json& line : lines) {
    if (line["type"] == "decision") ++decisions;
    if (line["type"] == "run") rounds += line["rounds"].size();
  }
  CHECK(decisions == 2 * rounds);
  CHECK(manifest.decisions == decisions);
}

TEST_CASE("all-garbage replies record an invalid decision, not a default") {
  TempDir dir;
  json doc = base_config();
  doc["games"] = json::array({zero_sum_game_json()});
  doc["agents"] = json::array(
      {json{{"name", "Agent1"},
            {"backend", {{"kind", "mock"}, {"replies", {"blah", "blah", "blah", "blah"}}}}},
       mock_agent("Agent2", "always_first")});
  ExperimentConfig cfg = parse_config(doc, ".");
  RunOptions opts;
  opts.out_dir = dir.path / "results";
  ExperimentManifest manifest = run_experiment(cfg, opts);
  CHECK(manifest.invalid_decision == 1);
  CHECK(manifest.complete == 0);

  auto lines = read_jsonl(dir.path / "results" / "results.jsonl");
  const json& run = lines.back();
  CHECK(run["status"] == "invalid_decision");
  CHECK(run["rounds"].empty());
  bool saw_failed_decision = false;
  for (const json& line : lines)
    if (line["type"] == "decision" && line["status"] == "failed") {
      saw_failed_decision = true;
      CHECK(line["chosen_index"].is_null());
      CHECK(line["chosen_label"].is_null());
    }
  CHECK(saw_failed_decision);
}

TEST_CASE("per-game axis overrides replace the global axes") {
  json doc = base_config();
  doc["rounds_known"] = {true, false};
  doc["opponent_personality_known"] = {false, true};
  doc["games"][0]["rounds_known"] = {true};
  doc["games"][0]["opponent_personality_known"] = {false};
  ExperimentConfig cfg = parse_config(doc, ".");
  auto instances = expand_config(cfg);
  CHECK(instances.size() == 1);
  CHECK(instances[0].rounds_known == true);
  CHECK(instances[0].opponent_known == false);
}

TEST_CASE("request log never contains the API key value") {
  ::setenv("ARENA_REDACTION_KEY", "super-secret-value-42", 1);

  httplib::Server server;
  server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"choices":[{"message":{"content":"Option A"}}]})", "application/json");
  });
  int port = server.bind_to_any_port("127.0.0.1");
  std::thread server_thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  TempDir dir;
  json doc = base_config();
  doc["games"] = json::array({zero_sum_game_json()});
  doc["agents"] = json::array(
      {json{{"name", "Agent1"}, {"backend", {{"kind", "provider"}, {"provider", "local"}}}},
       json{{"name", "Agent2"}, {"backend", {{"kind", "provider"}, {"provider", "local"}}}}});
  doc["providers"] = {
      {"local",
       {{"endpoint_url", "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions"},
        {"model_id", "local-model"},
        {"api_key_env", "ARENA_REDACTION_KEY"}}}};
  ExperimentConfig cfg = parse_config(doc, ".");
  RunOptions opts;
  opts.out_dir = dir.path / "results";
  ExperimentManifest manifest = run_experiment(cfg, opts);
  CHECK(manifest.complete == 1);

  std::string log = read_file(dir.path / "results" / "requests.jsonl");
  CHECK_FALSE(log.empty());
  CHECK(log.find("super-secret-value-42") == std::string::npos);
  CHECK(read_file(dir.path / "results" / "results.jsonl").find("super-secret-value-42") ==
        std::string::npos);

  server.stop();
  server_thread.join();
}

TEST_CASE("a results directory from a different config is refused") {
  TempDir dir;
  ExperimentConfig cfg = parse_config(base_config(), ".");
  RunOptions opts;
  opts.out_dir = dir.path / "results";
  run_experiment(cfg, opts);

  json doc = base_config();
  doc["master_seed"] = 8;  // different config hash
  ExperimentConfig other = parse_config(doc, ".");
  CHECK_THROWS_WITH(run_experiment(other, opts),
                    Catch::Matchers::ContainsSubstring("stale results directory"));

  // Same config may overwrite its own directory.
  CHECK_NOTHROW(run_experiment(cfg, opts));
}

TEST_CASE("run_experiment writes games.json alongside the results") {
  TempDir dir;
  ExperimentConfig cfg = parse_config(base_config(), ".");
  RunOptions opts;
  opts.out_dir = dir.path / "results";
  run_experiment(cfg, opts);
  json games = json::parse(read_file(dir.path / "results" / "games.json"));
  CHECK(games["games"].contains("pd"));
  GameSpec spec = game_spec_from_json("pd", games["games"]["pd"]);
  CHECK(spec.n_rounds == 10);
  CHECK(spec.matrix.at(0, 1).p2 == 10.0);
}
