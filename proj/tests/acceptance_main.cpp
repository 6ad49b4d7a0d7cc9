// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Run via `ctest` or directly; criteria that drive the CLI need the
// arena binary, whose path is compiled in.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "arena/config.hpp"
#include "arena/equilibrium.hpp"
#include "arena/metrics.hpp"
#include "arena/orchestrator.hpp"
#include "arena/prompting.hpp"
#include "arena/report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CheckFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(bool ok, const std::string& what) {
  if (!ok) throw CheckFailure(what);
}

void check_near(double actual, double expected, double tol, const std::string& what) {
  if (!(std::abs(actual - expected) <= tol))
    throw CheckFailure(what + ": got " + std::to_string(actual) + ", want " +
                       std::to_string(expected) + " +/- " + std::to_string(tol));
}

fs::path data_dir() { return ARENA_DATA_DIR; }
fs::path cli_path() { return ARENA_CLI_PATH; }

fs::path scratch_root() {
  static fs::path root = [] {
    fs::path p = fs::temp_directory_path() /
                 ("arena-acceptance-" + std::to_string(std::random_device{}()));
    fs::create_directories(p);
    return p;
  }();
  return root;
}

int run_cli(const std::string& args, const fs::path& stdout_file) {
  std::string cmd = "\"" + cli_path().string() + "\" " + args + " > \"" + stdout_file.string() +
                    "\" 2> \"" + stdout_file.string() + ".err\"";
  int status = std::system(cmd.c_str());
  if (status == -1) throw CheckFailure("failed to launch CLI");
  return WEXITSTATUS(status);
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string first_line(const std::string& s) {
  return s.substr(0, s.find('\n'));
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// --------------------------------------------------------------------------
// 1. Equilibrium correctness through the solve command.
// --------------------------------------------------------------------------
void criterion_solve() {
  auto start = Clock::now();
  fs::path config = data_dir() / "experiments" / "paper_games.json";
  fs::path out = scratch_root() / "solve_zs.json";

  check(run_cli("solve \"" + config.string() + "\" zero_sum --json", out) == 0,
        "solve zero_sum exited nonzero");
  json zs = json::parse(read_file(out));
  check(!zs["mixed_equilibrium"].is_null(), "zero_sum mixed equilibrium missing");
  check_near(zs["mixed_equilibrium"]["p1_prob_strategy0"].get<double>(), 0.5, 1e-9, "p1 mix");
  check_near(zs["mixed_equilibrium"]["p2_prob_strategy0"].get<double>(), 0.5, 1e-9, "p2 mix");
  check(!zs["zero_sum_value"].is_null(), "zero_sum value missing");
  check_near(zs["zero_sum_value"].get<double>(), 0.0, 1e-9, "zero_sum value");

  fs::path out_pd = scratch_root() / "solve_pd.json";
  check(run_cli("solve \"" + config.string() + "\" pd --json", out_pd) == 0,
        "solve pd exited nonzero");
  json pd = json::parse(read_file(out_pd));
  check(pd["dominant_p1"] == "Confess" && pd["dominant_p2"] == "Confess",
        "pd dominant profile is not mutual defection");
  check(pd["pure_equilibria"].size() == 1 && pd["pure_equilibria"][0]["p1_index"] == 1 &&
            pd["pure_equilibria"][0]["p2_index"] == 1,
        "pd pure equilibrium is not (defect, defect)");
  check(pd["pd_ordering_ok"] == true, "pd ordering flag");

  check(seconds_since(start) < 1.0, "solve took >= 1 s");
}

// --------------------------------------------------------------------------
// 2. Oracle equivalence on 1000 random games under both senses.
// --------------------------------------------------------------------------
double acc_gain(const arena::GameSpec& g, int player, int r, int c) {
  double v = player == 0 ? g.matrix.at(r, c).p1 : g.matrix.at(r, c).p2;
  return g.objective == arena::Objective::minimize ? -v : v;
}

void criterion_oracle_equivalence() {
  auto start = Clock::now();
  std::mt19937_64 rng(600673);
  std::uniform_int_distribution<int> ints(-4, 4);
  int failures = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    arena::GameSpec g;
    g.id = "r";
    g.strategies = {arena::StrategyId{0, "first"}, arena::StrategyId{1, "second"}};
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c)
        g.matrix.at(r, c) = {double(ints(rng)), double(ints(rng))};

    for (arena::Objective sense : {arena::Objective::maximize, arena::Objective::minimize}) {
      g.objective = sense;
      // Deviation scan, written independently of the library's
      // best-response-set implementation.
      std::vector<std::pair<int, int>> expected;
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) {
          bool dev1 = acc_gain(g, 0, 1 - r, c) > acc_gain(g, 0, r, c) + 1e-9;
          bool dev2 = acc_gain(g, 1, r, 1 - c) > acc_gain(g, 1, r, c) + 1e-9;
          if (!dev1 && !dev2) expected.emplace_back(r, c);
        }
      if (arena::pure_nash(g) != expected) ++failures;

      std::optional<int> d1, d2;
      for (int s = 0; s < 2; ++s) {
        if (acc_gain(g, 0, s, 0) > acc_gain(g, 0, 1 - s, 0) + 1e-9 &&
            acc_gain(g, 0, s, 1) > acc_gain(g, 0, 1 - s, 1) + 1e-9)
          d1 = s;
        if (acc_gain(g, 1, 0, s) > acc_gain(g, 1, 0, 1 - s) + 1e-9 &&
            acc_gain(g, 1, 1, s) > acc_gain(g, 1, 1, 1 - s) + 1e-9)
          d2 = s;
      }
      auto dominant = arena::dominant_strategies(g);
      if (dominant.first != d1 || dominant.second != d2) ++failures;
    }
  }
  check(failures == 0, std::to_string(failures) + " oracle disagreements");
  check(seconds_since(start) < 5.0, "oracle sweep took >= 5 s");
}

// --------------------------------------------------------------------------
// 3. Scripted-tournament oracle through the whole pipeline.
// --------------------------------------------------------------------------
void criterion_tournament_oracle() {
  fs::path config = data_dir() / "experiments" / "oracle_tft_vs_alld.json";
  fs::path out_dir = scratch_root() / "tft_vs_alld";
  fs::path log = scratch_root() / "tft_run.log";
  int code = run_cli("run \"" + config.string() + "\" --out \"" + out_dir.string() + "\" --mock", log);
  check(code == 0, "run exited with code " + std::to_string(code));

  std::ifstream in(out_dir / "results.jsonl");
  check(in.good(), "results.jsonl missing");
  std::string line;
  std::optional<json> run_line;
  int decisions = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    if (j["type"] == "run") run_line = j;
    if (j["type"] == "decision") ++decisions;
  }
  check(run_line.has_value(), "no run record");
  check((*run_line)["status"] == "complete", "run not complete");
  check(decisions == 20, "expected 20 decisions, got " + std::to_string(decisions));
  double t1 = (*run_line)["totals"][0].get<double>();
  double t2 = (*run_line)["totals"][1].get<double>();
  check(t1 == 18.0 && t2 == 28.0,
        "totals (" + std::to_string(t1) + ", " + std::to_string(t2) + ") != (18, 28)");
}

// --------------------------------------------------------------------------
// 4. Metric oracles on synthetic tensors.
// --------------------------------------------------------------------------
arena::ResultTensor acc_tensor(int A, int B, int C, int D, int R,
                               const std::function<double(int, int, int, int, int)>& value) {
  arena::ResultTensor t;
  t.model_id = "m";
  t.game_id = "g";
  for (int a = 0; a < A; ++a) t.languages.push_back("L" + std::to_string(a));
  for (int b = 0; b < B; ++b) t.personality_combos.push_back("P" + std::to_string(b));
  for (int c = 0; c < C; ++c) t.flag_combos.push_back("F" + std::to_string(c));
  t.n_rounds = D;
  t.n_reps = R;
  t.default_channel = arena::OutcomeChannel::agent1;
  t.allocate();
  for (int a = 0; a < A; ++a)
    for (int b = 0; b < B; ++b)
      for (int c = 0; c < C; ++c)
        for (int d = 0; d < D; ++d)
          for (int r = 0; r < R; ++r) {
            double v = value(a, b, c, d, r);
            t.set(a, b, c, d, r, {v, v});
          }
  return t;
}

double acc_var(const std::vector<double>& xs) {
  double s = 0, s2 = 0;
  for (double x : xs) {
    s += x;
    s2 += x * x;
  }
  double n = double(xs.size());
  return s2 / n - (s / n) * (s / n);
}

void criterion_metric_oracles() {
  std::mt19937_64 rng(8181);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const std::vector<std::array<int, 5>> shapes = {
      {2, 1, 1, 2, 2}, {2, 2, 1, 2, 1}, {3, 1, 1, 2, 1}, {2, 2, 2, 2, 1}, {2, 1, 2, 2, 2},
      {3, 2, 1, 2, 1}, {2, 2, 1, 4, 1}, {2, 1, 1, 8, 2}, {4, 2, 1, 2, 2}, {2, 2, 2, 2, 2},
  };
  int tensors_checked = 0;
  for (int trial = 0; trial < 24; ++trial) {
    auto [A, B, C, D, R] = shapes[trial % shapes.size()];
    if (A * B * C * D * R > 32) continue;
    auto t = acc_tensor(A, B, C, D, R,
                        [&](int, int, int, int, int) { return unit(rng); });

    std::vector<double> all;
    for (const auto& cell : t.cells) all.push_back(cell->agent1);
    check_near(arena::internal_variability_raw(t), acc_var(all), 1e-12, "IV oracle");

    std::vector<double> ci_vars;
    for (int b = 0; b < B; ++b)
      for (int c = 0; c < C; ++c) {
        std::vector<double> means;
        for (int a = 0; a < A; ++a) {
          double dsum = 0;
          for (int d = 0; d < D; ++d) {
            double rsum = 0;
            for (int r = 0; r < R; ++r)
              rsum += *t.value(a, b, c, d, r, arena::OutcomeChannel::agent1);
            dsum += rsum / R;
          }
          means.push_back(dsum / D);
        }
        ci_vars.push_back(acc_var(means));
      }
    double ci_expected = 0;
    for (double v : ci_vars) ci_expected += v;
    ci_expected /= double(ci_vars.size());
    check_near(arena::cross_language_inconsistency_raw(t), ci_expected, 1e-12, "CI oracle");

    std::vector<double> vr_vars;
    for (int a = 0; a < A; ++a)
      for (int b = 0; b < B; ++b)
        for (int c = 0; c < C; ++c) {
          std::vector<double> series;
          for (int d = 0; d < D; ++d) {
            double rsum = 0;
            for (int r = 0; r < R; ++r)
              rsum += *t.value(a, b, c, d, r, arena::OutcomeChannel::agent1);
            series.push_back(rsum / R);
          }
          vr_vars.push_back(acc_var(series));
        }
    double vr_expected = 0;
    for (double v : vr_vars) vr_expected += v;
    vr_expected /= double(vr_vars.size());
    check_near(arena::variability_over_rounds_raw(t), vr_expected, 1e-12, "VR oracle");

    ++tensors_checked;
  }
  check(tensors_checked >= 20, "only " + std::to_string(tensors_checked) + " tensors checked");

  auto constant = acc_tensor(2, 2, 1, 4, 2, [](int, int, int, int, int) { return 0.4; });
  check(arena::internal_variability_raw(constant) == 0.0, "constant tensor IV != 0");
  check(arena::cross_language_inconsistency_raw(constant) == 0.0, "constant tensor CI != 0");
  check(arena::variability_over_rounds_raw(constant) == 0.0, "constant tensor VR != 0");

  // The published scoring pattern: the most variable model normalizes to 1,
  // lower values indicate more stable behaviour.
  auto normalized = arena::normalize_across_models(
      {{"m-a", 0.31}, {"m-b", 0.62}, {"m-c", 0.155}});
  check(normalized["m-b"] == 1.0, "max model did not normalize to 1");
  check_near(normalized["m-a"], 0.5, 1e-12, "mid model");
  check_near(normalized["m-c"], 0.25, 1e-12, "low model");
}

// --------------------------------------------------------------------------
// 5. Decision-count reproduction.
// --------------------------------------------------------------------------
void criterion_count_reproduction() {
  arena::ExperimentConfig cfg =
      arena::load_config(data_dir() / "experiments" / "paper_games.json");
  auto instances = arena::expand_config(cfg);

  int per_language_per_rep = 0;
  for (const auto& inst : instances)
    if (inst.language == "en" && inst.repetition == 1) ++per_language_per_rep;
  check(per_language_per_rep == 18,
        "expected 18 distinct games, got " + std::to_string(per_language_per_rep));

  // 18 games x 5 languages x 10 repetitions x 2 decisions per round x 4 models.
  int64_t per_model = int64_t(instances.size()) * 2;
  check(per_model == 1800, "per-model per-round decisions != 1800");
  check(per_model * 4 == 7200, "paper arithmetic does not give 7200");
}

// --------------------------------------------------------------------------
// 6. Template fidelity.
// --------------------------------------------------------------------------
void criterion_template_fidelity() {
  arena::LanguagePack pack = arena::load_language_pack(data_dir() / "packs" / "default");
  check(pack.at("zero_sum").size() == 5 && pack.at("prisoners_dilemma").size() == 5,
        "expected 5 languages per game kind");

  const arena::PromptTemplate& zs = pack.at("zero_sum").at("en");
  arena::PlaceholderMap values{{"currentPlayerName", "Agent1"}, {"opponent1", "Agent2"},
                               {"personality", "cooperative"},  {"strategy1", "Option A"},
                               {"strategy2", "Option B"},       {"weight1", "2"},
                               {"weight2", "-2"}};
  std::string prompt = arena::render(zs, values, {"intro"});
  check(prompt.find("There is only one round to decide.") != std::string::npos,
        "zero-sum prompt lacks the single-round sentence");
  check(prompt.find("Output ONLY the choice.") != std::string::npos,
        "zero-sum prompt lacks the output sentence");

  const arena::PromptTemplate& pd = pack.at("prisoners_dilemma").at("en");
  arena::PlaceholderMap pd_values{
      {"currentPlayerName", "Agent1"}, {"opponent1", "Agent2"}, {"personality", "selfish"},
      {"strategy1", pd.strategy_labels[0]}, {"strategy2", pd.strategy_labels[1]},
      {"weight1", "6"}, {"weight2", "0"}, {"weight3", "10"}, {"weight4", "2"},
      {"nRounds", "10"}, {"currentRound", "1"}, {"history", "none"}};
  std::string with_len = arena::render(pd, pd_values, {"intro", "gameLength"});
  std::string without_len = arena::render(pd, pd_values, {"intro"});
  check(with_len.find("Output ONLY the choice.") != std::string::npos,
        "pd prompt lacks the output sentence");
  const std::string sentence = "There are 10 rounds to decide.\n";
  size_t pos = with_len.find(sentence);
  check(pos != std::string::npos, "gameLength sentence missing when enabled");
  check(without_len.find("There are 10 rounds") == std::string::npos,
        "gameLength sentence present when disabled");
  std::string stripped = with_len;
  stripped.erase(pos, sentence.size());
  check(stripped == without_len, "conditional toggle is not byte-exact");

  // Every shipped template renders cleanly.
  for (const auto& [kind, set] : pack) {
    for (const auto& [tag, tmpl] : set) {
      arena::PlaceholderMap v = pd_values;
      v["strategy1"] = tmpl.strategy_labels[0];
      v["strategy2"] = tmpl.strategy_labels[1];
      v["opponentPersonality"] = "selfish";
      std::string rendered =
          arena::render(tmpl, v, {"intro", "gameLength", "opponentPersonalityKnown"});
      check(!rendered.empty() && rendered.find('{') == std::string::npos,
            kind + "/" + tag + " failed to render");
    }
  }
}

// --------------------------------------------------------------------------
// 7. Determinism of mock runs through the CLI.
// --------------------------------------------------------------------------
void criterion_determinism() {
  fs::path config = data_dir() / "experiments" / "fixture.json";
  fs::path a = scratch_root() / "det_a";
  fs::path b = scratch_root() / "det_b";
  fs::path log = scratch_root() / "det.log";
  check(run_cli("run \"" + config.string() + "\" --out \"" + a.string() + "\" --mock --seed 5", log) == 0,
        "first run failed");
  check(run_cli("run \"" + config.string() + "\" --out \"" + b.string() + "\" --mock --seed 5 --parallelism 4",
                log) == 0,
        "second run failed");
  std::string ra = read_file(a / "results.jsonl");
  std::string rb = read_file(b / "results.jsonl");
  check(!ra.empty(), "results.jsonl empty");
  check(ra == rb, "results.jsonl differ between identical runs");
}

// --------------------------------------------------------------------------
// 8. Fixture experiment through run/analyze/report.
// --------------------------------------------------------------------------
void criterion_fixture_pipeline() {
  auto start = Clock::now();
  fs::path noisy_cfg = data_dir() / "experiments" / "fixture.json";
  fs::path stable_cfg = data_dir() / "experiments" / "fixture_stable.json";
  fs::path noisy = scratch_root() / "fixture_noisy";
  fs::path stable = scratch_root() / "fixture_stable";
  fs::path report_dir = scratch_root() / "fixture_report";
  fs::path log = scratch_root() / "fixture.log";

  check(run_cli("run \"" + noisy_cfg.string() + "\" --out \"" + noisy.string() + "\" --mock", log) == 0,
        "noisy fixture run failed");
  check(run_cli("run \"" + stable_cfg.string() + "\" --out \"" + stable.string() + "\" --mock", log) == 0,
        "stable fixture run failed");
  check(run_cli("analyze \"" + noisy.string() + "\" \"" + stable.string() + "\"", log) == 0,
        "analyze failed");
  check(run_cli("report \"" + noisy.string() + "\" \"" + stable.string() + "\" --out \"" +
                    report_dir.string() + "\"",
                log) == 0,
        "report failed");

  json metrics = json::parse(read_file(noisy / "metrics.json"));
  check(metrics["variance"] == "population", "metrics.json lacks the variance flavor");
  check(metrics["games"].contains("pd") && metrics["games"].contains("zero_sum"),
        "metrics.json lacks per-game sections");
  const json& zs_models = metrics["games"]["zero_sum"]["models"];
  for (const auto& [model, m] : zs_models.items()) {
    check(m["vr"].is_null(), "zero-sum VR should be null for " + model);
    check(m.contains("vr_note") && m["vr_note"].get<std::string>().find("not applicable") !=
                                       std::string::npos,
          "zero-sum VR not flagged as not applicable");
  }
  check(metrics["games"]["pd"]["models"].size() == 2, "expected two models in pd metrics");

  check(first_line(read_file(report_dir / "boxplot.csv")) ==
            "game,model,language,personalities,rounds_known,opponent_known,repetition,agent,"
            "total_payoff,mean_round_normalized",
        "boxplot.csv header mismatch");
  check(first_line(read_file(report_dir / "rounds.csv")) ==
            "game,model,channel,round,mean,lo,hi,n",
        "rounds.csv header mismatch");
  check(first_line(read_file(report_dir / "radar.csv")) ==
            "game,model,metric,raw,normalized,note",
        "radar.csv header mismatch");

  // Substance checks: rows exist, the pd round series covers 10 rounds per
  // model, and radar carries normalized values with max 1.
  std::string rounds_csv = read_file(report_dir / "rounds.csv");
  int pd_rows = 0;
  {
    std::istringstream ss(rounds_csv);
    std::string line;
    while (std::getline(ss, line))
      if (line.rfind("pd,", 0) == 0) ++pd_rows;
  }
  check(pd_rows == 20, "expected 2 models x 10 pd rounds in rounds.csv, got " +
                           std::to_string(pd_rows));

  double max_iv = 0;
  for (const auto& [model, m] : metrics["games"]["pd"]["models"].items())
    if (!m["iv"].is_null()) max_iv = std::max(max_iv, m["iv"].get<double>());
  check(max_iv == 1.0, "no pd model attained normalized IV = 1");

  check(seconds_since(start) < 60.0, "fixture pipeline took >= 60 s");
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<void()> fn;
  };
  const std::vector<Criterion> criteria = {
      {1, "equilibrium correctness (solve: Table-2 mix 0.5/0.5 value 0; Table-3 dominant defect)",
       criterion_solve},
      {2, "oracle equivalence (1000 random games, both senses)", criterion_oracle_equivalence},
      {3, "scripted-tournament oracle (tit-for-tat vs always-defect = 18/28)",
       criterion_tournament_oracle},
      {4, "metric oracles (IV/CI/VR vs brute force, constants, normalization)",
       criterion_metric_oracles},
      {5, "count reproduction (18 games x 10 reps x 2 decisions x 4 models x 5 languages = 7200)",
       criterion_count_reproduction},
      {6, "template fidelity (literal sentences, byte-exact toggles, 5 language packs)",
       criterion_template_fidelity},
      {7, "determinism (two mock runs, byte-identical results.jsonl)", criterion_determinism},
      {8, "fixture pipeline (run + analyze + report CSVs under 60 s)", criterion_fixture_pipeline},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    try {
      c.fn();
      std::cout << "[PASS] criterion " << c.id << ": " << c.name << "\n";
    } catch (const std::exception& e) {
      ++failures;
      std::cout << "[FAIL] criterion " << c.id << ": " << c.name << " -- " << e.what() << "\n";
    }
  }
  std::error_code ec;
  fs::remove_all(scratch_root(), ec);
  if (failures != 0) std::cout << failures << " criterion(s) failed\n";
  return failures == 0 ? 0 : 1;
}
