// arena: play 2x2 matrix games between scripted, mock, and LLM-backed agents;
// solve them analytically; and score result sets for behavioral stability.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "arena/config.hpp"
#include "arena/equilibrium.hpp"
#include "arena/orchestrator.hpp"
#include "arena/prompting.hpp"
#include "arena/report.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitPartial = 3;

int cmd_validate(const std::string& config_path, const std::string& pack_override) {
  using namespace arena;
  int failures = 0;
  auto print = [&](const std::string& check, bool ok, const std::string& detail) {
    std::cout << (ok ? "  ok   " : "  FAIL ") << check;
    if (!detail.empty()) std::cout << ": " << detail;
    std::cout << "\n";
    if (!ok) ++failures;
  };

  json doc;
  try {
    doc = read_config_json(config_path);
  } catch (const Error& e) {
    std::cout << "  FAIL parse: " << e.what() << "\n";
    std::cout << "1 finding(s)\n";
    return kExitValidation;
  }
  for (const ValidationFinding& f : check_config(doc))
    if (!f.ok) print(f.check, false, f.detail);

  ExperimentConfig cfg;
  bool parsed = false;
  try {
    cfg = parse_config(doc, fs::path(config_path).parent_path());
    parsed = true;
    print("config", true, "");
  } catch (const Error& e) {
    print("config", false, e.what());
  }

  if (parsed) {
    for (const ConfiguredGame& game : cfg.games) {
      ValidationReport report = validate_game(game.spec);
      for (const ValidationFinding& f : report.findings)
        print("game " + game.spec.id + "/" + f.check, f.ok, f.ok ? "" : f.detail);
      if (report.zero_sum.has_value())
        std::cout << "  info game " << game.spec.id << ": zero_sum="
                  << (*report.zero_sum ? "true" : "false") << " objective=" << report.objective
                  << " pd_ordering="
                  << (is_prisoners_dilemma(game.spec, game.spec.strategy(game.spec.cooperate_index))
                          ? "true"
                          : "false")
                  << "\n";
    }

    fs::path pack_path = pack_override.empty() ? cfg.language_pack : fs::path(pack_override);
    if (pack_path.empty()) {
      print("language_pack", false, "config declares no language_pack and no --pack given");
    } else {
      try {
        LanguagePack pack = load_language_pack(pack_path);
        print("language_pack", true, "");
        for (const auto& [kind, set] : pack)
          std::cout << "  info pack kind '" << kind << "': " << set.size() << " language(s)\n";
        // Surface missing (game, language) templates and placeholder gaps now,
        // not at run time.
        try {
          ExperimentConfig probe_cfg = cfg;
          probe_cfg.language_pack = pack_path;
          probe_cfg.repetitions = 1;
          std::vector<GameInstance> instances = expand_config(probe_cfg);
          Gateway gateway;
          RunEnvironment env;
          env.config = &probe_cfg;
          env.pack = &pack;
          env.gateway = &gateway;
          env.agents = resolve_agents(probe_cfg, gateway, /*mock_mode=*/true);
          for (const ConfiguredGame& game : probe_cfg.games) {
            if (!pack.count(game.template_kind))
              throw ConfigError("language pack has no game kind '" + game.template_kind + "'");
            for (const std::string& lang : probe_cfg.languages)
              if (!pack.at(game.template_kind).count(lang))
                throw ConfigError("language pack misses language '" + lang + "' for game kind '" +
                                  game.template_kind + "'");
          }
          orch_detail::probe_render(instances, env);
          print("templates", true, "");
        } catch (const Error& e) {
          print("templates", false, e.what());
        }
      } catch (const Error& e) {
        print("language_pack", false, e.what());
      }
    }
  }

  std::cout << failures << " finding(s)\n";
  return failures == 0 ? kExitOk : kExitValidation;
}

std::string profile_label(const arena::GameSpec& spec, int index) {
  return spec.strategy(index).label;
}

int cmd_solve(const std::string& config_path, const std::string& game_id, bool as_json) {
  using namespace arena;
  ExperimentConfig cfg = load_config(config_path);
  const ConfiguredGame* game = cfg.find_game(game_id);
  if (game == nullptr) {
    std::cerr << "error: unknown game id: " << game_id << "\n";
    return kExitValidation;
  }
  const GameSpec& spec = game->spec;
  EquilibriumReport report = analyze_game(spec);
  ValidationReport validation = validate_game(spec);

  if (as_json) {
    ordered_json j;
    j["game"] = spec.id;
    j["objective"] = to_string(spec.objective);
    j["zero_sum"] = validation.zero_sum.value_or(false);
    ordered_json pure = ordered_json::array();
    for (auto [r, c] : report.pure_equilibria)
      pure.push_back({{"p1", profile_label(spec, r)}, {"p2", profile_label(spec, c)},
                      {"p1_index", r}, {"p2_index", c}});
    j["pure_equilibria"] = std::move(pure);
    if (report.mixed_equilibrium) {
      j["mixed_equilibrium"] = {{"p1_prob_strategy0", report.mixed_equilibrium->p1_prob_strategy0},
                                {"p2_prob_strategy0", report.mixed_equilibrium->p2_prob_strategy0}};
    } else {
      j["mixed_equilibrium"] = nullptr;
      j["mixed_note"] = report.mixed_note;
    }
    j["dominant_p1"] =
        report.dominant_p1 ? ordered_json(profile_label(spec, *report.dominant_p1)) : nullptr;
    j["dominant_p2"] =
        report.dominant_p2 ? ordered_json(profile_label(spec, *report.dominant_p2)) : nullptr;
    j["zero_sum_value"] = report.zero_sum_value ? ordered_json(*report.zero_sum_value) : nullptr;
    j["pd_ordering_ok"] = report.pd_ordering_ok;
    std::cout << j.dump(2) << "\n";
    return kExitOk;
  }

  std::cout << "game " << spec.id << " (" << to_string(spec.objective) << ", " << spec.n_rounds
            << " round" << (spec.n_rounds == 1 ? "" : "s") << ")\n";
  std::cout << "  strategies: 0=" << spec.strategies[0].label << " 1=" << spec.strategies[1].label
            << "\n";
  for (int r = 0; r < 2; ++r)
    std::cout << "  row " << r << ": (" << spec.matrix.at(r, 0).p1 << "," << spec.matrix.at(r, 0).p2
              << ") (" << spec.matrix.at(r, 1).p1 << "," << spec.matrix.at(r, 1).p2 << ")\n";
  std::cout << "  zero_sum: " << (validation.zero_sum.value_or(false) ? "yes" : "no") << "\n";
  if (report.pure_equilibria.empty()) {
    std::cout << "  pure equilibria: none\n";
  } else {
    std::cout << "  pure equilibria:";
    for (auto [r, c] : report.pure_equilibria)
      std::cout << " (" << profile_label(spec, r) << ", " << profile_label(spec, c) << ")";
    std::cout << "\n";
  }
  std::cout << "  dominant: p1="
            << (report.dominant_p1 ? profile_label(spec, *report.dominant_p1) : "none") << " p2="
            << (report.dominant_p2 ? profile_label(spec, *report.dominant_p2) : "none") << "\n";
  if (report.mixed_equilibrium)
    std::cout << "  mixed equilibrium: p1 plays " << spec.strategies[0].label << " with p="
              << report.mixed_equilibrium->p1_prob_strategy0 << ", p2 with p="
              << report.mixed_equilibrium->p2_prob_strategy0 << "\n";
  else
    std::cout << "  mixed equilibrium: none (" << report.mixed_note << ")\n";
  if (report.zero_sum_value)
    std::cout << "  zero-sum value (player 1): " << *report.zero_sum_value << "\n";
  std::cout << "  prisoner's-dilemma ordering: " << (report.pd_ordering_ok ? "yes" : "no") << "\n";
  return kExitOk;
}

int cmd_run(const std::string& config_path, const std::string& out_dir, bool mock, long long seed,
            bool seed_set, int parallelism) {
  using namespace arena;
  ExperimentConfig cfg = load_config(config_path);
  RunOptions opts;
  opts.out_dir = out_dir;
  opts.mock_mode = mock;
  opts.parallelism = parallelism;
  if (seed_set) opts.seed_override = static_cast<uint64_t>(seed);

  ExperimentManifest manifest = run_experiment(cfg, opts);
  std::cout << "instances: " << manifest.instances << " complete: " << manifest.complete
            << " invalid_decision: " << manifest.invalid_decision
            << " provider_error: " << manifest.provider_error
            << " decisions: " << manifest.decisions << "\n";
  std::cout << "results: " << (fs::path(out_dir) / "results.jsonl").string() << "\n";
  return manifest.complete == manifest.instances ? kExitOk : kExitPartial;
}

std::optional<arena::OutcomeChannel> channel_from_flag(const std::string& name) {
  if (name.empty() || name == "default") return std::nullopt;
  if (name == "agent1") return arena::OutcomeChannel::agent1;
  if (name == "agent2") return arena::OutcomeChannel::agent2;
  if (name == "mean") return arena::OutcomeChannel::joint_mean;
  throw arena::ConfigError("unknown channel: " + name);
}

int cmd_analyze(const std::vector<std::string>& results_dirs, const std::string& out_file,
                const std::string& channel) {
  using namespace arena;
  std::vector<fs::path> dirs(results_dirs.begin(), results_dirs.end());
  LoadedResults results = load_results(dirs);
  std::vector<ResultTensor> tensors = build_tensors(results);
  if (auto ch = channel_from_flag(channel))
    for (ResultTensor& t : tensors) t.default_channel = *ch;
  std::vector<GameMetricsReport> reports = compute_all_metrics(tensors);

  fs::path out = out_file.empty() ? dirs.front() / "metrics.json" : fs::path(out_file);
  std::ofstream f(out, std::ios::trunc | std::ios::binary);
  f << metrics_to_json(reports).dump(2) << "\n";
  std::cout << "metrics: " << out.string() << "\n";
  for (const GameMetricsReport& report : reports) {
    for (const auto& [model, m] : report.models) {
      auto show = [](const MetricValue& v) {
        return v.normalized.has_value() ? std::to_string(*v.normalized)
                                        : (v.note.empty() ? std::string("-") : v.note);
      };
      std::cout << "  " << report.game_id << " / " << model << ": IV=" << show(m.iv)
                << " CI=" << show(m.ci) << " VR=" << show(m.vr) << "\n";
    }
  }
  return kExitOk;
}

int cmd_report(const std::vector<std::string>& results_dirs, const std::string& out_dir,
               const std::string& channel) {
  using namespace arena;
  std::vector<fs::path> dirs(results_dirs.begin(), results_dirs.end());
  LoadedResults results = load_results(dirs);
  std::vector<ResultTensor> tensors = build_tensors(results);
  if (auto ch = channel_from_flag(channel))
    for (ResultTensor& t : tensors) t.default_channel = *ch;
  std::vector<GameMetricsReport> reports = compute_all_metrics(tensors);

  fs::create_directories(out_dir);
  write_boxplot_csv(fs::path(out_dir) / "boxplot.csv", results);
  write_rounds_csv(fs::path(out_dir) / "rounds.csv", tensors);
  write_radar_csv(fs::path(out_dir) / "radar.csv", reports);
  std::cout << "wrote " << out_dir << "/boxplot.csv, rounds.csv, radar.csv\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"2x2 matrix-game tournaments with scripted, mock, and LLM-backed agents"};
  app.require_subcommand(1);

  std::string config_path, pack_path, out_dir, out_file, game_id, channel;
  std::vector<std::string> results_dirs;
  bool mock = false, as_json = false;
  long long seed = 0;
  int parallelism = 1;

  auto* validate = app.add_subcommand("validate", "Check a config and its language pack");
  validate->add_option("config", config_path, "experiment config JSON")->required();
  validate->add_option("--pack", pack_path, "language pack directory (overrides config)");

  auto* run = app.add_subcommand("run", "Run the configured experiment");
  run->add_option("config", config_path, "experiment config JSON")->required();
  run->add_option("--out", out_dir, "results directory")->required();
  run->add_flag("--mock", mock, "replace remote providers with their mock policies (offline)");
  auto* seed_opt = run->add_option("--seed", seed, "master seed override");
  run->add_option("--parallelism", parallelism, "max concurrent instances")
      ->check(CLI::PositiveNumber);

  auto* solve = app.add_subcommand("solve", "Equilibrium analysis of one configured game");
  solve->add_option("config", config_path, "experiment config JSON")->required();
  solve->add_option("game_id", game_id, "game id from the config")->required();
  solve->add_flag("--json", as_json, "machine-readable output");

  const auto channel_check = CLI::IsMember({"default", "agent1", "agent2", "mean"});
  auto* analyze = app.add_subcommand("analyze", "Compute stability metrics from results");
  analyze->add_option("results", results_dirs, "results directories (one per model)")->required();
  analyze->add_option("--out", out_file, "metrics.json path (default: first results dir)");
  analyze->add_option("--channel", channel, "outcome channel (default: mean, agent1 for zero-sum)")
      ->check(channel_check);

  auto* report = app.add_subcommand("report", "Emit plot-ready CSV tables from results");
  report->add_option("results", results_dirs, "results directories (one per model)")->required();
  report->add_option("--out", out_dir, "output directory for CSV files")->required();
  report->add_option("--channel", channel, "outcome channel (default: mean, agent1 for zero-sum)")
      ->check(channel_check);

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) return cmd_validate(config_path, pack_path);
    if (run->parsed())
      return cmd_run(config_path, out_dir, mock, seed, seed_opt->count() > 0, parallelism);
    if (solve->parsed()) return cmd_solve(config_path, game_id, as_json);
    if (analyze->parsed()) return cmd_analyze(results_dirs, out_file, channel);
    if (report->parsed()) return cmd_report(results_dirs, out_dir, channel);
  } catch (const arena::ProviderError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const arena::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
