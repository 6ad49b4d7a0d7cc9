#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "arena/config.hpp"
#include "arena/errors.hpp"
#include "arena/game.hpp"
#include "arena/metrics.hpp"

namespace arena {

/// Everything needed to analyze one or more results directories offline.
struct LoadedResults {
  std::map<std::string, GameSpec> games;
  std::vector<json> runs;  // "run" lines, all statuses
};

/// Reads results.jsonl + games.json from one or more results directories.
/// Shared game ids must carry identical specs.
inline LoadedResults load_results(const std::vector<std::filesystem::path>& dirs) {
  namespace fs = std::filesystem;
  if (dirs.empty()) throw ConfigError("no results directories given");
  LoadedResults out;
  for (const fs::path& dir : dirs) {
    fs::path games_path = dir / "games.json";
    fs::path results_path = dir / "results.jsonl";
    if (!fs::exists(results_path))
      throw ConfigError("no results.jsonl in " + dir.string());
    if (!fs::exists(games_path)) throw ConfigError("no games.json in " + dir.string());

    std::ifstream gin(games_path);
    json games = json::parse(gin);
    for (const auto& [id, gj] : games.at("games").items()) {
      GameSpec spec = game_spec_from_json(id, gj);
      auto it = out.games.find(id);
      if (it == out.games.end()) {
        out.games.emplace(id, spec);
      } else if (game_spec_to_json(it->second) != game_spec_to_json(spec)) {
        throw ConfigError("game '" + id + "' differs between results directories");
      }
    }

    std::ifstream rin(results_path);
    std::string line;
    while (std::getline(rin, line)) {
      if (line.empty()) continue;
      json j = json::parse(line);
      if (j.value("type", "") == "run") out.runs.push_back(std::move(j));
    }
  }
  if (out.runs.empty()) throw ConfigError("results are empty");
  return out;
}

namespace report_detail {

inline std::string personality_key(const json& run) {
  auto pers = run.at("personalities").get<std::vector<std::string>>();
  return pers.at(0) + "+" + pers.at(1);
}

inline std::string flags_key(const json& run) {
  return std::string("rk=") + (run.at("rounds_known").get<bool>() ? "1" : "0") +
         ",ok=" + (run.at("opponent_known").get<bool>() ? "1" : "0");
}

inline size_t index_of(const std::vector<std::string>& labels, const std::string& v) {
  return static_cast<size_t>(std::find(labels.begin(), labels.end(), v) - labels.begin());
}

}  // namespace report_detail

/// Builds the per-(game, model) tensors from run records. Outcomes are the
/// per-round payoffs normalized per agent; incomplete runs are excluded and
/// counted. The default channel is agent1 for zero-sum games (agent 2's
/// outcome is its complement) and the two-agent mean otherwise.
inline std::vector<ResultTensor> build_tensors(const LoadedResults& results) {
  struct Group {
    std::vector<const json*> complete;
    int excluded = 0;
  };
  std::map<std::pair<std::string, std::string>, Group> groups;
  for (const json& run : results.runs) {
    auto key = std::make_pair(run.at("game").get<std::string>(), run.at("model").get<std::string>());
    if (run.at("status").get<std::string>() == "complete")
      groups[key].complete.push_back(&run);
    else
      groups[key].excluded += 1;
  }

  std::vector<ResultTensor> tensors;
  for (const auto& [key, group] : groups) {
    const auto& [game_id, model] = key;
    auto spec_it = results.games.find(game_id);
    if (spec_it == results.games.end())
      throw ConfigError("run references unknown game: " + game_id);
    const GameSpec& spec = spec_it->second;

    ResultTensor t;
    t.game_id = game_id;
    t.model_id = model;
    t.n_rounds = spec.n_rounds;
    t.excluded_runs = group.excluded;
    t.default_channel = validate_game(spec).zero_sum.value_or(false) ? OutcomeChannel::agent1
                                                                     : OutcomeChannel::joint_mean;
    std::set<std::string> langs, combos, flags;
    int max_rep = 0;
    for (const json* run : group.complete) {
      langs.insert(run->at("language").get<std::string>());
      combos.insert(report_detail::personality_key(*run));
      flags.insert(report_detail::flags_key(*run));
      max_rep = std::max(max_rep, run->at("repetition").get<int>());
    }
    if (group.complete.empty()) {
      tensors.push_back(std::move(t));
      continue;
    }
    t.languages.assign(langs.begin(), langs.end());
    t.personality_combos.assign(combos.begin(), combos.end());
    t.flag_combos.assign(flags.begin(), flags.end());
    t.n_reps = max_rep;
    t.allocate();

    for (const json* run : group.complete) {
      size_t a = report_detail::index_of(t.languages, run->at("language").get<std::string>());
      size_t b = report_detail::index_of(t.personality_combos, report_detail::personality_key(*run));
      size_t c = report_detail::index_of(t.flag_combos, report_detail::flags_key(*run));
      size_t r = static_cast<size_t>(run->at("repetition").get<int>()) - 1;
      for (const auto& round : run->at("rounds")) {
        size_t d = static_cast<size_t>(round.at("round").get<int>()) - 1;
        TensorCell cell;
        cell.agent1 = normalize_outcome(round.at("payoff_p1").get<double>(), spec,
                                        OutcomeChannel::agent1);
        cell.agent2 = normalize_outcome(round.at("payoff_p2").get<double>(), spec,
                                        OutcomeChannel::agent2);
        t.set(a, b, c, d, r, cell);
      }
    }
    tensors.push_back(std::move(t));
  }
  return tensors;
}

/// Metric reports for every game present, across models.
inline std::vector<GameMetricsReport> compute_all_metrics(const std::vector<ResultTensor>& tensors) {
  std::map<std::string, std::vector<ResultTensor>> by_game;
  for (const ResultTensor& t : tensors) by_game[t.game_id].push_back(t);
  std::vector<GameMetricsReport> reports;
  for (auto& [_, group] : by_game) reports.push_back(compute_game_metrics(group));
  return reports;
}

inline ordered_json metrics_to_json(const std::vector<GameMetricsReport>& reports) {
  ordered_json root;
  root["variance"] = "population";
  ordered_json games(ordered_json::value_t::object);
  for (const GameMetricsReport& report : reports) {
    ordered_json models(ordered_json::value_t::object);
    for (const auto& [model, m] : report.models) {
      ordered_json mj;
      auto put = [&](const std::string& name, const MetricValue& v) {
        mj[name + "_raw"] = v.raw.has_value() ? ordered_json(*v.raw) : ordered_json(nullptr);
        mj[name] = v.normalized.has_value() ? ordered_json(*v.normalized) : ordered_json(nullptr);
        if (!v.note.empty()) mj[name + "_note"] = v.note;
      };
      put("iv", m.iv);
      put("ci", m.ci);
      put("vr", m.vr);
      if (m.iv_scenario_raw.has_value()) mj["iv_scenario_raw_nondefault"] = *m.iv_scenario_raw;
      mj["excluded_runs"] = m.excluded_runs;
      mj["missing_cells"] = m.missing_cells;
      models[model] = std::move(mj);
    }
    ordered_json gj;
    gj["models"] = std::move(models);
    gj["z_factors"] = report.z_factors;
    games[report.game_id] = std::move(gj);
  }
  root["games"] = std::move(games);
  return root;
}

// ---------------------------------------------------------------------------
// Plot-ready CSV tables
// ---------------------------------------------------------------------------

namespace report_detail {

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

}  // namespace report_detail

/// One row per (complete run, agent): the distribution behind final-payoff
/// box plots.
inline void write_boxplot_csv(const std::filesystem::path& path, const LoadedResults& results) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  out << "game,model,language,personalities,rounds_known,opponent_known,repetition,agent,"
         "total_payoff,mean_round_normalized\n";
  for (const json& run : results.runs) {
    if (run.at("status").get<std::string>() != "complete") continue;
    const GameSpec& spec = results.games.at(run.at("game").get<std::string>());
    auto totals = run.at("totals");
    const auto& rounds = run.at("rounds");
    for (int agent = 1; agent <= 2; ++agent) {
      double norm_sum = 0.0;
      for (const auto& round : rounds) {
        double payoff = round.at(agent == 1 ? "payoff_p1" : "payoff_p2").get<double>();
        norm_sum += normalize_outcome(
            payoff, spec, agent == 1 ? OutcomeChannel::agent1 : OutcomeChannel::agent2);
      }
      double norm_mean = rounds.empty() ? 0.0 : norm_sum / rounds.size();
      out << report_detail::csv_escape(run.at("game").get<std::string>()) << ','
          << report_detail::csv_escape(run.at("model").get<std::string>()) << ','
          << report_detail::csv_escape(run.at("language").get<std::string>()) << ','
          << report_detail::csv_escape(report_detail::personality_key(run)) << ','
          << (run.at("rounds_known").get<bool>() ? 1 : 0) << ','
          << (run.at("opponent_known").get<bool>() ? 1 : 0) << ','
          << run.at("repetition").get<int>() << ',' << agent << ','
          << report_detail::fmt(totals[agent - 1].get<double>()) << ','
          << report_detail::fmt(norm_mean) << "\n";
    }
  }
}

/// Per-round normalized series per (game, model): means with percentile
/// interval. One-shot games have no series and emit nothing.
inline void write_rounds_csv(const std::filesystem::path& path,
                             const std::vector<ResultTensor>& tensors) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  out << "game,model,channel,round,mean,lo,hi,n\n";
  for (const ResultTensor& t : tensors) {
    if (t.n_rounds < 2 || t.cells.empty()) continue;
    const char* channel = t.default_channel == OutcomeChannel::agent1     ? "agent1"
                          : t.default_channel == OutcomeChannel::agent2   ? "agent2"
                                                                          : "joint_mean";
    for (const RoundSeriesPoint& p : per_round_series(t, t.default_channel)) {
      out << report_detail::csv_escape(t.game_id) << ',' << report_detail::csv_escape(t.model_id)
          << ',' << channel << ',' << p.round << ',' << report_detail::fmt(p.mean) << ','
          << report_detail::fmt(p.lo) << ',' << report_detail::fmt(p.hi) << ',' << p.n << "\n";
    }
  }
}

/// Long-form metric table per (game, model, metric): the radar chart data.
inline void write_radar_csv(const std::filesystem::path& path,
                            const std::vector<GameMetricsReport>& reports) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  out << "game,model,metric,raw,normalized,note\n";
  for (const GameMetricsReport& report : reports) {
    for (const auto& [model, m] : report.models) {
      auto row = [&](const char* name, const MetricValue& v) {
        out << report_detail::csv_escape(report.game_id) << ','
            << report_detail::csv_escape(model) << ',' << name << ','
            << (v.raw.has_value() ? report_detail::fmt(*v.raw) : "") << ','
            << (v.normalized.has_value() ? report_detail::fmt(*v.normalized) : "") << ','
            << report_detail::csv_escape(v.note) << "\n";
      };
      row("iv", m.iv);
      row("ci", m.ci);
      row("vr", m.vr);
    }
  }
}

}  // namespace arena
