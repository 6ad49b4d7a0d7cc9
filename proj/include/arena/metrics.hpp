#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "arena/errors.hpp"
#include "arena/game.hpp"

namespace arena {

/// Both agents' normalized per-round outcomes for one tensor cell.
struct TensorCell {
  double agent1 = 0.0;
  double agent2 = 0.0;

  double channel(OutcomeChannel ch) const {
    switch (ch) {
      case OutcomeChannel::agent1: return agent1;
      case OutcomeChannel::agent2: return agent2;
      case OutcomeChannel::joint_mean: return 0.5 * (agent1 + agent2);
    }
    return agent1;
  }
};

/// Labeled outcome tensor over languages (a), personality combos (b),
/// information-flag combos (c), rounds (d), and repetitions (r). Cells for
/// runs that never happened (or were excluded) stay empty and are counted.
struct ResultTensor {
  std::string model_id;
  std::string game_id;
  std::vector<std::string> languages;           // axis a
  std::vector<std::string> personality_combos;  // axis b
  std::vector<std::string> flag_combos;         // axis c
  int n_rounds = 1;                              // axis d size
  int n_reps = 1;                                // repetition axis size
  OutcomeChannel default_channel = OutcomeChannel::joint_mean;
  std::vector<std::optional<TensorCell>> cells;  // dense, a-major
  int excluded_runs = 0;  // incomplete/invalid runs dropped before building

  size_t size_a() const { return languages.size(); }
  size_t size_b() const { return personality_combos.size(); }
  size_t size_c() const { return flag_combos.size(); }

  size_t flat_index(size_t a, size_t b, size_t c, size_t d, size_t r) const {
    return (((a * size_b() + b) * size_c() + c) * n_rounds + d) * n_reps + r;
  }

  void allocate() { cells.assign(size_a() * size_b() * size_c() * n_rounds * n_reps, std::nullopt); }

  void set(size_t a, size_t b, size_t c, size_t d, size_t r, TensorCell cell) {
    cells[flat_index(a, b, c, d, r)] = cell;
  }

  std::optional<double> value(size_t a, size_t b, size_t c, size_t d, size_t r,
                              OutcomeChannel ch) const {
    const auto& cell = cells[flat_index(a, b, c, d, r)];
    if (!cell.has_value()) return std::nullopt;
    return cell->channel(ch);
  }

  int missing_cells() const {
    int n = 0;
    for (const auto& cell : cells)
      if (!cell.has_value()) ++n;
    return n;
  }
};

namespace metrics_detail {

inline double population_variance(const std::vector<double>& xs) {
  // All-equal sets have exactly zero variance; do not let summation rounding
  // manufacture a residue.
  bool constant = true;
  for (double x : xs)
    if (x != xs.front()) {
      constant = false;
      break;
    }
  if (constant) return 0.0;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  return var / static_cast<double>(xs.size());
}

inline std::optional<double> mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return std::nullopt;
  double m = 0.0;
  for (double x : xs) m += x;
  return m / static_cast<double>(xs.size());
}

/// Mean over rounds of the repetition-averaged outcome for one (a,b,c).
inline std::optional<double> round_mean(const ResultTensor& t, size_t a, size_t b, size_t c,
                                        OutcomeChannel ch) {
  std::vector<double> per_round;
  for (int d = 0; d < t.n_rounds; ++d) {
    std::vector<double> reps;
    for (int r = 0; r < t.n_reps; ++r)
      if (auto v = t.value(a, b, c, d, r, ch)) reps.push_back(*v);
    if (auto m = mean_of(reps)) per_round.push_back(*m);
  }
  return mean_of(per_round);
}

}  // namespace metrics_detail

/// Population variance of the model's whole result set (every cell, every
/// repetition).
inline double internal_variability_raw(const ResultTensor& t, OutcomeChannel ch) {
  std::vector<double> values;
  for (const auto& cell : t.cells)
    if (cell.has_value()) values.push_back(cell->channel(ch));
  if (values.size() < 2) throw InsufficientDataError("insufficient data: need >= 2 outcomes");
  return metrics_detail::population_variance(values);
}

inline double internal_variability_raw(const ResultTensor& t) {
  return internal_variability_raw(t, t.default_channel);
}

/// Non-default variant: mean over (a,b,c) scenarios of the variance of that
/// scenario's outcomes. The whole-set variance above is the reported flavor.
inline double internal_variability_scenario_raw(const ResultTensor& t, OutcomeChannel ch) {
  std::vector<double> vars;
  for (size_t a = 0; a < t.size_a(); ++a)
    for (size_t b = 0; b < t.size_b(); ++b)
      for (size_t c = 0; c < t.size_c(); ++c) {
        std::vector<double> values;
        for (int d = 0; d < t.n_rounds; ++d)
          for (int r = 0; r < t.n_reps; ++r)
            if (auto v = t.value(a, b, c, d, r, ch)) values.push_back(*v);
        if (values.size() >= 2) vars.push_back(metrics_detail::population_variance(values));
      }
  if (vars.empty()) throw InsufficientDataError("insufficient data: no scenario has >= 2 outcomes");
  double m = 0.0;
  for (double v : vars) m += v;
  return m / static_cast<double>(vars.size());
}

/// Mean over (b,c) of the across-language variance of per-language round
/// means (repetitions averaged first).
inline double cross_language_inconsistency_raw(const ResultTensor& t, OutcomeChannel ch) {
  if (t.size_a() < 2) throw InsufficientDataError("insufficient languages: need >= 2");
  std::vector<double> vars;
  for (size_t b = 0; b < t.size_b(); ++b) {
    for (size_t c = 0; c < t.size_c(); ++c) {
      std::vector<double> lang_means;
      for (size_t a = 0; a < t.size_a(); ++a)
        if (auto m = metrics_detail::round_mean(t, a, b, c, ch)) lang_means.push_back(*m);
      if (lang_means.size() >= 2)
        vars.push_back(metrics_detail::population_variance(lang_means));
    }
  }
  if (vars.empty())
    throw InsufficientDataError("insufficient languages: no (personality, flags) cell covers >= 2");
  double m = 0.0;
  for (double v : vars) m += v;
  return m / static_cast<double>(vars.size());
}

inline double cross_language_inconsistency_raw(const ResultTensor& t) {
  return cross_language_inconsistency_raw(t, t.default_channel);
}

/// Mean over game variants (a,b,c) of the variance across rounds of the
/// repetition-averaged outcome series.
inline double variability_over_rounds_raw(const ResultTensor& t, OutcomeChannel ch) {
  if (t.n_rounds < 2) throw NotApplicableError("not applicable: one-shot game");
  std::vector<double> vars;
  for (size_t a = 0; a < t.size_a(); ++a) {
    for (size_t b = 0; b < t.size_b(); ++b) {
      for (size_t c = 0; c < t.size_c(); ++c) {
        std::vector<double> series;
        for (int d = 0; d < t.n_rounds; ++d) {
          std::vector<double> reps;
          for (int r = 0; r < t.n_reps; ++r)
            if (auto v = t.value(a, b, c, d, r, ch)) reps.push_back(*v);
          if (auto m = metrics_detail::mean_of(reps)) series.push_back(*m);
        }
        if (series.size() >= 2) vars.push_back(metrics_detail::population_variance(series));
      }
    }
  }
  if (vars.empty()) throw InsufficientDataError("insufficient data: no variant has >= 2 rounds");
  double m = 0.0;
  for (double v : vars) m += v;
  return m / static_cast<double>(vars.size());
}

inline double variability_over_rounds_raw(const ResultTensor& t) {
  return variability_over_rounds_raw(t, t.default_channel);
}

/// Divides each model's raw score by the maximum; an all-zero map stays zero.
inline std::map<std::string, double> normalize_across_models(
    const std::map<std::string, double>& raw) {
  if (raw.empty()) throw InsufficientDataError("no models to normalize");
  double z = 0.0;
  for (const auto& [_, v] : raw) z = std::max(z, v);
  std::map<std::string, double> out;
  for (const auto& [k, v] : raw) out[k] = z == 0.0 ? 0.0 : v / z;
  return out;
}

struct RoundSeriesPoint {
  int round = 0;  // 1-based
  double mean = 0.0;
  double lo = 0.0;   // 2.5th percentile
  double hi = 0.0;   // 97.5th percentile
  int n = 0;
};

namespace metrics_detail {

inline double percentile(std::vector<double> xs, double q) {
  std::sort(xs.begin(), xs.end());
  if (xs.size() == 1) return xs[0];
  double pos = q * static_cast<double>(xs.size() - 1);
  size_t lo = static_cast<size_t>(pos);
  size_t hi = std::min(lo + 1, xs.size() - 1);
  double frac = pos - static_cast<double>(lo);
  return xs[lo] * (1.0 - frac) + xs[hi] * frac;
}

}  // namespace metrics_detail

/// Per-round mean over repetitions and variants, with an empirical
/// percentile interval (default 2.5-97.5).
inline std::vector<RoundSeriesPoint> per_round_series(const ResultTensor& t, OutcomeChannel ch,
                                                      double lo_q = 0.025, double hi_q = 0.975) {
  if (t.n_rounds < 2) throw NotApplicableError("not applicable: one-shot game");
  std::vector<RoundSeriesPoint> out;
  for (int d = 0; d < t.n_rounds; ++d) {
    std::vector<double> values;
    for (size_t a = 0; a < t.size_a(); ++a)
      for (size_t b = 0; b < t.size_b(); ++b)
        for (size_t c = 0; c < t.size_c(); ++c)
          for (int r = 0; r < t.n_reps; ++r)
            if (auto v = t.value(a, b, c, d, r, ch)) values.push_back(*v);
    if (values.empty()) continue;
    RoundSeriesPoint p;
    p.round = d + 1;
    p.mean = *metrics_detail::mean_of(values);
    p.lo = metrics_detail::percentile(values, lo_q);
    p.hi = metrics_detail::percentile(values, hi_q);
    p.n = static_cast<int>(values.size());
    out.push_back(p);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cross-model report
// ---------------------------------------------------------------------------

struct MetricValue {
  std::optional<double> raw;
  std::optional<double> normalized;
  std::string note;  // why absent: "not applicable", "insufficient ...", ""
};

struct ModelMetrics {
  MetricValue iv;
  MetricValue ci;
  MetricValue vr;
  std::optional<double> iv_scenario_raw;  // non-default flavor, informational
  int excluded_runs = 0;
  int missing_cells = 0;
};

/// Scores for one game across all models present in the results.
struct GameMetricsReport {
  std::string game_id;
  std::map<std::string, ModelMetrics> models;
  std::map<std::string, double> z_factors;  // iv / ci / vr, when defined
};

/// Computes raw metrics per model, then normalizes each metric by its max
/// across models (the Z factor).
inline GameMetricsReport compute_game_metrics(const std::vector<ResultTensor>& tensors) {
  if (tensors.empty()) throw InsufficientDataError("no tensors");
  GameMetricsReport report;
  report.game_id = tensors.front().game_id;

  auto compute = [](const ResultTensor& t, auto fn) -> MetricValue {
    MetricValue v;
    try {
      v.raw = fn(t);
    } catch (const Error& e) {
      v.note = e.what();
    }
    return v;
  };

  for (const ResultTensor& t : tensors) {
    ModelMetrics m;
    m.iv = compute(t, [](const ResultTensor& x) { return internal_variability_raw(x); });
    m.ci = compute(t, [](const ResultTensor& x) { return cross_language_inconsistency_raw(x); });
    m.vr = compute(t, [](const ResultTensor& x) { return variability_over_rounds_raw(x); });
    try {
      m.iv_scenario_raw = internal_variability_scenario_raw(t, t.default_channel);
    } catch (const Error&) {
    }
    m.excluded_runs = t.excluded_runs;
    m.missing_cells = t.missing_cells();
    report.models[t.model_id] = m;
  }

  auto normalize = [&](auto member, const std::string& name) {
    std::map<std::string, double> raw;
    for (auto& [model, m] : report.models)
      if ((m.*member).raw.has_value()) raw[model] = *(m.*member).raw;
    if (raw.empty()) return;
    double z = 0.0;
    for (const auto& [_, v] : raw) z = std::max(z, v);
    report.z_factors[name] = z;
    auto normalized = normalize_across_models(raw);
    for (auto& [model, m] : report.models)
      if ((m.*member).raw.has_value()) (m.*member).normalized = normalized[model];
  };
  normalize(&ModelMetrics::iv, "iv");
  normalize(&ModelMetrics::ci, "ci");
  normalize(&ModelMetrics::vr, "vr");
  return report;
}

}  // namespace arena
