#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "arena/errors.hpp"
#include "arena/game.hpp"
#include "arena/text.hpp"

namespace arena {

/// Template files carry a small `key: value` header, then `---`, then the
/// byte-exact body. Placeholders are written `{name}`; a conditional section
/// `{flag}: [ ... ]` renders its inner text when the flag is on and vanishes
/// (with its line, if nothing else is on it) when off. Nesting is not
/// supported.
struct PromptTemplate {
  std::string language_tag;
  std::string game_kind;  // pack subdirectory this template came from
  bool repeated = false;  // repeated games need history/round placeholders
  std::string body;
  std::array<std::string, 2> strategy_labels;
  std::string history_item_format;
  std::string empty_history_marker;
  std::set<std::string> placeholders;  // bare placeholders in the body
  std::set<std::string> flags;         // conditional section names
};

using PlaceholderMap = std::map<std::string, std::string>;
using FlagSet = std::set<std::string>;

class TemplateError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

namespace tmpl_detail {

inline bool ident_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

struct Token {
  size_t begin = 0;       // index of '{'
  size_t end = 0;         // one past '}' or ']'
  std::string name;
  bool conditional = false;
  std::string inner;      // conditional body
};

/// Finds the next `{name}` or `{name}: [inner]` token at or after `from`.
inline std::optional<Token> next_token(std::string_view text, size_t from) {
  size_t pos = text.find('{', from);
  if (pos == std::string_view::npos) return std::nullopt;
  size_t p = pos + 1;
  std::string name;
  while (p < text.size() && ident_char(text[p])) name.push_back(text[p++]);
  if (name.empty() || p >= text.size() || text[p] != '}')
    throw TemplateError("stray '{' without a {placeholder} token");
  ++p;
  Token tok;
  tok.begin = pos;
  tok.name = name;
  if (text.compare(p, 3, ": [") == 0) {
    size_t close = text.find(']', p + 3);
    if (close == std::string_view::npos)
      throw TemplateError("unterminated conditional section: " + name);
    tok.conditional = true;
    tok.inner = std::string(text.substr(p + 3, close - (p + 3)));
    if (tok.inner.find(": [") != std::string::npos)
      throw TemplateError("nested conditional section in: " + name);
    tok.end = close + 1;
  } else {
    tok.end = p;
  }
  return tok;
}

inline std::string substitute(std::string_view text, const PlaceholderMap& values) {
  std::string out;
  size_t cursor = 0;
  while (auto tok = next_token(text, cursor)) {
    out.append(text.substr(cursor, tok->begin - cursor));
    if (tok->conditional)
      throw TemplateError("nested conditional section in: " + tok->name);
    auto it = values.find(tok->name);
    if (it == values.end()) throw TemplateError("missing placeholder: " + tok->name);
    out.append(it->second);
    cursor = tok->end;
  }
  out.append(text.substr(cursor));
  return out;
}

inline bool whitespace_only(std::string_view s) {
  for (char c : s)
    if (!is_ascii_space(c)) return false;
  return true;
}

}  // namespace tmpl_detail

/// Byte-exact rendering. A disabled conditional disappears; if that leaves
/// its line blank, the line and its newline go with it.
inline std::string render(const PromptTemplate& tmpl, const PlaceholderMap& values,
                          const FlagSet& flags) {
  std::string out;
  std::string_view body = tmpl.body;
  size_t line_start = 0;
  while (line_start <= body.size()) {
    size_t nl = body.find('\n', line_start);
    bool has_newline = nl != std::string_view::npos;
    std::string_view line = body.substr(line_start, has_newline ? nl - line_start : std::string_view::npos);

    std::string rendered;
    bool dropped_conditional = false;
    size_t cursor = 0;
    while (auto tok = tmpl_detail::next_token(line, cursor)) {
      rendered.append(line.substr(cursor, tok->begin - cursor));
      if (tok->conditional) {
        if (flags.count(tok->name)) {
          rendered.append(tmpl_detail::substitute(tok->inner, values));
        } else {
          dropped_conditional = true;
        }
      } else {
        auto it = values.find(tok->name);
        if (it == values.end()) throw TemplateError("missing placeholder: " + tok->name);
        rendered.append(it->second);
      }
      cursor = tok->end;
    }
    rendered.append(line.substr(cursor));

    bool drop_line = dropped_conditional && tmpl_detail::whitespace_only(rendered) && !line.empty();
    if (!drop_line) {
      out.append(rendered);
      if (has_newline) out.push_back('\n');
    }
    if (!has_newline) break;
    line_start = nl + 1;
  }
  if (out.find('{') != std::string::npos || out.find('}') != std::string::npos)
    throw TemplateError("unresolved brace in rendered prompt");
  return out;
}

/// Rounds listed in order, one line per round, from the addressed agent's
/// perspective (own choice first). Empty transcript renders the localized
/// empty-history marker.
inline std::string format_history(const Transcript& t, const PromptTemplate& tmpl,
                                  int perspective, const std::string& opponent_name) {
  if (t.rounds.empty()) return tmpl.empty_history_marker;
  std::string out;
  for (const RoundRecord& r : t.rounds) {
    int own = perspective == 1 ? r.choice_p1 : r.choice_p2;
    int theirs = perspective == 1 ? r.choice_p2 : r.choice_p1;
    PlaceholderMap values{{"round", std::to_string(r.round_index)},
                          {"own", tmpl.strategy_labels[own]},
                          {"theirs", tmpl.strategy_labels[theirs]},
                          {"opponent1", opponent_name}};
    if (!out.empty()) out.push_back('\n');
    out.append(tmpl_detail::substitute(tmpl.history_item_format, values));
  }
  return out;
}

namespace tmpl_detail {

inline const std::set<std::string>& allowed_placeholders() {
  static const std::set<std::string> names{
      "currentPlayerName", "opponent1", "personality", "opponentPersonality",
      "strategy1", "strategy2", "weight1", "weight2", "weight3", "weight4",
      "nRounds", "currentRound", "history"};
  return names;
}

inline const std::set<std::string>& allowed_flags() {
  static const std::set<std::string> names{"intro", "gameLength", "opponentPersonalityKnown"};
  return names;
}

inline std::set<std::string> required_placeholders(bool repeated) {
  std::set<std::string> req{"currentPlayerName", "opponent1", "strategy1", "strategy2",
                            "weight1", "weight2"};
  if (repeated) {
    req.insert({"weight3", "weight4", "currentRound", "history"});
  }
  return req;
}

}  // namespace tmpl_detail

/// Parses and validates one template file.
inline PromptTemplate load_template(const std::filesystem::path& file, const std::string& language_tag,
                                    const std::string& game_kind) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw TemplateError("cannot open template: " + file.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  std::string raw = buffer.str();

  const std::string divider = "\n---\n";
  size_t div = raw.find(divider);
  if (div == std::string::npos)
    throw TemplateError(file.string() + ": missing '---' divider between header and body");

  PromptTemplate tmpl;
  tmpl.language_tag = language_tag;
  tmpl.game_kind = game_kind;
  tmpl.body = raw.substr(div + divider.size());

  std::istringstream header(raw.substr(0, div));
  std::string line;
  std::map<std::string, std::string> meta;
  while (std::getline(header, line)) {
    if (trim(line).empty() || line[0] == '#') continue;
    size_t colon = line.find(':');
    if (colon == std::string::npos)
      throw TemplateError(file.string() + ": malformed header line: " + line);
    meta[trim(line.substr(0, colon))] = trim(line.substr(colon + 1));
  }
  auto need = [&](const std::string& key) {
    auto it = meta.find(key);
    if (it == meta.end()) throw TemplateError(file.string() + ": missing header key: " + key);
    return it->second;
  };
  std::string kind = need("kind");
  if (kind != "one_shot" && kind != "repeated")
    throw TemplateError(file.string() + ": kind must be one_shot or repeated");
  tmpl.repeated = kind == "repeated";
  tmpl.strategy_labels = {need("strategy1"), need("strategy2")};
  if (tmpl.repeated) {
    tmpl.history_item_format = need("history_item");
    tmpl.empty_history_marker = need("history_empty");
  } else {
    tmpl.history_item_format = meta.count("history_item") ? meta["history_item"] : "";
    tmpl.empty_history_marker = meta.count("history_empty") ? meta["history_empty"] : "";
  }

  if (detail::normalized_label(tmpl.strategy_labels[0]) ==
      detail::normalized_label(tmpl.strategy_labels[1]))
    throw TemplateError(file.string() + ": strategy labels must be distinct");

  // Collect tokens; reject names outside the declared vocabulary.
  size_t cursor = 0;
  while (auto tok = tmpl_detail::next_token(tmpl.body, cursor)) {
    if (tok->conditional) {
      if (!tmpl_detail::allowed_flags().count(tok->name))
        throw TemplateError(file.string() + ": unknown conditional flag: " + tok->name);
      if (tok->inner.find('\n') != std::string::npos)
        throw TemplateError(file.string() + ": conditional section must stay on one line: " + tok->name);
      tmpl.flags.insert(tok->name);
      size_t inner_cursor = 0;
      while (auto inner = tmpl_detail::next_token(tok->inner, inner_cursor)) {
        if (!tmpl_detail::allowed_placeholders().count(inner->name))
          throw TemplateError(file.string() + ": unknown placeholder: " + inner->name);
        inner_cursor = inner->end;
      }
    } else {
      if (!tmpl_detail::allowed_placeholders().count(tok->name))
        throw TemplateError(file.string() + ": unknown placeholder: " + tok->name);
      tmpl.placeholders.insert(tok->name);
    }
    cursor = tok->end;
  }

  for (const std::string& name : tmpl_detail::required_placeholders(tmpl.repeated)) {
    if (!tmpl.placeholders.count(name))
      throw TemplateError(file.string() + ": missing required placeholder: {" + name + "}");
  }
  return tmpl;
}

/// language tag -> template, for one game kind.
using TemplateSet = std::map<std::string, PromptTemplate>;
/// game kind -> TemplateSet.
using LanguagePack = std::map<std::string, TemplateSet>;

/// Loads `<pack>/<game_kind>/<language_tag>.txt` for every game kind
/// subdirectory. Language tags are lowercased; case collisions are duplicates.
inline LanguagePack load_language_pack(const std::filesystem::path& pack_dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(pack_dir))
    throw TemplateError("language pack directory not found: " + pack_dir.string());
  LanguagePack pack;
  std::vector<fs::path> kind_dirs;
  for (const auto& entry : fs::directory_iterator(pack_dir))
    if (entry.is_directory()) kind_dirs.push_back(entry.path());
  std::sort(kind_dirs.begin(), kind_dirs.end());
  if (kind_dirs.empty())
    throw TemplateError("language pack has no game-kind subdirectories: " + pack_dir.string());

  for (const fs::path& dir : kind_dirs) {
    std::string kind = dir.filename().string();
    TemplateSet set;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
      if (entry.is_regular_file() && entry.path().extension() == ".txt")
        files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const fs::path& file : files) {
      std::string tag = case_fold(file.stem().string());
      if (set.count(tag))
        throw TemplateError("duplicate language '" + tag + "' in " + dir.string());
      set.emplace(tag, load_template(file, tag, kind));
    }
    if (set.empty()) throw TemplateError("no templates in " + dir.string());
    pack.emplace(kind, std::move(set));
  }
  return pack;
}

}  // namespace arena
