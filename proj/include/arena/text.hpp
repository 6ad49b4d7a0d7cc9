#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "arena/unicode_tables.hpp"

namespace arena {

// ---------------------------------------------------------------------------
// UTF-8 encode/decode. Invalid sequences decode to U+FFFD byte-by-byte, which
// keeps every function total over arbitrary provider replies.
// ---------------------------------------------------------------------------

inline std::u32string utf8_decode(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  size_t i = 0;
  while (i < s.size()) {
    unsigned char c = s[i];
    char32_t cp = 0xFFFD;
    size_t len = 1;
    if (c < 0x80) {
      cp = c;
    } else if ((c >> 5) == 0x6 && i + 1 < s.size() && (s[i + 1] & 0xC0) == 0x80) {
      cp = ((c & 0x1F) << 6) | (s[i + 1] & 0x3F);
      len = 2;
    } else if ((c >> 4) == 0xE && i + 2 < s.size() && (s[i + 1] & 0xC0) == 0x80 &&
               (s[i + 2] & 0xC0) == 0x80) {
      cp = ((c & 0x0F) << 12) | ((s[i + 1] & 0x3F) << 6) | (s[i + 2] & 0x3F);
      len = 3;
    } else if ((c >> 3) == 0x1E && i + 3 < s.size() && (s[i + 1] & 0xC0) == 0x80 &&
               (s[i + 2] & 0xC0) == 0x80 && (s[i + 3] & 0xC0) == 0x80) {
      cp = ((c & 0x07) << 18) | ((s[i + 1] & 0x3F) << 12) | ((s[i + 2] & 0x3F) << 6) |
           (s[i + 3] & 0x3F);
      len = 4;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

inline void utf8_append(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

inline std::string utf8_encode(const std::u32string& cps) {
  std::string out;
  out.reserve(cps.size());
  for (char32_t cp : cps) utf8_append(out, cp);
  return out;
}

// ---------------------------------------------------------------------------
// Table lookups (generated, sorted by code point).
// ---------------------------------------------------------------------------

namespace detail {

inline uint8_t combining_class(char32_t cp) {
  if (cp >= unicode::kTableLimit) return 0;
  auto* begin = std::begin(unicode::kCombiningClass);
  auto* end = std::end(unicode::kCombiningClass);
  auto it = std::lower_bound(begin, end, cp,
                             [](const unicode::CccEntry& e, char32_t v) { return e.cp < v; });
  return (it != end && it->cp == cp) ? it->ccc : 0;
}

inline const unicode::DecompEntry* find_decomposition(char32_t cp) {
  if (cp >= unicode::kTableLimit) return nullptr;
  auto* begin = std::begin(unicode::kDecomposition);
  auto* end = std::end(unicode::kDecomposition);
  auto it = std::lower_bound(begin, end, cp,
                             [](const unicode::DecompEntry& e, char32_t v) { return e.cp < v; });
  return (it != end && it->cp == cp) ? it : nullptr;
}

inline char32_t compose_pair(char32_t a, char32_t b) {
  auto* begin = std::begin(unicode::kComposition);
  auto* end = std::end(unicode::kComposition);
  auto it = std::lower_bound(begin, end, std::pair<char32_t, char32_t>{a, b},
                             [](const unicode::CompEntry& e, std::pair<char32_t, char32_t> v) {
                               return e.first != v.first ? e.first < v.first : e.second < v.second;
                             });
  return (it != end && it->first == a && it->second == b) ? it->composed : 0;
}

}  // namespace detail

inline char32_t fold_codepoint(char32_t cp) {
  if (cp >= unicode::kTableLimit) return cp;
  auto* begin = std::begin(unicode::kCaseFold);
  auto* end = std::end(unicode::kCaseFold);
  auto it = std::lower_bound(begin, end, cp,
                             [](const unicode::FoldEntry& e, char32_t v) { return e.cp < v; });
  return (it != end && it->cp == cp) ? it->lower : cp;
}

/// Simple (1:1) lowercase fold over the table ranges; other code points pass
/// through (Arabic and CJK have no case).
inline std::string case_fold(std::string_view s) {
  std::u32string cps = utf8_decode(s);
  for (char32_t& cp : cps) cp = fold_codepoint(cp);
  return utf8_encode(cps);
}

/// Canonical composition (NFC) per UAX #15: full canonical decomposition,
/// canonical reordering, then recomposition against primary composites.
/// Covers code points below U+2000; everything else is untouched.
inline std::string nfc(std::string_view s) {
  std::u32string decomposed;
  decomposed.reserve(s.size());
  // Recursive canonical decomposition.
  std::vector<char32_t> stack;
  for (char32_t cp : utf8_decode(s)) {
    stack.push_back(cp);
    while (!stack.empty()) {
      char32_t c = stack.back();
      stack.pop_back();
      const unicode::DecompEntry* d = detail::find_decomposition(c);
      if (d == nullptr) {
        decomposed.push_back(c);
      } else if (d->second == 0) {
        stack.push_back(d->first);
      } else {
        stack.push_back(d->second);
        stack.push_back(d->first);
      }
    }
  }
  // Canonical ordering: bubble combining marks into nondecreasing ccc runs.
  for (size_t i = 1; i < decomposed.size(); ++i) {
    uint8_t ccc = detail::combining_class(decomposed[i]);
    if (ccc == 0) continue;
    size_t j = i;
    while (j > 0) {
      uint8_t prev = detail::combining_class(decomposed[j - 1]);
      if (prev == 0 || prev <= ccc) break;
      std::swap(decomposed[j - 1], decomposed[j]);
      --j;
    }
  }
  // Recomposition.
  std::u32string out;
  out.reserve(decomposed.size());
  ptrdiff_t starter = -1;
  uint8_t last_ccc = 255;  // sentinel: no mark seen since the starter
  for (char32_t cp : decomposed) {
    uint8_t ccc = detail::combining_class(cp);
    if (starter >= 0 && (last_ccc == 255 || last_ccc < ccc)) {
      if (char32_t composed = detail::compose_pair(out[starter], cp)) {
        out[starter] = composed;
        continue;
      }
    }
    if (ccc == 0) {
      starter = static_cast<ptrdiff_t>(out.size());
      last_ccc = 255;
    } else {
      last_ccc = ccc;
    }
    out.push_back(cp);
  }
  return utf8_encode(out);
}

inline bool is_ascii_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline std::string trim(std::string_view s) {
  size_t b = 0;
  size_t e = s.size();
  while (b < e && is_ascii_space(s[b])) ++b;
  while (e > b && is_ascii_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

/// Punctuation a model may wrap its answer in: quotes, terminal marks, and
/// their fullwidth/curly variants across the pack scripts.
inline bool is_wrapper_punct(char32_t cp) {
  switch (cp) {
    case '"': case '\'': case '.': case '!': case '?': case ':': case ';': case ',':
    case '`': case '*': case '(': case ')': case '[': case ']':
    case 0x00AB: case 0x00BB:             // « »
    case 0x2018: case 0x2019: case 0x201C: case 0x201D:  // curly quotes
    case 0x3001: case 0x3002:             // 、 。
    case 0x300C: case 0x300D: case 0x300E: case 0x300F:  // corner brackets
    case 0xFF0E: case 0xFF01: case 0xFF1F: case 0xFF1A: case 0xFF1B: case 0xFF0C:  // fullwidth
    case 0x060C: case 0x061B: case 0x061F: case 0x06D4:  // Arabic comma/semicolon/question/stop
      return true;
    default:
      return false;
  }
}

/// Strips surrounding whitespace and wrapper punctuation, repeatedly.
inline std::string strip_wrapping(std::string_view s) {
  std::u32string cps = utf8_decode(trim(s));
  size_t b = 0;
  size_t e = cps.size();
  while (b < e && (is_wrapper_punct(cps[b]) || (cps[b] < 0x80 && is_ascii_space(static_cast<char>(cps[b])))))
    ++b;
  while (e > b && (is_wrapper_punct(cps[e - 1]) || (cps[e - 1] < 0x80 && is_ascii_space(static_cast<char>(cps[e - 1])))))
    --e;
  return utf8_encode(cps.substr(b, e - b));
}

inline bool contains(std::string_view haystack, std::string_view needle) {
  return haystack.find(needle) != std::string_view::npos;
}

/// Counts non-overlapping occurrences.
inline size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return 0;
  size_t n = 0;
  size_t pos = 0;
  while ((pos = haystack.find(needle, pos)) != std::string_view::npos) {
    ++n;
    pos += needle.size();
  }
  return n;
}

}  // namespace arena
