#!/usr/bin/env python3
"""Regenerates include/arena/unicode_tables.hpp from Python's unicodedata.

Coverage is limited to code points below U+2000, which spans every script the
bundled language packs use that has canonical compositions or case pairs
(Latin incl. Extended Additional, combining marks, Greek, Cyrillic, Arabic).
Code points outside the table are passed through unchanged by the text
utilities.

Usage: python3 scripts/gen_unicode_tables.py > include/arena/unicode_tables.hpp
"""

import sys
import unicodedata as u

LIMIT = 0x2000


def main() -> None:
    ccc = [(cp, u.combining(chr(cp))) for cp in range(LIMIT) if u.combining(chr(cp))]

    decomp = []
    for cp in range(LIMIT):
        d = u.decomposition(chr(cp))
        if d and not d.startswith("<"):  # canonical decompositions only
            parts = [int(x, 16) for x in d.split()]
            assert 1 <= len(parts) <= 2
            decomp.append((cp, parts))

    comp = []
    for cp, parts in decomp:
        if len(parts) == 2 and u.normalize("NFC", chr(parts[0]) + chr(parts[1])) == chr(cp):
            comp.append((parts[0], parts[1], cp))
    comp.sort()

    fold = []
    for cp in range(LIMIT):
        lo = chr(cp).lower()
        if len(lo) == 1 and ord(lo) != cp:
            fold.append((cp, ord(lo)))

    w = sys.stdout.write
    w("// Generated by scripts/gen_unicode_tables.py -- do not edit by hand.\n")
    w("#pragma once\n\n#include <cstdint>\n\nnamespace arena::unicode {\n\n")
    w("inline constexpr char32_t kTableLimit = 0x%X;\n\n" % LIMIT)

    w("struct CccEntry { char32_t cp; uint8_t ccc; };\n")
    w("inline constexpr CccEntry kCombiningClass[] = {\n")
    for cp, c in ccc:
        w("    {0x%04X, %d},\n" % (cp, c))
    w("};\n\n")

    w("// One-level canonical decompositions; second == 0 marks a singleton.\n")
    w("struct DecompEntry { char32_t cp; char32_t first; char32_t second; };\n")
    w("inline constexpr DecompEntry kDecomposition[] = {\n")
    for cp, parts in decomp:
        second = parts[1] if len(parts) == 2 else 0
        w("    {0x%04X, 0x%04X, 0x%04X},\n" % (cp, parts[0], second))
    w("};\n\n")

    w("// Primary composites keyed by (starter, combining), sorted for bsearch.\n")
    w("struct CompEntry { char32_t first; char32_t second; char32_t composed; };\n")
    w("inline constexpr CompEntry kComposition[] = {\n")
    for a, b, cp in comp:
        w("    {0x%04X, 0x%04X, 0x%04X},\n" % (a, b, cp))
    w("};\n\n")

    w("// Simple (1:1) lowercase mappings.\n")
    w("struct FoldEntry { char32_t cp; char32_t lower; };\n")
    w("inline constexpr FoldEntry kCaseFold[] = {\n")
    for cp, lo in fold:
        w("    {0x%04X, 0x%04X},\n" % (cp, lo))
    w("};\n\n")
    w("}  // namespace arena::unicode\n")


if __name__ == "__main__":
    main()
