#include <catch2/catch_amalgamated.hpp>

#include "arena/text.hpp"

using namespace arena;

TEST_CASE("utf8 decode/encode round-trips") {
  for (const char* s : {"plain", "Thú tội", "التزم الصمت", "保持沉默", "Giữ im lặng", ""}) {
    CHECK(utf8_encode(utf8_decode(s)) == s);
  }
}

// Expected sequences below were frozen from Python's unicodedata.normalize.
TEST_CASE("nfc composes stacked Latin diacritics") {
  CHECK(nfc("ệ") == "ệ");                    // e + dot below + circumflex
  CHECK(nfc("ế") == "ế");                    // e + circumflex + acute
  CHECK(nfc("ệ̣") == "ệ̣");        // blocked second dot survives
  CHECK(nfc("Å") == "Å");
  CHECK(nfc("Thú tội") == "Thú tội");
  CHECK(nfc("giữ im lặng") == "giữ im lặng");       // already composed: unchanged
}

TEST_CASE("nfc handles Greek and Arabic canonical pairs") {
  CHECK(nfc("ἄ") == "ἄ");
  CHECK(nfc("آ") == "آ");
}

TEST_CASE("nfc leaves CJK and out-of-range text alone") {
  CHECK(nfc("保持沉默") == "保持沉默");
  CHECK(nfc("选项A") == "选项A");
}

TEST_CASE("case_fold lowers Latin including Vietnamese range") {
  CHECK(case_fold("AVOUER") == "avouer");
  CHECK(case_fold("GARDER LE SILENCE") == "garder le silence");
  CHECK(case_fold("THÚ TỘI") == "thú tội");
  CHECK(case_fold("Élan ĐỘI") == "élan đội");
  CHECK(case_fold("保持沉默") == "保持沉默");  // no case in CJK
}

TEST_CASE("trim and strip_wrapping") {
  CHECK(trim("  x \t\n") == "x");
  CHECK(strip_wrapping("  \"Confess.\"  ") == "Confess");
  CHECK(strip_wrapping("'confess'") == "confess");
  CHECK(strip_wrapping("«Avouer»") == "Avouer");
  CHECK(strip_wrapping("坦白。") == "坦白");
  CHECK(strip_wrapping("** Stay silent **") == "Stay silent");
  CHECK(strip_wrapping("") == "");
}

TEST_CASE("count_occurrences is non-overlapping") {
  CHECK(count_occurrences("aaaa", "aa") == 2);
  CHECK(count_occurrences("abcabc", "abc") == 2);
  CHECK(count_occurrences("abc", "") == 0);
}
