#include <filesystem>

#include "doctest.h"

#include "arforge/numerics/rng.hpp"
#include "arforge/tokenizer/bpe.hpp"
#include "arforge/util/utf8.hpp"

using namespace arforge::tokenizer;
using arforge::numerics::SplitMix64;

namespace {

const std::vector<std::string> kAlphabet{"a", "b", "c", "d", "e", "é", "ü", "ж", "ß"};

std::string random_text(SplitMix64 &rng, std::size_t max_words) {
    std::string out;
    const std::size_t words = 1 + rng.below(max_words);
    for (std::size_t w = 0; w < words; ++w) {
        if (w) out += ' ';
        const std::size_t len = 1 + rng.below(6);
        for (std::size_t i = 0; i < len; ++i) out += kAlphabet[rng.below(kAlphabet.size())];
    }
    return out;
}

} // namespace

TEST_CASE("first merge on the ab/abc fixture is (a, b)") {
    const std::vector<std::vector<std::string>> corpora{{"ab", "abc"}};
    const auto model = learn_merges(corpora, {3, std::nullopt});
    REQUIRE_FALSE(model.table.merges.empty());
    CHECK(model.table.merges[0] == Merge{"a", "b"});
    CHECK(segment_word("abc", model.table, 1) == std::vector<std::string>{"ab", "c</w>"});
    CHECK(segment_word("ab", model.table, 1) == std::vector<std::string>{"ab</w>"});
}

TEST_CASE("ties go to the lexicographically smallest pair") {
    const std::vector<std::vector<std::string>> corpora{{"xy ba"}};
    const auto model = learn_merges(corpora, {1, std::nullopt});
    REQUIRE(model.table.merges.size() == 1);
    CHECK(model.table.merges[0] == Merge{"b", "a"});
}

TEST_CASE("vocabulary reserves the special ids") {
    Vocabulary v;
    CHECK(v.size() == kReservedCount);
    CHECK(v.id_of("zzz") == kUnkId);
    CHECK(v.add("x") == 4);
    CHECK(v.add("x") == 4);
    CHECK(v.symbol_of(4) == "x");
    CHECK_THROWS_AS(v.symbol_of(99), std::out_of_range);
}

TEST_CASE("decode(encode(s)) == s on random multilingual text") {
    SplitMix64 rng(17);
    std::vector<std::string> train;
    for (int i = 0; i < 300; ++i) train.push_back(random_text(rng, 8));
    const std::vector<std::vector<std::string>> corpora{train};
    const auto model = learn_merges(corpora, {60, std::nullopt});
    const Encoder encoder(model.table, model.vocab);
    for (int i = 0; i < 300; ++i) {
        const std::string s = random_text(rng, 10);
        const auto ids = encoder.encode(s);
        CHECK(encoder.decode(ids) == s);
        CHECK(encode(s, model.table, model.vocab) == ids);
    }
}

TEST_CASE("unknown characters decode as <unk>") {
    const std::vector<std::vector<std::string>> corpora{{"ab ab"}};
    const auto model = learn_merges(corpora, {1, std::nullopt});
    const auto ids = encode("ab q", model.table, model.vocab);
    CHECK(decode(ids, model.vocab) == "ab <unk>");
}

TEST_CASE("vocabulary cap keeps the most frequent tokens") {
    const std::vector<std::vector<std::string>> corpora{{"aaa aaa aaa b"}};
    const auto model = learn_merges(corpora, {0, 5});
    CHECK(model.vocab.size() == 5);
    CHECK(model.vocab.find("a").has_value());
}

TEST_CASE("merge and vocabulary files round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "arforge_bpe_test";
    std::filesystem::create_directories(dir);
    const std::vector<std::vector<std::string>> corpora{{"hello world", "yellow wold"}};
    const auto model = learn_merges(corpora, {10, std::nullopt});
    save_merges(dir / "merges.txt", model.table);
    save_vocabulary(dir / "vocab.txt", model.vocab);
    CHECK(load_merges(dir / "merges.txt").merges == model.table.merges);
    CHECK(load_vocabulary(dir / "vocab.txt") == model.vocab);
    std::filesystem::remove_all(dir);
}

TEST_CASE("utf8 helpers") {
    using namespace arforge::util;
    CHECK(valid_utf8("héllo"));
    CHECK_FALSE(valid_utf8("\xC0\xAF"));
    CHECK_FALSE(valid_utf8("\xED\xA0\x80"));
    CHECK(lowercase_utf8("ÉCOLE Жук ΣΑ") == "école жук σα");
    CHECK(utf8_characters("aé").size() == 2);
    CHECK(split_whitespace("  a \t b\n") == std::vector<std::string>{"a", "b"});
    CHECK(trim_right("x  \t") == "x");
    CHECK_THROWS(decode_utf8("\xFF"));
}
