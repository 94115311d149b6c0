#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "egad/corpus.hpp"
#include "egad/rng.hpp"

using namespace egad;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    const std::string path = (std::filesystem::temp_directory_path() / name).string();
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path;
}

}  // namespace

TEST_CASE("load_corpus reads documents in file order") {
    const std::string path = write_temp(
        "corpus_ok.jsonl",
        R"({"id": "a", "document": "Hello world.", "summary": "hi"})" "\n"
        R"({"id": "b", "document": "Second doc", "summary": "two"})" "\n");
    const auto docs = load_corpus(path);
    REQUIRE(docs.size() == 2);
    CHECK(docs[0].id == "a");
    CHECK(docs[0].document == std::vector<std::string>{"hello", "world", "."});
    CHECK(docs[0].summary == std::vector<std::string>{"hi"});
    CHECK(docs[1].id == "b");
}

TEST_CASE("load_corpus on an empty file yields an empty sequence") {
    const std::string path = write_temp("corpus_empty.jsonl", "");
    CHECK(load_corpus(path).empty());
}

TEST_CASE("load_corpus reports the offending line") {
    const std::string path = write_temp(
        "corpus_bad.jsonl",
        R"({"id": "a", "document": "x", "summary": "y"})" "\n"
        R"({"id": "b", "document": "x"})" "\n");
    CHECK_THROWS_WITH_AS(load_corpus(path), doctest::Contains(":2"), std::runtime_error);
}

TEST_CASE("load_corpus rejects duplicate ids") {
    const std::string path = write_temp(
        "corpus_dup.jsonl",
        R"({"id": "a", "document": "x", "summary": "y"})" "\n"
        R"({"id": "a", "document": "z", "summary": "w"})" "\n");
    CHECK_THROWS_WITH_AS(load_corpus(path), doctest::Contains("duplicate id"), std::runtime_error);
}

TEST_CASE("split_words lowercases and splits off punctuation") {
    CHECK(split_words("The cat, sat!") ==
          std::vector<std::string>{"the", "cat", ",", "sat", "!"});
    CHECK(split_words("a2b c") == std::vector<std::string>{"a2b", "c"});
    CHECK(split_words("").empty());
}

TEST_CASE("build_vocabulary ranks by frequency then lexicographically") {
    Document d1{"1", {"a", "a", "a", "b"}, {}};
    const Vocabulary vocab = build_vocabulary({d1}, 8);
    CHECK(vocab.id_of("a") == 6);
    CHECK(vocab.id_of("b") == 7);

    // Tie a x2, b x2 with room for one word: lexicographic winner admitted.
    Document d2{"1", {"b", "a", "b", "a"}, {}};
    const Vocabulary tied = build_vocabulary({d2}, 7);
    CHECK(tied.id_of("a") == 6);
    CHECK(tied.id_of("b") == UNK);
}

TEST_CASE("build_vocabulary with max_size 6 holds only specials") {
    Document d{"1", {"a"}, {}};
    const Vocabulary vocab = build_vocabulary({d}, 6);
    CHECK(vocab.size() == kNumSpecials);
    CHECK(vocab.id_of("a") == UNK);
    CHECK_THROWS_AS(build_vocabulary({d}, 5), std::invalid_argument);
}

TEST_CASE("build_vocabulary counts summary words too") {
    Document d{"1", {"doc"}, {"sum", "sum"}};
    const Vocabulary vocab = build_vocabulary({d}, 8);
    CHECK(vocab.id_of("sum") == 6);
    CHECK(vocab.id_of("doc") == 7);
}

TEST_CASE("tokenize maps known words and UNKs the rest") {
    Document d{"1", {"the", "cat"}, {}};
    const Vocabulary vocab = build_vocabulary({d}, 10);
    CHECK(tokenize({"the", "cat"}, vocab).ids ==
          std::vector<TokenId>{vocab.id_of("the"), vocab.id_of("cat")});
    CHECK(tokenize({"zzz"}, vocab).ids == std::vector<TokenId>{UNK});
    CHECK(tokenize({}, vocab).ids.empty());
}

TEST_CASE("specials occupy the fixed ids") {
    const Vocabulary vocab;
    CHECK(PAD == 0);
    CHECK(BOS == 1);
    CHECK(EOS == 2);
    CHECK(UNK == 3);
    CHECK(TASK == 4);
    CHECK(SEP == 5);
    CHECK(vocab.word_of(PAD) == "<pad>");
    CHECK(vocab.word_of(SEP) == "<sep>");
}

TEST_CASE("tokenize round-trips in-vocabulary words and preserves length") {
    const std::vector<std::string> lexicon = {"ant", "bee", "cat", "dog", "elk"};
    Document all{"1", lexicon, {}};
    const Vocabulary vocab = build_vocabulary({all}, 32);

    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::string> words;
        const std::size_t len = rng.next_below(12);
        for (std::size_t i = 0; i < len; ++i) {
            words.push_back(lexicon[rng.next_below(lexicon.size())]);
        }
        const TokenSeq toks = tokenize(words, vocab);
        CHECK(toks.size() == words.size());
        CHECK(detokenize(toks, vocab) == words);
    }
}

TEST_CASE("build_vocabulary is deterministic") {
    Document d{"1", {"x", "y", "x", "z"}, {"w"}};
    const Vocabulary a = build_vocabulary({d}, 16);
    const Vocabulary b = build_vocabulary({d}, 16);
    REQUIRE(a.size() == b.size());
    for (TokenId id = 0; id < a.size(); ++id) {
        CHECK(a.word_of(id) == b.word_of(id));
    }
}
