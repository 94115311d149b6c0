#pragma once

#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "egad/types.hpp"

namespace egad {

// Word <-> id mapping. Ids 0..5 are the reserved specials (PAD, BOS, EOS,
// UNK, TASK, SEP); regular words start at id 6 and biject with their surface
// forms. No surface form the tokenizer can emit collides with a special,
// because special spellings contain angle brackets the tokenizer splits off.
class Vocabulary {
public:
    Vocabulary();

    // Id for a word, UNK when absent.
    TokenId id_of(const std::string& word) const;
    const std::string& word_of(TokenId id) const;
    bool contains(const std::string& word) const { return word_to_id_.count(word) > 0; }

    int size() const { return static_cast<int>(id_to_word_.size()); }

    // Admits a word if absent; returns its id either way.
    TokenId add_word(const std::string& word);

private:
    std::unordered_map<std::string, TokenId> word_to_id_;
    std::vector<std::string> id_to_word_;
};

// One corpus record: an input text and its reference summary, both kept as
// word sequences produced by split_words().
struct Document {
    std::string id;
    std::vector<std::string> document;
    std::vector<std::string> summary;
};

// Lowercased word split: alphanumeric runs stay whole, every other
// non-whitespace character becomes its own single-character word. Bytes
// >= 0x80 are treated as word characters so UTF-8 text stays intact.
std::vector<std::string> split_words(const std::string& text);

// Reads a UTF-8 JSON-lines corpus file; each line must be an object with
// string fields "id", "document", "summary". Malformed lines and duplicate
// ids raise std::runtime_error naming the offending line.
std::vector<Document> load_corpus(const std::string& path);

// Frequency-ranked vocabulary over document and summary words, ties broken
// lexicographically ascending; at most max_size - 6 words are admitted after
// the specials. max_size < 6 is rejected.
Vocabulary build_vocabulary(const std::vector<Document>& docs, int max_size);

// In-vocabulary word -> its id, out-of-vocabulary word -> UNK. Adds nothing.
TokenSeq tokenize(const std::vector<std::string>& words, const Vocabulary& vocab);

std::vector<std::string> detokenize(const TokenSeq& tokens, const Vocabulary& vocab);

// Words for the non-special tokens only; used when rendering generated text.
std::vector<std::string> detokenize_content(const TokenSeq& tokens, const Vocabulary& vocab);

std::string join_words(const std::vector<std::string>& words);

}  // namespace egad
