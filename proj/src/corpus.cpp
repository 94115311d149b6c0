#include "egad/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace egad {

namespace {

const std::vector<std::string> kSpecialWords = {
    "<pad>", "<s>", "</s>", "<unk>", "<task>", "<sep>",
};

bool is_word_char(unsigned char c) {
    return std::isalnum(c) || c >= 0x80;
}

}  // namespace

Vocabulary::Vocabulary() : id_to_word_(kSpecialWords) {}

TokenId Vocabulary::id_of(const std::string& word) const {
    auto it = word_to_id_.find(word);
    return it == word_to_id_.end() ? UNK : it->second;
}

const std::string& Vocabulary::word_of(TokenId id) const {
    if (id < 0 || id >= size()) {
        throw std::out_of_range("token id " + std::to_string(id) + " outside vocabulary");
    }
    return id_to_word_[static_cast<std::size_t>(id)];
}

TokenId Vocabulary::add_word(const std::string& word) {
    auto it = word_to_id_.find(word);
    if (it != word_to_id_.end()) return it->second;
    const TokenId id = size();
    word_to_id_.emplace(word, id);
    id_to_word_.push_back(word);
    return id;
}

std::vector<std::string> split_words(const std::string& text) {
    std::vector<std::string> words;
    std::string current;
    for (unsigned char c : text) {
        if (is_word_char(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else {
            if (!current.empty()) {
                words.push_back(std::move(current));
                current.clear();
            }
            if (!std::isspace(c)) {
                words.emplace_back(1, static_cast<char>(c));
            }
        }
    }
    if (!current.empty()) words.push_back(std::move(current));
    return words;
}

std::vector<Document> load_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open corpus file: " + path);
    }
    std::vector<Document> docs;
    std::unordered_map<std::string, std::size_t> seen_ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": invalid JSON: " + e.what());
        }
        for (const char* field : {"id", "document", "summary"}) {
            if (!obj.contains(field) || !obj[field].is_string()) {
                throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                         ": missing string field \"" + field + "\"");
            }
        }
        Document doc;
        doc.id = obj["id"].get<std::string>();
        doc.document = split_words(obj["document"].get<std::string>());
        doc.summary = split_words(obj["summary"].get<std::string>());
        if (doc.document.empty()) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": document text is empty");
        }
        auto [it, inserted] = seen_ids.emplace(doc.id, line_no);
        if (!inserted) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": duplicate id \"" +
                                     doc.id + "\" (first seen at line " +
                                     std::to_string(it->second) + ")");
        }
        docs.push_back(std::move(doc));
    }
    return docs;
}

Vocabulary build_vocabulary(const std::vector<Document>& docs, int max_size) {
    if (max_size < kNumSpecials) {
        throw std::invalid_argument("vocabulary max_size must be at least " +
                                    std::to_string(kNumSpecials));
    }
    // std::map keeps words ordered, which settles frequency ties ascending.
    std::map<std::string, long long> counts;
    for (const Document& doc : docs) {
        for (const std::string& w : doc.document) ++counts[w];
        for (const std::string& w : doc.summary) ++counts[w];
    }
    std::vector<std::pair<std::string, long long>> ranked(counts.begin(), counts.end());
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });

    Vocabulary vocab;
    const std::size_t budget = static_cast<std::size_t>(max_size - kNumSpecials);
    for (std::size_t i = 0; i < ranked.size() && i < budget; ++i) {
        vocab.add_word(ranked[i].first);
    }
    return vocab;
}

TokenSeq tokenize(const std::vector<std::string>& words, const Vocabulary& vocab) {
    TokenSeq out;
    out.ids.reserve(words.size());
    for (const std::string& w : words) {
        out.ids.push_back(vocab.id_of(w));
    }
    return out;
}

std::vector<std::string> detokenize(const TokenSeq& tokens, const Vocabulary& vocab) {
    std::vector<std::string> words;
    words.reserve(tokens.size());
    for (TokenId id : tokens.ids) {
        words.push_back(vocab.word_of(id));
    }
    return words;
}

std::vector<std::string> detokenize_content(const TokenSeq& tokens, const Vocabulary& vocab) {
    std::vector<std::string> words;
    for (TokenId id : tokens.ids) {
        if (id >= kNumSpecials) words.push_back(vocab.word_of(id));
    }
    return words;
}

std::string join_words(const std::vector<std::string>& words) {
    std::string out;
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (i > 0) out.push_back(' ');
        out += words[i];
    }
    return out;
}

}  // namespace egad
