#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace egad {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

using TokenId = int;

// Tokenized text. Every id is < the owning vocabulary's size.
struct TokenSeq {
    std::vector<TokenId> ids;

    TokenSeq() = default;
    explicit TokenSeq(std::vector<TokenId> v) : ids(std::move(v)) {}
    TokenSeq(std::initializer_list<TokenId> v) : ids(v) {}

    std::size_t size() const { return ids.size(); }
    bool empty() const { return ids.empty(); }
    TokenId operator[](std::size_t i) const { return ids[i]; }

    bool operator==(const TokenSeq&) const = default;
};

// Reserved token ids, fixed in this order at the bottom of every vocabulary.
enum Special : TokenId {
    PAD = 0,
    BOS = 1,
    EOS = 2,
    UNK = 3,
    TASK = 4,
    SEP = 5,
};

inline constexpr int kNumSpecials = 6;

}  // namespace egad
