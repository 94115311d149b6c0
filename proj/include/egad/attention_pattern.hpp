#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "egad/types.hpp"

namespace egad {

enum class PatternKind { Full, Window, Longformer, BigBird, Egad };

const char* to_string(PatternKind kind);
PatternKind pattern_kind_from_string(const std::string& name);

// Predicate over (query, key) index pairs. Self-attention on the diagonal is
// always allowed; globals attend and are attended in both directions; all
// other pairs follow the dilated-window rule.
struct AttentionPattern {
    int n = 0;           // sequence length
    int half_width = 0;  // window half-width, tokens each side
    int dilation = 1;    // stride >= 1
    std::set<int> globals;

    struct RandomGlobals {
        int count = 0;
        std::uint64_t seed = 0;
    };
    std::optional<RandomGlobals> random_globals;  // set for BigBird builds

    bool is_attended(int query, int key) const {
        if (query == key) return true;
        if (globals.count(query) || globals.count(key)) return true;
        const int delta = query > key ? query - key : key - query;
        return delta <= half_width * dilation && delta % dilation == 0;
    }

    // Allowed key indices per query row, ascending. The sparse attention code
    // iterates these instead of scanning all n keys.
    std::vector<std::vector<int>> row_allowed() const;
};

AttentionPattern build_pattern(PatternKind kind, int n, int half_width, int dilation,
                               const std::set<int>& globals, int random_count = 0,
                               std::uint64_t seed = 0);

// Exact number of attended (query, key) pairs.
long long pair_count(const AttentionPattern& p);

// Minimum attention steps for information at column j to reach row i, on the
// directed graph with edge i <- j iff is_attended(i, j). Entries above the
// layer cap are set to -1 (unreachable within the cap).
Eigen::MatrixXi reachability(const AttentionPattern& p, int layers);

inline constexpr int kUnreachable = -1;

// ASCII PGM (P2), n x n, attended cell = 0 (dark), unattended = 255.
// Row i is query index i. Output is byte-deterministic.
void export_mask(const AttentionPattern& p, const std::string& path);

std::string render_mask_pgm(const AttentionPattern& p);

}  // namespace egad
