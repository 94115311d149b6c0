#include "egad/attention_pattern.hpp"

#include <deque>
#include <fstream>
#include <stdexcept>

#include "egad/rng.hpp"

namespace egad {

const char* to_string(PatternKind kind) {
    switch (kind) {
        case PatternKind::Full: return "full";
        case PatternKind::Window: return "window";
        case PatternKind::Longformer: return "longformer";
        case PatternKind::BigBird: return "bigbird";
        case PatternKind::Egad: return "egad";
    }
    return "?";
}

PatternKind pattern_kind_from_string(const std::string& name) {
    if (name == "full") return PatternKind::Full;
    if (name == "window") return PatternKind::Window;
    if (name == "longformer") return PatternKind::Longformer;
    if (name == "bigbird") return PatternKind::BigBird;
    if (name == "egad") return PatternKind::Egad;
    throw std::invalid_argument("unknown pattern kind: " + name);
}

std::vector<std::vector<int>> AttentionPattern::row_allowed() const {
    std::vector<std::vector<int>> rows(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        if (globals.count(i)) {
            rows[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(n));
            for (int j = 0; j < n; ++j) rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = j;
            continue;
        }
        auto& row = rows[static_cast<std::size_t>(i)];
        const int reach = half_width * dilation;
        for (int g : globals) {
            // Globals outside the window are still attended as keys.
            if (g < i - reach || g > i + reach || (i - g) % dilation != 0) row.push_back(g);
        }
        for (int j = std::max(0, i - reach); j <= std::min(n - 1, i + reach); ++j) {
            if ((i - j) % dilation == 0) row.push_back(j);
        }
        std::sort(row.begin(), row.end());
    }
    return rows;
}

AttentionPattern build_pattern(PatternKind kind, int n, int half_width, int dilation,
                               const std::set<int>& globals, int random_count,
                               std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("pattern length must be >= 1");
    if (half_width < 0) throw std::invalid_argument("half_width must be >= 0");
    if (dilation < 1) throw std::invalid_argument("dilation must be >= 1");
    for (int g : globals) {
        if (g < 0 || g >= n) {
            throw std::invalid_argument("global index " + std::to_string(g) +
                                        " outside sequence of length " + std::to_string(n));
        }
    }

    AttentionPattern p;
    p.n = n;
    p.dilation = 1;
    switch (kind) {
        case PatternKind::Full:
            // A window spanning the whole sequence attends every pair.
            p.half_width = n - 1;
            break;
        case PatternKind::Window:
            p.half_width = half_width;
            p.dilation = dilation;
            break;
        case PatternKind::Longformer:
            p.half_width = half_width;
            p.dilation = dilation;
            p.globals = {0};
            break;
        case PatternKind::BigBird: {
            if (random_count < 0 || random_count > n) {
                throw std::invalid_argument("random global count outside [0, n]");
            }
            p.half_width = half_width;
            p.dilation = dilation;
            p.random_globals = AttentionPattern::RandomGlobals{random_count, seed};
            Rng rng(seed);
            for (std::size_t idx : sample_without_replacement(static_cast<std::size_t>(n),
                                                              static_cast<std::size_t>(random_count),
                                                              rng)) {
                p.globals.insert(static_cast<int>(idx));
            }
            break;
        }
        case PatternKind::Egad:
            p.half_width = half_width;
            p.dilation = dilation;
            p.globals = globals;
            break;
    }
    return p;
}

long long pair_count(const AttentionPattern& p) {
    long long count = 0;
    for (int i = 0; i < p.n; ++i) {
        for (int j = 0; j < p.n; ++j) {
            if (p.is_attended(i, j)) ++count;
        }
    }
    return count;
}

Eigen::MatrixXi reachability(const AttentionPattern& p, int layers) {
    if (layers < 0) throw std::invalid_argument("layer cap must be >= 0");
    Eigen::MatrixXi hops = Eigen::MatrixXi::Constant(p.n, p.n, kUnreachable);
    // BFS from each source column j along edges j -> i where i attends j.
    for (int j = 0; j < p.n; ++j) {
        hops(j, j) = 0;
        std::deque<int> frontier{j};
        int depth = 0;
        while (!frontier.empty() && depth < layers) {
            ++depth;
            std::deque<int> next;
            for (int u : frontier) {
                for (int i = 0; i < p.n; ++i) {
                    if (hops(i, j) == kUnreachable && p.is_attended(i, u)) {
                        hops(i, j) = depth;
                        next.push_back(i);
                    }
                }
            }
            frontier = std::move(next);
        }
    }
    return hops;
}

std::string render_mask_pgm(const AttentionPattern& p) {
    std::string out = "P2\n" + std::to_string(p.n) + " " + std::to_string(p.n) + "\n255\n";
    for (int i = 0; i < p.n; ++i) {
        for (int j = 0; j < p.n; ++j) {
            if (j > 0) out.push_back(' ');
            out += p.is_attended(i, j) ? "0" : "255";
        }
        out.push_back('\n');
    }
    return out;
}

void export_mask(const AttentionPattern& p, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open mask output file: " + path);
    }
    out << render_mask_pgm(p);
    if (!out) {
        throw std::runtime_error("failed writing mask to " + path);
    }
}

}  // namespace egad
