#pragma once

// Pair sampling and the 4-symbol multi-relational sequence. Symbols use
// disjoint two-value alphabets: hashtag {0,1}, user {2,3}, entity {4,5},
// temporal {6,7}; the presence value is the odd one.

#include <algorithm>
#include <array>
#include <cstdint>
#include <vector>

#include "evdet/graph.hpp"
#include "evdet/rng.hpp"
#include "evdet/types.hpp"

namespace evdet {

struct MultiRelationalSequence {
    std::array<std::uint8_t, 4> symbols{0, 2, 4, 6};

    bool operator==(const MultiRelationalSequence&) const = default;

    bool has(Relation r) const { return symbols[int(r)] % 2 == 1; }
};

inline MultiRelationalSequence map_relations(const MultiRelationalGraph& g, std::uint32_t anchor,
                                             std::uint32_t sampled) {
    if (anchor >= g.size() || sampled >= g.size())
        throw ValidationError("map_relations: node index out of range");
    MultiRelationalSequence seq;
    seq.symbols[0] = g.has_edge(Relation::Hashtag, anchor, sampled) ? 1 : 0;
    seq.symbols[1] = g.has_edge(Relation::User, anchor, sampled) ? 3 : 2;
    seq.symbols[2] = g.has_edge(Relation::Entity, anchor, sampled) ? 5 : 4;
    seq.symbols[3] = g.has_edge(Relation::Temporal, anchor, sampled) ? 7 : 6;
    return seq;
}

inline MultiRelationalSequence map_relations(const MultiRelationalGraph& g, const std::string& anchor,
                                             const std::string& sampled) {
    return map_relations(g, g.index_of(anchor), g.index_of(sampled));
}

// Indices refer to positions within the block the pair was sampled from.
struct MessagePair {
    std::uint32_t anchor = 0;
    std::uint32_t sampled = 0;
    MultiRelationalSequence relations;
    std::optional<int> same_event;  // 1/0 in training mode, unset in detection mode
};

struct AnchorPairs {
    std::uint32_t anchor = 0;
    std::vector<MessagePair> pairs;
};

struct PairBatchSet {
    std::vector<AnchorPairs> anchors;
    int positive_shortfall = 0;  // training mode: anchors that could not fill y positives
    int partner_shortfall = 0;   // detection mode: anchors with fewer than n partners

    std::size_t total_pairs() const {
        std::size_t c = 0;
        for (const auto& a : anchors) c += a.pairs.size();
        return c;
    }
};

namespace detail {

struct RankedCandidate {
    std::uint32_t node;
    int type_count;
    int shared;
    std::uint64_t tiebreak;
};

// rich-first ordering with a seeded, schedule-independent tiebreak
inline bool richer(const RankedCandidate& a, const RankedCandidate& b) {
    if (a.type_count != b.type_count) return a.type_count > b.type_count;
    if (a.shared != b.shared) return a.shared > b.shared;
    return a.tiebreak < b.tiebreak;
}

inline bool sparser(const RankedCandidate& a, const RankedCandidate& b) {
    if (a.type_count != b.type_count) return a.type_count < b.type_count;
    if (a.shared != b.shared) return a.shared < b.shared;
    return a.tiebreak < b.tiebreak;
}

inline RankedCandidate rank_candidate(const MultiRelationalGraph& g, std::uint64_t anchor_seed,
                                      std::uint32_t anchor, std::uint32_t node) {
    auto r = g.richness(anchor, node);
    return {node, r.type_count, r.shared_attribute_count, hash_mix(anchor_seed, node)};
}

inline MessagePair make_pair(const MultiRelationalGraph& g, std::uint32_t anchor,
                             std::uint32_t sampled, std::optional<int> label) {
    return MessagePair{anchor, sampled, map_relations(g, anchor, sampled), label};
}

}  // namespace detail

// Training-mode sampling: per anchor, up to y same-event partners preferring rich
// connections and y different-event partners preferring sparse ones.
inline PairBatchSet sample_training_pairs(const MultiRelationalGraph& g, const MessageBlock& block,
                                          int y, std::uint64_t rng_seed) {
    if (y < 1) throw ValidationError("sample_training_pairs: y must be >= 1");
    if (!block.fully_labeled())
        throw ValidationError("sample_training_pairs: block must be fully labeled");
    if (block.messages.size() != g.size())
        throw ValidationError("sample_training_pairs: block and graph disagree");

    const auto n = std::uint32_t(block.messages.size());
    PairBatchSet out;
    out.anchors.reserve(n);

    for (std::uint32_t a = 0; a < n; ++a) {
        const std::uint64_t anchor_seed = hash_str(rng_seed, block.messages[a].id);
        const auto label = *block.messages[a].event_label;

        std::vector<detail::RankedCandidate> pos, neg;
        for (std::uint32_t b = 0; b < n; ++b) {
            if (b == a) continue;
            auto cand = detail::rank_candidate(g, anchor_seed, a, b);
            if (*block.messages[b].event_label == label)
                pos.push_back(cand);
            else
                neg.push_back(cand);
        }
        if (neg.empty())
            throw PipelineError("sample_training_pairs: anchor '" + block.messages[a].id +
                                "' has no negative candidates (single-event block)");

        std::sort(pos.begin(), pos.end(), detail::richer);
        std::sort(neg.begin(), neg.end(), detail::sparser);

        AnchorPairs ap;
        ap.anchor = a;
        const int n_pos = std::min<int>(y, int(pos.size()));
        const int n_neg = std::min<int>(y, int(neg.size()));
        if (n_pos < y) ++out.positive_shortfall;
        for (int i = 0; i < n_pos; ++i)
            ap.pairs.push_back(detail::make_pair(g, a, pos[i].node, 1));
        for (int i = 0; i < n_neg; ++i)
            ap.pairs.push_back(detail::make_pair(g, a, neg[i].node, 0));
        out.anchors.push_back(std::move(ap));
    }
    return out;
}

// Detection-mode sampling: per anchor, the n richest connected partners; when the
// anchor has fewer than n connected nodes the remainder is drawn uniformly from
// the rest of the block.
inline PairBatchSet sample_detection_pairs(const MultiRelationalGraph& g, const MessageBlock& block,
                                           int n_samples, std::uint64_t rng_seed) {
    if (n_samples < 1) throw ValidationError("sample_detection_pairs: n must be >= 1");
    if (block.messages.size() != g.size())
        throw ValidationError("sample_detection_pairs: block and graph disagree");
    if (block.messages.size() < 2)
        throw PipelineError("sample_detection_pairs: block of size 1 has no partners");

    const auto n = std::uint32_t(block.messages.size());
    PairBatchSet out;
    out.anchors.reserve(n);

    for (std::uint32_t a = 0; a < n; ++a) {
        const std::uint64_t anchor_seed = hash_str(rng_seed, block.messages[a].id);

        std::vector<detail::RankedCandidate> connected;
        connected.reserve(g.neighbors(a).size());
        for (std::uint32_t b : g.neighbors(a))
            connected.push_back(detail::rank_candidate(g, anchor_seed, a, b));
        std::sort(connected.begin(), connected.end(), detail::richer);

        AnchorPairs ap;
        ap.anchor = a;
        std::vector<bool> taken(n, false);
        taken[a] = true;
        for (const auto& c : connected) {
            if (int(ap.pairs.size()) >= n_samples) break;
            ap.pairs.push_back(detail::make_pair(g, a, c.node, std::nullopt));
            taken[c.node] = true;
        }
        if (int(ap.pairs.size()) < n_samples) {
            std::vector<std::uint32_t> rest;
            rest.reserve(n - 1);
            for (std::uint32_t b = 0; b < n; ++b)
                if (!taken[b]) rest.push_back(b);
            auto rng = make_rng(anchor_seed);
            std::shuffle(rest.begin(), rest.end(), rng);
            for (std::uint32_t b : rest) {
                if (int(ap.pairs.size()) >= n_samples) break;
                ap.pairs.push_back(detail::make_pair(g, a, b, std::nullopt));
            }
        }
        if (int(ap.pairs.size()) < n_samples) ++out.partner_shortfall;
        out.anchors.push_back(std::move(ap));
    }
    return out;
}

}  // namespace evdet
