#pragma once

// Multi-relational message graph: message nodes plus four typed edge sets
// (hashtag, user, entity, temporal). Built per block via inverted indices
// attribute -> messages, so the bipartite network is never materialized.

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "evdet/types.hpp"

namespace evdet {

enum class Relation : int { Hashtag = 0, User = 1, Entity = 2, Temporal = 3 };
inline constexpr int kNumRelations = 4;

struct RelationRichness {
    int type_count = 0;
    int shared_attribute_count = 0;
};

class MultiRelationalGraph {
public:
    using EdgeKey = std::uint64_t;

    static EdgeKey edge_key(std::uint32_t a, std::uint32_t b) {
        if (a > b) std::swap(a, b);
        return (std::uint64_t(a) << 32) | b;
    }

    std::size_t size() const { return ids_.size(); }
    const std::vector<std::string>& ids() const { return ids_; }

    std::uint32_t index_of(const std::string& id) const {
        auto it = index_.find(id);
        if (it == index_.end()) throw ValidationError("unknown message id '" + id + "'");
        return it->second;
    }

    bool has_edge(Relation r, std::uint32_t a, std::uint32_t b) const {
        if (a == b) return false;
        return edges_[int(r)].count(edge_key(a, b)) > 0;
    }

    std::size_t edge_count(Relation r) const { return edges_[int(r)].size(); }

    int degree(std::uint32_t n) const { return degree_[n]; }

    std::size_t isolated_count() const {
        std::size_t c = 0;
        for (int d : degree_)
            if (d == 0) ++c;
        return c;
    }

    // Neighbors across all relation types (each node listed once).
    const std::vector<std::uint32_t>& neighbors(std::uint32_t n) const { return adjacency_[n]; }

    RelationRichness richness(std::uint32_t a, std::uint32_t b) const {
        if (a >= size() || b >= size()) throw ValidationError("richness: node index out of range");
        RelationRichness r;
        for (int t = 0; t < kNumRelations; ++t)
            if (has_edge(Relation(t), a, b)) ++r.type_count;
        r.shared_attribute_count = int(set_intersection_size(hashtags_[a], hashtags_[b]) +
                                       set_intersection_size(users_[a], users_[b]) +
                                       set_intersection_size(entities_[a], entities_[b]));
        return r;
    }

    RelationRichness richness(const std::string& a, const std::string& b) const {
        return richness(index_of(a), index_of(b));
    }

    friend MultiRelationalGraph build_graph(const MessageBlock&, std::int64_t);

private:
    static std::size_t set_intersection_size(const std::set<std::string>& a,
                                             const std::set<std::string>& b) {
        const auto& small = a.size() <= b.size() ? a : b;
        const auto& large = a.size() <= b.size() ? b : a;
        std::size_t c = 0;
        for (const auto& s : small) c += large.count(s);
        return c;
    }

    void add_edge(Relation r, std::uint32_t a, std::uint32_t b) {
        if (a == b) return;
        edges_[int(r)].insert(edge_key(a, b));
        if (all_edges_.insert(edge_key(a, b)).second) {
            ++degree_[a];
            ++degree_[b];
            adjacency_[a].push_back(b);
            adjacency_[b].push_back(a);
        }
    }

    std::vector<std::string> ids_;
    std::unordered_map<std::string, std::uint32_t> index_;
    std::vector<std::set<std::string>> hashtags_, users_, entities_;
    std::unordered_set<EdgeKey> edges_[kNumRelations];
    std::unordered_set<EdgeKey> all_edges_;
    std::vector<int> degree_;
    std::vector<std::vector<std::uint32_t>> adjacency_;
};

inline MultiRelationalGraph build_graph(const MessageBlock& block,
                                        std::int64_t temporal_window_seconds = 14400) {
    if (block.messages.empty()) throw ValidationError("build_graph: empty block");
    MultiRelationalGraph g;
    const auto n = std::uint32_t(block.messages.size());
    g.ids_.reserve(n);
    g.hashtags_.resize(n);
    g.users_.resize(n);
    g.entities_.resize(n);
    g.degree_.assign(n, 0);
    g.adjacency_.resize(n);

    for (std::uint32_t i = 0; i < n; ++i) {
        const Message& m = block.messages[i];
        if (!g.index_.emplace(m.id, i).second)
            throw ValidationError("build_graph: duplicate message id '" + m.id + "'");
        g.ids_.push_back(m.id);
        g.hashtags_[i] = m.hashtags;
        g.entities_[i] = m.entities;
        g.users_[i] = m.mentions;
        g.users_[i].insert(m.user);  // user relation covers author and mentioned users
    }

    // inverted indices: attribute value -> message indices; std::map keeps bucket
    // iteration deterministic
    auto connect_buckets = [&](Relation r, auto get_set) {
        std::map<std::string, std::vector<std::uint32_t>> buckets;
        for (std::uint32_t i = 0; i < n; ++i)
            for (const auto& v : get_set(i)) buckets[v].push_back(i);
        for (const auto& [attr, members] : buckets)
            for (std::size_t a = 0; a < members.size(); ++a)
                for (std::size_t b = a + 1; b < members.size(); ++b)
                    g.add_edge(r, members[a], members[b]);
    };
    connect_buckets(Relation::Hashtag, [&](std::uint32_t i) -> const auto& { return g.hashtags_[i]; });
    connect_buckets(Relation::User, [&](std::uint32_t i) -> const auto& { return g.users_[i]; });
    connect_buckets(Relation::Entity, [&](std::uint32_t i) -> const auto& { return g.entities_[i]; });

    // temporal edges: |dt| <= window, found by a sliding window over the
    // timestamp-sorted order
    std::vector<std::uint32_t> order(n);
    for (std::uint32_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        return block.messages[a].timestamp < block.messages[b].timestamp;
    });
    std::size_t lo = 0;
    for (std::size_t hi = 0; hi < order.size(); ++hi) {
        const auto t_hi = block.messages[order[hi]].timestamp;
        while (t_hi - block.messages[order[lo]].timestamp > temporal_window_seconds) ++lo;
        for (std::size_t a = lo; a < hi; ++a)
            g.add_edge(Relation::Temporal, order[a], order[hi]);
    }
    return g;
}

struct GraphStats {
    std::size_t nodes = 0;
    std::size_t hashtag_edges = 0;
    std::size_t user_edges = 0;
    std::size_t entity_edges = 0;
    std::size_t temporal_edges = 0;
    std::size_t isolated_nodes = 0;
};

inline GraphStats graph_stats(const MultiRelationalGraph& g) {
    GraphStats s;
    s.nodes = g.size();
    s.hashtag_edges = g.edge_count(Relation::Hashtag);
    s.user_edges = g.edge_count(Relation::User);
    s.entity_edges = g.edge_count(Relation::Entity);
    s.temporal_edges = g.edge_count(Relation::Temporal);
    s.isolated_nodes = g.isolated_count();
    return s;
}

}  // namespace evdet
