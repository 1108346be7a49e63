#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>
#include <set>

#include "evdet/graph.hpp"
#include "evdet/rng.hpp"
#include "evdet/synthetic.hpp"

using namespace evdet;

namespace {

Message mk(const std::string& id, std::int64_t ts, const std::string& user,
           std::set<std::string> tags = {}, std::set<std::string> ents = {},
           std::set<std::string> mentions = {}) {
    Message m;
    m.id = id;
    m.text = "t";
    m.timestamp = ts;
    m.user = user;
    m.hashtags = std::move(tags);
    m.entities = std::move(ents);
    m.mentions = std::move(mentions);
    return m;
}

// O(N^2) oracle: recompute every edge by direct pairwise intersection
struct OracleEdges {
    std::set<std::pair<int, int>> h, u, e, d;
};

OracleEdges oracle(const MessageBlock& block, std::int64_t window) {
    OracleEdges out;
    auto inter = [](const std::set<std::string>& a, const std::set<std::string>& b) {
        std::size_t c = 0;
        for (const auto& x : a) c += b.count(x);
        return c;
    };
    const auto n = int(block.messages.size());
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const auto& a = block.messages[std::size_t(i)];
            const auto& b = block.messages[std::size_t(j)];
            if (inter(a.hashtags, b.hashtags) > 0) out.h.insert({i, j});
            auto ua = a.mentions;
            ua.insert(a.user);
            auto ub = b.mentions;
            ub.insert(b.user);
            if (inter(ua, ub) > 0) out.u.insert({i, j});
            if (inter(a.entities, b.entities) > 0) out.e.insert({i, j});
            if (std::llabs(a.timestamp - b.timestamp) <= window) out.d.insert({i, j});
        }
    }
    return out;
}

MessageBlock random_block(std::uint64_t seed, int n) {
    auto rng = make_rng(seed);
    MessageBlock b;
    b.index = 0;
    for (int i = 0; i < n; ++i) {
        std::set<std::string> tags, ents, mens;
        for (int k = 0; k < int(rng() % 3); ++k) tags.insert("h" + std::to_string(rng() % 6));
        for (int k = 0; k < int(rng() % 3); ++k) ents.insert("e" + std::to_string(rng() % 6));
        for (int k = 0; k < int(rng() % 2); ++k) mens.insert("u" + std::to_string(rng() % 8));
        b.messages.push_back(mk("m" + std::to_string(i), std::int64_t(rng() % 20000),
                                "u" + std::to_string(rng() % 8), tags, ents, mens));
    }
    std::stable_sort(b.messages.begin(), b.messages.end(),
                     [](const Message& x, const Message& y) { return x.timestamp < y.timestamp; });
    return b;
}

void check_against_oracle(const MessageBlock& block, std::int64_t window) {
    auto g = build_graph(block, window);
    auto o = oracle(block, window);
    const auto n = int(block.messages.size());
    auto idx = [&](int i) { return g.index_of(block.messages[std::size_t(i)].id); };
    std::size_t h = 0, u = 0, e = 0, d = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            CHECK(g.has_edge(Relation::Hashtag, idx(i), idx(j)) == (o.h.count({i, j}) > 0));
            CHECK(g.has_edge(Relation::User, idx(i), idx(j)) == (o.u.count({i, j}) > 0));
            CHECK(g.has_edge(Relation::Entity, idx(i), idx(j)) == (o.e.count({i, j}) > 0));
            CHECK(g.has_edge(Relation::Temporal, idx(i), idx(j)) == (o.d.count({i, j}) > 0));
        }
    }
    h = g.edge_count(Relation::Hashtag);
    u = g.edge_count(Relation::User);
    e = g.edge_count(Relation::Entity);
    d = g.edge_count(Relation::Temporal);
    CHECK(h == o.h.size());
    CHECK(u == o.u.size());
    CHECK(e == o.e.size());
    CHECK(d == o.d.size());
}

}  // namespace

TEST_CASE("shared hashtag creates a hashtag edge") {
    MessageBlock b;
    b.index = 0;
    b.messages = {mk("a", 0, "u1", {"nobel"}), mk("b", 50000, "u2", {"nobel"})};
    auto g = build_graph(b);
    CHECK(g.has_edge(Relation::Hashtag, 0, 1));
    CHECK_FALSE(g.has_edge(Relation::User, 0, 1));
    CHECK_FALSE(g.has_edge(Relation::Temporal, 0, 1));
}

TEST_CASE("author vs mention still connects the user relation") {
    MessageBlock b;
    b.index = 0;
    b.messages = {mk("a", 0, "alice"), mk("b", 99999, "bob", {}, {}, {"alice"})};
    auto g = build_graph(b);
    CHECK(g.has_edge(Relation::User, 0, 1));
}

TEST_CASE("single-message block has one node and no edges") {
    MessageBlock b;
    b.index = 0;
    b.messages = {mk("a", 0, "u1", {"x"})};
    auto g = build_graph(b);
    CHECK(g.size() == 1);
    auto s = graph_stats(g);
    CHECK(s.hashtag_edges + s.user_edges + s.entity_edges + s.temporal_edges == 0);
    CHECK(s.isolated_nodes == 1);
}

TEST_CASE("random blocks match the brute-force oracle") {
    for (std::uint64_t seed = 0; seed < 8; ++seed)
        check_against_oracle(random_block(seed, 20), 4000);
}

TEST_CASE("construction is order-invariant") {
    auto block = random_block(99, 15);
    auto permuted = block;
    auto rng = make_rng(1);
    std::shuffle(permuted.messages.begin(), permuted.messages.end(), rng);

    auto g1 = build_graph(block, 3000);
    auto g2 = build_graph(permuted, 3000);
    for (std::size_t i = 0; i < block.messages.size(); ++i) {
        for (std::size_t j = i + 1; j < block.messages.size(); ++j) {
            const auto& a = block.messages[i].id;
            const auto& b = block.messages[j].id;
            for (int t = 0; t < kNumRelations; ++t) {
                CHECK(g1.has_edge(Relation(t), g1.index_of(a), g1.index_of(b)) ==
                      g2.has_edge(Relation(t), g2.index_of(a), g2.index_of(b)));
            }
        }
    }
}

TEST_CASE("widening the temporal window never removes edges") {
    auto block = random_block(7, 18);
    auto g1 = build_graph(block, 2000);
    auto g2 = build_graph(block, 6000);
    for (std::uint32_t i = 0; i < g1.size(); ++i)
        for (std::uint32_t j = i + 1; j < g1.size(); ++j)
            if (g1.has_edge(Relation::Temporal, i, j)) CHECK(g2.has_edge(Relation::Temporal, i, j));
}

TEST_CASE("edges are symmetric") {
    auto block = random_block(3, 12);
    auto g = build_graph(block, 4000);
    for (std::uint32_t i = 0; i < g.size(); ++i)
        for (std::uint32_t j = 0; j < g.size(); ++j)
            for (int t = 0; t < kNumRelations; ++t)
                CHECK(g.has_edge(Relation(t), i, j) == g.has_edge(Relation(t), j, i));
}

TEST_CASE("richness counts types and shared attributes") {
    MessageBlock b;
    b.index = 0;
    b.messages = {mk("a", 0, "alice", {"t1", "t2"}, {"e1"}),
                  mk("b", 99999, "alice", {"t1", "t2"}, {"e9"}),
                  mk("c", 100, "zed", {}, {})};
    auto g = build_graph(b, 1000);

    auto r = g.richness(std::string("a"), std::string("b"));
    CHECK(r.type_count == 2);  // hashtag + user
    CHECK(r.shared_attribute_count == 3);  // t1, t2, alice

    auto rc = g.richness(std::string("a"), std::string("c"));
    CHECK(rc.type_count == 1);  // temporal only
    CHECK(rc.shared_attribute_count == 0);

    CHECK_THROWS_AS(g.richness(std::string("a"), std::string("nope")), ValidationError);
}

TEST_CASE("richness matches a brute-force recount on random blocks") {
    auto block = random_block(42, 16);
    auto g = build_graph(block, 4000);
    auto inter = [](const std::set<std::string>& a, const std::set<std::string>& b) {
        int c = 0;
        for (const auto& x : a) c += int(b.count(x));
        return c;
    };
    for (std::size_t i = 0; i < block.messages.size(); ++i) {
        for (std::size_t j = i + 1; j < block.messages.size(); ++j) {
            const auto& a = block.messages[i];
            const auto& b = block.messages[j];
            auto ua = a.mentions;
            ua.insert(a.user);
            auto ub = b.mentions;
            ub.insert(b.user);
            const int shared = inter(a.hashtags, b.hashtags) + inter(ua, ub) + inter(a.entities, b.entities);
            int types = 0;
            for (int t = 0; t < kNumRelations; ++t)
                types += g.has_edge(Relation(t), std::uint32_t(i), std::uint32_t(j)) ? 1 : 0;
            auto r = g.richness(std::uint32_t(i), std::uint32_t(j));
            CHECK(r.shared_attribute_count == shared);
            CHECK(r.type_count == types);
        }
    }
}

TEST_CASE("empty block is rejected") {
    MessageBlock b;
    CHECK_THROWS_AS(build_graph(b), ValidationError);
}
