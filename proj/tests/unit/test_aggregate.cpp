#include <catch2/catch_amalgamated.hpp>

#include "evdet/aggregate.hpp"
#include "evdet/rng.hpp"

using namespace evdet;

namespace {

CandidateSet<double> make_set(std::vector<double> sims, int d = 3) {
    CandidateSet<double> s;
    s.similarities = sims;
    s.candidates.resize(Eigen::Index(sims.size()), d);
    for (Eigen::Index i = 0; i < s.candidates.rows(); ++i)
        for (Eigen::Index j = 0; j < d; ++j) s.candidates(i, j) = double(i * 10 + j);
    return s;
}

}  // namespace

TEST_CASE("subset mean over indices passing the threshold") {
    auto s = make_set({0.95, 0.2, 0.99});
    auto out = aggregate(s, 0.9);
    Eigen::RowVector3d expect = (s.candidates.row(0) + s.candidates.row(2)) / 2.0;
    CHECK(out.isApprox(expect));
}

TEST_CASE("argmax fallback when one or no candidates pass") {
    auto s = make_set({0.5, 0.7});
    CHECK(aggregate(s, 0.9).isApprox(s.candidates.row(1)));

    auto s2 = make_set({0.5, 0.95, 0.7});
    CHECK(aggregate(s2, 0.9).isApprox(s2.candidates.row(1)));
}

TEST_CASE("argmax ties break toward the lowest index") {
    auto s = make_set({0.6, 0.6, 0.4});
    CHECK(aggregate(s, 0.9).isApprox(s.candidates.row(0)));
}

TEST_CASE("identical candidates aggregate to themselves") {
    CandidateSet<double> s;
    s.similarities = {0.1, 0.95, 0.99};
    s.candidates.resize(3, 4);
    Eigen::RowVector4d v(1.5, -2.0, 0.25, 9.0);
    for (int i = 0; i < 3; ++i) s.candidates.row(i) = v;
    CHECK(aggregate(s, 0.9).isApprox(v));
    CHECK(aggregate(s, 0.5).isApprox(v));
}

TEST_CASE("output stays inside the candidate convex hull") {
    auto rng = make_rng(17);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    for (int trial = 0; trial < 30; ++trial) {
        CandidateSet<double> s;
        const int n = 2 + int(rng() % 6);
        s.candidates.resize(n, 2);
        for (int i = 0; i < n; ++i) {
            s.candidates(i, 0) = u(rng) * 10;
            s.candidates(i, 1) = u(rng) * 10;
            s.similarities.push_back(u(rng));
        }
        auto out = aggregate(s, 0.5);
        for (int c = 0; c < 2; ++c) {
            CHECK(out(0, c) >= s.candidates.col(c).minCoeff() - 1e-12);
            CHECK(out(0, c) <= s.candidates.col(c).maxCoeff() + 1e-12);
        }
    }
}

TEST_CASE("raising alpha never enlarges the passing set") {
    auto s = make_set({0.3, 0.6, 0.91, 0.97, 0.85});
    auto passing = [&](double alpha) {
        int c = 0;
        for (auto q : s.similarities)
            if (q > alpha) ++c;
        return c;
    };
    int prev = passing(0.1);
    for (double alpha : {0.3, 0.5, 0.7, 0.9, 0.95}) {
        const int cur = passing(alpha);
        CHECK(cur <= prev);
        prev = cur;
    }
}

TEST_CASE("ablation variants: top-k and plain average") {
    auto s = make_set({0.9, 0.1, 0.8, 0.3});
    auto top2 = aggregate_top_k(s, 2);
    CHECK(top2.isApprox(((s.candidates.row(0) + s.candidates.row(2)) / 2.0).eval()));

    auto avg = aggregate_average(s);
    CHECK(avg.isApprox(s.candidates.colwise().mean().eval()));
}

TEST_CASE("empty candidate set is rejected") {
    CandidateSet<double> s;
    s.candidates.resize(0, 3);
    CHECK_THROWS_AS(aggregate(s, 0.5), ValidationError);
    CHECK_THROWS_AS(aggregate_average(s), ValidationError);
}
