#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "evdet/cluster.hpp"
#include "evdet/metrics.hpp"
#include "evdet/rng.hpp"

using namespace evdet;

namespace {

// three well-separated gaussian blobs in 4-d
struct BlobFixture {
    Eigen::MatrixXd points;
    std::vector<std::int64_t> truth;
};

BlobFixture blobs(std::uint64_t seed, int per_blob = 100, double sigma = 1.0, double gap = 60.0) {
    auto rng = make_rng(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    BlobFixture f;
    f.points.resize(3 * per_blob, 4);
    for (int b = 0; b < 3; ++b) {
        Eigen::RowVector4d center = Eigen::RowVector4d::Zero();
        center[b] = gap;
        for (int i = 0; i < per_blob; ++i) {
            const int row = b * per_blob + i;
            for (int c = 0; c < 4; ++c) f.points(row, c) = center[c] + noise(rng);
            f.truth.push_back(b);
        }
    }
    return f;
}

double ari_non_noise(const std::vector<std::int64_t>& pred,
                     const std::vector<std::int64_t>& truth) {
    std::vector<std::int64_t> p, t;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] == kNoise) continue;
        p.push_back(pred[i]);
        t.push_back(truth[i]);
    }
    REQUIRE_FALSE(p.empty());
    return ari(p, t);
}

}  // namespace

TEST_CASE("kmeans with k=1 returns the mean as centroid") {
    Eigen::MatrixXd pts(4, 2);
    pts << 0, 0, 2, 0, 0, 2, 2, 2;
    auto res = kmeans(pts, 1, 50, 0);
    for (auto l : res.labels) CHECK(l == 0);
    CHECK(res.centroids.row(0).isApprox(Eigen::RowVector2d(1, 1)));
}

TEST_CASE("kmeans with k equal to distinct point count gives singletons") {
    Eigen::MatrixXd pts(4, 2);
    pts << 0, 0, 10, 0, 0, 10, 10, 10;
    auto res = kmeans(pts, 4, 50, 1);
    std::set<std::int64_t> labels(res.labels.begin(), res.labels.end());
    CHECK(labels.size() == 4);
}

TEST_CASE("kmeans rejects k above the number of distinct points") {
    Eigen::MatrixXd pts(3, 1);
    pts << 1, 1, 2;
    CHECK_THROWS_AS(kmeans(pts, 3, 10, 0), ValidationError);
}

TEST_CASE("kmeans separates gaussian blobs") {
    auto f = blobs(42);
    auto res = kmeans(f.points, 3, 100, 7);
    CHECK(ari(res.labels, f.truth) >= 0.95);
}

TEST_CASE("kmeans objective never increases") {
    auto rng = make_rng(4);
    std::normal_distribution<double> d(0.0, 5.0);
    Eigen::MatrixXd pts(60, 3);
    for (Eigen::Index i = 0; i < pts.rows(); ++i)
        for (Eigen::Index j = 0; j < pts.cols(); ++j) pts(i, j) = d(rng);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto res = kmeans(pts, 4, 100, seed);
        for (std::size_t i = 1; i < res.objective_trace.size(); ++i)
            CHECK(res.objective_trace[i] <= res.objective_trace[i - 1] + 1e-9);
    }
}

TEST_CASE("kmeans is deterministic given the seed") {
    auto f = blobs(3);
    auto a = kmeans(f.points, 3, 100, 11);
    auto b = kmeans(f.points, 3, 100, 11);
    CHECK(a.labels == b.labels);
}

TEST_CASE("dbscan clusters identical points together") {
    Eigen::MatrixXd pts = Eigen::MatrixXd::Zero(6, 2);
    auto labels = dbscan(pts, 0.5, 6);
    for (auto l : labels) CHECK(l == 0);
}

TEST_CASE("dbscan marks everything noise when nothing is reachable") {
    Eigen::MatrixXd pts(4, 1);
    pts << 0, 10, 20, 30;
    auto labels = dbscan(pts, 1.0, 2);
    for (auto l : labels) CHECK(l == kNoise);
}

TEST_CASE("dbscan separates gaussian blobs") {
    auto f = blobs(8);
    auto labels = dbscan(f.points, 5.0, 8);
    CHECK(ari_non_noise(labels, f.truth) >= 0.95);
    std::size_t noise = 0;
    for (auto l : labels)
        if (l == kNoise) ++noise;
    CHECK(double(noise) / double(labels.size()) <= 0.05);
}

TEST_CASE("dbscan clusters contain a core point") {
    auto f = blobs(15, 40, 1.5, 30.0);
    const double eps = 4.0;
    const int min_points = 6;
    auto labels = dbscan(f.points, eps, min_points);
    std::map<std::int64_t, std::vector<Eigen::Index>> members;
    for (Eigen::Index i = 0; i < f.points.rows(); ++i)
        if (labels[std::size_t(i)] != kNoise) members[labels[std::size_t(i)]].push_back(i);
    for (const auto& [label, rows] : members) {
        bool has_core = false;
        for (auto r : rows) {
            int within = 0;
            for (Eigen::Index j = 0; j < f.points.rows(); ++j)
                if ((f.points.row(r) - f.points.row(j)).norm() <= eps) ++within;
            if (within >= min_points) {
                has_core = true;
                break;
            }
        }
        CHECK(has_core);
    }
}

TEST_CASE("hdbscan labels everything noise when n is below min_cluster_size") {
    Eigen::MatrixXd pts = Eigen::MatrixXd::Random(5, 3);
    auto labels = hdbscan(pts, 8);
    for (auto l : labels) CHECK(l == kNoise);
}

TEST_CASE("hdbscan reports one tight blob as a single cluster") {
    auto rng = make_rng(5);
    std::normal_distribution<double> d(0.0, 0.5);
    Eigen::MatrixXd pts(100, 3);
    for (Eigen::Index i = 0; i < pts.rows(); ++i)
        for (Eigen::Index j = 0; j < pts.cols(); ++j) pts(i, j) = d(rng);
    auto labels = hdbscan(pts, 8);
    std::map<std::int64_t, int> counts;
    for (auto l : labels) ++counts[l];
    CHECK(counts.count(0) == 1);
    CHECK(counts[0] >= 95);
}

TEST_CASE("hdbscan separates gaussian blobs") {
    auto f = blobs(21);
    auto labels = hdbscan(f.points, 8);
    std::set<std::int64_t> clusters;
    std::size_t noise = 0;
    for (auto l : labels) {
        if (l == kNoise) ++noise;
        else clusters.insert(l);
    }
    CHECK(clusters.size() == 3);
    CHECK(double(noise) / double(labels.size()) <= 0.05);
    CHECK(ari_non_noise(labels, f.truth) >= 0.95);
}

TEST_CASE("hdbscan emitted clusters respect min_cluster_size") {
    auto f = blobs(33, 30, 2.0, 40.0);
    const int mcs = 8;
    auto labels = hdbscan(f.points, mcs);
    std::map<std::int64_t, int> counts;
    for (auto l : labels)
        if (l != kNoise) ++counts[l];
    for (const auto& [_, c] : counts) CHECK(c >= mcs);
}

TEST_CASE("all back-ends are invariant to global translation") {
    auto f = blobs(62, 50);
    Eigen::MatrixXd shifted = f.points;
    shifted.rowwise() += Eigen::RowVector4d(100.0, -50.0, 3.0, 7.0);

    auto km_a = kmeans(f.points, 3, 100, 5).labels;
    auto km_b = kmeans(shifted, 3, 100, 5).labels;
    CHECK(ari(km_a, km_b) == Catch::Approx(1.0));

    auto db_a = dbscan(f.points, 5.0, 8);
    auto db_b = dbscan(shifted, 5.0, 8);
    CHECK(db_a == db_b);  // fully deterministic, labels align exactly

    auto hd_a = hdbscan(f.points, 8);
    auto hd_b = hdbscan(shifted, 8);
    CHECK(ari(relabel_noise_as_singletons(hd_a), relabel_noise_as_singletons(hd_b)) ==
          Catch::Approx(1.0));
}

TEST_CASE("clustering config validation") {
    ClusteringConfig cfg;
    cfg.algorithm = ClusterAlgorithm::Dbscan;
    cfg.eps = -1;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    CHECK_THROWS_AS(parse_cluster_algorithm("optics"), ValidationError);
}
