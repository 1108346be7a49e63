#pragma once

// Clustering back-ends over final message representations. All three are
// deterministic given seed and input order. Density methods emit kNoise (-1)
// for unassigned points.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "evdet/rng.hpp"
#include "evdet/types.hpp"

namespace evdet {

inline constexpr std::int64_t kNoise = -1;

enum class ClusterAlgorithm { KMeans, Dbscan, Hdbscan };

inline ClusterAlgorithm parse_cluster_algorithm(const std::string& s) {
    if (s == "kmeans") return ClusterAlgorithm::KMeans;
    if (s == "dbscan") return ClusterAlgorithm::Dbscan;
    if (s == "hdbscan") return ClusterAlgorithm::Hdbscan;
    throw ValidationError("unknown clustering algorithm '" + s + "'");
}

struct ClusteringConfig {
    ClusterAlgorithm algorithm = ClusterAlgorithm::KMeans;
    int k = 0;  // kmeans; 0 means "derive from ground-truth event count"
    double eps = 5.0;
    int min_points = 8;
    int min_cluster_size = 8;
    int max_iterations = 100;
    std::uint64_t rng_seed = 0;

    void validate() const {
        if (algorithm == ClusterAlgorithm::KMeans && k < 0)
            throw ValidationError("clustering config: k must be >= 1 (or 0 for auto)");
        if (eps <= 0.0) throw ValidationError("clustering config: eps must be > 0");
        if (min_points < 1) throw ValidationError("clustering config: min_points must be >= 1");
        if (min_cluster_size < 2)
            throw ValidationError("clustering config: min_cluster_size must be >= 2");
        if (max_iterations < 1)
            throw ValidationError("clustering config: max_iterations must be >= 1");
    }
};

struct KMeansResult {
    std::vector<std::int64_t> labels;
    Eigen::MatrixXd centroids;
    std::vector<double> objective_trace;  // sum of squared distances after each update
};

inline KMeansResult kmeans(const Eigen::MatrixXd& points, int k, int max_iterations = 100,
                           std::uint64_t rng_seed = 0) {
    const auto n = points.rows();
    if (n == 0) throw ValidationError("kmeans: no points");
    if (k < 1) throw ValidationError("kmeans: k must be >= 1");

    std::vector<Eigen::Index> distinct;
    for (Eigen::Index i = 0; i < n; ++i) {
        bool dup = false;
        for (auto j : distinct)
            if ((points.row(i) - points.row(j)).squaredNorm() == 0.0) {
                dup = true;
                break;
            }
        if (!dup) distinct.push_back(i);
    }
    if (std::size_t(k) > distinct.size())
        throw ValidationError("kmeans: k exceeds number of distinct points");

    auto rng = make_rng(rng_seed);

    // k-means++ seeding over the distinct points
    Eigen::MatrixXd centroids(k, points.cols());
    {
        std::uniform_int_distribution<std::size_t> first(0, distinct.size() - 1);
        centroids.row(0) = points.row(distinct[first(rng)]);
        Eigen::VectorXd d2 = (points.rowwise() - centroids.row(0)).rowwise().squaredNorm();
        for (int c = 1; c < k; ++c) {
            double total = d2.sum();
            Eigen::Index chosen = distinct[0];
            if (total > 0.0) {
                std::uniform_real_distribution<double> u(0.0, total);
                double target = u(rng), acc = 0.0;
                for (Eigen::Index i = 0; i < n; ++i) {
                    acc += d2[i];
                    if (acc >= target) {
                        chosen = i;
                        break;
                    }
                }
            } else {
                // all mass at chosen centroids already; fall back to an unused distinct point
                for (auto i : distinct) {
                    bool used = false;
                    for (int cc = 0; cc < c; ++cc)
                        if ((points.row(i) - centroids.row(cc)).squaredNorm() == 0.0) used = true;
                    if (!used) {
                        chosen = i;
                        break;
                    }
                }
            }
            centroids.row(c) = points.row(chosen);
            d2 = d2.cwiseMin((points.rowwise() - centroids.row(c)).rowwise().squaredNorm());
        }
    }

    KMeansResult res;
    res.labels.assign(std::size_t(n), 0);
    std::vector<std::int64_t> prev(std::size_t(n), -1);

    for (int iter = 0; iter < max_iterations; ++iter) {
        // assignment
        for (Eigen::Index i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::max();
            int best_c = 0;
            for (int c = 0; c < k; ++c) {
                double d = (points.row(i) - centroids.row(c)).squaredNorm();
                if (d < best) {
                    best = d;
                    best_c = c;
                }
            }
            res.labels[std::size_t(i)] = best_c;
        }

        // update, reseeding empty clusters with the point farthest from its centroid
        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
        std::vector<std::int64_t> counts(std::size_t(k), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            sums.row(res.labels[std::size_t(i)]) += points.row(i);
            ++counts[std::size_t(res.labels[std::size_t(i)])];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[std::size_t(c)] > 0) {
                centroids.row(c) = sums.row(c) / double(counts[std::size_t(c)]);
            } else {
                Eigen::Index far_i = 0;
                double far_d = -1.0;
                for (Eigen::Index i = 0; i < n; ++i) {
                    double d = (points.row(i) - centroids.row(res.labels[std::size_t(i)])).squaredNorm();
                    if (d > far_d) {
                        far_d = d;
                        far_i = i;
                    }
                }
                centroids.row(c) = points.row(far_i);
                res.labels[std::size_t(far_i)] = c;
            }
        }

        double obj = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            obj += (points.row(i) - centroids.row(res.labels[std::size_t(i)])).squaredNorm();
        res.objective_trace.push_back(obj);

        if (res.labels == prev) break;
        prev = res.labels;
    }
    res.centroids = std::move(centroids);
    return res;
}

inline std::vector<std::int64_t> dbscan(const Eigen::MatrixXd& points, double eps, int min_points) {
    if (eps <= 0.0) throw ValidationError("dbscan: eps must be > 0");
    if (min_points < 1) throw ValidationError("dbscan: min_points must be >= 1");
    const auto n = points.rows();
    const double eps2 = eps * eps;

    auto region_query = [&](Eigen::Index p) {
        std::vector<Eigen::Index> out;
        for (Eigen::Index q = 0; q < n; ++q)
            if ((points.row(p) - points.row(q)).squaredNorm() <= eps2) out.push_back(q);
        return out;  // includes p itself
    };

    std::vector<std::int64_t> labels(std::size_t(n), kNoise);
    std::vector<bool> visited(std::size_t(n), false);
    std::int64_t cluster = 0;

    for (Eigen::Index p = 0; p < n; ++p) {
        if (visited[std::size_t(p)]) continue;
        visited[std::size_t(p)] = true;
        auto neigh = region_query(p);
        if (int(neigh.size()) < min_points) continue;  // not core; may become border later

        labels[std::size_t(p)] = cluster;
        std::vector<Eigen::Index> frontier(neigh.begin(), neigh.end());
        for (std::size_t fi = 0; fi < frontier.size(); ++fi) {
            Eigen::Index q = frontier[fi];
            if (labels[std::size_t(q)] == kNoise) labels[std::size_t(q)] = cluster;  // border
            if (visited[std::size_t(q)]) continue;
            visited[std::size_t(q)] = true;
            labels[std::size_t(q)] = cluster;
            auto qn = region_query(q);
            if (int(qn.size()) >= min_points)
                frontier.insert(frontier.end(), qn.begin(), qn.end());
        }
        ++cluster;
    }
    return labels;
}

namespace detail {

struct CondensedRow {
    int parent;       // condensed cluster id
    std::int64_t child;  // >= 0: point index; < 0: -(cluster id)-1
    double lambda;
    std::int64_t size;
};

}  // namespace detail

// Hierarchical density clustering: mutual-reachability MST, condensed tree with
// minimum size, excess-of-mass selection. min_samples is tied to
// min_cluster_size. A lone dense blob is reported as one cluster.
inline std::vector<std::int64_t> hdbscan(const Eigen::MatrixXd& points, int min_cluster_size) {
    if (min_cluster_size < 2) throw ValidationError("hdbscan: min_cluster_size must be >= 2");
    const auto n = points.rows();
    std::vector<std::int64_t> labels(std::size_t(n), kNoise);
    if (n < min_cluster_size) return labels;

    constexpr double kHugeLambda = 1e12;

    // core distance: distance to the k-th nearest neighbor, k = min_samples
    const int k_core = std::min<int>(min_cluster_size, int(n) - 1);
    Eigen::MatrixXd dist(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        dist(i, i) = 0.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            double d = (points.row(i) - points.row(j)).norm();
            dist(i, j) = d;
            dist(j, i) = d;
        }
    }
    std::vector<double> core(static_cast<std::size_t>(n));
    {
        std::vector<double> row(std::size_t(n) - 1);
        for (Eigen::Index i = 0; i < n; ++i) {
            std::size_t w = 0;
            for (Eigen::Index j = 0; j < n; ++j)
                if (j != i) row[w++] = dist(i, j);
            std::nth_element(row.begin(), row.begin() + (k_core - 1), row.end());
            core[std::size_t(i)] = row[std::size_t(k_core - 1)];
        }
    }
    auto mreach = [&](Eigen::Index a, Eigen::Index b) {
        return std::max({core[std::size_t(a)], core[std::size_t(b)], dist(a, b)});
    };

    // Prim's MST over the complete mutual-reachability graph
    std::vector<double> best(std::size_t(n), std::numeric_limits<double>::max());
    std::vector<Eigen::Index> best_from(std::size_t(n), 0);
    std::vector<bool> in_tree(std::size_t(n), false);
    struct MstEdge {
        Eigen::Index a, b;
        double w;
    };
    std::vector<MstEdge> mst;
    mst.reserve(std::size_t(n) - 1);
    in_tree[0] = true;
    for (Eigen::Index j = 1; j < n; ++j) {
        best[std::size_t(j)] = mreach(0, j);
        best_from[std::size_t(j)] = 0;
    }
    for (Eigen::Index step = 1; step < n; ++step) {
        Eigen::Index pick = -1;
        double pick_w = std::numeric_limits<double>::max();
        for (Eigen::Index j = 0; j < n; ++j)
            if (!in_tree[std::size_t(j)] && best[std::size_t(j)] < pick_w) {
                pick_w = best[std::size_t(j)];
                pick = j;
            }
        in_tree[std::size_t(pick)] = true;
        mst.push_back({best_from[std::size_t(pick)], pick, pick_w});
        for (Eigen::Index j = 0; j < n; ++j)
            if (!in_tree[std::size_t(j)]) {
                double w = mreach(pick, j);
                if (w < best[std::size_t(j)]) {
                    best[std::size_t(j)] = w;
                    best_from[std::size_t(j)] = pick;
                }
            }
    }
    std::stable_sort(mst.begin(), mst.end(), [](const MstEdge& a, const MstEdge& b) { return a.w < b.w; });

    // single-linkage binary tree: nodes 0..n-1 are points, n..2n-2 are merges
    const std::int64_t n_nodes = 2 * n - 1;
    std::vector<std::int64_t> left(std::size_t(n_nodes), -1), right(std::size_t(n_nodes), -1);
    std::vector<double> merge_w(std::size_t(n_nodes), 0.0);
    std::vector<std::int64_t> subtree(std::size_t(n_nodes), 1);
    {
        std::vector<std::int64_t> repr(static_cast<std::size_t>(n_nodes));
        std::vector<std::int64_t> uf_parent(static_cast<std::size_t>(n_nodes));
        std::iota(uf_parent.begin(), uf_parent.end(), 0);
        std::iota(repr.begin(), repr.end(), 0);
        std::function<std::int64_t(std::int64_t)> find = [&](std::int64_t x) {
            while (uf_parent[std::size_t(x)] != x) {
                uf_parent[std::size_t(x)] = uf_parent[std::size_t(uf_parent[std::size_t(x)])];
                x = uf_parent[std::size_t(x)];
            }
            return x;
        };
        std::int64_t next = n;
        for (const auto& e : mst) {
            auto ra = find(e.a), rb = find(e.b);
            left[std::size_t(next)] = repr[std::size_t(ra)];
            right[std::size_t(next)] = repr[std::size_t(rb)];
            merge_w[std::size_t(next)] = e.w;
            subtree[std::size_t(next)] =
                subtree[std::size_t(repr[std::size_t(ra)])] + subtree[std::size_t(repr[std::size_t(rb)])];
            uf_parent[std::size_t(ra)] = next;
            uf_parent[std::size_t(rb)] = next;
            repr[std::size_t(next)] = next;
            next++;
        }
    }

    auto collect_leaves = [&](std::int64_t node, std::vector<std::int64_t>& out) {
        std::vector<std::int64_t> stack{node};
        while (!stack.empty()) {
            auto cur = stack.back();
            stack.pop_back();
            if (cur < n) {
                out.push_back(cur);
            } else {
                stack.push_back(left[std::size_t(cur)]);
                stack.push_back(right[std::size_t(cur)]);
            }
        }
    };

    // condense: clusters get ids 0.. with 0 = root (born at lambda 0)
    std::vector<detail::CondensedRow> rows;
    std::vector<double> birth{0.0};
    std::vector<int> parent_cluster{-1};
    struct Frame {
        std::int64_t node;
        int cluster;
    };
    std::vector<Frame> stack{{n_nodes - 1, 0}};
    while (!stack.empty()) {
        auto [node, cluster] = stack.back();
        stack.pop_back();
        const double lam = merge_w[std::size_t(node)] > 0.0 ? 1.0 / merge_w[std::size_t(node)] : kHugeLambda;
        const std::int64_t l = left[std::size_t(node)], r = right[std::size_t(node)];
        const std::int64_t sl = subtree[std::size_t(l)], sr = subtree[std::size_t(r)];
        const bool l_big = sl >= min_cluster_size, r_big = sr >= min_cluster_size;
        if (l_big && r_big) {
            for (std::int64_t child : {l, r}) {
                int id = int(birth.size());
                birth.push_back(lam);
                parent_cluster.push_back(cluster);
                rows.push_back({cluster, -std::int64_t(id) - 1, lam, subtree[std::size_t(child)]});
                stack.push_back({child, id});
            }
        } else if (l_big || r_big) {
            const std::int64_t cont = l_big ? l : r, fall = l_big ? r : l;
            std::vector<std::int64_t> leaves;
            collect_leaves(fall, leaves);
            for (auto p : leaves) rows.push_back({cluster, p, lam, 1});
            stack.push_back({cont, cluster});
        } else {
            std::vector<std::int64_t> leaves;
            collect_leaves(l, leaves);
            collect_leaves(r, leaves);
            for (auto p : leaves) rows.push_back({cluster, p, lam, 1});
        }
    }

    const int n_clusters = int(birth.size());
    std::vector<double> stability(std::size_t(n_clusters), 0.0);
    std::vector<std::vector<int>> children(static_cast<std::size_t>(n_clusters));
    for (const auto& row : rows) {
        stability[std::size_t(row.parent)] += double(row.size) * (row.lambda - birth[std::size_t(row.parent)]);
        if (row.child < 0) children[std::size_t(row.parent)].push_back(int(-row.child - 1));
    }

    // excess-of-mass: keep a cluster when it is at least as stable as its children
    std::vector<double> value(std::size_t(n_clusters), 0.0);
    std::vector<bool> keep(std::size_t(n_clusters), false);
    for (int c = n_clusters - 1; c >= 0; --c) {
        if (children[std::size_t(c)].empty()) {
            value[std::size_t(c)] = stability[std::size_t(c)];
            keep[std::size_t(c)] = true;
        } else {
            double child_sum = 0.0;
            for (int ch : children[std::size_t(c)]) child_sum += value[std::size_t(ch)];
            if (child_sum > stability[std::size_t(c)]) {
                value[std::size_t(c)] = child_sum;
                keep[std::size_t(c)] = false;
            } else {
                value[std::size_t(c)] = stability[std::size_t(c)];
                keep[std::size_t(c)] = true;
            }
        }
    }
    // top-down: a kept cluster shadows its whole subtree
    std::vector<bool> selected(std::size_t(n_clusters), false);
    {
        std::vector<int> dfs{0};
        while (!dfs.empty()) {
            int c = dfs.back();
            dfs.pop_back();
            if (keep[std::size_t(c)]) {
                selected[std::size_t(c)] = true;
            } else {
                for (int ch : children[std::size_t(c)]) dfs.push_back(ch);
            }
        }
    }

    std::vector<std::int64_t> dense_label(std::size_t(n_clusters), kNoise);
    std::int64_t next_label = 0;
    for (int c = 0; c < n_clusters; ++c)
        if (selected[std::size_t(c)]) dense_label[std::size_t(c)] = next_label++;

    for (const auto& row : rows) {
        if (row.child < 0) continue;
        int cur = row.parent;
        while (cur != -1 && !selected[std::size_t(cur)]) cur = parent_cluster[std::size_t(cur)];
        labels[std::size_t(row.child)] = cur == -1 ? kNoise : dense_label[std::size_t(cur)];
    }
    return labels;
}

inline std::vector<std::int64_t> run_clustering(const Eigen::MatrixXd& points,
                                                const ClusteringConfig& cfg) {
    cfg.validate();
    switch (cfg.algorithm) {
        case ClusterAlgorithm::KMeans:
            if (cfg.k < 1) throw ValidationError("kmeans requires k >= 1");
            return kmeans(points, cfg.k, cfg.max_iterations, cfg.rng_seed).labels;
        case ClusterAlgorithm::Dbscan:
            return dbscan(points, cfg.eps, cfg.min_points);
        case ClusterAlgorithm::Hdbscan:
            return hdbscan(points, cfg.min_cluster_size);
    }
    throw PipelineError("unreachable clustering algorithm");
}

}  // namespace evdet
