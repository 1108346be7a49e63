#pragma once

// Similarity-gated fusion of a message's candidate representations. Variants
// top_k and average exist for the ablation harness only.

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "evdet/types.hpp"

namespace evdet {

enum class AggregationMode { Similarity, TopK, Average };

inline AggregationMode parse_aggregation_mode(const std::string& s) {
    if (s == "similarity") return AggregationMode::Similarity;
    if (s == "topk" || s == "top_k") return AggregationMode::TopK;
    if (s == "average") return AggregationMode::Average;
    throw ValidationError("unknown aggregation mode '" + s + "'");
}

template <typename Scalar>
struct CandidateSet {
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> candidates;  // n x d
    std::vector<Scalar> similarities;                                  // n, in (0,1)
};

// indices with q > alpha; mean of those candidates when two or more pass,
// otherwise the candidate with the highest similarity (ties: lowest index)
template <typename Scalar>
Eigen::Matrix<Scalar, 1, Eigen::Dynamic> aggregate(const CandidateSet<Scalar>& set, double alpha) {
    const auto n = set.candidates.rows();
    if (n == 0) throw ValidationError("aggregate: empty candidate set");
    if (std::size_t(n) != set.similarities.size())
        throw ValidationError("aggregate: candidate/similarity size mismatch");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("aggregate: alpha must be in (0,1)");

    std::vector<Eigen::Index> passing;
    for (Eigen::Index j = 0; j < n; ++j)
        if (double(set.similarities[std::size_t(j)]) > alpha) passing.push_back(j);

    if (passing.size() >= 2) {
        Eigen::Matrix<Scalar, 1, Eigen::Dynamic> mean =
            Eigen::Matrix<Scalar, 1, Eigen::Dynamic>::Zero(set.candidates.cols());
        for (auto j : passing) mean += set.candidates.row(j);
        return mean / Scalar(passing.size());
    }
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < n; ++j)
        if (set.similarities[std::size_t(j)] > set.similarities[std::size_t(best)]) best = j;
    return set.candidates.row(best);
}

// ablation: mean of the k candidates with highest similarity
template <typename Scalar>
Eigen::Matrix<Scalar, 1, Eigen::Dynamic> aggregate_top_k(const CandidateSet<Scalar>& set, int k) {
    const auto n = set.candidates.rows();
    if (n == 0) throw ValidationError("aggregate_top_k: empty candidate set");
    if (k < 1) throw ValidationError("aggregate_top_k: k must be >= 1");
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return set.similarities[std::size_t(a)] > set.similarities[std::size_t(b)];
    });
    const auto take = std::min<std::size_t>(std::size_t(k), order.size());
    Eigen::Matrix<Scalar, 1, Eigen::Dynamic> mean =
        Eigen::Matrix<Scalar, 1, Eigen::Dynamic>::Zero(set.candidates.cols());
    for (std::size_t i = 0; i < take; ++i) mean += set.candidates.row(order[i]);
    return mean / Scalar(take);
}

// ablation: plain mean of all candidates
template <typename Scalar>
Eigen::Matrix<Scalar, 1, Eigen::Dynamic> aggregate_average(const CandidateSet<Scalar>& set) {
    const auto n = set.candidates.rows();
    if (n == 0) throw ValidationError("aggregate_average: empty candidate set");
    return set.candidates.colwise().mean();
}

}  // namespace evdet
