#pragma once

// External clustering-quality metrics. E[MI] uses the exact permutation-model
// sum, so AMI is deterministic (no sampling).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "evdet/types.hpp"

namespace evdet {

struct ContingencyTable {
    std::map<std::pair<std::int64_t, std::int64_t>, std::int64_t> counts;
    std::map<std::int64_t, std::int64_t> row_marginals;  // predicted side
    std::map<std::int64_t, std::int64_t> col_marginals;  // truth side
    std::int64_t total = 0;
};

inline ContingencyTable contingency(const std::vector<std::int64_t>& pred,
                                    const std::vector<std::int64_t>& truth) {
    if (pred.size() != truth.size())
        throw ValidationError("metrics: label sequences differ in length");
    if (pred.empty()) throw ValidationError("metrics: empty label sequences");
    ContingencyTable t;
    t.total = std::int64_t(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        ++t.counts[{pred[i], truth[i]}];
        ++t.row_marginals[pred[i]];
        ++t.col_marginals[truth[i]];
    }
    return t;
}

namespace detail {

inline double entropy(const std::map<std::int64_t, std::int64_t>& marginals, std::int64_t total) {
    double h = 0.0;
    for (const auto& [_, c] : marginals) {
        if (c == 0) continue;
        const double p = double(c) / double(total);
        h -= p * std::log(p);
    }
    return h;
}

inline double mutual_information(const ContingencyTable& t) {
    double mi = 0.0;
    const double n = double(t.total);
    for (const auto& [cell, nij] : t.counts) {
        if (nij == 0) continue;
        const double pij = double(nij) / n;
        const double pi = double(t.row_marginals.at(cell.first)) / n;
        const double pj = double(t.col_marginals.at(cell.second)) / n;
        mi += pij * std::log(pij / (pi * pj));
    }
    return std::max(0.0, mi);
}

// Exact E[MI] under the hypergeometric (permutation) model.
inline double expected_mutual_information(const ContingencyTable& t) {
    const std::int64_t n = t.total;
    std::vector<double> lg(static_cast<std::size_t>(n) + 2);
    for (std::size_t k = 0; k < lg.size(); ++k) lg[k] = std::lgamma(double(k) + 1.0);
    const double log_n = std::log(double(n));

    double emi = 0.0;
    for (const auto& [_, ai] : t.row_marginals) {
        for (const auto& [__, bj] : t.col_marginals) {
            const std::int64_t lo = std::max<std::int64_t>(1, ai + bj - n);
            const std::int64_t hi = std::min(ai, bj);
            for (std::int64_t nij = lo; nij <= hi; ++nij) {
                const double term = (double(nij) / double(n)) *
                                    (std::log(double(nij)) + log_n -
                                     std::log(double(ai)) - std::log(double(bj)));
                const double log_p = lg[ai] + lg[bj] + lg[n - ai] + lg[n - bj] - lg[n] -
                                     lg[nij] - lg[ai - nij] - lg[bj - nij] -
                                     lg[n - ai - bj + nij];
                emi += term * std::exp(log_p);
            }
        }
    }
    return emi;
}

inline bool identical_partitions(const ContingencyTable& t) {
    // identical up to label names: each predicted cluster maps onto exactly one
    // truth cluster of the same size
    if (t.row_marginals.size() != t.col_marginals.size()) return false;
    if (t.counts.size() != t.row_marginals.size()) return false;
    for (const auto& [cell, nij] : t.counts) {
        if (nij != t.row_marginals.at(cell.first) || nij != t.col_marginals.at(cell.second))
            return false;
    }
    return true;
}

inline double comb2(std::int64_t k) { return 0.5 * double(k) * double(k - 1); }

}  // namespace detail

inline double nmi(const std::vector<std::int64_t>& pred, const std::vector<std::int64_t>& truth) {
    const auto t = contingency(pred, truth);
    const double hp = detail::entropy(t.row_marginals, t.total);
    const double ht = detail::entropy(t.col_marginals, t.total);
    if (hp == 0.0 && ht == 0.0) return detail::identical_partitions(t) ? 1.0 : 0.0;
    if (hp == 0.0 || ht == 0.0) return 0.0;
    return 2.0 * detail::mutual_information(t) / (hp + ht);
}

inline double ami(const std::vector<std::int64_t>& pred, const std::vector<std::int64_t>& truth) {
    const auto t = contingency(pred, truth);
    const double mi = detail::mutual_information(t);
    const double emi = detail::expected_mutual_information(t);
    const double hmax = std::max(detail::entropy(t.row_marginals, t.total),
                                 detail::entropy(t.col_marginals, t.total));
    const double denom = hmax - emi;
    if (std::abs(denom) < 1e-12) return detail::identical_partitions(t) ? 1.0 : 0.0;
    return (mi - emi) / denom;
}

inline double ari(const std::vector<std::int64_t>& pred, const std::vector<std::int64_t>& truth) {
    const auto t = contingency(pred, truth);
    double index = 0.0;
    for (const auto& [_, nij] : t.counts) index += detail::comb2(nij);
    double sum_a = 0.0, sum_b = 0.0;
    for (const auto& [_, ai] : t.row_marginals) sum_a += detail::comb2(ai);
    for (const auto& [_, bj] : t.col_marginals) sum_b += detail::comb2(bj);
    const double pairs = detail::comb2(t.total);
    const double expected = sum_a * sum_b / pairs;
    const double max_index = 0.5 * (sum_a + sum_b);
    const double denom = max_index - expected;
    if (std::abs(denom) < 1e-12) return detail::identical_partitions(t) ? 1.0 : 0.0;
    return (index - expected) / denom;
}

// Density back-ends mark unclustered points with -1; scoring treats each such
// point as its own singleton so indiscriminate noise is penalized, not credited.
inline std::vector<std::int64_t> relabel_noise_as_singletons(const std::vector<std::int64_t>& labels) {
    std::int64_t next = 0;
    for (auto l : labels) next = std::max(next, l + 1);
    std::vector<std::int64_t> out = labels;
    for (auto& l : out)
        if (l < 0) l = next++;
    return out;
}

}  // namespace evdet
