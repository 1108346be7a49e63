#pragma once

// Training objective: pairwise cross-entropy, exponentially blended per-event
// centers, intra-cluster pull and inter-cluster hinge push. Centers are state,
// not parameters: losses treat the current matrix as constant.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "evdet/rng.hpp"
#include "evdet/types.hpp"

namespace evdet {

inline constexpr double kProbEps = 1e-7;

struct LossWeights {
    double kappa = 1.0;
    double lambda = 0.01;
    double mu = 0.005;
    double gamma = 10.0;

    void validate() const {
        if (!(kappa >= 0 && lambda >= 0 && mu >= 0))
            throw ValidationError("loss weights must be non-negative");
        if (!(gamma > 0)) throw ValidationError("gamma must be > 0");
    }
};

template <typename Scalar>
class CenterMatrix {
public:
    CenterMatrix() = default;
    CenterMatrix(int num_events, int dim, Scalar retention)
        : rows_(Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(num_events, dim)),
          initialized_(std::size_t(num_events), false),
          beta_(retention) {
        if (num_events < 1) throw ValidationError("CenterMatrix: need >= 1 events");
        if (!(retention >= Scalar(0) && retention <= Scalar(1)))
            throw ValidationError("CenterMatrix: retention weight must be in [0,1]");
    }

    int num_events() const { return int(rows_.rows()); }
    int dim() const { return int(rows_.cols()); }
    Scalar retention() const { return beta_; }
    bool is_initialized(int j) const { return initialized_.at(std::size_t(j)); }
    int initialized_count() const {
        return int(std::count(initialized_.begin(), initialized_.end(), true));
    }
    auto row(int j) const { return rows_.row(j); }

    // first arrival adopts the representation; later ones blend with weight beta
    void update(int j, const Eigen::Ref<const Eigen::Matrix<Scalar, 1, Eigen::Dynamic>>& repr) {
        if (j < 0 || j >= num_events()) throw ValidationError("CenterMatrix: label out of range");
        if (!initialized_[std::size_t(j)]) {
            rows_.row(j) = repr;
            initialized_[std::size_t(j)] = true;
        } else {
            rows_.row(j) = beta_ * rows_.row(j) + (Scalar(1) - beta_) * repr;
        }
    }

    std::vector<int> initialized_rows() const {
        std::vector<int> out;
        for (int j = 0; j < num_events(); ++j)
            if (initialized_[std::size_t(j)]) out.push_back(j);
        return out;
    }

    // smallest pairwise distance among initialized centers; -1 when fewer than 2
    double min_pairwise_distance() const {
        auto init = initialized_rows();
        if (init.size() < 2) return -1.0;
        double best = std::numeric_limits<double>::max();
        for (std::size_t a = 0; a < init.size(); ++a)
            for (std::size_t b = a + 1; b < init.size(); ++b)
                best = std::min(best,
                                double((rows_.row(init[a]) - rows_.row(init[b])).norm()));
        return best;
    }

private:
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> rows_;
    std::vector<bool> initialized_;
    Scalar beta_ = Scalar(0.9);
};

// mean binary cross-entropy over (similarity, label) pairs
template <typename Scalar>
Scalar pairwise_ce(const std::vector<Scalar>& q, const std::vector<int>& c) {
    if (q.empty()) throw ValidationError("pairwise_ce: empty batch");
    if (q.size() != c.size()) throw ValidationError("pairwise_ce: size mismatch");
    Scalar sum = 0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        Scalar qi = std::clamp(q[i], Scalar(kProbEps), Scalar(1.0 - kProbEps));
        sum += c[i] ? -std::log(qi) : -std::log(Scalar(1) - qi);
    }
    return sum / Scalar(q.size());
}

// mean Euclidean distance between each representation and its event center
template <typename Scalar>
Scalar intra_loss(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& reprs,
                  const std::vector<int>& labels, const CenterMatrix<Scalar>& centers) {
    if (reprs.rows() == 0) throw ValidationError("intra_loss: empty batch");
    if (std::size_t(reprs.rows()) != labels.size())
        throw ValidationError("intra_loss: size mismatch");
    Scalar sum = 0;
    for (Eigen::Index i = 0; i < reprs.rows(); ++i) {
        const int j = labels[std::size_t(i)];
        if (!centers.is_initialized(j))
            throw ValidationError("intra_loss: center " + std::to_string(j) + " uninitialized");
        sum += (reprs.row(i) - centers.row(j)).norm();
    }
    return sum / Scalar(reprs.rows());
}

// seeded derangement of 0..n-1 (no fixed points); n >= 2
inline std::vector<int> derangement(int n, std::uint64_t seed) {
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    if (n < 2) return perm;
    auto rng = make_rng(seed);
    while (true) {
        std::shuffle(perm.begin(), perm.end(), rng);
        bool fixed = false;
        for (int i = 0; i < n; ++i)
            if (perm[std::size_t(i)] == i) {
                fixed = true;
                break;
            }
        if (!fixed) return perm;
    }
}

// hinge on distances between centers and a deranged copy of themselves
template <typename Scalar>
Scalar inter_loss(const CenterMatrix<Scalar>& centers, Scalar gamma, std::uint64_t rng_seed) {
    auto init = centers.initialized_rows();
    if (init.empty()) throw ValidationError("inter_loss: no initialized centers");
    if (init.size() < 2) return Scalar(0);
    auto perm = derangement(int(init.size()), rng_seed);
    Scalar sum = 0;
    for (std::size_t i = 0; i < init.size(); ++i) {
        Scalar d = (centers.row(init[i]) - centers.row(init[std::size_t(perm[i])])).norm();
        sum += std::max(gamma - d, Scalar(0));
    }
    return sum / Scalar(init.size());
}

template <typename Scalar>
Scalar total_loss(Scalar l_pair, Scalar l_intra, Scalar l_inter, const LossWeights& w) {
    return Scalar(w.kappa) * l_pair + Scalar(w.lambda) * l_intra + Scalar(w.mu) * l_inter;
}

}  // namespace evdet
