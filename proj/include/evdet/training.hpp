#pragma once

// Mini-batch loss composition and gradients. eval_batch is the single code
// path used by the trainer and by the finite-difference harness: it forwards a
// batch, folds the anchor representations into a working copy of the center
// matrix (Alg-style update-then-score order), computes the three loss terms and,
// when asked, backpropagates the total.
//
// Center state entering the batch is constant, but the current batch's blend
// updates are differentiable: gradients of the intra/inter terms flow through
// h_j back into the representations that just updated it. Without that path the
// inter-cluster weight would have no training effect at all.

#include <cstdint>
#include <map>
#include <vector>

#include "evdet/encoder.hpp"
#include "evdet/objective.hpp"

namespace evdet {

struct TrainPair {
    EncodedLayout layout;
    int same_event = 0;  // c
    int center_row = 0;  // dense event row of the anchor
};

struct LossBreakdown {
    double l_pair = 0.0;
    double l_intra = 0.0;
    double l_inter = 0.0;
    double total = 0.0;
};

template <typename S>
LossBreakdown eval_batch(const PairEncoderModel<S>& model, const std::vector<TrainPair>& batch,
                         CenterMatrix<S>& centers, bool commit_centers, const LossWeights& w,
                         std::uint64_t inter_seed, PairEncoderModel<S>* grads) {
    if (batch.empty()) throw ValidationError("eval_batch: empty batch");
    const auto B = batch.size();
    const int d = model.cfg.d_model;
    const S beta = centers.retention();

    std::vector<PairForwardCache<S>> caches(B);
    for (std::size_t i = 0; i < B; ++i) pair_forward(model, batch[i].layout, caches[i]);

    // update-then-score on a working copy; the update order is the batch order
    CenterMatrix<S> working = centers;
    struct UpdateRec {
        std::size_t batch_idx;
        bool first_arrival;
    };
    std::map<int, std::vector<UpdateRec>> updates;
    for (std::size_t i = 0; i < B; ++i) {
        const int row = batch[i].center_row;
        updates[row].push_back({i, !working.is_initialized(row)});
        working.update(row, caches[i].anchor_repr);
    }

    std::vector<S> qs(B);
    std::vector<int> cs(B), labels(B);
    Mat<S> reprs(B, d);
    for (std::size_t i = 0; i < B; ++i) {
        qs[i] = caches[i].q;
        cs[i] = batch[i].same_event;
        labels[i] = batch[i].center_row;
        reprs.row(Eigen::Index(i)) = caches[i].anchor_repr;
    }

    const auto init_rows = working.initialized_rows();
    const auto perm = derangement(int(init_rows.size()), inter_seed);

    LossBreakdown out;
    out.l_pair = double(pairwise_ce(qs, cs));
    out.l_intra = double(intra_loss<S>(reprs, labels, working));
    {
        S sum = 0;
        if (init_rows.size() >= 2)
            for (std::size_t i = 0; i < init_rows.size(); ++i) {
                const S dist =
                    (working.row(init_rows[i]) - working.row(init_rows[std::size_t(perm[i])])).norm();
                sum += std::max(S(w.gamma) - dist, S(0));
            }
        out.l_inter = init_rows.size() >= 2 ? double(sum / S(init_rows.size())) : 0.0;
    }
    out.total = double(total_loss(S(out.l_pair), S(out.l_intra), S(out.l_inter), w));

    if (grads) {
        // gradient of the weighted loss w.r.t. each final center value
        std::map<int, RowVec<S>> d_center;
        for (const auto& [row, _] : updates) d_center[row] = RowVec<S>::Zero(d);

        for (std::size_t i = 0; i < B; ++i) {
            const int j = labels[i];
            RowVec<S> diff = caches[i].anchor_repr - working.row(j);
            const S norm = diff.norm();
            if (double(norm) > 1e-12) {
                auto it = d_center.find(j);
                if (it != d_center.end())
                    it->second -= diff * (S(w.lambda) / (norm * S(B)));
            }
        }
        if (init_rows.size() >= 2) {
            const S scale = S(w.mu) / S(init_rows.size());
            for (std::size_t i = 0; i < init_rows.size(); ++i) {
                const int a = init_rows[i];
                const int b = init_rows[std::size_t(perm[i])];
                RowVec<S> diff = working.row(a) - working.row(b);
                const S dist = diff.norm();
                if (!(S(w.gamma) - dist > S(0)) || double(dist) <= 1e-12) continue;
                auto ia = d_center.find(a);
                if (ia != d_center.end()) ia->second -= diff * (scale / dist);
                auto ib = d_center.find(b);
                if (ib != d_center.end()) ib->second += diff * (scale / dist);
            }
        }

        // distribute center gradients onto the contributing representations:
        // walking the update chain backwards, x_k's coefficient in the final
        // center is (1-beta)*beta^(m-k), and beta^(m-1) for the first arrival
        std::vector<RowVec<S>> d_anchor(B, RowVec<S>::Zero(d));
        for (const auto& [row, recs] : updates) {
            const RowVec<S>& dc = d_center.at(row);
            S factor = S(1);
            for (auto it = recs.rbegin(); it != recs.rend(); ++it) {
                const S coef = it->first_arrival ? factor : factor * (S(1) - beta);
                d_anchor[it->batch_idx] += dc * coef;
                factor *= beta;
            }
        }

        for (std::size_t i = 0; i < B; ++i) {
            // d(kappa * BCE)/d logit
            const S d_logit = S(w.kappa) * (qs[i] - S(cs[i])) / S(B);
            // direct d(lambda * mean ||x - h||)/d x with h held at its final value
            RowVec<S> diff = caches[i].anchor_repr - working.row(labels[i]);
            const S norm = diff.norm();
            if (double(norm) > 1e-12)
                d_anchor[i] += diff * (S(w.lambda) / (norm * S(B)));
            pair_backward(model, caches[i], d_logit, d_anchor[i], *grads);
        }
    }

    if (commit_centers) centers = working;
    return out;
}

}  // namespace evdet
