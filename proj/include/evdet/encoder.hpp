#pragma once

// Pair encoding: [CLS] p_h p_u p_e p_d [SEP] tokens(anchor) [SEP] tokens(sampled) [SEP]
// through a post-norm self-attention encoder. Forward keeps the activations
// needed for the manual backward pass. Prompts and specials are never truncated;
// over-long content is trimmed proportionally from the tails.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "evdet/model.hpp"
#include "evdet/pairing.hpp"
#include "evdet/vocab.hpp"

namespace evdet {

enum class Segment : std::uint8_t { Special = 0, Prompt = 1, MsgA = 2, MsgB = 3 };

struct EncodedLayout {
    std::vector<int> content_ids;           // token-table row per position; -1 at prompt positions
    std::vector<int> prompt_rows;           // prompt-table row per position; -1 elsewhere
    std::vector<Segment> segments;
    std::vector<int> anchor_positions;      // prompt positions then anchor content positions
    std::vector<int> sampled_positions;     // sampled content positions
    int length() const { return int(segments.size()); }
};

// Trims (a, b) to fit a shared budget, proportionally, keeping at least one
// token per side.
inline std::pair<int, int> trim_content(int a, int b, int budget) {
    if (budget < 2) throw PipelineError("encode_pair: max_len leaves no room for content tokens");
    if (a + b <= budget) return {a, b};
    int a2 = int(std::lround(double(budget) * double(a) / double(a + b)));
    a2 = std::clamp(a2, 1, budget - 1);
    return {a2, budget - a2};
}

inline EncodedLayout build_layout(const std::vector<int>& anchor_ids,
                                  const std::vector<int>& sampled_ids,
                                  const MultiRelationalSequence& rel, int max_len,
                                  bool prompt_enabled = true) {
    std::vector<int> a = anchor_ids.empty() ? std::vector<int>{Vocabulary::kUnk} : anchor_ids;
    std::vector<int> b = sampled_ids.empty() ? std::vector<int>{Vocabulary::kUnk} : sampled_ids;

    const int overhead = prompt_enabled ? 8 : 3;  // CLS + SEPs (+ 4 prompt slots)
    auto [na, nb] = trim_content(int(a.size()), int(b.size()), max_len - overhead);
    a.resize(std::size_t(na));
    b.resize(std::size_t(nb));

    EncodedLayout out;
    auto push_content = [&](int id, Segment seg) {
        out.content_ids.push_back(id);
        out.prompt_rows.push_back(-1);
        out.segments.push_back(seg);
    };
    push_content(Vocabulary::kCls, Segment::Special);
    if (prompt_enabled) {
        for (int s = 0; s < 4; ++s) {
            out.content_ids.push_back(-1);
            out.prompt_rows.push_back(int(rel.symbols[std::size_t(s)]));
            out.segments.push_back(Segment::Prompt);
            out.anchor_positions.push_back(out.length() - 1);
        }
        push_content(Vocabulary::kSep, Segment::Special);
    }
    for (int id : a) {
        push_content(id, Segment::MsgA);
        out.anchor_positions.push_back(out.length() - 1);
    }
    push_content(Vocabulary::kSep, Segment::Special);
    for (int id : b) {
        push_content(id, Segment::MsgB);
        out.sampled_positions.push_back(out.length() - 1);
    }
    push_content(Vocabulary::kSep, Segment::Special);
    return out;
}

namespace nn {

template <typename S>
S gelu(S x) {
    const S c = S(std::sqrt(2.0 / M_PI));
    return S(0.5) * x * (S(1) + std::tanh(c * (x + S(0.044715) * x * x * x)));
}

template <typename S>
S gelu_grad(S x) {
    const S c = S(std::sqrt(2.0 / M_PI));
    const S cube = S(0.044715) * x * x * x;
    const S t = std::tanh(c * (x + cube));
    const S sech2 = S(1) - t * t;
    return S(0.5) * (S(1) + t) + S(0.5) * x * sech2 * c * (S(1) + S(3) * S(0.044715) * x * x);
}

inline constexpr double kLnEps = 1e-5;

// row-wise layer norm; caches the normalized rows and per-row inverse stddev
template <typename S>
void layer_norm_forward(const Mat<S>& x, const Mat<S>& g, const Mat<S>& b, Mat<S>& xhat,
                        Eigen::Matrix<S, Eigen::Dynamic, 1>& inv_std, Mat<S>& out) {
    const auto n = x.cols();
    xhat.resize(x.rows(), n);
    inv_std.resize(x.rows());
    out.resize(x.rows(), n);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const S mean = x.row(i).mean();
        const S var = (x.row(i).array() - mean).square().sum() / S(n);
        const S is = S(1) / std::sqrt(var + S(kLnEps));
        inv_std[i] = is;
        xhat.row(i) = (x.row(i).array() - mean) * is;
        out.row(i) = xhat.row(i).cwiseProduct(g.row(0)) + b.row(0);
    }
}

template <typename S>
void layer_norm_backward(const Mat<S>& dy, const Mat<S>& xhat,
                         const Eigen::Matrix<S, Eigen::Dynamic, 1>& inv_std, const Mat<S>& g,
                         Mat<S>& dg, Mat<S>& db, Mat<S>& dx) {
    const auto n = xhat.cols();
    dx.resize(xhat.rows(), n);
    for (Eigen::Index i = 0; i < xhat.rows(); ++i) {
        dg.row(0) += dy.row(i).cwiseProduct(xhat.row(i));
        db.row(0) += dy.row(i);
        RowVec<S> dxhat = dy.row(i).cwiseProduct(g.row(0));
        const S m1 = dxhat.mean();
        const S m2 = dxhat.cwiseProduct(xhat.row(i)).mean();
        dx.row(i) = ((dxhat.array() - m1 - xhat.row(i).array() * m2) * inv_std[i]).matrix();
    }
}

template <typename S>
void softmax_rows(Mat<S>& x) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        RowVec<S> e = (x.row(i).array() - x.row(i).maxCoeff()).exp();
        x.row(i) = e / e.sum();
    }
}

// dS for row-wise softmax A given upstream dA
template <typename S>
Mat<S> softmax_rows_backward(const Mat<S>& dA, const Mat<S>& A) {
    Mat<S> dS(A.rows(), A.cols());
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        const S dot = A.row(i).cwiseProduct(dA.row(i)).sum();
        dS.row(i) = (A.row(i).array() * (dA.row(i).array() - dot)).matrix();
    }
    return dS;
}

}  // namespace nn

template <typename S>
struct LayerCache {
    Mat<S> h_in;
    Mat<S> q, k, v;
    std::vector<Mat<S>> att;  // per encoder head, s x s
    Mat<S> concat;
    Mat<S> res1;
    Mat<S> ln1_xhat, ln1_out;
    Eigen::Matrix<S, Eigen::Dynamic, 1> ln1_inv_std;
    Mat<S> ff_pre, ff_act;
    Mat<S> res2;
    Mat<S> ln2_xhat;
    Eigen::Matrix<S, Eigen::Dynamic, 1> ln2_inv_std;
};

template <typename S>
struct PoolCache {
    // per pool head: scorer hidden states (m x h) and attention weights (m)
    std::vector<Mat<S>> u;
    std::vector<Eigen::Matrix<S, Eigen::Dynamic, 1>> w;
};

template <typename S>
struct PairForwardCache {
    EncodedLayout layout;
    Mat<S> embedded;  // s x d
    std::vector<LayerCache<S>> layers;
    Mat<S> h_final;   // s x d
    PoolCache<S> pool_anchor, pool_sampled;
    RowVec<S> anchor_repr, sampled_repr;
    S logit = 0, q = 0;
};

namespace detail {

template <typename S>
void encoder_layers_forward(const PairEncoderModel<S>& m, PairForwardCache<S>& c) {
    const int d = m.cfg.d_model;
    const int heads = m.cfg.heads;
    const int dh = d / heads;
    const S scale = S(1) / std::sqrt(S(dh));

    c.layers.resize(m.layers.size());
    Mat<S> h = c.embedded;
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
        const auto& L = m.layers[l];
        auto& lc = c.layers[l];
        lc.h_in = h;

        lc.q = (h * L.wq).rowwise() + L.bq.row(0);
        lc.k = (h * L.wk).rowwise() + L.bk.row(0);
        lc.v = (h * L.wv).rowwise() + L.bv.row(0);

        lc.att.assign(std::size_t(heads), Mat<S>());
        lc.concat.resize(h.rows(), d);
        for (int hd = 0; hd < heads; ++hd) {
            auto qh = lc.q.middleCols(hd * dh, dh);
            auto kh = lc.k.middleCols(hd * dh, dh);
            auto vh = lc.v.middleCols(hd * dh, dh);
            Mat<S> att = (qh * kh.transpose()) * scale;
            nn::softmax_rows(att);
            lc.concat.middleCols(hd * dh, dh) = att * vh;
            lc.att[std::size_t(hd)] = std::move(att);
        }
        Mat<S> attn_out = (lc.concat * L.wo).rowwise() + L.bo.row(0);
        lc.res1 = lc.h_in + attn_out;
        nn::layer_norm_forward(lc.res1, L.ln1_g, L.ln1_b, lc.ln1_xhat, lc.ln1_inv_std, lc.ln1_out);

        lc.ff_pre = (lc.ln1_out * L.w1).rowwise() + L.b1.row(0);
        lc.ff_act = lc.ff_pre.unaryExpr([](S x) { return nn::gelu(x); });
        Mat<S> ff_out = (lc.ff_act * L.w2).rowwise() + L.b2.row(0);
        lc.res2 = lc.ln1_out + ff_out;
        Mat<S> out;
        nn::layer_norm_forward(lc.res2, L.ln2_g, L.ln2_b, lc.ln2_xhat, lc.ln2_inv_std, out);
        h = std::move(out);
    }
    c.h_final = std::move(h);
}

template <typename S>
void encoder_layers_backward(const PairEncoderModel<S>& m, const PairForwardCache<S>& c,
                             Mat<S> dh, PairEncoderModel<S>& g) {
    const int d = m.cfg.d_model;
    const int heads = m.cfg.heads;
    const int dh_dim = d / heads;
    const S scale = S(1) / std::sqrt(S(dh_dim));

    for (int l = int(m.layers.size()) - 1; l >= 0; --l) {
        const auto& L = m.layers[std::size_t(l)];
        const auto& lc = c.layers[std::size_t(l)];
        auto& G = g.layers[std::size_t(l)];

        Mat<S> d_res2;
        nn::layer_norm_backward(dh, lc.ln2_xhat, lc.ln2_inv_std, L.ln2_g, G.ln2_g, G.ln2_b, d_res2);

        // res2 = ln1_out + gelu(ln1_out*w1 + b1)*w2 + b2
        Mat<S> d_ff_out = d_res2;
        G.w2 += lc.ff_act.transpose() * d_ff_out;
        G.b2.row(0) += d_ff_out.colwise().sum();
        Mat<S> d_ff_act = d_ff_out * L.w2.transpose();
        Mat<S> d_ff_pre =
            d_ff_act.cwiseProduct(lc.ff_pre.unaryExpr([](S x) { return nn::gelu_grad(x); }));
        G.w1 += lc.ln1_out.transpose() * d_ff_pre;
        G.b1.row(0) += d_ff_pre.colwise().sum();
        Mat<S> d_ln1_out = d_res2 + d_ff_pre * L.w1.transpose();

        Mat<S> d_res1;
        nn::layer_norm_backward(d_ln1_out, lc.ln1_xhat, lc.ln1_inv_std, L.ln1_g, G.ln1_g, G.ln1_b,
                                d_res1);

        // res1 = h_in + concat*wo + bo
        Mat<S> d_attn_out = d_res1;
        G.wo += lc.concat.transpose() * d_attn_out;
        G.bo.row(0) += d_attn_out.colwise().sum();
        Mat<S> d_concat = d_attn_out * L.wo.transpose();

        Mat<S> dq = Mat<S>::Zero(lc.q.rows(), d);
        Mat<S> dk = Mat<S>::Zero(lc.q.rows(), d);
        Mat<S> dv = Mat<S>::Zero(lc.q.rows(), d);
        for (int hd = 0; hd < heads; ++hd) {
            const auto& att = lc.att[std::size_t(hd)];
            auto qh = lc.q.middleCols(hd * dh_dim, dh_dim);
            auto kh = lc.k.middleCols(hd * dh_dim, dh_dim);
            auto vh = lc.v.middleCols(hd * dh_dim, dh_dim);
            Mat<S> d_oh = d_concat.middleCols(hd * dh_dim, dh_dim);
            Mat<S> d_att = d_oh * vh.transpose();
            dv.middleCols(hd * dh_dim, dh_dim) = att.transpose() * d_oh;
            Mat<S> d_scores = nn::softmax_rows_backward(d_att, att);
            dq.middleCols(hd * dh_dim, dh_dim) = (d_scores * kh) * scale;
            dk.middleCols(hd * dh_dim, dh_dim) = (d_scores.transpose() * qh) * scale;
        }
        G.wq += lc.h_in.transpose() * dq;
        G.bq.row(0) += dq.colwise().sum();
        G.wk += lc.h_in.transpose() * dk;
        G.bk.row(0) += dk.colwise().sum();
        G.wv += lc.h_in.transpose() * dv;
        G.bv.row(0) += dv.colwise().sum();

        dh = d_res1 + dq * L.wq.transpose() + dk * L.wk.transpose() + dv * L.wv.transpose();
    }

    // scatter into embedding tables
    for (int t = 0; t < c.layout.length(); ++t) {
        if (c.layout.prompt_rows[std::size_t(t)] >= 0)
            g.prompt_embed.row(c.layout.prompt_rows[std::size_t(t)]) += dh.row(t);
        else
            g.token_embed.row(c.layout.content_ids[std::size_t(t)]) += dh.row(t);
        g.pos_embed.row(t) += dh.row(t);
    }
}

// structured attention pooling over the token vectors at `positions`
template <typename S>
RowVec<S> pool_forward(const PairEncoderModel<S>& m, const Mat<S>& h,
                       const std::vector<int>& positions, PoolCache<S>& cache) {
    if (positions.empty()) throw PipelineError("structured_pool: empty token sequence");
    const auto mlen = Eigen::Index(positions.size());
    Mat<S> hs(mlen, h.cols());
    for (Eigen::Index i = 0; i < mlen; ++i) hs.row(i) = h.row(positions[std::size_t(i)]);

    if (!m.cfg.structured_attention) {
        cache.u.clear();
        cache.w.clear();
        return hs.colwise().mean();
    }

    const auto o = m.pool.size();
    cache.u.assign(o, Mat<S>());
    cache.w.assign(o, Eigen::Matrix<S, Eigen::Dynamic, 1>());
    RowVec<S> out = RowVec<S>::Zero(h.cols());
    for (std::size_t k = 0; k < o; ++k) {
        const auto& P = m.pool[k];
        Mat<S> u = ((hs * P.w).rowwise() + P.b.row(0)).unaryExpr([](S x) { return std::tanh(x); });
        Eigen::Matrix<S, Eigen::Dynamic, 1> scores = u * P.v;
        Eigen::Matrix<S, Eigen::Dynamic, 1> e = (scores.array() - scores.maxCoeff()).exp();
        Eigen::Matrix<S, Eigen::Dynamic, 1> w = e / e.sum();
        out += w.transpose() * hs;
        cache.u[k] = std::move(u);
        cache.w[k] = std::move(w);
    }
    return out / S(o);
}

template <typename S>
void pool_backward(const PairEncoderModel<S>& m, const Mat<S>& h, const std::vector<int>& positions,
                   const PoolCache<S>& cache, const RowVec<S>& d_out, PairEncoderModel<S>& g,
                   Mat<S>& dh) {
    const auto mlen = Eigen::Index(positions.size());
    Mat<S> hs(mlen, h.cols());
    for (Eigen::Index i = 0; i < mlen; ++i) hs.row(i) = h.row(positions[std::size_t(i)]);
    Mat<S> dhs = Mat<S>::Zero(mlen, h.cols());

    if (!m.cfg.structured_attention) {
        for (Eigen::Index i = 0; i < mlen; ++i) dhs.row(i) = d_out / S(mlen);
    } else {
        const auto o = m.pool.size();
        const RowVec<S> d_head = d_out / S(o);
        for (std::size_t k = 0; k < o; ++k) {
            const auto& P = m.pool[k];
            auto& G = g.pool[k];
            const auto& u = cache.u[k];
            const auto& w = cache.w[k];
            // head output = w^T per-position vectors
            Eigen::Matrix<S, Eigen::Dynamic, 1> dw = hs * d_head.transpose();
            dhs += w * d_head;
            const S dot = w.dot(dw);
            Eigen::Matrix<S, Eigen::Dynamic, 1> d_scores =
                (w.array() * (dw.array() - dot)).matrix();
            G.v += u.transpose() * d_scores;
            Mat<S> du = d_scores * P.v.transpose();
            Mat<S> d_pre = du.cwiseProduct(u.unaryExpr([](S x) { return S(1) - x * x; }));
            G.w += hs.transpose() * d_pre;
            G.b.row(0) += d_pre.colwise().sum();
            dhs += d_pre * P.w.transpose();
        }
    }
    for (Eigen::Index i = 0; i < mlen; ++i) dh.row(positions[std::size_t(i)]) += dhs.row(i);
}

}  // namespace detail

template <typename S>
S sigmoid(S x) {
    if (x >= S(0)) return S(1) / (S(1) + std::exp(-x));
    const S e = std::exp(x);
    return e / (S(1) + e);
}

// forward pass of one pair; fills the cache needed for pair_backward
template <typename S>
void pair_forward(const PairEncoderModel<S>& m, const EncodedLayout& layout,
                  PairForwardCache<S>& c) {
    const int s = layout.length();
    if (s > m.cfg.max_len) throw PipelineError("pair_forward: sequence exceeds max_len");
    c.layout = layout;
    c.embedded.resize(s, m.cfg.d_model);
    for (int t = 0; t < s; ++t) {
        if (layout.prompt_rows[std::size_t(t)] >= 0)
            c.embedded.row(t) = m.prompt_embed.row(layout.prompt_rows[std::size_t(t)]);
        else
            c.embedded.row(t) = m.token_embed.row(layout.content_ids[std::size_t(t)]);
        c.embedded.row(t) += m.pos_embed.row(t);
    }
    detail::encoder_layers_forward(m, c);
    c.anchor_repr = detail::pool_forward(m, c.h_final, layout.anchor_positions, c.pool_anchor);
    c.sampled_repr = detail::pool_forward(m, c.h_final, layout.sampled_positions, c.pool_sampled);

    RowVec<S> concat(2 * m.cfg.d_model);
    concat << c.anchor_repr, c.sampled_repr;
    c.logit = (concat * m.cls_w)(0, 0) + m.cls_b(0, 0);
    c.q = sigmoid(c.logit);
}

// backward from (d_logit, d_anchor_repr, d_sampled_repr) into parameter grads
template <typename S>
void pair_backward(const PairEncoderModel<S>& m, const PairForwardCache<S>& c, S d_logit,
                   const RowVec<S>& d_anchor_extra, PairEncoderModel<S>& g) {
    const int d = m.cfg.d_model;
    RowVec<S> concat(2 * d);
    concat << c.anchor_repr, c.sampled_repr;
    g.cls_w += concat.transpose() * d_logit;
    g.cls_b(0, 0) += d_logit;
    RowVec<S> d_concat = d_logit * m.cls_w.transpose();

    RowVec<S> d_anchor = d_concat.leftCols(d);
    if (d_anchor_extra.size() == d) d_anchor += d_anchor_extra;
    RowVec<S> d_sampled = d_concat.rightCols(d);

    Mat<S> dh = Mat<S>::Zero(c.h_final.rows(), d);
    detail::pool_backward(m, c.h_final, c.layout.anchor_positions, c.pool_anchor, d_anchor, g, dh);
    detail::pool_backward(m, c.h_final, c.layout.sampled_positions, c.pool_sampled, d_sampled, g, dh);
    detail::encoder_layers_backward(m, c, std::move(dh), g);
}

// spec-facing view over one encoded pair
template <typename S>
struct EncodedPair {
    Mat<S> token_vectors;
    std::vector<Segment> segments;
    std::vector<int> anchor_positions;
    std::vector<int> sampled_positions;
};

template <typename S>
EncodedPair<S> encode_pair(const PairEncoderModel<S>& m, const Vocabulary& vocab,
                           const Message& anchor, const Message& sampled,
                           const MultiRelationalSequence& rel) {
    auto layout = build_layout(vocab.encode(anchor.text), vocab.encode(sampled.text), rel,
                               m.cfg.max_len, m.cfg.prompt_enabled);
    PairForwardCache<S> c;
    pair_forward(m, layout, c);
    return EncodedPair<S>{std::move(c.h_final), std::move(layout.segments),
                          std::move(layout.anchor_positions), std::move(layout.sampled_positions)};
}

}  // namespace evdet
