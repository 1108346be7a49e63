#pragma once

// All trainable parameters of the pair encoder. Scalar-templated: float for
// training, double for finite-difference checks. Every tensor is an Eigen
// matrix (row vectors are 1 x d, scalars 1 x 1) so the optimizer, checkpoint,
// blending and gradient checks can visit them uniformly by name.

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "evdet/rng.hpp"
#include "evdet/types.hpp"

namespace evdet {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using RowVec = Eigen::Matrix<S, 1, Eigen::Dynamic>;

inline constexpr int kPromptAlphabet = 8;  // full Eq-style relation alphabet

struct ModelConfig {
    int vocab_size = 0;
    int d_model = 64;
    int layers = 2;
    int heads = 4;
    int ff_mult = 4;
    int max_len = 128;
    int pool_heads = 2;   // structured attention head count o
    int pool_hidden = 32; // hidden width of the per-head scorer
    bool prompt_enabled = true;
    bool structured_attention = true;

    int ff_dim() const { return d_model * ff_mult; }

    void validate() const {
        if (vocab_size < 5) throw ValidationError("model config: vocab_size too small");
        if (d_model < 1 || layers < 1 || heads < 1 || ff_mult < 1)
            throw ValidationError("model config: dimensions must be >= 1");
        if (d_model % heads != 0)
            throw ValidationError("model config: heads must divide d_model");
        if (max_len < 10)
            throw ValidationError("model config: max_len must leave room for prompts and specials");
        if (pool_heads < 1 || pool_hidden < 1)
            throw ValidationError("model config: pool dimensions must be >= 1");
    }
};

template <typename S>
struct EncoderLayerParams {
    Mat<S> wq, wk, wv, wo;      // d x d
    Mat<S> bq, bk, bv, bo;      // 1 x d
    Mat<S> ln1_g, ln1_b;        // 1 x d
    Mat<S> w1, b1;              // d x f, 1 x f
    Mat<S> w2, b2;              // f x d, 1 x d
    Mat<S> ln2_g, ln2_b;        // 1 x d
};

template <typename S>
struct PoolHeadParams {
    Mat<S> w;  // d x h
    Mat<S> b;  // 1 x h
    Mat<S> v;  // h x 1
};

template <typename S>
struct PairEncoderModel {
    ModelConfig cfg;
    Mat<S> token_embed;   // V x d
    Mat<S> prompt_embed;  // 8 x d, independent of the token table
    Mat<S> pos_embed;     // max_len x d
    std::vector<EncoderLayerParams<S>> layers;
    std::vector<PoolHeadParams<S>> pool;
    Mat<S> cls_w;  // 2d x 1
    Mat<S> cls_b;  // 1 x 1
};

// Visits every parameter tensor with a stable name; the traversal order is part
// of the checkpoint format.
template <typename S, typename Fn>
void for_each_tensor(PairEncoderModel<S>& m, Fn&& fn) {
    fn("token_embed", m.token_embed);
    fn("prompt_embed", m.prompt_embed);
    fn("pos_embed", m.pos_embed);
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
        auto& L = m.layers[l];
        const std::string p = "layer" + std::to_string(l) + ".";
        fn(p + "wq", L.wq);
        fn(p + "wk", L.wk);
        fn(p + "wv", L.wv);
        fn(p + "wo", L.wo);
        fn(p + "bq", L.bq);
        fn(p + "bk", L.bk);
        fn(p + "bv", L.bv);
        fn(p + "bo", L.bo);
        fn(p + "ln1_g", L.ln1_g);
        fn(p + "ln1_b", L.ln1_b);
        fn(p + "w1", L.w1);
        fn(p + "b1", L.b1);
        fn(p + "w2", L.w2);
        fn(p + "b2", L.b2);
        fn(p + "ln2_g", L.ln2_g);
        fn(p + "ln2_b", L.ln2_b);
    }
    for (std::size_t h = 0; h < m.pool.size(); ++h) {
        auto& P = m.pool[h];
        const std::string p = "pool" + std::to_string(h) + ".";
        fn(p + "w", P.w);
        fn(p + "b", P.b);
        fn(p + "v", P.v);
    }
    fn("cls.w", m.cls_w);
    fn("cls.b", m.cls_b);
}

template <typename S, typename Fn>
void for_each_tensor(const PairEncoderModel<S>& m, Fn&& fn) {
    for_each_tensor(const_cast<PairEncoderModel<S>&>(m),
                    [&](const std::string& name, Mat<S>& t) { fn(name, std::as_const(t)); });
}

// Tensors subject to windowed parameter blending: the contextual encoder and its
// embeddings. Prompt table, pooling heads and classifier are task heads.
inline bool is_encoder_tensor(const std::string& name) {
    return name == "token_embed" || name == "pos_embed" || name.rfind("layer", 0) == 0;
}

template <typename S>
PairEncoderModel<S> make_model(const ModelConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    PairEncoderModel<S> m;
    m.cfg = cfg;
    auto rng = make_rng(hash_mix(seed, 0x6d6f64656cULL));
    std::normal_distribution<double> emb(0.0, 0.02);
    auto fill_normal = [&](Mat<S>& t, Eigen::Index r, Eigen::Index c) {
        t.resize(r, c);
        for (Eigen::Index i = 0; i < r; ++i)
            for (Eigen::Index j = 0; j < c; ++j) t(i, j) = S(emb(rng));
    };
    auto fill_xavier = [&](Mat<S>& t, Eigen::Index r, Eigen::Index c) {
        t.resize(r, c);
        const double limit = std::sqrt(6.0 / double(r + c));
        std::uniform_real_distribution<double> u(-limit, limit);
        for (Eigen::Index i = 0; i < r; ++i)
            for (Eigen::Index j = 0; j < c; ++j) t(i, j) = S(u(rng));
    };

    fill_normal(m.token_embed, cfg.vocab_size, cfg.d_model);
    fill_normal(m.prompt_embed, kPromptAlphabet, cfg.d_model);
    fill_normal(m.pos_embed, cfg.max_len, cfg.d_model);

    m.layers.resize(std::size_t(cfg.layers));
    for (auto& L : m.layers) {
        fill_xavier(L.wq, cfg.d_model, cfg.d_model);
        fill_xavier(L.wk, cfg.d_model, cfg.d_model);
        fill_xavier(L.wv, cfg.d_model, cfg.d_model);
        fill_xavier(L.wo, cfg.d_model, cfg.d_model);
        L.bq = Mat<S>::Zero(1, cfg.d_model);
        L.bk = Mat<S>::Zero(1, cfg.d_model);
        L.bv = Mat<S>::Zero(1, cfg.d_model);
        L.bo = Mat<S>::Zero(1, cfg.d_model);
        L.ln1_g = Mat<S>::Ones(1, cfg.d_model);
        L.ln1_b = Mat<S>::Zero(1, cfg.d_model);
        fill_xavier(L.w1, cfg.d_model, cfg.ff_dim());
        L.b1 = Mat<S>::Zero(1, cfg.ff_dim());
        fill_xavier(L.w2, cfg.ff_dim(), cfg.d_model);
        L.b2 = Mat<S>::Zero(1, cfg.d_model);
        L.ln2_g = Mat<S>::Ones(1, cfg.d_model);
        L.ln2_b = Mat<S>::Zero(1, cfg.d_model);
    }

    m.pool.resize(std::size_t(cfg.pool_heads));
    for (auto& P : m.pool) {
        fill_xavier(P.w, cfg.d_model, cfg.pool_hidden);
        P.b = Mat<S>::Zero(1, cfg.pool_hidden);
        fill_xavier(P.v, cfg.pool_hidden, 1);
    }
    fill_xavier(m.cls_w, 2 * cfg.d_model, 1);
    m.cls_b = Mat<S>::Zero(1, 1);
    return m;
}

template <typename S>
PairEncoderModel<S> zeros_like(const PairEncoderModel<S>& m) {
    PairEncoderModel<S> z = m;
    for_each_tensor(z, [](const std::string&, Mat<S>& t) { t.setZero(); });
    return z;
}

template <typename S>
void set_zero(PairEncoderModel<S>& m) {
    for_each_tensor(m, [](const std::string&, Mat<S>& t) { t.setZero(); });
}

template <typename S>
bool same_shapes(const PairEncoderModel<S>& a, const PairEncoderModel<S>& b) {
    if (a.layers.size() != b.layers.size() || a.pool.size() != b.pool.size()) return false;
    bool ok = true;
    std::vector<std::pair<Eigen::Index, Eigen::Index>> sa, sb;
    for_each_tensor(a, [&](const std::string&, const Mat<S>& t) { sa.emplace_back(t.rows(), t.cols()); });
    for_each_tensor(b, [&](const std::string&, const Mat<S>& t) { sb.emplace_back(t.rows(), t.cols()); });
    if (sa != sb) ok = false;
    return ok;
}

template <typename S2, typename S1>
PairEncoderModel<S2> cast_model(const PairEncoderModel<S1>& m) {
    PairEncoderModel<S2> out;
    out.cfg = m.cfg;
    out.token_embed = m.token_embed.template cast<S2>();
    out.prompt_embed = m.prompt_embed.template cast<S2>();
    out.pos_embed = m.pos_embed.template cast<S2>();
    out.layers.resize(m.layers.size());
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
        const auto& a = m.layers[l];
        auto& b = out.layers[l];
        b.wq = a.wq.template cast<S2>();
        b.wk = a.wk.template cast<S2>();
        b.wv = a.wv.template cast<S2>();
        b.wo = a.wo.template cast<S2>();
        b.bq = a.bq.template cast<S2>();
        b.bk = a.bk.template cast<S2>();
        b.bv = a.bv.template cast<S2>();
        b.bo = a.bo.template cast<S2>();
        b.ln1_g = a.ln1_g.template cast<S2>();
        b.ln1_b = a.ln1_b.template cast<S2>();
        b.w1 = a.w1.template cast<S2>();
        b.b1 = a.b1.template cast<S2>();
        b.w2 = a.w2.template cast<S2>();
        b.b2 = a.b2.template cast<S2>();
        b.ln2_g = a.ln2_g.template cast<S2>();
        b.ln2_b = a.ln2_b.template cast<S2>();
    }
    out.pool.resize(m.pool.size());
    for (std::size_t h = 0; h < m.pool.size(); ++h) {
        out.pool[h].w = m.pool[h].w.template cast<S2>();
        out.pool[h].b = m.pool[h].b.template cast<S2>();
        out.pool[h].v = m.pool[h].v.template cast<S2>();
    }
    out.cls_w = m.cls_w.template cast<S2>();
    out.cls_b = m.cls_b.template cast<S2>();
    return out;
}

}  // namespace evdet
