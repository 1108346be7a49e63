#pragma once

// Windowed train -> detect -> maintain lifecycle. Block 0 trains the initial
// model; each window of w blocks is detected with the current model; after a
// full window the encoder is blended toward its pre-training snapshot and the
// model is retrained on the window's labeled blocks.

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "evdet/aggregate.hpp"
#include "evdet/checkpoint.hpp"
#include "evdet/cluster.hpp"
#include "evdet/metrics.hpp"
#include "evdet/optimizer.hpp"
#include "evdet/pairing.hpp"
#include "evdet/stream_io.hpp"
#include "evdet/training.hpp"
#include "evdet/vocab.hpp"

namespace evdet {

struct LifecycleConfig {
    int window_size = 3;
    int epochs = 2;
    int batch_size = 35;
    double learning_rate = 1e-3;  // cold-start default; 2e-5 suits pretrained encoders
    int y = 60;
    int n = 0;  // 0 -> 3y
    double alpha = 0.9;
    double zeta = 0.4;
    double beta = 0.9;
    std::uint64_t seed = 42;
    std::int64_t temporal_window_seconds = 14400;
    LossWeights loss;
    bool clustering_constraint = true;
    AggregationMode aggregation = AggregationMode::Similarity;
    int top_k = 20;
    ClusteringConfig clustering;
    ModelConfig encoder;  // vocab_size is filled from the built vocabulary
    int vocab_min_count = 1;

    int detection_samples() const { return n > 0 ? n : 3 * y; }

    void validate() const {
        if (window_size < 1) throw ValidationError("lifecycle: window_size must be >= 1");
        if (epochs < 0) throw ValidationError("lifecycle: epochs must be >= 0");
        if (batch_size < 1) throw ValidationError("lifecycle: batch_size must be >= 1");
        if (!(learning_rate > 0)) throw ValidationError("lifecycle: learning_rate must be > 0");
        if (y < 1) throw ValidationError("lifecycle: y must be >= 1");
        if (n < 0) throw ValidationError("lifecycle: n must be >= 0");
        if (!(alpha > 0 && alpha < 1)) throw ValidationError("lifecycle: alpha must be in (0,1)");
        if (!(zeta >= 0 && zeta <= 1)) throw ValidationError("lifecycle: zeta must be in [0,1]");
        if (!(beta >= 0 && beta <= 1)) throw ValidationError("lifecycle: beta must be in [0,1]");
        if (temporal_window_seconds < 0)
            throw ValidationError("lifecycle: temporal window must be >= 0");
        if (top_k < 1) throw ValidationError("lifecycle: top_k must be >= 1");
        if (vocab_min_count < 1) throw ValidationError("lifecycle: vocab_min_count must be >= 1");
        loss.validate();
    }

    LossWeights effective_loss() const {
        LossWeights w = loss;
        if (!clustering_constraint) {
            w.lambda = 0.0;
            w.mu = 0.0;
        }
        return w;
    }
};

struct ModelSnapshot {
    std::string stage;
    PairEncoderModel<float> params;
};

// Encoder tensors become zeta*current + (1-zeta)*initial; task heads (prompt
// table, pooling, classifier) are carried from current unblended.
inline ModelSnapshot blend_parameters(const ModelSnapshot& current, const ModelSnapshot& initial,
                                      double zeta) {
    if (!(zeta >= 0.0 && zeta <= 1.0)) throw ValidationError("blend: zeta must be in [0,1]");
    if (!same_shapes(current.params, initial.params))
        throw ValidationError("blend: snapshot shapes differ");
    ModelSnapshot out = current;
    out.stage = "blended";
    std::map<std::string, const Mat<float>*> init_tensors;
    for_each_tensor(initial.params, [&](const std::string& name, const Mat<float>& t) {
        init_tensors[name] = &t;
    });
    for_each_tensor(out.params, [&](const std::string& name, Mat<float>& t) {
        if (is_encoder_tensor(name))
            t = float(zeta) * t + float(1.0 - zeta) * (*init_tensors.at(name));
    });
    return out;
}

struct TrainLogEntry {
    std::string phase;
    int epoch = 0;
    int step = 0;
    LossBreakdown losses;
    double min_center_distance = -1.0;
};

struct BlockReport {
    int block_index = 0;
    std::size_t num_messages = 0;
    std::size_t num_clusters = 0;
    double noise_fraction = 0.0;
    std::optional<double> nmi, ami, ari;
    std::vector<std::string> ids;
    std::vector<std::int64_t> assignments;  // kNoise for density-method outliers
    Mat<float> embeddings;                  // one row per message
};

namespace detail {

// tokenize each message once; pair layouts are assembled from these
inline std::vector<std::vector<int>> content_ids(const MessageBlock& block, const Vocabulary& v) {
    std::vector<std::vector<int>> out;
    out.reserve(block.messages.size());
    for (const auto& m : block.messages) out.push_back(v.encode(m.text));
    return out;
}

inline MessageBlock merge_blocks(const std::vector<const MessageBlock*>& blocks) {
    MessageBlock merged;
    merged.index = blocks.front()->index;
    for (const auto* b : blocks)
        merged.messages.insert(merged.messages.end(), b->messages.begin(), b->messages.end());
    std::stable_sort(merged.messages.begin(), merged.messages.end(),
                     [](const Message& a, const Message& b) {
                         if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
                         return a.id < b.id;
                     });
    return merged;
}

}  // namespace detail

// One gradient-descent phase (initial training or window maintenance) over a
// fully labeled message set. Centers are rebuilt per phase since the event set
// changes.
template <typename S>
void train_phase(PairEncoderModel<S>& model, const MessageBlock& data, const Vocabulary& vocab,
                 const LifecycleConfig& cfg, const std::string& phase,
                 std::vector<TrainLogEntry>* log) {
    if (!data.fully_labeled())
        throw ValidationError("train_phase(" + phase + "): blocks must be fully labeled");
    auto graph = build_graph(data, cfg.temporal_window_seconds);
    auto pair_set = sample_training_pairs(graph, data, cfg.y, hash_str(cfg.seed, phase));

    const auto labels = data.distinct_labels();
    std::map<std::int64_t, int> dense;
    for (std::size_t i = 0; i < labels.size(); ++i) dense[labels[i]] = int(i);

    const auto ids = detail::content_ids(data, vocab);
    std::vector<TrainPair> pairs;
    pairs.reserve(pair_set.total_pairs());
    for (const auto& ap : pair_set.anchors) {
        for (const auto& p : ap.pairs) {
            TrainPair tp;
            tp.layout = build_layout(ids[p.anchor], ids[p.sampled], p.relations,
                                     model.cfg.max_len, model.cfg.prompt_enabled);
            tp.same_event = *p.same_event;
            tp.center_row = dense.at(*data.messages[p.anchor].event_label);
            pairs.push_back(std::move(tp));
        }
    }

    CenterMatrix<S> centers(int(labels.size()), model.cfg.d_model, S(cfg.beta));
    AdamOptimizer<S> opt(model, cfg.learning_rate);
    const auto weights = cfg.effective_loss();
    auto shuffle_rng = make_rng(hash_str(cfg.seed, phase + "/shuffle"));

    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), 0);
    PairEncoderModel<S> grads = zeros_like(model);
    int global_step = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        for (std::size_t start = 0; start < order.size(); start += std::size_t(cfg.batch_size)) {
            const auto end = std::min(order.size(), start + std::size_t(cfg.batch_size));
            std::vector<TrainPair> batch;
            batch.reserve(end - start);
            for (std::size_t i = start; i < end; ++i) batch.push_back(pairs[order[i]]);

            set_zero(grads);
            auto losses = eval_batch(model, batch, centers, /*update_centers=*/true, weights,
                                     hash_mix(cfg.seed, std::uint64_t(global_step) * 2 + 1), &grads);
            opt.step(model, grads);

            if (log)
                log->push_back(TrainLogEntry{phase, epoch, global_step, losses,
                                             centers.min_pairwise_distance()});
            ++global_step;
        }
    }
}

// Detection: n pairs per anchor, similarity-gated aggregation, clustering, and
// metrics when ground truth is present.
template <typename S>
BlockReport detect_block(const PairEncoderModel<S>& model, const Vocabulary& vocab,
                         const MessageBlock& block, const LifecycleConfig& cfg) {
    if (block.messages.size() < 2)
        throw PipelineError("detect_block: block " + std::to_string(block.index) +
                            " has fewer than 2 messages");
    auto graph = build_graph(block, cfg.temporal_window_seconds);
    auto pair_set = sample_detection_pairs(graph, block, cfg.detection_samples(),
                                           hash_mix(cfg.seed, std::uint64_t(block.index)));
    const auto ids = detail::content_ids(block, vocab);
    const auto n_msgs = block.messages.size();
    const int d = model.cfg.d_model;

    Mat<float> final_reprs(n_msgs, d);
    PairForwardCache<S> cache;
    for (const auto& ap : pair_set.anchors) {
        CandidateSet<S> cands;
        cands.candidates.resize(Eigen::Index(ap.pairs.size()), d);
        cands.similarities.resize(ap.pairs.size());
        for (std::size_t j = 0; j < ap.pairs.size(); ++j) {
            const auto& p = ap.pairs[j];
            auto layout = build_layout(ids[p.anchor], ids[p.sampled], p.relations,
                                       model.cfg.max_len, model.cfg.prompt_enabled);
            pair_forward(model, layout, cache);
            cands.candidates.row(Eigen::Index(j)) = cache.anchor_repr;
            cands.similarities[j] = cache.q;
        }
        RowVec<S> fused;
        switch (cfg.aggregation) {
            case AggregationMode::Similarity: fused = aggregate(cands, cfg.alpha); break;
            case AggregationMode::TopK: fused = aggregate_top_k(cands, cfg.top_k); break;
            case AggregationMode::Average: fused = aggregate_average(cands); break;
        }
        final_reprs.row(Eigen::Index(ap.anchor)) = fused.template cast<float>();
    }

    ClusteringConfig ccfg = cfg.clustering;
    ccfg.rng_seed = hash_mix(cfg.seed, 0xc105ULL + std::uint64_t(block.index));
    if (ccfg.algorithm == ClusterAlgorithm::KMeans && ccfg.k == 0) {
        const auto labels = block.distinct_labels();
        if (labels.empty())
            throw ValidationError("detect_block: kmeans k unset and block " +
                                  std::to_string(block.index) + " is unlabeled");
        ccfg.k = int(labels.size());
    }

    BlockReport rep;
    rep.block_index = block.index;
    rep.num_messages = n_msgs;
    rep.embeddings = final_reprs;
    for (const auto& m : block.messages) rep.ids.push_back(m.id);

    rep.assignments = run_clustering(final_reprs.cast<double>(), ccfg);
    std::set<std::int64_t> clusters;
    std::size_t noise = 0;
    for (auto l : rep.assignments) {
        if (l == kNoise)
            ++noise;
        else
            clusters.insert(l);
    }
    rep.num_clusters = clusters.size();
    rep.noise_fraction = double(noise) / double(n_msgs);

    if (block.fully_labeled()) {
        std::vector<std::int64_t> truth;
        for (const auto& m : block.messages) truth.push_back(*m.event_label);
        const auto scored = relabel_noise_as_singletons(rep.assignments);
        rep.nmi = nmi(scored, truth);
        rep.ami = ami(scored, truth);
        rep.ari = ari(scored, truth);
    }
    return rep;
}

struct StreamRunResult {
    Vocabulary vocab;
    std::vector<BlockReport> reports;
    std::vector<TrainLogEntry> training_log;
    std::vector<ModelSnapshot> snapshots;  // pristine, initial, post-maintenance-k
    PairEncoderModel<float> final_model;
};

struct InitialTraining {
    PairEncoderModel<float> model;      // post-training parameters
    ModelSnapshot initial_encoder;      // pre-training state kept for blending
};

inline InitialTraining train_initial(const MessageBlock& m0, const Vocabulary& vocab,
                                     const LifecycleConfig& cfg,
                                     std::vector<TrainLogEntry>* log = nullptr) {
    InitialTraining out{make_model<float>(cfg.encoder, cfg.seed), {}};
    out.initial_encoder = ModelSnapshot{"pristine", out.model};
    train_phase(out.model, m0, vocab, cfg, "initial", log);
    return out;
}

inline StreamRunResult run_stream(const std::vector<MessageBlock>& blocks, LifecycleConfig cfg) {
    cfg.validate();
    if (blocks.empty()) throw ValidationError("run_stream: empty stream");
    if (!blocks.front().fully_labeled())
        throw ValidationError("run_stream: block 0 must be fully labeled");

    StreamRunResult res;
    {
        std::vector<MessageBlock> labeled;
        for (const auto& b : blocks)
            if (b.fully_labeled()) labeled.push_back(b);
        res.vocab = build_vocab(labeled, cfg.vocab_min_count);
    }
    cfg.encoder.vocab_size = res.vocab.size();

    PairEncoderModel<float> model = make_model<float>(cfg.encoder, cfg.seed);
    ModelSnapshot pristine{"pristine", model};
    res.snapshots.push_back(pristine);

    train_phase(model, blocks[0], res.vocab, cfg, "initial", &res.training_log);
    res.snapshots.push_back(ModelSnapshot{"initial", model});

    int maintenance_round = 0;
    for (std::size_t t = 1; t < blocks.size(); ++t) {
        res.reports.push_back(detect_block(model, res.vocab, blocks[t], cfg));

        if (t % std::size_t(cfg.window_size) == 0) {
            ++maintenance_round;
            const std::string phase = "maintenance-" + std::to_string(maintenance_round);
            ModelSnapshot blended =
                blend_parameters(ModelSnapshot{"current", model}, pristine, cfg.zeta);
            model = std::move(blended.params);

            std::vector<const MessageBlock*> window;
            for (std::size_t i = t + 1 - std::size_t(cfg.window_size); i <= t; ++i) {
                if (!blocks[i].fully_labeled())
                    throw ValidationError("run_stream: maintenance block " +
                                          std::to_string(blocks[i].index) + " is not labeled");
                window.push_back(&blocks[i]);
            }
            MessageBlock merged = detail::merge_blocks(window);
            train_phase(model, merged, res.vocab, cfg, phase, &res.training_log);
            res.snapshots.push_back(ModelSnapshot{"post-" + phase, model});
        }
    }
    res.final_model = std::move(model);
    return res;
}

}  // namespace evdet
