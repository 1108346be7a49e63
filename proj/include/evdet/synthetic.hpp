#pragma once

// Seeded synthetic social streams. Each block holds a fresh set of events; every
// event owns disjoint word/attribute pools, so with inter_event_noise_probability = 0
// no attribute is ever shared across events.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "evdet/rng.hpp"
#include "evdet/types.hpp"

namespace evdet {

struct SyntheticStreamConfig {
    std::uint64_t seed = 42;
    int num_blocks = 4;
    int events_per_block = 6;
    int messages_per_event = 60;
    double zipf_exponent = 0.0;  // 0 = fixed event sizes, >0 = Zipf-tailed
    int vocab_size_per_event = 30;
    int shared_vocab_size = 20;
    int words_per_message = 8;
    double intra_event_attribute_probability = 0.7;
    double inter_event_noise_probability = 0.05;
    std::int64_t block_duration_seconds = 86400;

    void validate() const {
        auto check_count = [](int v, const char* name) {
            if (v < 1) throw ValidationError(std::string("synthetic config: ") + name + " must be >= 1");
        };
        check_count(num_blocks, "num_blocks");
        check_count(events_per_block, "events_per_block");
        check_count(messages_per_event, "messages_per_event");
        check_count(vocab_size_per_event, "vocab_size_per_event");
        check_count(words_per_message, "words_per_message");
        if (shared_vocab_size < 0)
            throw ValidationError("synthetic config: shared_vocab_size must be >= 0");
        auto check_prob = [](double p, const char* name) {
            if (!(p >= 0.0 && p <= 1.0))
                throw ValidationError(std::string("synthetic config: ") + name + " must be in [0,1]");
        };
        check_prob(intra_event_attribute_probability, "intra_event_attribute_probability");
        check_prob(inter_event_noise_probability, "inter_event_noise_probability");
        if (zipf_exponent < 0.0)
            throw ValidationError("synthetic config: zipf_exponent must be >= 0");
        if (block_duration_seconds < 1)
            throw ValidationError("synthetic config: block_duration_seconds must be >= 1");
    }
};

namespace detail {

inline int zipf_event_size(const SyntheticStreamConfig& cfg, int rank_one_based) {
    if (cfg.zipf_exponent == 0.0) return cfg.messages_per_event;
    double sz = cfg.messages_per_event / std::pow(double(rank_one_based), cfg.zipf_exponent);
    return std::max(1, int(std::llround(sz)));
}

}  // namespace detail

inline std::vector<MessageBlock> generate_synthetic(const SyntheticStreamConfig& cfg) {
    cfg.validate();
    auto rng = make_rng(cfg.seed);
    std::uniform_real_distribution<double> coin(0.0, 1.0);

    constexpr int kHashtagPool = 3;
    constexpr int kUserPool = 10;
    constexpr int kEntityPool = 5;
    constexpr int kNoisePool = 5;

    std::vector<MessageBlock> blocks;
    std::int64_t unique_user_counter = 0;

    for (int b = 0; b < cfg.num_blocks; ++b) {
        MessageBlock block;
        block.index = b;
        const std::int64_t t0 = std::int64_t(b) * cfg.block_duration_seconds;
        std::uniform_int_distribution<std::int64_t> ts_dist(t0, t0 + cfg.block_duration_seconds - 1);

        std::int64_t msg_counter = 0;
        for (int e = 0; e < cfg.events_per_block; ++e) {
            const std::int64_t label = std::int64_t(b) * cfg.events_per_block + e;
            // attribute pools are disjoint per event; word pools are keyed by the
            // within-block slot so later blocks reuse the same topical vocabulary
            const std::string ev = "ev" + std::to_string(label);
            const std::string slot = "s" + std::to_string(e);
            const int size = detail::zipf_event_size(cfg, e + 1);

            for (int k = 0; k < size; ++k) {
                Message m;
                m.id = "m" + std::to_string(b) + "_" + std::to_string(msg_counter++);
                m.timestamp = ts_dist(rng);
                m.event_label = label;

                // text: event vocabulary with a sprinkle of shared stopword-like tokens
                std::string text;
                for (int w = 0; w < cfg.words_per_message; ++w) {
                    if (!text.empty()) text += ' ';
                    if (cfg.shared_vocab_size > 0 && coin(rng) < 0.25) {
                        text += "common" + std::to_string(std::uint64_t(rng() % cfg.shared_vocab_size));
                    } else {
                        text += slot + "w" + std::to_string(std::uint64_t(rng() % cfg.vocab_size_per_event));
                    }
                }
                m.text = text;

                if (coin(rng) < cfg.intra_event_attribute_probability) {
                    int n_tags = 1 + int(rng() % 2);
                    for (int j = 0; j < n_tags; ++j)
                        m.hashtags.insert(ev + "h" + std::to_string(std::uint64_t(rng() % kHashtagPool)));
                }
                if (coin(rng) < cfg.inter_event_noise_probability)
                    m.hashtags.insert("noiseh" + std::to_string(std::uint64_t(rng() % kNoisePool)));

                if (coin(rng) < cfg.intra_event_attribute_probability)
                    m.user = ev + "u" + std::to_string(std::uint64_t(rng() % kUserPool));
                else
                    m.user = "solo" + std::to_string(unique_user_counter++);
                if (coin(rng) < cfg.intra_event_attribute_probability * 0.5)
                    m.mentions.insert(ev + "u" + std::to_string(std::uint64_t(rng() % kUserPool)));
                if (coin(rng) < cfg.inter_event_noise_probability)
                    m.mentions.insert("noiseu" + std::to_string(std::uint64_t(rng() % kNoisePool)));

                if (coin(rng) < cfg.intra_event_attribute_probability) {
                    int n_ents = 1 + int(rng() % 2);
                    for (int j = 0; j < n_ents; ++j)
                        m.entities.insert(ev + "ent" + std::to_string(std::uint64_t(rng() % kEntityPool)));
                }
                if (coin(rng) < cfg.inter_event_noise_probability)
                    m.entities.insert("noisee" + std::to_string(std::uint64_t(rng() % kNoisePool)));

                block.messages.push_back(std::move(m));
            }
        }

        std::stable_sort(block.messages.begin(), block.messages.end(),
                         [](const Message& a, const Message& b2) {
                             if (a.timestamp != b2.timestamp) return a.timestamp < b2.timestamp;
                             return a.id < b2.id;
                         });
        blocks.push_back(std::move(block));
    }
    return blocks;
}

}  // namespace evdet
