#pragma once

// Flat key/value config files ("key = value", '#' comments). Run configs use
// dotted keys (lifecycle.window_size); synthetic configs use bare field names.
// Unknown keys are rejected up front.

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "evdet/lifecycle.hpp"
#include "evdet/synthetic.hpp"

namespace evdet {

using FlatConfig = std::map<std::string, std::string>;

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline std::int64_t to_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        auto r = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw ValidationError("config key '" + key + "': expected integer, got '" + v + "'");
    }
}

inline double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        auto r = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw ValidationError("config key '" + key + "': expected number, got '" + v + "'");
    }
}

inline bool to_bool(const std::string& key, const std::string& v) {
    if (v == "on" || v == "true" || v == "1" || v == "yes") return true;
    if (v == "off" || v == "false" || v == "0" || v == "no") return false;
    throw ValidationError("config key '" + key + "': expected on/off, got '" + v + "'");
}

}  // namespace detail

inline FlatConfig parse_flat_config(std::istream& in) {
    FlatConfig out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("config line " + std::to_string(line_no) + ": expected key = value");
        const auto key = detail::trim(line.substr(0, eq));
        const auto value = detail::trim(line.substr(eq + 1));
        if (key.empty())
            throw ParseError("config line " + std::to_string(line_no) + ": empty key");
        out[key] = value;
    }
    return out;
}

inline FlatConfig load_flat_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config file '" + path + "'");
    return parse_flat_config(in);
}

inline SyntheticStreamConfig synthetic_config_from(const FlatConfig& kv) {
    SyntheticStreamConfig c;
    for (const auto& [key, value] : kv) {
        if (key == "seed") c.seed = std::uint64_t(detail::to_int(key, value));
        else if (key == "num_blocks") c.num_blocks = int(detail::to_int(key, value));
        else if (key == "events_per_block") c.events_per_block = int(detail::to_int(key, value));
        else if (key == "messages_per_event") c.messages_per_event = int(detail::to_int(key, value));
        else if (key == "zipf_exponent") c.zipf_exponent = detail::to_double(key, value);
        else if (key == "vocab_size_per_event") c.vocab_size_per_event = int(detail::to_int(key, value));
        else if (key == "shared_vocab_size") c.shared_vocab_size = int(detail::to_int(key, value));
        else if (key == "words_per_message") c.words_per_message = int(detail::to_int(key, value));
        else if (key == "intra_event_attribute_probability")
            c.intra_event_attribute_probability = detail::to_double(key, value);
        else if (key == "inter_event_noise_probability")
            c.inter_event_noise_probability = detail::to_double(key, value);
        else if (key == "block_duration_seconds")
            c.block_duration_seconds = detail::to_int(key, value);
        else throw ValidationError("unknown synthetic config key '" + key + "'");
    }
    c.validate();
    return c;
}

inline LifecycleConfig lifecycle_config_from(const FlatConfig& kv) {
    LifecycleConfig c;
    for (const auto& [key, value] : kv) {
        if (key == "graph.temporal_window_seconds")
            c.temporal_window_seconds = detail::to_int(key, value);
        else if (key == "pairing.y") c.y = int(detail::to_int(key, value));
        else if (key == "pairing.n") c.n = int(detail::to_int(key, value));
        else if (key == "encoder.d_model") c.encoder.d_model = int(detail::to_int(key, value));
        else if (key == "encoder.layers") c.encoder.layers = int(detail::to_int(key, value));
        else if (key == "encoder.heads") c.encoder.heads = int(detail::to_int(key, value));
        else if (key == "encoder.ff_mult") c.encoder.ff_mult = int(detail::to_int(key, value));
        else if (key == "encoder.max_len") c.encoder.max_len = int(detail::to_int(key, value));
        else if (key == "encoder.vocab_min_count")
            c.vocab_min_count = int(detail::to_int(key, value));
        else if (key == "head.pool_heads") c.encoder.pool_heads = int(detail::to_int(key, value));
        else if (key == "head.pool_hidden") c.encoder.pool_hidden = int(detail::to_int(key, value));
        else if (key == "objective.kappa") c.loss.kappa = detail::to_double(key, value);
        else if (key == "objective.lambda") c.loss.lambda = detail::to_double(key, value);
        else if (key == "objective.mu") c.loss.mu = detail::to_double(key, value);
        else if (key == "objective.gamma") c.loss.gamma = detail::to_double(key, value);
        else if (key == "objective.beta") c.beta = detail::to_double(key, value);
        else if (key == "aggregate.alpha") c.alpha = detail::to_double(key, value);
        else if (key == "aggregate.mode") c.aggregation = parse_aggregation_mode(value);
        else if (key == "aggregate.top_k") c.top_k = int(detail::to_int(key, value));
        else if (key == "cluster.algorithm") c.clustering.algorithm = parse_cluster_algorithm(value);
        else if (key == "cluster.k") c.clustering.k = int(detail::to_int(key, value));
        else if (key == "cluster.eps") c.clustering.eps = detail::to_double(key, value);
        else if (key == "cluster.min_points") c.clustering.min_points = int(detail::to_int(key, value));
        else if (key == "cluster.min_cluster_size")
            c.clustering.min_cluster_size = int(detail::to_int(key, value));
        else if (key == "cluster.max_iterations")
            c.clustering.max_iterations = int(detail::to_int(key, value));
        else if (key == "lifecycle.window_size") c.window_size = int(detail::to_int(key, value));
        else if (key == "lifecycle.epochs") c.epochs = int(detail::to_int(key, value));
        else if (key == "lifecycle.batch_size") c.batch_size = int(detail::to_int(key, value));
        else if (key == "lifecycle.learning_rate") c.learning_rate = detail::to_double(key, value);
        else if (key == "lifecycle.zeta") c.zeta = detail::to_double(key, value);
        else if (key == "lifecycle.seed") c.seed = std::uint64_t(detail::to_int(key, value));
        else if (key == "ablation.prompt") c.encoder.prompt_enabled = detail::to_bool(key, value);
        else if (key == "ablation.structured_attention")
            c.encoder.structured_attention = detail::to_bool(key, value);
        else if (key == "ablation.clustering_constraint")
            c.clustering_constraint = detail::to_bool(key, value);
        else throw ValidationError("unknown run config key '" + key + "'");
    }
    c.validate();
    c.clustering.validate();
    c.encoder.vocab_size = 5;  // placeholder so validate() passes; filled per run
    c.encoder.validate();
    c.encoder.vocab_size = 0;
    return c;
}

// Fully resolved key set, defaults filled; written next to run outputs.
inline FlatConfig resolved_config(const LifecycleConfig& c) {
    FlatConfig kv;
    auto put = [&](const std::string& k, auto v) {
        std::ostringstream os;
        os << v;
        kv[k] = os.str();
    };
    put("graph.temporal_window_seconds", c.temporal_window_seconds);
    put("pairing.y", c.y);
    put("pairing.n", c.detection_samples());
    put("encoder.d_model", c.encoder.d_model);
    put("encoder.layers", c.encoder.layers);
    put("encoder.heads", c.encoder.heads);
    put("encoder.ff_mult", c.encoder.ff_mult);
    put("encoder.max_len", c.encoder.max_len);
    put("encoder.vocab_min_count", c.vocab_min_count);
    put("head.pool_heads", c.encoder.pool_heads);
    put("head.pool_hidden", c.encoder.pool_hidden);
    put("objective.kappa", c.loss.kappa);
    put("objective.lambda", c.loss.lambda);
    put("objective.mu", c.loss.mu);
    put("objective.gamma", c.loss.gamma);
    put("objective.beta", c.beta);
    put("aggregate.alpha", c.alpha);
    kv["aggregate.mode"] = c.aggregation == AggregationMode::Similarity ? "similarity"
                           : c.aggregation == AggregationMode::TopK     ? "topk"
                                                                        : "average";
    put("aggregate.top_k", c.top_k);
    kv["cluster.algorithm"] = c.clustering.algorithm == ClusterAlgorithm::KMeans   ? "kmeans"
                              : c.clustering.algorithm == ClusterAlgorithm::Dbscan ? "dbscan"
                                                                                   : "hdbscan";
    put("cluster.k", c.clustering.k);
    put("cluster.eps", c.clustering.eps);
    put("cluster.min_points", c.clustering.min_points);
    put("cluster.min_cluster_size", c.clustering.min_cluster_size);
    put("cluster.max_iterations", c.clustering.max_iterations);
    put("lifecycle.window_size", c.window_size);
    put("lifecycle.epochs", c.epochs);
    put("lifecycle.batch_size", c.batch_size);
    put("lifecycle.learning_rate", c.learning_rate);
    put("lifecycle.zeta", c.zeta);
    put("lifecycle.seed", c.seed);
    kv["ablation.prompt"] = c.encoder.prompt_enabled ? "on" : "off";
    kv["ablation.structured_attention"] = c.encoder.structured_attention ? "on" : "off";
    kv["ablation.clustering_constraint"] = c.clustering_constraint ? "on" : "off";
    return kv;
}

inline void write_flat_config(const std::string& path, const FlatConfig& kv) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open '" + path + "' for writing");
    for (const auto& [k, v] : kv) out << k << " = " << v << "\n";
}

}  // namespace evdet
