#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "evdet/config.hpp"

using namespace evdet;

TEST_CASE("flat config parsing handles comments and blank lines") {
    std::istringstream in(
        "# a comment\n"
        "\n"
        "lifecycle.window_size = 4   # trailing comment\n"
        "objective.kappa=0.8\n");
    auto kv = parse_flat_config(in);
    CHECK(kv.at("lifecycle.window_size") == "4");
    CHECK(kv.at("objective.kappa") == "0.8");
}

TEST_CASE("lines without an equals sign are parse errors") {
    std::istringstream in("just some words\n");
    CHECK_THROWS_AS(parse_flat_config(in), ParseError);
}

TEST_CASE("unknown run config keys are rejected by name") {
    FlatConfig kv{{"lifecycle.windw_size", "3"}};
    try {
        lifecycle_config_from(kv);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("lifecycle.windw_size") != std::string::npos);
    }
}

TEST_CASE("run config keys land in the right fields") {
    FlatConfig kv{
        {"lifecycle.window_size", "2"},   {"lifecycle.epochs", "1"},
        {"lifecycle.batch_size", "16"},   {"lifecycle.learning_rate", "0.005"},
        {"lifecycle.zeta", "0.25"},       {"lifecycle.seed", "99"},
        {"pairing.y", "12"},              {"graph.temporal_window_seconds", "7200"},
        {"encoder.d_model", "32"},        {"encoder.layers", "1"},
        {"encoder.heads", "4"},           {"head.pool_heads", "3"},
        {"objective.lambda", "0.02"},     {"objective.beta", "0.8"},
        {"aggregate.alpha", "0.85"},      {"aggregate.mode", "topk"},
        {"cluster.algorithm", "hdbscan"}, {"cluster.min_cluster_size", "5"},
        {"ablation.clustering_constraint", "off"},
    };
    auto cfg = lifecycle_config_from(kv);
    CHECK(cfg.window_size == 2);
    CHECK(cfg.epochs == 1);
    CHECK(cfg.batch_size == 16);
    CHECK(cfg.learning_rate == Catch::Approx(0.005));
    CHECK(cfg.zeta == Catch::Approx(0.25));
    CHECK(cfg.seed == 99);
    CHECK(cfg.y == 12);
    CHECK(cfg.detection_samples() == 36);  // n defaults to 3y
    CHECK(cfg.temporal_window_seconds == 7200);
    CHECK(cfg.encoder.d_model == 32);
    CHECK(cfg.encoder.layers == 1);
    CHECK(cfg.encoder.pool_heads == 3);
    CHECK(cfg.loss.lambda == Catch::Approx(0.02));
    CHECK(cfg.beta == Catch::Approx(0.8));
    CHECK(cfg.alpha == Catch::Approx(0.85));
    CHECK(cfg.aggregation == AggregationMode::TopK);
    CHECK(cfg.clustering.algorithm == ClusterAlgorithm::Hdbscan);
    CHECK(cfg.clustering.min_cluster_size == 5);
    CHECK_FALSE(cfg.clustering_constraint);
    CHECK(cfg.effective_loss().lambda == 0.0);
    CHECK(cfg.effective_loss().mu == 0.0);
}

TEST_CASE("explicit pairing.n overrides the 3y rule") {
    FlatConfig kv{{"pairing.y", "10"}, {"pairing.n", "17"}};
    auto cfg = lifecycle_config_from(kv);
    CHECK(cfg.detection_samples() == 17);
}

TEST_CASE("out-of-range values are caught before any work starts") {
    CHECK_THROWS_AS(lifecycle_config_from({{"lifecycle.zeta", "1.5"}}), ValidationError);
    CHECK_THROWS_AS(lifecycle_config_from({{"aggregate.alpha", "0"}}), ValidationError);
    CHECK_THROWS_AS(lifecycle_config_from({{"lifecycle.epochs", "-1"}}), ValidationError);
    CHECK_THROWS_AS(lifecycle_config_from({{"pairing.y", "abc"}}), ValidationError);
    CHECK_THROWS_AS(lifecycle_config_from({{"cluster.algorithm", "optics"}}), ValidationError);
}

TEST_CASE("resolved config round-trips through the parser") {
    FlatConfig kv{{"lifecycle.window_size", "5"}, {"aggregate.mode", "average"},
                  {"ablation.prompt", "off"}};
    auto cfg = lifecycle_config_from(kv);
    auto resolved = resolved_config(cfg);
    CHECK(resolved.at("lifecycle.window_size") == "5");
    CHECK(resolved.at("aggregate.mode") == "average");
    CHECK(resolved.at("ablation.prompt") == "off");
    CHECK(resolved.count("lifecycle.learning_rate") == 1);  // defaults filled

    auto cfg2 = lifecycle_config_from(resolved);
    CHECK(cfg2.window_size == cfg.window_size);
    CHECK(cfg2.aggregation == cfg.aggregation);
    CHECK(cfg2.encoder.prompt_enabled == cfg.encoder.prompt_enabled);
    CHECK(cfg2.learning_rate == cfg.learning_rate);
}

TEST_CASE("synthetic config parses the documented field names") {
    FlatConfig kv{
        {"seed", "9"},
        {"num_blocks", "2"},
        {"events_per_block", "3"},
        {"messages_per_event", "4"},
        {"zipf_exponent", "1.5"},
        {"vocab_size_per_event", "10"},
        {"shared_vocab_size", "5"},
        {"words_per_message", "6"},
        {"intra_event_attribute_probability", "0.5"},
        {"inter_event_noise_probability", "0.1"},
        {"block_duration_seconds", "3600"},
    };
    auto cfg = synthetic_config_from(kv);
    CHECK(cfg.seed == 9);
    CHECK(cfg.num_blocks == 2);
    CHECK(cfg.zipf_exponent == Catch::Approx(1.5));
    CHECK(cfg.block_duration_seconds == 3600);

    CHECK_THROWS_AS(synthetic_config_from({{"zipf", "1"}}), ValidationError);
    CHECK_THROWS_AS(synthetic_config_from({{"num_blocks", "0"}}), ValidationError);
}
