// evdet: incremental social-event-detection pipeline.
//   synth        generate a seeded synthetic stream file
//   run          train/detect/maintain over a stream, write reports
//   eval         score a predicted labeling against ground truth
//   graph-stats  per-block multi-relational graph statistics

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "evdet/config.hpp"
#include "evdet/lifecycle.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitRuntime = 3;

std::vector<evdet::MessageBlock> load_input_stream(const std::string& stream_path,
                                                   const std::string& synth_config_path) {
    if (!stream_path.empty() && !synth_config_path.empty())
        throw evdet::ValidationError("give either --stream or --synthetic, not both");
    if (!stream_path.empty()) return evdet::load_stream(stream_path);
    if (!synth_config_path.empty())
        return evdet::generate_synthetic(
            evdet::synthetic_config_from(evdet::load_flat_config(synth_config_path)));
    throw evdet::ValidationError("one of --stream or --synthetic is required");
}

void apply_ablations(evdet::LifecycleConfig& cfg, const std::vector<std::string>& ablations) {
    for (const auto& spec : ablations) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos)
            throw CLI::ValidationError("--ablation", "expected key=value, got '" + spec + "'");
        const auto key = spec.substr(0, eq);
        const auto value = spec.substr(eq + 1);
        if (key == "prompt")
            cfg.encoder.prompt_enabled = evdet::detail::to_bool(key, value);
        else if (key == "structured_attention")
            cfg.encoder.structured_attention = evdet::detail::to_bool(key, value);
        else if (key == "clustering_constraint")
            cfg.clustering_constraint = evdet::detail::to_bool(key, value);
        else if (key == "aggregation")
            cfg.aggregation = evdet::parse_aggregation_mode(value);
        else
            throw CLI::ValidationError("--ablation", "unknown ablation axis '" + key + "'");
    }
}

std::string block_tag(int index) {
    std::ostringstream os;
    os << "block_" << std::setw(4) << std::setfill('0') << index;
    return os.str();
}

void write_block_exports(const fs::path& out_dir, const evdet::BlockReport& rep,
                         json& report_json) {
    const auto tag = block_tag(rep.block_index);
    const auto emb_path = out_dir / (tag + "_embeddings.tsv");
    const auto asg_path = out_dir / (tag + "_assignments.csv");

    std::ofstream emb(emb_path);
    emb << std::setprecision(9);
    for (std::size_t i = 0; i < rep.ids.size(); ++i) {
        emb << rep.ids[i];
        for (Eigen::Index jj = 0; jj < rep.embeddings.cols(); ++jj)
            emb << "\t" << rep.embeddings(Eigen::Index(i), jj);
        emb << "\n";
    }
    std::ofstream asg(asg_path);
    for (std::size_t i = 0; i < rep.ids.size(); ++i)
        asg << rep.ids[i] << "," << rep.assignments[i] << "\n";

    report_json["embeddings_path"] = emb_path.string();
    report_json["assignments_path"] = asg_path.string();
}

json report_to_json(const evdet::BlockReport& rep) {
    json j;
    j["block"] = rep.block_index;
    j["messages"] = rep.num_messages;
    j["clusters"] = rep.num_clusters;
    j["noise_fraction"] = rep.noise_fraction;
    if (rep.nmi) {
        j["nmi"] = *rep.nmi;
        j["ami"] = *rep.ami;
        j["ari"] = *rep.ari;
    }
    return j;
}

void write_summary(const fs::path& out_dir, const std::vector<evdet::BlockReport>& reports) {
    std::ofstream txt(out_dir / "summary.txt");
    std::ofstream tsv(out_dir / "summary.tsv");
    txt << std::fixed << std::setprecision(4);
    tsv << std::fixed << std::setprecision(6);

    txt << "block   msgs  clusters  noise   NMI     AMI     ARI\n";
    tsv << "block\tmessages\tclusters\tnoise_fraction\tnmi\tami\tari\n";
    double s_nmi = 0, s_ami = 0, s_ari = 0;
    int scored = 0;
    for (const auto& r : reports) {
        txt << std::left << std::setw(8) << r.block_index << std::setw(6) << r.num_messages
            << std::setw(10) << r.num_clusters << std::setw(8) << r.noise_fraction;
        tsv << r.block_index << "\t" << r.num_messages << "\t" << r.num_clusters << "\t"
            << r.noise_fraction << "\t";
        if (r.nmi) {
            txt << std::setw(8) << *r.nmi << std::setw(8) << *r.ami << std::setw(8) << *r.ari;
            tsv << *r.nmi << "\t" << *r.ami << "\t" << *r.ari;
            s_nmi += *r.nmi;
            s_ami += *r.ami;
            s_ari += *r.ari;
            ++scored;
        } else {
            txt << "-       -       -";
            tsv << "-\t-\t-";
        }
        txt << "\n";
        tsv << "\n";
    }
    if (scored > 0) {
        txt << "mean    " << std::setw(6) << "" << std::setw(10) << "" << std::setw(8) << ""
            << std::setw(8) << s_nmi / scored << std::setw(8) << s_ami / scored << std::setw(8)
            << s_ari / scored << "\n";
        tsv << "mean\t\t\t\t" << s_nmi / scored << "\t" << s_ami / scored << "\t" << s_ari / scored
            << "\n";
    }
}

void write_training_log(const fs::path& path, const std::vector<evdet::TrainLogEntry>& log) {
    std::ofstream out(path);
    out << std::setprecision(9);
    out << "phase\tepoch\tstep\tl_pair\tl_intra\tl_inter\ttotal\tmin_center_distance\n";
    for (const auto& e : log)
        out << e.phase << "\t" << e.epoch << "\t" << e.step << "\t" << e.losses.l_pair << "\t"
            << e.losses.l_intra << "\t" << e.losses.l_inter << "\t" << e.losses.total << "\t"
            << e.min_center_distance << "\n";
}

int cmd_synth(const std::string& config_path, const std::string& out_path,
              std::optional<std::uint64_t> seed) {
    auto cfg = evdet::synthetic_config_from(evdet::load_flat_config(config_path));
    if (seed) cfg.seed = *seed;
    const auto blocks = evdet::generate_synthetic(cfg);
    evdet::write_stream(out_path, blocks);
    std::size_t total = 0;
    for (const auto& b : blocks) total += b.messages.size();
    std::cout << "wrote " << blocks.size() << " blocks, " << total << " messages to " << out_path
              << "\n";
    return 0;
}

int cmd_run(const std::string& config_path, const std::string& stream_path,
            const std::string& synth_path, const std::string& out_dir,
            const std::string& cluster_override, const std::vector<std::string>& ablations,
            std::optional<std::uint64_t> seed) {
    evdet::LifecycleConfig cfg =
        config_path.empty() ? evdet::LifecycleConfig{}
                            : evdet::lifecycle_config_from(evdet::load_flat_config(config_path));
    if (!cluster_override.empty())
        cfg.clustering.algorithm = evdet::parse_cluster_algorithm(cluster_override);
    if (seed) cfg.seed = *seed;
    apply_ablations(cfg, ablations);
    cfg.validate();

    const auto blocks = load_input_stream(stream_path, synth_path);

    fs::create_directories(out_dir);
    evdet::write_flat_config((fs::path(out_dir) / "resolved_config.cfg").string(),
                             evdet::resolved_config(cfg));

    auto result = evdet::run_stream(blocks, cfg);

    result.vocab.save((fs::path(out_dir) / "vocab.txt").string());
    for (const auto& snap : result.snapshots)
        evdet::save_model(snap.params, (fs::path(out_dir) / (snap.stage + ".ckpt")).string());

    for (const auto& rep : result.reports) {
        json j = report_to_json(rep);
        write_block_exports(out_dir, rep, j);
        std::ofstream rf(fs::path(out_dir) / (block_tag(rep.block_index) + "_report.json"));
        rf << j.dump(2) << "\n";
    }
    write_summary(out_dir, result.reports);
    write_training_log(fs::path(out_dir) / "training_log.tsv", result.training_log);

    std::ifstream summary(fs::path(out_dir) / "summary.txt");
    std::cout << summary.rdbuf();
    return 0;
}

std::vector<std::pair<std::string, std::int64_t>> read_label_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw evdet::ParseError("cannot open label file '" + path + "'");
    std::vector<std::pair<std::string, std::int64_t>> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = evdet::detail::trim(line);
        if (line.empty()) continue;
        const auto comma = line.find(',');
        try {
            if (comma == std::string::npos) {
                out.emplace_back("", std::stoll(line));
            } else {
                out.emplace_back(line.substr(0, comma), std::stoll(line.substr(comma + 1)));
            }
        } catch (const std::exception&) {
            throw evdet::ParseError("label file '" + path + "' line " + std::to_string(line_no) +
                                    ": expected `label` or `id,label`");
        }
    }
    return out;
}

int cmd_eval(const std::string& pred_path, const std::string& truth_path) {
    auto pred = read_label_file(pred_path);
    auto truth = read_label_file(truth_path);
    if (pred.size() != truth.size())
        throw evdet::ValidationError("eval: label files differ in length (" +
                                     std::to_string(pred.size()) + " vs " +
                                     std::to_string(truth.size()) + ")");

    std::vector<std::int64_t> p, t;
    const bool pred_has_ids = !pred.empty() && !pred.front().first.empty();
    const bool truth_has_ids = !truth.empty() && !truth.front().first.empty();
    if (pred_has_ids && truth_has_ids) {
        std::map<std::string, std::int64_t> truth_by_id(truth.begin(), truth.end());
        if (truth_by_id.size() != truth.size())
            throw evdet::ValidationError("eval: duplicate ids in truth file");
        for (const auto& [id, label] : pred) {
            auto it = truth_by_id.find(id);
            if (it == truth_by_id.end())
                throw evdet::ValidationError("eval: id '" + id + "' missing from truth file");
            p.push_back(label);
            t.push_back(it->second);
        }
    } else {
        for (const auto& [_, label] : pred) p.push_back(label);
        for (const auto& [_, label] : truth) t.push_back(label);
    }

    std::cout << std::fixed << std::setprecision(6);
    std::cout << "nmi " << evdet::nmi(p, t) << "\n";
    std::cout << "ami " << evdet::ami(p, t) << "\n";
    std::cout << "ari " << evdet::ari(p, t) << "\n";
    return 0;
}

int cmd_graph_stats(const std::string& stream_path, const std::string& synth_path,
                    std::int64_t window) {
    const auto blocks = load_input_stream(stream_path, synth_path);
    for (const auto& b : blocks) {
        const auto g = evdet::build_graph(b, window);
        const auto s = evdet::graph_stats(g);
        std::cout << "block " << b.index << "\n";
        std::cout << "  nodes = " << s.nodes << "\n";
        std::cout << "  hashtag_edges = " << s.hashtag_edges << "\n";
        std::cout << "  user_edges = " << s.user_edges << "\n";
        std::cout << "  entity_edges = " << s.entity_edges << "\n";
        std::cout << "  temporal_edges = " << s.temporal_edges << "\n";
        std::cout << "  isolated_nodes = " << s.isolated_nodes << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"incremental social event detection over message streams"};
    app.require_subcommand(1);

    std::string config_path, stream_path, synth_path, out_path, cluster_override;
    std::vector<std::string> ablations;
    std::optional<std::uint64_t> seed;
    std::int64_t window = 14400;

    auto* synth = app.add_subcommand("synth", "generate a synthetic stream file");
    synth->add_option("--config", config_path, "synthetic stream config")->required();
    synth->add_option("--out", out_path, "output stream path")->required();
    synth->add_option("--seed", seed, "override the config seed");

    auto* run = app.add_subcommand("run", "run the full lifecycle over a stream");
    run->add_option("--config", config_path, "run config (dotted keys)");
    run->add_option("--stream", stream_path, "input stream file");
    run->add_option("--synthetic", synth_path, "synthetic stream config");
    run->add_option("--out", out_path, "output directory")->required();
    run->add_option("--cluster", cluster_override, "clustering backend: kmeans|dbscan|hdbscan");
    run->add_option("--ablation", ablations, "ablation toggle key=value (repeatable)");
    run->add_option("--seed", seed, "override lifecycle.seed");

    auto* ev = app.add_subcommand("eval", "score predicted labels against ground truth");
    std::string pred_path, truth_path;
    ev->add_option("--pred", pred_path, "predicted labels (label or id,label per line)")->required();
    ev->add_option("--truth", truth_path, "ground-truth labels")->required();

    auto* gs = app.add_subcommand("graph-stats", "per-block graph statistics");
    gs->add_option("--stream", stream_path, "input stream file");
    gs->add_option("--synthetic", synth_path, "synthetic stream config");
    gs->add_option("--window", window, "temporal window in seconds");

    try {
        app.parse(argc, argv);
        if (synth->parsed()) return cmd_synth(config_path, out_path, seed);
        if (run->parsed())
            return cmd_run(config_path, stream_path, synth_path, out_path, cluster_override,
                           ablations, seed);
        if (ev->parsed()) return cmd_eval(pred_path, truth_path);
        if (gs->parsed()) return cmd_graph_stats(stream_path, synth_path, window);
        return kExitUsage;
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitUsage;
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const evdet::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const evdet::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}
