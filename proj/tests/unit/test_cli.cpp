#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace std::string_literals;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("evdet_cli_" + std::to_string(std::uintptr_t(this)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

int run_cli(const std::string& args) {
    const std::string cmd = EVDET_CLI_PATH " "s + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string run_cli_capture(const std::string& args, const fs::path& tmp) {
    const auto out_file = tmp / "stdout.txt";
    const std::string cmd = EVDET_CLI_PATH " "s + args + " > " + out_file.string() + " 2>&1";
    std::system(cmd.c_str());
    std::ifstream in(out_file);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p);
    out << content;
}

const char* kTinySynthConfig =
    "seed = 11\n"
    "num_blocks = 2\n"
    "events_per_block = 3\n"
    "messages_per_event = 6\n"
    "words_per_message = 5\n"
    "vocab_size_per_event = 10\n";

const char* kTinyRunConfig =
    "lifecycle.epochs = 1\n"
    "lifecycle.batch_size = 16\n"
    "pairing.y = 2\n"
    "encoder.d_model = 16\n"
    "encoder.layers = 1\n"
    "encoder.heads = 2\n"
    "encoder.ff_mult = 2\n"
    "encoder.max_len = 32\n"
    "head.pool_hidden = 6\n";

}  // namespace

TEST_CASE("synth writes a deterministic stream and reports counts") {
    TempDir tmp;
    write_file(tmp.path / "synth.cfg", kTinySynthConfig);

    auto out = run_cli_capture("synth --config " + (tmp.path / "synth.cfg").string() + " --out " +
                                   (tmp.path / "s1.jsonl").string(),
                               tmp.path);
    CHECK(out.find("2 blocks") != std::string::npos);
    CHECK(out.find("36 messages") != std::string::npos);

    REQUIRE(run_cli("synth --config " + (tmp.path / "synth.cfg").string() + " --out " +
                    (tmp.path / "s2.jsonl").string()) == 0);
    CHECK(read_file(tmp.path / "s1.jsonl") == read_file(tmp.path / "s2.jsonl"));
    CHECK_FALSE(read_file(tmp.path / "s1.jsonl").empty());
}

TEST_CASE("synth rejects unknown config keys with exit code 2") {
    TempDir tmp;
    write_file(tmp.path / "bad.cfg", "not_a_real_key = 5\n");
    CHECK(run_cli("synth --config " + (tmp.path / "bad.cfg").string() + " --out " +
                  (tmp.path / "x.jsonl").string()) == 2);
}

TEST_CASE("missing required flags give a usage error") {
    CHECK(run_cli("synth") == 1);
    CHECK(run_cli("definitely-not-a-command") == 1);
}

TEST_CASE("run produces reports, exports and resolved config") {
    TempDir tmp;
    write_file(tmp.path / "synth.cfg", kTinySynthConfig);
    write_file(tmp.path / "run.cfg", kTinyRunConfig);
    const auto out_dir = tmp.path / "out";

    REQUIRE(run_cli("run --config " + (tmp.path / "run.cfg").string() + " --synthetic " +
                    (tmp.path / "synth.cfg").string() + " --out " + out_dir.string()) == 0);

    CHECK(fs::exists(out_dir / "resolved_config.cfg"));
    CHECK(fs::exists(out_dir / "vocab.txt"));
    CHECK(fs::exists(out_dir / "summary.txt"));
    CHECK(fs::exists(out_dir / "summary.tsv"));
    CHECK(fs::exists(out_dir / "training_log.tsv"));
    CHECK(fs::exists(out_dir / "pristine.ckpt"));
    CHECK(fs::exists(out_dir / "initial.ckpt"));
    CHECK(fs::exists(out_dir / "block_0001_report.json"));
    CHECK(fs::exists(out_dir / "block_0001_embeddings.tsv"));
    CHECK(fs::exists(out_dir / "block_0001_assignments.csv"));

    const auto resolved = read_file(out_dir / "resolved_config.cfg");
    CHECK(resolved.find("lifecycle.learning_rate") != std::string::npos);
    CHECK(resolved.find("pairing.y = 2") != std::string::npos);

    const auto report = read_file(out_dir / "block_0001_report.json");
    CHECK(report.find("\"nmi\"") != std::string::npos);
    CHECK(report.find("\"noise_fraction\"") != std::string::npos);

    // assignments: one "id,label" line per message
    std::istringstream asg(read_file(out_dir / "block_0001_assignments.csv"));
    std::string line;
    int lines = 0;
    while (std::getline(asg, line)) {
        CHECK(line.find(',') != std::string::npos);
        ++lines;
    }
    CHECK(lines == 18);
}

TEST_CASE("run accepts cluster override and ablation toggles") {
    TempDir tmp;
    write_file(tmp.path / "synth.cfg", kTinySynthConfig);
    write_file(tmp.path / "run.cfg", kTinyRunConfig);
    const auto out_dir = tmp.path / "out";

    REQUIRE(run_cli("run --config " + (tmp.path / "run.cfg").string() + " --synthetic " +
                    (tmp.path / "synth.cfg").string() + " --out " + out_dir.string() +
                    " --cluster hdbscan --ablation aggregation=average"
                    " --ablation clustering_constraint=off --seed 3") == 0);
    const auto resolved = read_file(out_dir / "resolved_config.cfg");
    CHECK(resolved.find("cluster.algorithm = hdbscan") != std::string::npos);
    CHECK(resolved.find("aggregate.mode = average") != std::string::npos);
    CHECK(resolved.find("ablation.clustering_constraint = off") != std::string::npos);
    CHECK(resolved.find("lifecycle.seed = 3") != std::string::npos);

    CHECK(run_cli("run --config " + (tmp.path / "run.cfg").string() + " --synthetic " +
                  (tmp.path / "synth.cfg").string() + " --out " + out_dir.string() +
                  " --ablation nonsense=1") == 1);
}

TEST_CASE("eval scores label files and enforces matching lengths") {
    TempDir tmp;
    write_file(tmp.path / "a.csv", "m1,0\nm2,0\nm3,1\n");
    write_file(tmp.path / "b.csv", "m1,5\nm2,5\nm3,9\n");
    auto out = run_cli_capture(
        "eval --pred " + (tmp.path / "a.csv").string() + " --truth " + (tmp.path / "b.csv").string(),
        tmp.path);
    CHECK(out.find("nmi 1.0") != std::string::npos);
    CHECK(out.find("ami 1.0") != std::string::npos);
    CHECK(out.find("ari 1.0") != std::string::npos);

    write_file(tmp.path / "short.csv", "0\n1\n");
    CHECK(run_cli("eval --pred " + (tmp.path / "a.csv").string() + " --truth " +
                  (tmp.path / "short.csv").string()) == 2);

    // bare labels work too
    write_file(tmp.path / "p.txt", "0\n0\n1\n");
    write_file(tmp.path / "t.txt", "1\n1\n0\n");
    auto out2 = run_cli_capture(
        "eval --pred " + (tmp.path / "p.txt").string() + " --truth " + (tmp.path / "t.txt").string(),
        tmp.path);
    CHECK(out2.find("nmi 1.0") != std::string::npos);
}

TEST_CASE("graph-stats prints per-block counts") {
    TempDir tmp;
    write_file(tmp.path / "synth.cfg", kTinySynthConfig);
    auto out = run_cli_capture("graph-stats --synthetic " + (tmp.path / "synth.cfg").string(), tmp.path);
    CHECK(out.find("block 0") != std::string::npos);
    CHECK(out.find("block 1") != std::string::npos);
    CHECK(out.find("nodes = 18") != std::string::npos);
    CHECK(out.find("isolated_nodes") != std::string::npos);
}

TEST_CASE("run without a stream source fails with a data error") {
    TempDir tmp;
    CHECK(run_cli("run --out " + (tmp.path / "o").string()) == 2);
    CHECK(run_cli("eval --pred /nonexistent --truth /nonexistent") == 2);
}
