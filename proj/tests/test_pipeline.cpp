#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <sys/wait.h>

#include "provdet/config.hpp"
#include "provdet/pipeline.hpp"

using namespace provdet;

namespace {

PipelineConfig tiny_config(const std::string& workdir, std::uint64_t seed = 5) {
    PipelineConfig cfg;
    cfg.workdir = workdir;
    cfg.seed = seed;
    cfg.synth.seed = seed;
    cfg.synth.processes = 150;
    cfg.synth.files = 180;
    cfg.synth.netflows = 70;
    cfg.d_attr = 8;
    cfg.w2v_epochs = 10;
    cfg.hidden = 8;
    cfg.epochs = 8;
    cfg.decoder_hidden = 16;
    cfg.decoder_epochs = 30;
    cfg.k = 5;
    return cfg;
}

std::string tmpdir(const std::string& tag) {
    const auto dir = std::filesystem::temp_directory_path() / ("provdet_test_" + tag);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir.string();
}

}  // namespace

TEST_CASE("config files parse with sections, comments and overrides") {
    std::istringstream ini(
        "# pipeline settings\n"
        "[paths]\n"
        "workdir = /tmp/x\n"
        "\n"
        "[gmae]\n"
        "hidden = 32\n"
        "mask_rate = 0.25\n"
        "; trailing comment\n"
        "[fusion]\n"
        "alpha = 6.5\n"
        "normalizer = min-max\n"
        "[synth]\n"
        "attacks = exfiltration-chain:12:ac ; dropper:6:s\n"
        "[run]\n"
        "seed = 123\n");
    PipelineConfig cfg = parse_config(ini);
    CHECK(cfg.workdir == "/tmp/x");
    CHECK(cfg.hidden == 32);
    CHECK(cfg.mask_rate == 0.25);
    CHECK(cfg.alpha == 6.5);
    CHECK(cfg.normalizer == NormVariant::MinMax);
    CHECK(cfg.seed == 123);
    CHECK(cfg.synth.seed == 123);
    REQUIRE(cfg.attacks.size() == 2);
    CHECK(cfg.attacks[0].node_count == 12);
    CHECK(cfg.attacks[0].knob_attr);
    CHECK_FALSE(cfg.attacks[0].knob_struct);
    CHECK(cfg.attacks[0].knob_causal);
    CHECK(cfg.attacks[1].tag == ScenarioTag::Dropper);
    CHECK(cfg.attacks[1].campaign_id == "c2");

    apply_override(cfg, "fusion.vote_threshold=5");
    CHECK(cfg.vote_threshold == 5);
    CHECK_THROWS_AS(apply_override(cfg, "nonsense"), ConfigError);
    CHECK_THROWS_AS(apply_override(cfg, "no.such_key=1"), ConfigError);

    std::istringstream bad("[gmae]\nhidden == oops\n");
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
}

TEST_CASE("pipeline runs end to end on a tiny corpus") {
    const std::string wd = tmpdir("e2e");
    PipelineConfig cfg = tiny_config(wd);
    Pipeline p(cfg);

    const auto synth_info = p.run_synth();
    CHECK(synth_info.train_events > 0);
    CHECK(synth_info.val_events > 0);
    CHECK(synth_info.test_events > 0);
    CHECK(synth_info.labeled_nodes == 10);

    const auto build_info = p.run_build();
    for (int i = 0; i < 3; ++i) {
        CHECK(build_info.nodes[i] > 0);
        CHECK(build_info.edges[i] > 0);
    }

    p.run_train();
    for (const char* f : {"w2v_table.tsv", "enc_struc.params", "enc_sem.params", "causal.params",
                          "bank_attr.params", "bank_struc.params"})
        CHECK(std::filesystem::exists(wd + "/" + f));

    p.run_score(1);
    p.run_score(2);
    const ViewScores val = p.load_scores(1);
    const ViewScores test = p.load_scores(2);
    CHECK(static_cast<int>(val.node_ids.size()) == build_info.nodes[1]);
    CHECK(static_cast<int>(test.node_ids.size()) == build_info.nodes[2]);

    const auto detect_info = p.run_detect();
    CHECK(detect_info.total == build_info.nodes[2]);

    // Every test node appears exactly once in the alert report, and the
    // verdict is consistent with the vote count.
    std::ifstream af(wd + "/alerts.tsv");
    const auto alerts = load_alerts(af);
    REQUIRE(static_cast<int>(alerts.size()) == build_info.nodes[2]);
    std::set<std::string> seen;
    for (const AlertRecord& a : alerts) {
        CHECK(seen.insert(a.node_id).second);
        CHECK(a.verdict == (a.votes >= cfg.vote_threshold));
        CHECK(a.votes == vote_count(a.detectors));
    }

    const auto report = p.run_evaluate();
    CHECK(report.counts.tp + report.counts.fn == 10);
    CHECK(report.coverage.campaign_count == 1);
    CHECK(std::filesystem::exists(wd + "/report.txt"));
    CHECK(std::filesystem::exists(wd + "/report.json"));

    const auto rows = p.run_ablate();
    REQUIRE(rows.size() == 1 + 7 + 3 + 3);
    // Fig. 4 qualitative shape: false positives never increase with T_v.
    std::int64_t prev_fp = -1;
    for (const auto& row : rows) {
        if (row.name.rfind("tv_", 0) != 0) continue;
        if (prev_fp >= 0) CHECK(row.fp <= prev_fp);
        prev_fp = row.fp;
    }
}

TEST_CASE("train stage skips work when checkpoints are current") {
    const std::string wd = tmpdir("stamp");
    PipelineConfig cfg = tiny_config(wd, 6);
    std::ostringstream log1, log2;
    {
        Pipeline p(cfg, &log1);
        p.run_synth();
        p.run_build();
        p.run_train();
    }
    {
        Pipeline p(cfg, &log2);
        p.run_train();
    }
    CHECK(log2.str().find("skipping") != std::string::npos);
    CHECK(log1.str().find("skipping") == std::string::npos);

    // Changing the seed invalidates the stamp.
    PipelineConfig cfg2 = tiny_config(wd, 7);
    std::ostringstream log3;
    Pipeline p3(cfg2, &log3);
    p3.run_train();
    CHECK(log3.str().find("skipping") == std::string::npos);
}

TEST_CASE("missing inputs raise path-bearing errors") {
    const std::string wd = tmpdir("missing");
    PipelineConfig cfg = tiny_config(wd);
    cfg.train_log = wd + "/does_not_exist.log";
    Pipeline p(cfg);
    try {
        p.run_build();
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("does_not_exist.log") != std::string::npos);
    }
    CHECK_THROWS_AS(p.run_detect(), IoError);
    CHECK_THROWS_AS(p.run_evaluate(), IoError);
}

#ifdef PROVDET_CLI_PATH
TEST_CASE("cli subcommands wire the pipeline together") {
    const std::string wd = tmpdir("cli");
    const std::string cli = PROVDET_CLI_PATH;
    auto run = [&](const std::string& args) {
        const std::string cmd = cli + " " + args + " >" + wd + "/out.txt 2>" + wd + "/err.txt";
        const int rc = std::system(cmd.c_str());
        return WEXITSTATUS(rc);
    };
    const std::string common = "-w " + wd +
                               " --seed 11 --set synth.processes=120 --set synth.files=150"
                               " --set synth.netflows=60 --set featurize.d_attr=8"
                               " --set featurize.epochs=8 --set gmae.hidden=8"
                               " --set gmae.epochs=6 --set scoring.k=5"
                               " --set scoring.decoder_epochs=20";

    CHECK(run("synth " + common) == 0);
    CHECK(run("build " + common) == 0);
    CHECK(run("train " + common) == 0);
    CHECK(run("score " + common) == 0);
    CHECK(run("detect " + common) == 0);
    CHECK(run("evaluate " + common) == 0);
    CHECK(run("ablate " + common) == 0);

    // Usage error -> exit 1; data error -> exit 2.
    CHECK(run("no-such-command") == 1);
    CHECK(run("build -w " + wd + " --set paths.train_log=/nope.log") == 2);

    // Labels mismatch: a labeled node absent from the alerts is a data error.
    {
        std::ofstream labels(wd + "/labels.tsv");
        labels << "c1\tghost-node\n";
    }
    CHECK(run("evaluate " + common) == 2);
}
#endif
