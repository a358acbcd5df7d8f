#pragma once

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "provdet/config.hpp"
#include "provdet/embedding.hpp"
#include "provdet/error.hpp"
#include "provdet/fusion.hpp"
#include "provdet/gmae.hpp"
#include "provdet/graph.hpp"
#include "provdet/metrics.hpp"
#include "provdet/scoring.hpp"
#include "provdet/synth.hpp"
#include "provdet/tokenize.hpp"

namespace provdet {

namespace pipeline_detail {

inline std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

inline void spill(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write '" + path + "'");
    os << content;
}

inline bool file_exists(const std::string& path) { return std::filesystem::exists(path); }

}  // namespace pipeline_detail

// Orchestrates the staged pipeline over checkpoint files in the workdir.
// Stages are deterministic given (inputs, config, seed); the train stage
// stamps a content hash of its inputs and is skipped on re-runs when the
// stamp still matches.
class Pipeline {
public:
    explicit Pipeline(PipelineConfig cfg, std::ostream* log = nullptr)
        : cfg_(std::move(cfg)), log_(log) {
        std::filesystem::create_directories(cfg_.workdir);
    }

    const PipelineConfig& config() const { return cfg_; }

    std::string wpath(const std::string& name) const { return cfg_.workdir + "/" + name; }

    // --- synth ---------------------------------------------------------
    struct SynthInfo {
        std::size_t train_events = 0, val_events = 0, test_events = 0, labeled_nodes = 0;
    };

    SynthInfo run_synth() {
        std::vector<Event> log = generate_benign(cfg_.synth);
        CampaignLabels labels;
        for (const AttackScenario& sc : cfg_.attacks) {
            InjectResult r = inject_attack(std::move(log), sc, cfg_.seed);
            log = std::move(r.log);
            for (auto& [cid, nodes] : r.labels) labels[cid] = std::move(nodes);
        }
        const SplitBounds bounds = split_bounds(log);
        std::ofstream train(cfg_.train_log_path()), val(cfg_.validation_log_path()),
            test(cfg_.test_log_path());
        if (!train || !val || !test) throw IoError("cannot write split logs");
        SynthInfo info;
        for (const Event& ev : log) {
            if (ev.timestamp_ns < bounds.train_end) {
                train << format_event_line(ev) << "\n";
                ++info.train_events;
            } else if (ev.timestamp_ns < bounds.val_end) {
                val << format_event_line(ev) << "\n";
                ++info.val_events;
            } else {
                test << format_event_line(ev) << "\n";
                ++info.test_events;
            }
        }
        std::ofstream lf(cfg_.labels_path());
        write_labels(lf, labels);
        for (const auto& [cid, nodes] : labels) info.labeled_nodes += nodes.size();
        note("synth: train=" + std::to_string(info.train_events) +
             " validation=" + std::to_string(info.val_events) +
             " test=" + std::to_string(info.test_events) +
             " labeled=" + std::to_string(info.labeled_nodes));
        return info;
    }

    // --- build ----------------------------------------------------------
    struct BuildInfo {
        std::array<int, 3> nodes{};
        std::array<int, 3> edges{};
    };

    BuildInfo run_build() {
        const std::array<std::string, 3> logs = {cfg_.train_log_path(),
                                                 cfg_.validation_log_path(),
                                                 cfg_.test_log_path()};
        BuildInfo info;
        for (int i = 0; i < 3; ++i) {
            std::ifstream is(logs[i]);
            if (!is) throw IoError("cannot open log '" + logs[i] + "'");
            const std::vector<Event> events = read_log(is);
            const ProvenanceGraph g = ProvenanceGraph::build(events);
            std::ofstream os(graph_path(i));
            g.save(os);
            info.nodes[i] = g.node_count();
            info.edges[i] = g.edge_count();
            note("build: " + split_name(i) + " nodes=" + std::to_string(g.node_count()) +
                 " edges=" + std::to_string(g.edge_count()));
        }
        return info;
    }

    // --- train ----------------------------------------------------------
    void run_train() {
        const std::string stamp = train_stamp();
        const std::string stamp_file = wpath("train.stamp");
        const bool outputs_present =
            pipeline_detail::file_exists(wpath("w2v_table.tsv")) &&
            pipeline_detail::file_exists(wpath("enc_struc.params")) &&
            pipeline_detail::file_exists(wpath("enc_sem.params")) &&
            pipeline_detail::file_exists(wpath("causal.params")) &&
            pipeline_detail::file_exists(wpath("bank_attr.params")) &&
            pipeline_detail::file_exists(wpath("bank_struc.params"));
        if (outputs_present && pipeline_detail::file_exists(stamp_file) &&
            pipeline_detail::slurp(stamp_file) == stamp) {
            note("train: checkpoints up to date, skipping");
            return;
        }

        const ProvenanceGraph g = load_graph(0);
        if (g.node_count() == 0 || g.edge_count() == 0)
            throw DegenerateGraph("training graph has no nodes or edges");

        // Attribute embeddings from the benign training vocabulary.
        std::vector<std::vector<std::string>> corpus;
        corpus.reserve(g.node_count());
        for (const NodeRecord& n : g.nodes()) corpus.push_back(tokenize_attribute(n.attr));
        Word2VecConfig wcfg;
        wcfg.dim = cfg_.d_attr;
        wcfg.window = cfg_.window;
        wcfg.negatives = cfg_.negatives;
        wcfg.epochs = cfg_.w2v_epochs;
        const EmbeddingTable table = EmbeddingTable::train(corpus, wcfg, cfg_.seed);
        {
            std::ofstream os(wpath("w2v_table.tsv"));
            table.save(os);
        }
        note("train: embedding table tokens=" + std::to_string(table.vocabulary().size()));

        const GmaeConfig gcfg = gmae_config();
        std::vector<double> curve;
        const Encoder enc_struc = train_gmae(GraphView::from(g), type_features(g), gcfg,
                                             cfg_.seed, &curve);
        {
            std::ofstream os(wpath("enc_struc.params"));
            enc_struc.save(os);
        }
        write_curve("loss_struc.txt", curve);
        note("train: structural encoder loss " + curve_summary(curve));

        curve.clear();
        const Matrix x_full = full_features(g, table);
        const Encoder enc_sem =
            train_gmae(GraphView::from(g), x_full, gcfg, cfg_.seed + 1, &curve);
        {
            std::ofstream os(wpath("enc_sem.params"));
            enc_sem.save(os);
        }
        write_curve("loss_sem.txt", curve);
        note("train: semantic encoder loss " + curve_summary(curve));

        const Matrix sem_emb = enc_sem.encode(GraphView::from(g), x_full);
        CausalDecoderConfig dcfg;
        dcfg.hidden = cfg_.decoder_hidden;
        dcfg.lr = cfg_.learning_rate;
        dcfg.epochs = cfg_.decoder_epochs;
        curve.clear();
        const CausalDecoder decoder = train_causal_decoder(g, sem_emb, dcfg, cfg_.seed, &curve);
        {
            std::ofstream os(wpath("causal.params"));
            decoder.save(os);
        }
        write_curve("loss_causal.txt", curve);
        note("train: causal decoder loss " + curve_summary(curve));

        // Benign KNN banks: every training node is benign by contract.
        {
            std::ofstream os(wpath("bank_attr.params"));
            KnnBank::build(attribute_matrix(g, table), cfg_.k).save(os);
        }
        {
            const Matrix struc_emb = enc_struc.encode(GraphView::from(g), type_features(g));
            std::ofstream os(wpath("bank_struc.params"));
            KnnBank::build(struc_emb, cfg_.k).save(os);
        }
        pipeline_detail::spill(stamp_file, stamp);
    }

    // --- score ----------------------------------------------------------
    void run_score(int split) {
        const ProvenanceGraph g = load_graph(split);
        if (g.node_count() == 0) throw DegenerateGraph(split_name(split) + " graph is empty");
        EmbeddingTable table = load_table();
        Encoder enc_struc = load_encoder("enc_struc.params");
        Encoder enc_sem = load_encoder("enc_sem.params");
        CausalDecoder decoder = load_decoder();
        KnnBank bank_attr = load_bank("bank_attr.params");
        KnnBank bank_struc = load_bank("bank_struc.params");

        const GraphView view = GraphView::from(g);
        ViewScores scores;
        scores.node_ids.reserve(g.node_count());
        for (const NodeRecord& n : g.nodes()) scores.node_ids.push_back(n.id);
        scores.attr = knn_score(bank_attr, attribute_matrix(g, table));
        const Matrix struc_emb = enc_struc.encode(view, type_features(g));
        scores.struc = knn_score(bank_struc, struc_emb);
        const Matrix sem_emb = enc_sem.encode(view, full_features(g, table));
        scores.causal = causal_scores(g, causal_edge_losses(g, sem_emb, decoder));
        check_finite(scores.attr, "attribute scores");
        check_finite(scores.struc, "structural scores");
        check_finite(scores.causal, "causal scores");

        {
            std::ofstream os(scores_path(split));
            scores.save(os);
        }
        export_embeddings(g, struc_emb, wpath("embeddings_struc_" + split_name(split) + ".tsv"));
        export_embeddings(g, sem_emb, wpath("embeddings_sem_" + split_name(split) + ".tsv"));
        note("score: " + split_name(split) + " rows=" + std::to_string(g.node_count()));
    }

    // --- detect ---------------------------------------------------------
    struct DetectInfo {
        int flagged = 0;
        int total = 0;
    };

    DetectInfo run_detect() {
        const ViewScores val = load_scores(1);
        const ViewScores test = load_scores(2);
        const Normalizer norm = Normalizer::fit({val.attr, val.struc, val.causal}, cfg_.normalizer);

        std::vector<Triplet> benign;
        benign.reserve(val.node_ids.size());
        for (std::size_t i = 0; i < val.node_ids.size(); ++i)
            benign.push_back(norm.normalize(val.attr[i], val.struc[i], val.causal[i]));
        const DetectorBank bank =
            calibrate(benign, cfg_.alpha, cfg_.vote_threshold, cfg_.strict_threshold);

        std::vector<AlertRecord> alerts;
        alerts.reserve(test.node_ids.size());
        for (std::size_t i = 0; i < test.node_ids.size(); ++i)
            alerts.push_back(make_alert(test.node_ids[i],
                                        norm.normalize(test.attr[i], test.struc[i], test.causal[i]),
                                        bank));
        rank_nodes(alerts);

        {
            std::ofstream os(wpath("calibration.txt"));
            os << "provdet-calibration v1\n";
            norm.save(os);
            bank.save(os);
        }
        {
            std::ofstream os(wpath("alerts.tsv"));
            write_alerts(os, alerts);
        }
        DetectInfo info;
        info.total = static_cast<int>(alerts.size());
        for (const AlertRecord& a : alerts) info.flagged += a.verdict ? 1 : 0;
        note("detect: flagged " + std::to_string(info.flagged) + " of " +
             std::to_string(info.total));
        return info;
    }

    // --- evaluate -------------------------------------------------------
    struct EvalReport {
        ConfusionCounts counts;
        double f1 = 0.0, mcc = 0.0, adp = 0.0;
        CoverageResult coverage;
    };

    EvalReport run_evaluate() {
        std::ifstream af(wpath("alerts.tsv"));
        if (!af) throw IoError("no alert report; run detect first");
        const std::vector<AlertRecord> alerts = load_alerts(af);
        std::ifstream lf(cfg_.labels_path());
        if (!lf) throw IoError("cannot open labels '" + cfg_.labels_path() + "'");
        const CampaignLabels campaigns = read_labels(lf);

        std::map<std::string, bool> verdicts;
        std::vector<std::string> ranking;
        ranking.reserve(alerts.size());
        for (const AlertRecord& a : alerts) {
            verdicts[a.node_id] = a.verdict;
            ranking.push_back(a.node_id);
        }
        std::set<std::string> malicious;
        for (const auto& [cid, nodes] : campaigns) malicious.insert(nodes.begin(), nodes.end());

        EvalReport r;
        r.counts = confusion(verdicts, malicious);
        r.f1 = f1(r.counts);
        r.mcc = mcc(r.counts);
        r.adp = adp(ranking, campaigns);
        r.coverage = attack_coverage(verdicts, campaigns);
        write_report(r);
        return r;
    }

    // --- ablate ---------------------------------------------------------
    struct AblationRow {
        std::string name;
        std::int64_t tp = 0, fp = 0;
        int detected = 0, campaigns = 0;
    };

    std::vector<AblationRow> run_ablate() {
        const ViewScores val = load_scores(1);
        const ViewScores test = load_scores(2);
        std::ifstream lf(cfg_.labels_path());
        if (!lf) throw IoError("cannot open labels '" + cfg_.labels_path() + "'");
        const CampaignLabels campaigns = read_labels(lf);

        const Normalizer norm = Normalizer::fit({val.attr, val.struc, val.causal}, cfg_.normalizer);
        std::vector<Triplet> benign;
        for (std::size_t i = 0; i < val.node_ids.size(); ++i)
            benign.push_back(norm.normalize(val.attr[i], val.struc[i], val.causal[i]));
        const DetectorBank bank =
            calibrate(benign, cfg_.alpha, cfg_.vote_threshold, cfg_.strict_threshold);

        std::vector<Triplet> triplets;
        for (std::size_t i = 0; i < test.node_ids.size(); ++i)
            triplets.push_back(norm.normalize(test.attr[i], test.struc[i], test.causal[i]));

        std::vector<AblationRow> rows;
        auto evaluate = [&](const std::string& name, int disabled_view, std::uint8_t group_mask,
                            int t_v) {
            AblationRow row;
            row.name = name;
            std::map<std::string, bool> verdicts;
            for (std::size_t i = 0; i < triplets.size(); ++i) {
                std::uint8_t bits = evaluate_detectors(triplets[i], bank, disabled_view);
                bits &= static_cast<std::uint8_t>(~group_mask);
                verdicts[test.node_ids[i]] = vote(bits, t_v);
            }
            std::set<std::string> malicious;
            for (const auto& [cid, nodes] : campaigns)
                malicious.insert(nodes.begin(), nodes.end());
            const ConfusionCounts c = confusion(verdicts, malicious);
            row.tp = c.tp;
            row.fp = c.fp;
            const CoverageResult cov = attack_coverage(verdicts, campaigns);
            row.detected = cov.detected_count;
            row.campaigns = cov.campaign_count;
            return row;
        };

        rows.push_back(evaluate("full", -1, 0, cfg_.vote_threshold));
        for (int tv = 1; tv <= kDetectorCount; ++tv)
            rows.push_back(evaluate("tv_" + std::to_string(tv), -1, 0, tv));
        const char* views[3] = {"attr", "struc", "causal"};
        for (int v = 0; v < 3; ++v)
            rows.push_back(evaluate(std::string("drop_view_") + views[v], v, 0,
                                    cfg_.vote_threshold));
        const std::uint8_t groups[3] = {0b0000111, 0b0011000, 0b1100000};
        for (int gi = 0; gi < 3; ++gi)
            rows.push_back(evaluate("drop_group_" + std::to_string(gi + 1), -1, groups[gi],
                                    cfg_.vote_threshold));

        nlohmann::json j = nlohmann::json::array();
        std::ofstream txt(wpath("ablation.txt"));
        txt << "variant\ttp\tfp\tdetected\tcampaigns\n";
        for (const AblationRow& r : rows) {
            txt << r.name << '\t' << r.tp << '\t' << r.fp << '\t' << r.detected << '\t'
                << r.campaigns << "\n";
            j.push_back({{"variant", r.name},
                         {"tp", r.tp},
                         {"fp", r.fp},
                         {"detected", r.detected},
                         {"campaigns", r.campaigns}});
        }
        pipeline_detail::spill(wpath("ablation.json"), j.dump(2) + "\n");
        return rows;
    }

    // Shared loaders (public: the acceptance suite drives stages directly).
    ProvenanceGraph load_graph(int split) const {
        std::ifstream is(graph_path(split));
        if (!is) throw IoError("missing graph checkpoint '" + graph_path(split) + "'");
        return ProvenanceGraph::load(is);
    }

    ViewScores load_scores(int split) const {
        std::ifstream is(scores_path(split));
        if (!is) throw IoError("missing scores '" + scores_path(split) + "'; run score first");
        return ViewScores::load(is);
    }

    static std::string split_name(int split) {
        switch (split) {
            case 0: return "train";
            case 1: return "validation";
            default: return "test";
        }
    }

    std::string graph_path(int split) const { return wpath("graph_" + split_name(split) + ".txt"); }
    std::string scores_path(int split) const {
        return wpath("scores_" + split_name(split) + ".tsv");
    }

private:
    static std::string curve_summary(const std::vector<double>& curve) {
        if (curve.empty()) return "(no epochs)";
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.4f -> %.4f over %zu epochs", curve.front(), curve.back(),
                      curve.size());
        return buf;
    }

    // Per-epoch training losses, one `epoch loss` pair per line.
    void write_curve(const std::string& name, const std::vector<double>& curve) const {
        std::ofstream os(wpath(name));
        char buf[32];
        for (std::size_t e = 0; e < curve.size(); ++e) {
            std::snprintf(buf, sizeof buf, "%.17g", curve[e]);
            os << e << ' ' << buf << "\n";
        }
    }

    GmaeConfig gmae_config() const {
        GmaeConfig g;
        g.layers = cfg_.layers;
        g.hidden = cfg_.hidden;
        g.attn_hidden = cfg_.hidden;
        g.mask_rate = cfg_.mask_rate;
        g.lr = cfg_.learning_rate;
        g.epochs = cfg_.epochs;
        return g;
    }

    EmbeddingTable load_table() const {
        std::ifstream is(wpath("w2v_table.tsv"));
        if (!is) throw IoError("missing embedding table; run train first");
        return EmbeddingTable::load(is);
    }

    Encoder load_encoder(const std::string& name) const {
        std::ifstream is(wpath(name));
        if (!is) throw IoError("missing encoder checkpoint '" + name + "'; run train first");
        return Encoder::load(is);
    }

    CausalDecoder load_decoder() const {
        std::ifstream is(wpath("causal.params"));
        if (!is) throw IoError("missing causal decoder; run train first");
        return CausalDecoder::load(is);
    }

    KnnBank load_bank(const std::string& name) const {
        std::ifstream is(wpath(name));
        if (!is) throw IoError("missing knn bank '" + name + "'; run train first");
        return KnnBank::load(is);
    }

    std::string train_stamp() const {
        std::ostringstream key;
        key << cfg_.d_attr << ' ' << cfg_.window << ' ' << cfg_.negatives << ' ' << cfg_.w2v_epochs
            << ' ' << cfg_.layers << ' ' << cfg_.hidden << ' ' << cfg_.mask_rate << ' '
            << cfg_.learning_rate << ' ' << cfg_.epochs << ' ' << cfg_.k << ' '
            << cfg_.decoder_hidden << ' ' << cfg_.decoder_epochs << ' ' << cfg_.seed;
        const std::uint64_t h =
            fnv1a64(pipeline_detail::slurp(graph_path(0)), fnv1a64(key.str()));
        return "provdet-stamp v1 " + std::to_string(h) + "\n";
    }

    void export_embeddings(const ProvenanceGraph& g, const Matrix& emb,
                           const std::string& path) const {
        std::ofstream os(path);
        os << "provdet-embeddings-table v1 dim=" << emb.cols << "\n";
        char buf[32];
        for (int v = 0; v < g.node_count(); ++v) {
            os << g.nodes()[v].id;
            for (int k = 0; k < emb.cols; ++k) {
                std::snprintf(buf, sizeof buf, "%.17g", emb.at(v, k));
                os << (k == 0 ? '\t' : ' ') << buf;
            }
            os << "\n";
        }
    }

    void write_report(const EvalReport& r) const {
        std::ostringstream txt;
        txt << "tp " << r.counts.tp << "\nfp " << r.counts.fp << "\ntn " << r.counts.tn
            << "\nfn " << r.counts.fn << "\n";
        char buf[32];
        auto put = [&](const char* name, double x) {
            std::snprintf(buf, sizeof buf, "%.6f", x);
            txt << name << ' ' << buf << "\n";
        };
        put("f1", r.f1);
        put("mcc", r.mcc);
        put("adp", r.adp);
        txt << "coverage " << r.coverage.detected_count << "/" << r.coverage.campaign_count
            << "\n";
        for (const auto& [cid, hit] : r.coverage.detected)
            txt << "campaign " << cid << ' ' << (hit ? "detected" : "missed") << "\n";
        pipeline_detail::spill(wpath("report.txt"), txt.str());

        nlohmann::json j;
        j["tp"] = r.counts.tp;
        j["fp"] = r.counts.fp;
        j["tn"] = r.counts.tn;
        j["fn"] = r.counts.fn;
        j["f1"] = r.f1;
        j["mcc"] = r.mcc;
        j["adp"] = r.adp;
        j["coverage"] = std::to_string(r.coverage.detected_count) + "/" +
                        std::to_string(r.coverage.campaign_count);
        nlohmann::json cj;
        for (const auto& [cid, hit] : r.coverage.detected) cj[cid] = hit;
        j["campaigns"] = cj;
        pipeline_detail::spill(wpath("report.json"), j.dump(2) + "\n");
    }

    void note(const std::string& msg) const {
        if (log_) (*log_) << msg << "\n";
    }

    PipelineConfig cfg_;
    std::ostream* log_;
};

}  // namespace provdet
