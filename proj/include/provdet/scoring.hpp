#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "provdet/adam.hpp"
#include "provdet/checkpoint.hpp"
#include "provdet/embedding.hpp"
#include "provdet/error.hpp"
#include "provdet/gmae.hpp"
#include "provdet/graph.hpp"
#include "provdet/losses.hpp"
#include "provdet/mlp.hpp"
#include "provdet/tensor.hpp"

namespace provdet {

// Benign reference vectors for KNN density scoring. Exact search only;
// k is clamped to the bank size.
struct KnnBank {
    Matrix data;
    int k = 10;

    static KnnBank build(Matrix vectors, int k) {
        if (vectors.rows == 0) throw EmptyBank("knn bank has no vectors");
        if (k < 1) throw ConfigError("knn k must be >= 1");
        const int clamped = std::min(k, vectors.rows);
        return KnnBank{std::move(vectors), clamped};
    }

    void save(std::ostream& os) const {
        TensorDump d;
        const double meta[1] = {static_cast<double>(k)};
        d.add("meta", std::span<const double>(meta, 1));
        d.add("data", data);
        d.save(os);
    }

    static KnnBank load(std::istream& is) {
        TensorDump d = TensorDump::load(is);
        KnnBank b;
        b.k = static_cast<int>(d.values("meta")[0]);
        b.data = d.matrix("data");
        return b;
    }
};

// Mean Euclidean distance from the query to its k nearest bank vectors.
// Higher = sparser region = more anomalous.
inline double knn_score(const KnnBank& bank, std::span<const double> query) {
    if (bank.data.rows == 0) throw EmptyBank("knn bank has no vectors");
    if (static_cast<int>(query.size()) != bank.data.cols)
        throw DimensionMismatch("knn query dimension " + std::to_string(query.size()) +
                                " != bank dimension " + std::to_string(bank.data.cols));
    const int k = std::min(bank.k, bank.data.rows);
    std::vector<double> d2(bank.data.rows);
    for (int r = 0; r < bank.data.rows; ++r) {
        const double* row = bank.data.row(r);
        double acc = 0.0;
        for (int c = 0; c < bank.data.cols; ++c) {
            const double diff = query[c] - row[c];
            acc += diff * diff;
        }
        d2[r] = acc;
    }
    std::nth_element(d2.begin(), d2.begin() + (k - 1), d2.end());
    double sum = 0.0;
    for (int i = 0; i < k; ++i) sum += std::sqrt(d2[i]);
    return sum / k;
}

inline std::vector<double> knn_score(const KnnBank& bank, const Matrix& queries) {
    std::vector<double> out(queries.rows);
    for (int r = 0; r < queries.rows; ++r) out[r] = knn_score(bank, queries.row_span(r));
    return out;
}

// Attribute vectors x_{v,attr} for every node, in node order.
inline Matrix attribute_matrix(const ProvenanceGraph& g, const EmbeddingTable& table) {
    Matrix m(g.node_count(), table.dim());
    for (int v = 0; v < g.node_count(); ++v) {
        const auto vec = table.attribute_vector(g.nodes()[v].attr);
        std::copy(vec.begin(), vec.end(), m.row(v));
    }
    return m;
}

// View 1 within one graph: bank from the benign subset, every node scored.
inline std::vector<double> attribute_scores(const ProvenanceGraph& g, const EmbeddingTable& table,
                                            const std::vector<int>& benign_nodes, int k) {
    const Matrix all = attribute_matrix(g, table);
    Matrix bank(static_cast<int>(benign_nodes.size()), table.dim());
    for (std::size_t i = 0; i < benign_nodes.size(); ++i)
        std::copy(all.row(benign_nodes[i]), all.row(benign_nodes[i]) + table.dim(),
                  bank.row(static_cast<int>(i)));
    return knn_score(KnnBank::build(std::move(bank), k), all);
}

// View 2 within one graph: type-only embeddings, bank from the benign subset.
inline std::vector<double> structural_scores(const ProvenanceGraph& g, const Encoder& encoder,
                                             const std::vector<int>& benign_nodes, int k) {
    const Matrix emb = encoder.encode(GraphView::from(g), type_features(g));
    Matrix bank(static_cast<int>(benign_nodes.size()), emb.cols);
    for (std::size_t i = 0; i < benign_nodes.size(); ++i)
        std::copy(emb.row(benign_nodes[i]), emb.row(benign_nodes[i]) + emb.cols,
                  bank.row(static_cast<int>(i)));
    return knn_score(KnnBank::build(std::move(bank), k), emb);
}

struct CausalDecoderConfig {
    int hidden = 64;
    double lr = 1e-3;
    int epochs = 100;
};

// 2-layer MLP mapping [h_sem(u) ‖ h_sem(v)] to event-type logits, trained on
// benign edges with class-weighted BCE. The per-class weights are frozen from
// the training edges and reused when scoring.
struct CausalDecoder {
    Mlp mlp;
    std::array<double, kEventTypeCount> weights{};

    void save(std::ostream& os) const {
        TensorDump d;
        const double meta[3] = {static_cast<double>(mlp.input_dim()),
                                static_cast<double>(mlp.w[0].rows),
                                static_cast<double>(mlp.output_dim())};
        d.add("meta", std::span<const double>(meta, 3));
        d.add("class_weights", std::span<const double>(weights.data(), weights.size()));
        std::vector<double> flat;
        mlp.pack(flat);
        d.add("params", flat);
        d.save(os);
    }

    static CausalDecoder load(std::istream& is) {
        TensorDump d = TensorDump::load(is);
        const auto& meta = d.values("meta");
        CausalDecoder dec;
        Rng rng(0);
        dec.mlp = Mlp::init({static_cast<int>(meta[0]), static_cast<int>(meta[1]),
                             static_cast<int>(meta[2])},
                            rng);
        dec.mlp.unpack(d.values("params"));
        const auto& w = d.values("class_weights");
        std::copy(w.begin(), w.end(), dec.weights.begin());
        return dec;
    }
};

// Weighted BCE of one edge's predicted logits against its multi-hot label.
inline double causal_edge_loss(const CausalDecoder& dec, std::span<const double> emb_u,
                               std::span<const double> emb_v, const EventSet& events,
                               Mlp::Cache* cache = nullptr, std::vector<double>* logit_grad = nullptr) {
    std::vector<double> input(emb_u.size() + emb_v.size());
    std::copy(emb_u.begin(), emb_u.end(), input.begin());
    std::copy(emb_v.begin(), emb_v.end(), input.begin() + emb_u.size());
    Mlp::Cache local;
    Mlp::Cache* c = cache ? cache : &local;
    const std::vector<double> logits = dec.mlp.forward(input, c);
    const auto target = edge_feature(events);
    if (logit_grad) {
        logit_grad->assign(kEventTypeCount, 0.0);
        return weighted_bce(logits, target, {dec.weights.data(), dec.weights.size()}, *logit_grad);
    }
    return weighted_bce(logits, target, {dec.weights.data(), dec.weights.size()});
}

// Trains the edge-type prediction head on benign edges; the semantic encoder
// stays frozen (embeddings enter as constants).
inline CausalDecoder train_causal_decoder(const ProvenanceGraph& g, const Matrix& sem_emb,
                                          const CausalDecoderConfig& cfg, std::uint64_t seed,
                                          std::vector<double>* loss_curve = nullptr) {
    if (g.node_count() == 0 || g.edge_count() == 0)
        throw DegenerateGraph("causal decoder: graph has no nodes or edges");
    if (sem_emb.rows != g.node_count()) throw ShapeMismatch("causal decoder: embedding rows");

    std::vector<EventSet> edge_events;
    edge_events.reserve(g.edge_count());
    for (const EdgeRecord& e : g.edges()) edge_events.push_back(e.events);

    CausalDecoder dec;
    Rng rng(seed ^ 0x63617573ULL);
    dec.mlp = Mlp::init({2 * sem_emb.cols, cfg.hidden, kEventTypeCount}, rng);
    dec.weights = class_weights(edge_events);

    std::vector<double> flat;
    dec.mlp.pack(flat);
    AdamState adam(flat.size());

    Mlp::Cache cache;
    std::vector<double> logit_grad;
    const double inv_edges = 1.0 / static_cast<double>(g.edge_count());
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Mlp::Grads acc = dec.mlp.zero_grads();
        double loss = 0.0;
        for (const EdgeRecord& e : g.edges()) {
            loss += causal_edge_loss(dec, sem_emb.row_span(e.src), sem_emb.row_span(e.dst),
                                     e.events, &cache, &logit_grad);
            for (double& gv : logit_grad) gv *= inv_edges;
            dec.mlp.backward_accumulate(cache, logit_grad, acc);
        }
        if (loss_curve) loss_curve->push_back(loss * inv_edges);

        flat.clear();
        dec.mlp.pack(flat);
        std::vector<double> gflat;  // same layout as Mlp::pack
        for (int l = 0; l < dec.mlp.layer_count(); ++l) {
            gflat.insert(gflat.end(), acc.w[l].v.begin(), acc.w[l].v.end());
            gflat.insert(gflat.end(), acc.b[l].begin(), acc.b[l].end());
        }
        check_finite(gflat, "causal decoder gradients");
        adam_step(flat, gflat, adam, cfg.lr);
        dec.mlp.unpack(flat);
    }
    return dec;
}

// Per-edge anomaly scores (weighted BCE loss) for every edge of a graph.
inline std::vector<double> causal_edge_losses(const ProvenanceGraph& g, const Matrix& sem_emb,
                                              const CausalDecoder& dec) {
    std::vector<double> losses(g.edge_count());
    for (int i = 0; i < g.edge_count(); ++i) {
        const EdgeRecord& e = g.edges()[i];
        losses[i] =
            causal_edge_loss(dec, sem_emb.row_span(e.src), sem_emb.row_span(e.dst), e.events);
    }
    return losses;
}

// View 3: a node inherits the maximum loss among its incident edges, in- and
// out-direction alike. Isolated nodes score 0.
inline std::vector<double> causal_scores(const ProvenanceGraph& g,
                                         const std::vector<double>& edge_losses) {
    if (static_cast<int>(edge_losses.size()) != g.edge_count())
        throw ShapeMismatch("causal_scores: edge loss count");
    std::vector<double> s(g.node_count(), 0.0);
    for (int i = 0; i < g.edge_count(); ++i) {
        const EdgeRecord& e = g.edges()[i];
        s[e.src] = std::max(s[e.src], edge_losses[i]);
        s[e.dst] = std::max(s[e.dst], edge_losses[i]);
    }
    return s;
}

// Per-node raw score triplet table with a versioned header.
struct ViewScores {
    std::vector<std::string> node_ids;
    std::vector<double> attr, struc, causal;

    void save(std::ostream& os) const {
        os << "provdet-scores v1\n";
        char buf[32];
        auto put = [&](double x) {
            std::snprintf(buf, sizeof buf, "%.17g", x);
            os << '\t' << buf;
        };
        for (std::size_t i = 0; i < node_ids.size(); ++i) {
            os << node_ids[i];
            put(attr[i]);
            put(struc[i]);
            put(causal[i]);
            os << "\n";
        }
    }

    static ViewScores load(std::istream& is) {
        std::string line;
        if (!std::getline(is, line) || line != "provdet-scores v1")
            throw IoError("bad scores header: '" + line + "'");
        ViewScores s;
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            std::size_t t1 = line.find('\t');
            if (t1 == std::string::npos) throw IoError("bad scores row");
            s.node_ids.push_back(line.substr(0, t1));
            const char* p = line.c_str() + t1 + 1;
            char* end = nullptr;
            s.attr.push_back(std::strtod(p, &end));
            s.struc.push_back(std::strtod(end, &end));
            s.causal.push_back(std::strtod(end, &end));
        }
        return s;
    }
};

}  // namespace provdet
