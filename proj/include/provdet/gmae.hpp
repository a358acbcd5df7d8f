#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <vector>

#include "provdet/adam.hpp"
#include "provdet/checkpoint.hpp"
#include "provdet/error.hpp"
#include "provdet/features.hpp"
#include "provdet/graph.hpp"
#include "provdet/losses.hpp"
#include "provdet/rng.hpp"
#include "provdet/tensor.hpp"

namespace provdet {

struct GmaeConfig {
    int layers = 2;
    int hidden = 64;
    int attn_hidden = 64;
    double mask_rate = 0.3;
    double lr = 1e-3;
    int epochs = 50;
};

// Message-passing view of a provenance graph: per-node in-neighbor lists plus
// one multi-hot feature row per directed edge. Aggregation for node v runs
// over its in-neighbors plus v itself; the self slot carries an all-zero edge
// feature.
struct GraphView {
    int n = 0;
    std::vector<std::array<double, kEventTypeCount>> efeat;
    std::vector<std::vector<std::pair<int, int>>> in_adj;  // v -> [(u, edge idx)]

    static GraphView from(const ProvenanceGraph& g) {
        GraphView view;
        view.n = g.node_count();
        view.efeat.reserve(g.edge_count());
        for (const EdgeRecord& e : g.edges()) view.efeat.push_back(edge_feature(e.events));
        view.in_adj.resize(view.n);
        for (int v = 0; v < view.n; ++v) view.in_adj[v] = g.in_edges(v);
        return view;
    }

    int slot_count() const {
        int s = n;  // self slots
        for (const auto& adj : in_adj) s += static_cast<int>(adj.size());
        return s;
    }
};

// One-hot type features (the type-only graph input).
inline Matrix type_features(const ProvenanceGraph& g) {
    Matrix x(g.node_count(), kEntityTypeCount);
    for (int v = 0; v < g.node_count(); ++v) x.at(v, static_cast<int>(g.nodes()[v].type)) = 1.0;
    return x;
}

// Full attributed features: one-hot type ‖ mean attribute embedding.
inline Matrix full_features(const ProvenanceGraph& g, const EmbeddingTable& table) {
    Matrix x(g.node_count(), kEntityTypeCount + table.dim());
    for (int v = 0; v < g.node_count(); ++v) {
        const auto f = node_feature(g.nodes()[v], table);
        std::copy(f.begin(), f.end(), x.row(v));
    }
    return x;
}

// Edge-aware attention encoder. Per layer, an attention MLP scores each
// (source ‖ target ‖ edge) triple, scores are softmax-normalized over the
// target's in-neighbors plus itself, and the node update is
// tanh(sum_a alpha * W_val h_source).
struct Encoder {
    struct Layer {
        Matrix a_src, a_dst, a_edge;  // attn_hidden x {d_in, d_in, 10}
        std::vector<double> b1;       // attn_hidden
        std::vector<double> w2;       // attn_hidden
        double b2 = 0.0;
        Matrix w_val;  // d_out x d_in
    };

    int in_dim = 0;
    int hidden = 0;
    int attn_hidden = 0;
    std::vector<Layer> layers;
    std::vector<double> mask_vec;  // learned replacement for masked inputs

    static Encoder init(int in_dim, const GmaeConfig& cfg, Rng& rng) {
        Encoder enc;
        enc.in_dim = in_dim;
        enc.hidden = cfg.hidden;
        enc.attn_hidden = cfg.attn_hidden > 0 ? cfg.attn_hidden : cfg.hidden;
        enc.mask_vec.assign(in_dim, 0.0);
        int d = in_dim;
        for (int l = 0; l < cfg.layers; ++l) {
            Layer layer;
            const int concat = 2 * d + kEventTypeCount;
            layer.a_src = Matrix(enc.attn_hidden, d);
            layer.a_dst = Matrix(enc.attn_hidden, d);
            layer.a_edge = Matrix(enc.attn_hidden, kEventTypeCount);
            init_uniform(layer.a_src, concat, enc.attn_hidden, rng);
            init_uniform(layer.a_dst, concat, enc.attn_hidden, rng);
            init_uniform(layer.a_edge, concat, enc.attn_hidden, rng);
            layer.b1.assign(enc.attn_hidden, 0.0);
            layer.w2.assign(enc.attn_hidden, 0.0);
            {
                Matrix tmp(1, enc.attn_hidden);
                init_uniform(tmp, enc.attn_hidden, 1, rng);
                layer.w2 = tmp.v;
            }
            layer.w_val = Matrix(cfg.hidden, d);
            init_uniform(layer.w_val, d, cfg.hidden, rng);
            enc.layers.push_back(std::move(layer));
            d = cfg.hidden;
        }
        return enc;
    }

    int layer_count() const { return static_cast<int>(layers.size()); }
    int layer_in_dim(int l) const { return l == 0 ? in_dim : hidden; }

    // Raw attention logit c_uv for one (h_u, h_v, e_uv) triple at a layer.
    double attention_score(std::span<const double> h_u, std::span<const double> h_v,
                           std::span<const double> e_uv, int l) const {
        const Layer& layer = layers[l];
        const int d = layer_in_dim(l);
        if (static_cast<int>(h_u.size()) != d || static_cast<int>(h_v.size()) != d ||
            static_cast<int>(e_uv.size()) != kEventTypeCount)
            throw ShapeMismatch("attention_score: input widths do not match layer " +
                                std::to_string(l));
        double c = layer.b2;
        for (int i = 0; i < attn_hidden; ++i) {
            double pre = layer.b1[i];
            pre += dot(layer.a_src.row_span(i), h_u);
            pre += dot(layer.a_dst.row_span(i), h_v);
            pre += dot(layer.a_edge.row_span(i), e_uv);
            c += layer.w2[i] * std::tanh(pre);
        }
        return c;
    }

    // Cached intermediates for one forward pass; consumed by backward.
    struct Trace {
        std::vector<Matrix> h;          // h[0] = (masked) input, h[L] = output
        std::vector<Matrix> slot_hid;   // per layer: slots x attn_hidden
        std::vector<std::vector<double>> alpha;  // per layer: slot weights
        std::vector<Matrix> msg;        // per layer: n x d_out, W_val h_u
    };

    // Slots for node v are its in-edges followed by the self slot.
    Matrix encode(const GraphView& g, const Matrix& x, const std::vector<int>* mask = nullptr,
                  Trace* trace = nullptr) const {
        if (x.rows != g.n || x.cols != in_dim) throw ShapeMismatch("encode: bad feature matrix");
        Matrix h = x;
        if (mask)
            for (int v : *mask) std::copy(mask_vec.begin(), mask_vec.end(), h.row(v));
        if (trace) {
            trace->h.clear();
            trace->slot_hid.clear();
            trace->alpha.clear();
            trace->msg.clear();
            trace->h.push_back(h);
        }

        const int slots = g.slot_count();
        for (int l = 0; l < layer_count(); ++l) {
            const Layer& layer = layers[l];
            const int din = layer_in_dim(l);
            const int dout = layer.w_val.rows;
            const int ah = attn_hidden;

            // Shared per-node projections of the attention input blocks.
            Matrix p(g.n, ah), q(g.n, ah), msg(g.n, dout);
            for (int u = 0; u < g.n; ++u) {
                matvec(layer.a_src, {h.row(u), static_cast<std::size_t>(din)}, p.row_span(u));
                matvec(layer.a_dst, {h.row(u), static_cast<std::size_t>(din)}, q.row_span(u));
                matvec(layer.w_val, {h.row(u), static_cast<std::size_t>(din)}, msg.row_span(u));
            }

            Matrix slot_hid(slots, ah);
            std::vector<double> logits(slots), alpha(slots);
            int s = 0;
            for (int v = 0; v < g.n; ++v) {
                const int begin = s;
                auto fill_slot = [&](int u, int e) {
                    double* hid = slot_hid.row(s);
                    const double* pu = p.row(u);
                    const double* qv = q.row(v);
                    double c = layer.b2;
                    if (e >= 0) {
                        const auto& ef = g.efeat[e];
                        for (int i = 0; i < ah; ++i) {
                            double pre = layer.b1[i] + pu[i] + qv[i];
                            const double* ae = layer.a_edge.row(i);
                            for (int k = 0; k < kEventTypeCount; ++k) pre += ae[k] * ef[k];
                            hid[i] = std::tanh(pre);
                            c += layer.w2[i] * hid[i];
                        }
                    } else {
                        for (int i = 0; i < ah; ++i) {
                            hid[i] = std::tanh(layer.b1[i] + pu[i] + qv[i]);
                            c += layer.w2[i] * hid[i];
                        }
                    }
                    logits[s] = c;
                    ++s;
                };
                for (const auto& [u, e] : g.in_adj[v]) fill_slot(u, e);
                fill_slot(v, -1);

                double mx = logits[begin];
                for (int k = begin + 1; k < s; ++k) mx = std::max(mx, logits[k]);
                double denom = 0.0;
                for (int k = begin; k < s; ++k) denom += std::exp(logits[k] - mx);
                for (int k = begin; k < s; ++k) alpha[k] = std::exp(logits[k] - mx) / denom;
            }

            Matrix out(g.n, dout);
            s = 0;
            for (int v = 0; v < g.n; ++v) {
                double* ov = out.row(v);
                auto add_slot = [&](int u) {
                    const double a = alpha[s];
                    const double* mu = msg.row(u);
                    for (int k = 0; k < dout; ++k) ov[k] += a * mu[k];
                    ++s;
                };
                for (const auto& [u, e] : g.in_adj[v]) add_slot(u);
                add_slot(v);
                for (int k = 0; k < dout; ++k) ov[k] = std::tanh(ov[k]);
            }

            if (trace) {
                trace->slot_hid.push_back(std::move(slot_hid));
                trace->alpha.push_back(std::move(alpha));
                trace->msg.push_back(std::move(msg));
                trace->h.push_back(out);
            }
            h = trace ? trace->h.back() : std::move(out);
        }
        return h;
    }

    std::size_t param_count() const {
        std::size_t n = mask_vec.size();
        for (const Layer& l : layers)
            n += l.a_src.v.size() + l.a_dst.v.size() + l.a_edge.v.size() + l.b1.size() +
                 l.w2.size() + 1 + l.w_val.v.size();
        return n;
    }

    void pack(std::vector<double>& out) const {
        out.insert(out.end(), mask_vec.begin(), mask_vec.end());
        for (const Layer& l : layers) {
            out.insert(out.end(), l.a_src.v.begin(), l.a_src.v.end());
            out.insert(out.end(), l.a_dst.v.begin(), l.a_dst.v.end());
            out.insert(out.end(), l.a_edge.v.begin(), l.a_edge.v.end());
            out.insert(out.end(), l.b1.begin(), l.b1.end());
            out.insert(out.end(), l.w2.begin(), l.w2.end());
            out.push_back(l.b2);
            out.insert(out.end(), l.w_val.v.begin(), l.w_val.v.end());
        }
    }

    std::size_t unpack(std::span<const double> in, std::size_t pos = 0) {
        auto take = [&](double* dst, std::size_t n) {
            std::copy(in.begin() + pos, in.begin() + pos + n, dst);
            pos += n;
        };
        take(mask_vec.data(), mask_vec.size());
        for (Layer& l : layers) {
            take(l.a_src.v.data(), l.a_src.v.size());
            take(l.a_dst.v.data(), l.a_dst.v.size());
            take(l.a_edge.v.data(), l.a_edge.v.size());
            take(l.b1.data(), l.b1.size());
            take(l.w2.data(), l.w2.size());
            take(&l.b2, 1);
            take(l.w_val.v.data(), l.w_val.v.size());
        }
        return pos;
    }

    void save(std::ostream& os) const {
        TensorDump d;
        const double meta[4] = {static_cast<double>(in_dim), static_cast<double>(hidden),
                                static_cast<double>(layer_count()),
                                static_cast<double>(attn_hidden)};
        d.add("meta", std::span<const double>(meta, 4));
        std::vector<double> flat;
        pack(flat);
        d.add("params", flat);
        d.save(os);
    }

    static Encoder load(std::istream& is) {
        TensorDump d = TensorDump::load(is);
        const auto& meta = d.values("meta");
        GmaeConfig cfg;
        cfg.hidden = static_cast<int>(meta[1]);
        cfg.layers = static_cast<int>(meta[2]);
        cfg.attn_hidden = static_cast<int>(meta[3]);
        Rng rng(0);
        Encoder enc = Encoder::init(static_cast<int>(meta[0]), cfg, rng);
        enc.unpack(d.values("params"));
        return enc;
    }
};

// Uniform sample of floor(mr * n) node indices, deterministic per rng state.
inline std::vector<int> mask_nodes(int node_count, double mask_rate, Rng& rng) {
    if (mask_rate <= 0.0 || mask_rate >= 1.0)
        throw ConfigError("mask rate must lie strictly between 0 and 1");
    const int count = static_cast<int>(mask_rate * node_count);
    if (count == 0)
        throw ConfigError("mask set is empty: mask rate too small for " +
                          std::to_string(node_count) + " nodes");
    return rng.sample_without_replacement(node_count, count);
}

// Encoder plus the single dense reconstruction layer used only during
// pretraining.
struct GmaeModel {
    Encoder enc;
    Matrix dec_w;                // in_dim x hidden
    std::vector<double> dec_b;   // in_dim

    static GmaeModel init(int in_dim, const GmaeConfig& cfg, Rng& rng) {
        GmaeModel m;
        m.enc = Encoder::init(in_dim, cfg, rng);
        m.dec_w = Matrix(in_dim, cfg.hidden);
        init_uniform(m.dec_w, cfg.hidden, in_dim, rng);
        m.dec_b.assign(in_dim, 0.0);
        return m;
    }

    std::size_t param_count() const {
        return enc.param_count() + dec_w.v.size() + dec_b.size();
    }
    void pack(std::vector<double>& out) const {
        enc.pack(out);
        out.insert(out.end(), dec_w.v.begin(), dec_w.v.end());
        out.insert(out.end(), dec_b.begin(), dec_b.end());
    }
    void unpack(std::span<const double> in) {
        std::size_t pos = enc.unpack(in);
        std::copy(in.begin() + pos, in.begin() + pos + dec_w.v.size(), dec_w.v.begin());
        pos += dec_w.v.size();
        std::copy(in.begin() + pos, in.begin() + pos + dec_b.size(), dec_b.begin());
    }
};

// Masked-reconstruction loss (mean cosine loss over masked nodes) and, when
// `grads` is given, its full backward pass through decoder, attention layers
// and the learned mask vector. Reconstruction targets default to the input
// features; only masked nodes' targets enter the loss.
inline double gmae_loss(const GmaeModel& model, const GraphView& g, const Matrix& x,
                        const std::vector<int>& mask, GmaeModel* grads = nullptr,
                        const Matrix* targets = nullptr) {
    if (mask.empty()) throw ConfigError("gmae_loss: empty mask set");
    const Matrix& target = targets ? *targets : x;
    const Encoder& enc = model.enc;
    Encoder::Trace trace;
    const Matrix emb = enc.encode(g, x, &mask, &trace);
    const int hd = enc.hidden;
    const int in_dim = enc.in_dim;

    double loss = 0.0;
    Matrix demb(g.n, hd);  // dL/d emb, filled only at masked rows
    std::vector<double> recon(in_dim), grad_recon(in_dim);
    const double inv_mask = 1.0 / static_cast<double>(mask.size());
    for (int v : mask) {
        matvec(model.dec_w, {emb.row(v), static_cast<std::size_t>(hd)}, recon);
        for (int i = 0; i < in_dim; ++i) recon[i] += model.dec_b[i];
        loss += inv_mask * cosine_loss(recon, target.row_span(v),
                                       grads ? std::span<double>(grad_recon)
                                             : std::span<double>{});
        if (grads) {
            for (int i = 0; i < in_dim; ++i) grad_recon[i] *= inv_mask;
            outer_add(grads->dec_w, grad_recon, {emb.row(v), static_cast<std::size_t>(hd)});
            for (int i = 0; i < in_dim; ++i) grads->dec_b[i] += grad_recon[i];
            matvec_transpose_add(model.dec_w, grad_recon, demb.row_span(v));
        }
    }
    if (!grads) return loss;

    // Backward through the encoder layers.
    Matrix dh = std::move(demb);
    for (int l = enc.layer_count() - 1; l >= 0; --l) {
        const Encoder::Layer& layer = enc.layers[l];
        Encoder::Layer& glayer = grads->enc.layers[l];
        const Matrix& hin = trace.h[l];
        const Matrix& hout = trace.h[l + 1];
        const Matrix& msg = trace.msg[l];
        const Matrix& slot_hid = trace.slot_hid[l];
        const std::vector<double>& alpha = trace.alpha[l];
        const int din = enc.layer_in_dim(l);
        const int dout = layer.w_val.rows;
        const int ah = enc.attn_hidden;

        Matrix dhin(g.n, din);
        Matrix dmsg(g.n, dout);
        Matrix dp(g.n, ah), dq(g.n, ah);  // grads w.r.t. shared projections

        std::vector<double> ds(dout), dalpha;
        int s = 0;
        for (int v = 0; v < g.n; ++v) {
            const double* ho = hout.row(v);
            const double* dho = dh.row(v);
            for (int k = 0; k < dout; ++k) ds[k] = dho[k] * (1.0 - ho[k] * ho[k]);

            const int begin = s;
            const int deg = static_cast<int>(g.in_adj[v].size()) + 1;
            dalpha.assign(deg, 0.0);
            auto slot_u = [&](int k) {
                return k + 1 < deg ? g.in_adj[v][k].first : v;
            };
            for (int k = 0; k < deg; ++k) {
                const int u = slot_u(k);
                dalpha[k] = dot(ds, msg.row_span(u));
                double* dmu = dmsg.row(u);
                const double a = alpha[begin + k];
                for (int j = 0; j < dout; ++j) dmu[j] += a * ds[j];
            }
            // softmax backward: dc_k = a_k (dalpha_k - sum_j a_j dalpha_j)
            double mix = 0.0;
            for (int k = 0; k < deg; ++k) mix += alpha[begin + k] * dalpha[k];
            for (int k = 0; k < deg; ++k) {
                const double dc = alpha[begin + k] * (dalpha[k] - mix);
                const int u = slot_u(k);
                const double* hid = slot_hid.row(begin + k);
                double* dpu = dp.row(u);
                double* dqv = dq.row(v);
                glayer.b2 += dc;
                const int e = k + 1 < deg ? g.in_adj[v][k].second : -1;
                for (int i = 0; i < ah; ++i) {
                    glayer.w2[i] += dc * hid[i];
                    const double dhid = dc * layer.w2[i] * (1.0 - hid[i] * hid[i]);
                    glayer.b1[i] += dhid;
                    dpu[i] += dhid;
                    dqv[i] += dhid;
                    if (e >= 0) {
                        double* ge = glayer.a_edge.row(i);
                        const auto& ef = g.efeat[e];
                        for (int j = 0; j < kEventTypeCount; ++j) ge[j] += dhid * ef[j];
                    }
                }
            }
            s += deg;
        }

        // Fold the shared projections back into parameter and input grads.
        for (int u = 0; u < g.n; ++u) {
            outer_add(glayer.a_src, dp.row_span(u), hin.row_span(u));
            outer_add(glayer.a_dst, dq.row_span(u), hin.row_span(u));
            outer_add(glayer.w_val, dmsg.row_span(u), hin.row_span(u));
            matvec_transpose_add(layer.a_src, dp.row_span(u), dhin.row_span(u));
            matvec_transpose_add(layer.a_dst, dq.row_span(u), dhin.row_span(u));
            matvec_transpose_add(layer.w_val, dmsg.row_span(u), dhin.row_span(u));
        }
        dh = std::move(dhin);
    }

    // Masked rows of the layer-0 input are the learned mask vector.
    for (int v : mask) {
        const double* row = dh.row(v);
        for (int i = 0; i < enc.in_dim; ++i) grads->enc.mask_vec[i] += row[i];
    }
    return loss;
}

// Full-batch masked-autoencoder pretraining; the mask is re-drawn each epoch.
// Returns the trained encoder (decoder discarded). The same routine serves
// the type-only and the attributed graph.
inline Encoder train_gmae(const GraphView& g, const Matrix& x, const GmaeConfig& cfg,
                          std::uint64_t seed, std::vector<double>* loss_curve = nullptr) {
    if (cfg.layers < 1 || cfg.hidden < 1 || cfg.epochs < 1)
        throw ConfigError("gmae: layers, hidden and epochs must all be >= 1");
    if (g.n == 0) throw DegenerateGraph("gmae: graph has no nodes");
    int directed_edges = g.slot_count() - g.n;
    if (directed_edges == 0) throw DegenerateGraph("gmae: graph has no edges");

    Rng init_rng(seed);
    GmaeModel model = GmaeModel::init(x.cols, cfg, init_rng);
    GmaeModel grads = GmaeModel::init(x.cols, cfg, init_rng);  // same shapes, values overwritten

    std::vector<double> flat, gflat;
    flat.reserve(model.param_count());
    AdamState adam(model.param_count());
    Rng mask_rng(seed ^ 0x6d61736bULL);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const std::vector<int> mask = mask_nodes(g.n, cfg.mask_rate, mask_rng);
        gflat.assign(model.param_count(), 0.0);
        grads.unpack(gflat);
        const double loss = gmae_loss(model, g, x, mask, &grads);
        if (loss_curve) loss_curve->push_back(loss);

        flat.clear();
        model.pack(flat);
        gflat.clear();
        grads.pack(gflat);
        check_finite(gflat, "gmae gradients");
        adam_step(flat, gflat, adam, cfg.lr);
        model.unpack(flat);
    }
    return model.enc;
}

inline Encoder train_structural(const ProvenanceGraph& g, const GmaeConfig& cfg,
                                std::uint64_t seed, std::vector<double>* loss_curve = nullptr) {
    return train_gmae(GraphView::from(g), type_features(g), cfg, seed, loss_curve);
}

inline Encoder train_semantic(const ProvenanceGraph& g, const EmbeddingTable& table,
                              const GmaeConfig& cfg, std::uint64_t seed,
                              std::vector<double>* loss_curve = nullptr) {
    return train_gmae(GraphView::from(g), full_features(g, table), cfg, seed, loss_curve);
}

}  // namespace provdet
