#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "provdet/gmae.hpp"

using namespace provdet;

namespace {

Event ev(const std::string& s, EntityType st, const std::string& d, EntityType dt, EventType t,
         std::int64_t ts) {
    return Event{s, st, "a-" + s, d, dt, "a-" + d, t, ts};
}

// Random typed graph with every node on at least one edge.
ProvenanceGraph random_graph(int n, int extra_edges, std::uint64_t seed) {
    Rng rng(seed);
    auto type_of = [](int i) { return static_cast<EntityType>(i % 3); };
    auto id_of = [&](int i) {
        const char prefix[] = {'p', 'f', 'n'};
        return std::string(1, prefix[i % 3]) + std::to_string(i);
    };
    std::vector<Event> events;
    for (int i = 1; i < n; ++i) {
        const int j = static_cast<int>(rng.index(i));
        events.push_back(ev(id_of(j), type_of(j), id_of(i), type_of(i),
                            static_cast<EventType>(rng.index(kEventTypeCount)),
                            static_cast<std::int64_t>(i)));
    }
    for (int e = 0; e < extra_edges; ++e) {
        const int a = static_cast<int>(rng.index(n));
        int b = static_cast<int>(rng.index(n));
        if (a == b) b = (b + 1) % n;
        events.push_back(ev(id_of(a), type_of(a), id_of(b), type_of(b),
                            static_cast<EventType>(rng.index(kEventTypeCount)),
                            static_cast<std::int64_t>(100 + e)));
    }
    return ProvenanceGraph::build(events);
}

GmaeConfig small_config(int hidden = 6, int layers = 2) {
    GmaeConfig cfg;
    cfg.layers = layers;
    cfg.hidden = hidden;
    cfg.attn_hidden = hidden;
    cfg.mask_rate = 0.3;
    cfg.lr = 1e-3;
    cfg.epochs = 10;
    return cfg;
}

}  // namespace

TEST_CASE("attention score with zero weights collapses to the output bias") {
    Rng rng(1);
    Encoder enc = Encoder::init(3, small_config(), rng);
    Encoder::Layer& l = enc.layers[0];
    l.a_src.zero();
    l.a_dst.zero();
    l.a_edge.zero();
    std::fill(l.w2.begin(), l.w2.end(), 0.0);
    l.b2 = 0.37;
    const std::vector<double> hu = {1, 0, 0}, hv = {0, 1, 0};
    const std::vector<double> e(kEventTypeCount, 0.0);
    CHECK(enc.attention_score(hu, hv, e, 0) == 0.37);
    CHECK(enc.attention_score(hv, hu, e, 0) == 0.37);
}

TEST_CASE("attention score is asymmetric under swapping the endpoints") {
    Rng rng(2);
    Encoder enc = Encoder::init(3, small_config(), rng);
    const std::vector<double> hu = {1, 0, 0}, hv = {0, 1, 0};
    std::vector<double> e(kEventTypeCount, 0.0);
    e[3] = 1.0;
    CHECK(enc.attention_score(hu, hv, e, 0) != enc.attention_score(hv, hu, e, 0));
    CHECK_THROWS_AS(enc.attention_score(std::vector<double>{1.0}, hv, e, 0), ShapeMismatch);
}

TEST_CASE("attention score gradients match finite differences w.r.t. all inputs") {
    Rng rng(3);
    Encoder enc = Encoder::init(3, small_config(4, 1), rng);
    // Pack (h_u, h_v, e) into one vector and probe the score directly.
    std::vector<double> inputs(3 + 3 + kEventTypeCount);
    for (double& x : inputs) x = rng.uniform(-1, 1);
    auto score = [&](const std::vector<double>& p) {
        return enc.attention_score({p.data(), 3}, {p.data() + 3, 3},
                                   {p.data() + 6, static_cast<std::size_t>(kEventTypeCount)}, 0);
    };
    // Analytic gradient via finite differences of a tighter step as oracle is
    // circular; instead check against the encoder's own backward through
    // gmae_loss below. Here verify smoothness: central difference at two
    // steps agree to first order.
    std::vector<double> g1(inputs.size()), g2(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        auto probe = [&](double h) {
            std::vector<double> p = inputs;
            p[i] += h;
            const double up = score(p);
            p[i] = inputs[i] - h;
            const double down = score(p);
            return (up - down) / (2 * h);
        };
        g1[i] = probe(1e-5);
        g2[i] = probe(1e-6);
        CHECK(std::abs(g1[i] - g2[i]) < 1e-4 * std::max(1.0, std::abs(g1[i])));
    }
}

TEST_CASE("isolated node attends only to itself") {
    // Two components: an edge pair and one isolated node.
    std::vector<Event> events = {
        ev("p0", EntityType::Process, "f0", EntityType::File, EventType::Read, 1)};
    ProvenanceGraph g2 = ProvenanceGraph::build(events);
    // Isolation is introduced by hand: build the view, then append a node with
    // no adjacency.
    GraphView view = GraphView::from(g2);
    view.n += 1;
    view.in_adj.push_back({});

    Rng rng(4);
    Encoder enc = Encoder::init(3, small_config(5, 1), rng);
    Matrix x(view.n, 3);
    x.at(0, 0) = 1.0;
    x.at(1, 1) = 1.0;
    x.at(2, 2) = 1.0;

    Encoder::Trace trace;
    enc.encode(view, x, nullptr, &trace);
    // Slots per node: f0 has in-edge from p0 plus self, p0 and the isolated
    // node have only the self slot; the lone slot's softmax weight is 1.
    const auto& alpha = trace.alpha[0];
    REQUIRE(alpha.size() == 4);
    CHECK(alpha[3] == Catch::Approx(1.0));  // isolated node's self slot

    // And its update depends on itself only: h = tanh(alpha * W h_self).
    std::vector<double> expect(enc.hidden);
    matvec(enc.layers[0].w_val, x.row_span(2), expect);
    for (int k = 0; k < enc.hidden; ++k)
        CHECK(trace.h[1].at(2, k) == Catch::Approx(std::tanh(expect[k])).margin(1e-12));
}

TEST_CASE("attention weights per node sum to one on a random 20-node graph") {
    const ProvenanceGraph g = random_graph(20, 25, 5);
    const GraphView view = GraphView::from(g);
    Rng rng(6);
    Encoder enc = Encoder::init(3, small_config(6, 2), rng);
    Encoder::Trace trace;
    enc.encode(view, type_features(g), nullptr, &trace);
    for (int l = 0; l < enc.layer_count(); ++l) {
        std::size_t s = 0;
        for (int v = 0; v < view.n; ++v) {
            const std::size_t deg = view.in_adj[v].size() + 1;
            double sum = 0.0;
            for (std::size_t k = 0; k < deg; ++k) sum += trace.alpha[l][s + k];
            CHECK(sum == Catch::Approx(1.0).margin(1e-9));
            s += deg;
        }
    }
}

TEST_CASE("encode is equivariant under node relabeling") {
    const ProvenanceGraph g = random_graph(12, 14, 7);
    Rng rng(8);
    Encoder enc = Encoder::init(3, small_config(5, 2), rng);
    const Matrix emb = enc.encode(GraphView::from(g), type_features(g));

    // Relabel ids (prefix-preserving so entity types stay consistent) and
    // rebuild; embeddings must follow their nodes.
    std::vector<Event> renamed;
    auto rename = [](const std::string& id) { return id.substr(0, 1) + "x" + id.substr(1); };
    for (const EdgeRecord& e : g.edges()) {
        const NodeRecord& s = g.nodes()[e.src];
        const NodeRecord& d = g.nodes()[e.dst];
        for (int t = 0; t < kEventTypeCount; ++t)
            if (e.events.contains(static_cast<EventType>(t)))
                renamed.push_back(Event{rename(s.id), s.type, s.attr, rename(d.id), d.type, d.attr,
                                        static_cast<EventType>(t), e.first_ns});
    }
    const ProvenanceGraph g2 = ProvenanceGraph::build(renamed);
    REQUIRE(g2.node_count() == g.node_count());
    const Matrix emb2 = enc.encode(GraphView::from(g2), type_features(g2));

    for (int v = 0; v < g.node_count(); ++v) {
        const auto w = g2.find(rename(g.nodes()[v].id));
        REQUIRE(w.has_value());
        for (int k = 0; k < enc.hidden; ++k)
            CHECK(emb2.at(*w, k) == Catch::Approx(emb.at(v, k)).margin(1e-12));
    }
}

TEST_CASE("mask_nodes draws the floor count deterministically") {
    Rng r1(42), r2(42);
    const auto m1 = mask_nodes(10, 0.3, r1);
    CHECK(m1.size() == 3);
    CHECK(mask_nodes(10, 0.3, r2) == m1);
    CHECK(std::is_sorted(m1.begin(), m1.end()));
    for (int v : m1) CHECK((v >= 0 && v < 10));

    Rng r3(1);
    CHECK_THROWS_AS(mask_nodes(10, 0.0001, r3), ConfigError);  // empty mask set
    CHECK_THROWS_AS(mask_nodes(10, 0.0, r3), ConfigError);
    CHECK_THROWS_AS(mask_nodes(10, 1.0, r3), ConfigError);
}

TEST_CASE("gmae gradients match finite differences through the full model") {
    const ProvenanceGraph g = random_graph(12, 10, 9);
    const GraphView view = GraphView::from(g);
    const Matrix x = type_features(g);
    GmaeConfig cfg = small_config(4, 2);
    Rng rng(10);
    GmaeModel model = GmaeModel::init(3, cfg, rng);
    Rng mrng(11);
    const std::vector<int> mask = mask_nodes(view.n, 0.3, mrng);

    GmaeModel grads = model;
    std::vector<double> zeros(model.param_count(), 0.0);
    grads.unpack(zeros);
    gmae_loss(model, view, x, mask, &grads);

    std::vector<double> analytic;
    grads.pack(analytic);
    std::vector<double> params;
    model.pack(params);
    GmaeModel probe = model;
    auto loss = [&](const std::vector<double>& p) {
        probe.unpack(p);
        return gmae_loss(probe, view, x, mask);
    };
    CHECK(oracles::max_gradient_error(loss, params, analytic) < 1e-3);
}

TEST_CASE("reconstruction loss ignores unmasked nodes' targets") {
    const ProvenanceGraph g = random_graph(10, 8, 12);
    const GraphView view = GraphView::from(g);
    Matrix x = type_features(g);
    GmaeConfig cfg = small_config(4, 1);
    Rng rng(13);
    GmaeModel model = GmaeModel::init(3, cfg, rng);
    const std::vector<int> mask = {1, 4};

    const double base = gmae_loss(model, view, x, mask);
    // Perturbing an unmasked node's reconstruction target changes nothing.
    Matrix t1 = x;
    for (int k = 0; k < 3; ++k) t1.at(2, k) += 0.5;  // node 2 is unmasked
    CHECK(gmae_loss(model, view, x, mask, nullptr, &t1) == base);
    // Perturbing a masked node's target does.
    Matrix t2 = x;
    for (int k = 0; k < 3; ++k) t2.at(1, k) += 0.25;  // node 1 is masked
    CHECK(gmae_loss(model, view, x, mask, nullptr, &t2) != base);
}

TEST_CASE("structural pretraining reduces the reconstruction loss on a toy graph") {
    // 30 nodes in two structural motifs: process->file write stars and
    // process->netflow send pairs.
    std::vector<Event> events;
    int id = 0;
    for (int s = 0; s < 5; ++s) {
        const std::string p = "p" + std::to_string(id++);
        for (int k = 0; k < 3; ++k) {
            const std::string f = "f" + std::to_string(id++);
            events.push_back(ev(p, EntityType::Process, f, EntityType::File, EventType::Write,
                                id));
        }
    }
    for (int s = 0; s < 5; ++s) {
        const std::string p = "p" + std::to_string(id++);
        const std::string n = "n" + std::to_string(id++);
        events.push_back(ev(p, EntityType::Process, n, EntityType::Netflow, EventType::SendTo,
                            id));
        events.push_back(ev(n, EntityType::Netflow, p, EntityType::Process, EventType::RecvFrom,
                            id));
    }
    const ProvenanceGraph g = ProvenanceGraph::build(events);
    REQUIRE(g.node_count() == 30);

    GmaeConfig cfg = small_config(8, 2);
    cfg.epochs = 40;
    cfg.lr = 5e-3;
    std::vector<double> curve;
    train_structural(g, cfg, 21, &curve);
    REQUIRE(curve.size() == 40);
    CHECK(curve.back() < curve.front());
}

TEST_CASE("gmae training is deterministic per seed and rejects degenerate graphs") {
    const ProvenanceGraph g = random_graph(14, 10, 14);
    GmaeConfig cfg = small_config(4, 1);
    cfg.epochs = 5;
    const Encoder e1 = train_structural(g, cfg, 77);
    const Encoder e2 = train_structural(g, cfg, 77);
    std::vector<double> p1, p2;
    e1.pack(p1);
    e2.pack(p2);
    CHECK(p1 == p2);

    const ProvenanceGraph empty = ProvenanceGraph::build({});
    CHECK_THROWS_AS(train_structural(empty, cfg, 1), DegenerateGraph);

    // Single node without edges.
    GraphView lonely;
    lonely.n = 1;
    lonely.in_adj.resize(1);
    Matrix x(1, 3);
    x.at(0, 0) = 1.0;
    CHECK_THROWS_AS(train_gmae(lonely, x, cfg, 1), DegenerateGraph);
}

TEST_CASE("semantic pretraining learns and separates attribute-distinct nodes") {
    // Two groups of processes with identical type context but different
    // attribute text.
    std::vector<Event> events;
    for (int i = 0; i < 8; ++i) {
        const std::string p = "p" + std::to_string(i);
        const std::string f = "f" + std::to_string(i);
        Event e1 = ev(p, EntityType::Process, f, EntityType::File, EventType::Write, i + 1);
        e1.src_attr = i < 4 ? "/usr/bin/curl -s" : "/opt/jobs/render_report.py";
        e1.dst_attr = i < 4 ? "/var/log/app/web.log" : "/srv/out/report.csv";
        events.push_back(e1);
    }
    const ProvenanceGraph g = ProvenanceGraph::build(events);

    std::vector<std::vector<std::string>> corpus;
    for (const NodeRecord& n : g.nodes()) corpus.push_back(tokenize_attribute(n.attr));
    Word2VecConfig wcfg;
    wcfg.dim = 6;
    wcfg.epochs = 40;
    const EmbeddingTable table = EmbeddingTable::train(corpus, wcfg, 3);

    GmaeConfig cfg = small_config(8, 2);
    cfg.epochs = 30;
    cfg.lr = 5e-3;
    std::vector<double> curve;
    const Encoder sem = train_semantic(g, table, cfg, 31, &curve);
    CHECK(curve.back() < curve.front());

    const Encoder struc = train_structural(g, cfg, 31);
    const Matrix sememb = sem.encode(GraphView::from(g), full_features(g, table));
    const Matrix strucemb = struc.encode(GraphView::from(g), type_features(g));

    // Type-only embeddings cannot distinguish the two process groups; the
    // attributed ones can.
    const int a = *g.find("p0"), b = *g.find("p5");
    double d_struc = 0.0, d_sem = 0.0;
    for (int k = 0; k < cfg.hidden; ++k) {
        d_struc += std::abs(strucemb.at(a, k) - strucemb.at(b, k));
        d_sem += std::abs(sememb.at(a, k) - sememb.at(b, k));
    }
    CHECK(d_struc < 1e-9);
    CHECK(d_sem > 1e-4);
}

TEST_CASE("encoder checkpoints round-trip") {
    const ProvenanceGraph g = random_graph(10, 8, 15);
    GmaeConfig cfg = small_config(5, 2);
    cfg.epochs = 3;
    const Encoder enc = train_structural(g, cfg, 5);
    std::stringstream ss;
    enc.save(ss);
    const Encoder enc2 = Encoder::load(ss);
    const Matrix e1 = enc.encode(GraphView::from(g), type_features(g));
    const Matrix e2 = enc2.encode(GraphView::from(g), type_features(g));
    CHECK(e1.v == e2.v);
}
