#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <set>
#include <sstream>

#include "provdet/event.hpp"
#include "provdet/graph.hpp"
#include "provdet/rng.hpp"

using namespace provdet;

namespace {

Event make_event(const std::string& src, EntityType st, const std::string& dst, EntityType dt,
                 EventType type, std::int64_t ts, const std::string& sattr = "sa",
                 const std::string& dattr = "da") {
    return Event{src, st, sattr, dst, dt, dattr, type, ts};
}

}  // namespace

TEST_CASE("parse_event_line round-trips a valid record") {
    const std::string line =
        "src_id=p1\tsrc_type=process\tsrc_attr=/usr/bin/bash -c job\tdst_id=f1\tdst_type=file\t"
        "dst_attr=/home/admin/profile\tevent_type=READ\ttimestamp_ns=1234";
    const Event ev = parse_event_line(line);
    CHECK(ev.src_id == "p1");
    CHECK(ev.src_type == EntityType::Process);
    CHECK(ev.src_attr == "/usr/bin/bash -c job");
    CHECK(ev.dst_type == EntityType::File);
    CHECK(ev.event_type == EventType::Read);
    CHECK(ev.timestamp_ns == 1234);
    CHECK(parse_event_line(format_event_line(ev)).dst_attr == ev.dst_attr);
}

TEST_CASE("parse_event_line rejects vocabulary violations") {
    const std::string base =
        "src_id=p1\tsrc_type=process\tsrc_attr=a\tdst_id=f1\tdst_type=file\tdst_attr=b\t";
    CHECK_THROWS_AS(parse_event_line(base + "event_type=FORK\ttimestamp_ns=1"), UnknownType);
    CHECK_THROWS_AS(parse_event_line(base + "event_type=READ\ttimestamp_ns=-5"),
                    NegativeTimestamp);
    CHECK_THROWS_AS(
        parse_event_line("src_id=p1\tsrc_type=daemon\tsrc_attr=a\tdst_id=f1\tdst_type=file\t"
                         "dst_attr=b\tevent_type=READ\ttimestamp_ns=1"),
        UnknownType);
}

TEST_CASE("parse_event_line rejects malformed syntax") {
    CHECK_THROWS_AS(parse_event_line(""), MalformedRecord);
    CHECK_THROWS_AS(parse_event_line("not a record"), MalformedRecord);
    // missing timestamp field
    CHECK_THROWS_AS(
        parse_event_line("src_id=p1\tsrc_type=process\tsrc_attr=a\tdst_id=f1\tdst_type=file\t"
                         "dst_attr=b\tevent_type=READ"),
        MalformedRecord);
    // duplicate field
    CHECK_THROWS_AS(
        parse_event_line("src_id=p1\tsrc_id=p2\tsrc_type=process\tsrc_attr=a\tdst_id=f1\t"
                         "dst_type=file\tdst_attr=b\tevent_type=READ\ttimestamp_ns=1"),
        MalformedRecord);
}

TEST_CASE("build_graph aggregates events into multi-hot edges") {
    std::vector<Event> events = {
        make_event("p1", EntityType::Process, "f1", EntityType::File, EventType::Read, 5),
        make_event("p1", EntityType::Process, "f1", EntityType::File, EventType::Write, 9),
    };
    const ProvenanceGraph g = ProvenanceGraph::build(events);
    REQUIRE(g.node_count() == 2);
    REQUIRE(g.edge_count() == 1);
    const EdgeRecord& e = g.edges()[0];
    CHECK(e.first_ns == 5);
    CHECK(e.events.contains(EventType::Read));
    CHECK(e.events.contains(EventType::Write));
    CHECK(e.events.size() == 2);
}

TEST_CASE("build_graph handles the degenerate and conflicting cases") {
    CHECK(ProvenanceGraph::build({}).node_count() == 0);
    CHECK(ProvenanceGraph::build({}).edge_count() == 0);

    std::vector<Event> conflict = {
        make_event("x", EntityType::Process, "f1", EntityType::File, EventType::Read, 1),
        make_event("p2", EntityType::Process, "x", EntityType::File, EventType::Write, 2),
    };
    CHECK_THROWS_AS(ProvenanceGraph::build(conflict), ConflictingType);
}

TEST_CASE("build_graph keeps the chronologically first attribute") {
    std::vector<Event> events = {
        make_event("p1", EntityType::Process, "f1", EntityType::File, EventType::Read, 50, "late"),
        make_event("p1", EntityType::Process, "f2", EntityType::File, EventType::Read, 10,
                   "early"),
    };
    const ProvenanceGraph g = ProvenanceGraph::build(events);
    const auto idx = g.find("p1");
    REQUIRE(idx.has_value());
    CHECK(g.nodes()[*idx].attr == "early");
    CHECK(g.nodes()[*idx].first_seen_ns == 10);
}

TEST_CASE("edge sets equal a brute-force multimap and survive permutation") {
    Rng rng(7);
    std::vector<Event> events;
    const int n_entities = 6;
    for (int i = 0; i < 120; ++i) {
        const int a = static_cast<int>(rng.index(n_entities));
        int b = static_cast<int>(rng.index(n_entities));
        if (b == a) b = (b + 1) % n_entities;
        events.push_back(make_event("p" + std::to_string(a), EntityType::Process,
                                    "p" + std::to_string(b), EntityType::Process,
                                    static_cast<EventType>(rng.index(kEventTypeCount)),
                                    static_cast<std::int64_t>(rng.index(1000))));
    }

    std::map<std::pair<std::string, std::string>, std::set<EventType>> expected;
    for (const Event& ev : events) expected[{ev.src_id, ev.dst_id}].insert(ev.event_type);

    const ProvenanceGraph g = ProvenanceGraph::build(events);
    REQUIRE(g.edge_count() == static_cast<int>(expected.size()));
    for (const EdgeRecord& e : g.edges()) {
        const auto& want = expected.at({g.nodes()[e.src].id, g.nodes()[e.dst].id});
        CHECK(e.events.size() == static_cast<int>(want.size()));
        for (EventType t : want) CHECK(e.events.contains(t));
    }

    // Permutation idempotence: shuffled input yields the identical graph.
    std::vector<Event> shuffled = events;
    for (std::size_t i = shuffled.size(); i > 1; --i)
        std::swap(shuffled[i - 1], shuffled[rng.index(i)]);
    const ProvenanceGraph g2 = ProvenanceGraph::build(shuffled);
    REQUIRE(g2.node_count() == g.node_count());
    REQUIRE(g2.edge_count() == g.edge_count());
    for (int i = 0; i < g.node_count(); ++i) {
        CHECK(g2.nodes()[i].id == g.nodes()[i].id);
        CHECK(g2.nodes()[i].type == g.nodes()[i].type);
        CHECK(g2.nodes()[i].attr == g.nodes()[i].attr);
        CHECK(g2.nodes()[i].first_seen_ns == g.nodes()[i].first_seen_ns);
    }
    for (int i = 0; i < g.edge_count(); ++i) {
        CHECK(g2.edges()[i].src == g.edges()[i].src);
        CHECK(g2.edges()[i].dst == g.edges()[i].dst);
        CHECK(g2.edges()[i].events == g.edges()[i].events);
        CHECK(g2.edges()[i].first_ns == g.edges()[i].first_ns);
    }
}

TEST_CASE("graph dump round-trips through the versioned format") {
    std::vector<Event> events = {
        make_event("p1", EntityType::Process, "f1", EntityType::File, EventType::Open, 3,
                   "/usr/bin/curl -s", "/home/admin/profile"),
        make_event("p1", EntityType::Process, "n1", EntityType::Netflow, EventType::SendTo, 4,
                   "/usr/bin/curl -s", "192.168.10.21 | 40001 | 93.184.216.34 | 443"),
    };
    const ProvenanceGraph g = ProvenanceGraph::build(events);
    std::stringstream ss;
    g.save(ss);
    const ProvenanceGraph g2 = ProvenanceGraph::load(ss);
    REQUIRE(g2.node_count() == g.node_count());
    REQUIRE(g2.edge_count() == g.edge_count());
    const auto n1 = g2.find("n1");
    REQUIRE(n1.has_value());
    CHECK(g2.nodes()[*n1].attr == "192.168.10.21 | 40001 | 93.184.216.34 | 443");
    CHECK(g2.nodes()[*n1].type == EntityType::Netflow);

    std::stringstream bad("provdet-graph v999\n");
    CHECK_THROWS_AS(ProvenanceGraph::load(bad), IoError);
}
