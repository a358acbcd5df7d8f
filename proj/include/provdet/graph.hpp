#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "provdet/error.hpp"
#include "provdet/event.hpp"
#include "provdet/types.hpp"

namespace provdet {

struct NodeRecord {
    std::string id;
    EntityType type = EntityType::Process;
    std::string attr;
    std::int64_t first_seen_ns = 0;
};

struct EdgeRecord {
    int src = 0;  // index into nodes
    int dst = 0;
    EventSet events;
    std::int64_t first_ns = 0;
};

// Directed multi-graph with multi-hot edge aggregation: all events between
// the same ordered (src, dst) pair collapse into one edge whose event set is
// the union of the observed types. Immutable once built; node and edge order
// is sorted (by id, then by endpoint pair) so every downstream pass is
// deterministic regardless of input order.
class ProvenanceGraph {
public:
    ProvenanceGraph() = default;

    static ProvenanceGraph build(std::span<const Event> events) {
        struct NodeAcc {
            EntityType type;
            std::string attr;
            std::int64_t ts;
        };
        std::unordered_map<std::string, NodeAcc> nodes;
        std::map<std::pair<std::string, std::string>, std::pair<EventSet, std::int64_t>> edges;

        auto touch = [&](const std::string& id, EntityType type, const std::string& attr,
                         std::int64_t ts) {
            auto it = nodes.find(id);
            if (it == nodes.end()) {
                nodes.emplace(id, NodeAcc{type, attr, ts});
                return;
            }
            if (it->second.type != type)
                throw ConflictingType("entity '" + id + "' seen as both " +
                                      std::string(to_string(it->second.type)) + " and " +
                                      std::string(to_string(type)));
            // Keep the chronologically first attribute; break timestamp ties
            // lexicographically so the result is independent of event order.
            if (ts < it->second.ts || (ts == it->second.ts && attr < it->second.attr)) {
                it->second.ts = ts;
                it->second.attr = attr;
            }
        };

        for (const Event& ev : events) {
            touch(ev.src_id, ev.src_type, ev.src_attr, ev.timestamp_ns);
            touch(ev.dst_id, ev.dst_type, ev.dst_attr, ev.timestamp_ns);
            auto& slot = edges[{ev.src_id, ev.dst_id}];
            if (slot.first.empty() || ev.timestamp_ns < slot.second) slot.second = ev.timestamp_ns;
            slot.first.insert(ev.event_type);
        }

        ProvenanceGraph g;
        g.nodes_.reserve(nodes.size());
        for (auto& [id, acc] : nodes)
            g.nodes_.push_back(NodeRecord{id, acc.type, std::move(acc.attr), acc.ts});
        std::sort(g.nodes_.begin(), g.nodes_.end(),
                  [](const NodeRecord& a, const NodeRecord& b) { return a.id < b.id; });
        for (int i = 0; i < static_cast<int>(g.nodes_.size()); ++i) g.index_[g.nodes_[i].id] = i;

        g.edges_.reserve(edges.size());
        for (const auto& [key, val] : edges)
            g.edges_.push_back(
                EdgeRecord{g.index_.at(key.first), g.index_.at(key.second), val.first, val.second});
        g.build_adjacency();
        return g;
    }

    int node_count() const { return static_cast<int>(nodes_.size()); }
    int edge_count() const { return static_cast<int>(edges_.size()); }
    const std::vector<NodeRecord>& nodes() const { return nodes_; }
    const std::vector<EdgeRecord>& edges() const { return edges_; }

    std::optional<int> find(const std::string& id) const {
        auto it = index_.find(id);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    // (neighbor node index, edge index) lists, sorted.
    const std::vector<std::pair<int, int>>& in_edges(int v) const { return in_[v]; }
    const std::vector<std::pair<int, int>>& out_edges(int v) const { return out_[v]; }

    void save(std::ostream& os) const {
        os << "provdet-graph v1\n";
        os << "nodes " << nodes_.size() << "\n";
        for (const NodeRecord& n : nodes_)
            os << n.id << '\t' << to_string(n.type) << '\t' << n.first_seen_ns << '\t' << n.attr
               << "\n";
        os << "edges " << edges_.size() << "\n";
        for (const EdgeRecord& e : edges_)
            os << nodes_[e.src].id << '\t' << nodes_[e.dst].id << '\t' << e.first_ns << '\t'
               << e.events.to_string() << "\n";
    }

    static ProvenanceGraph load(std::istream& is) {
        std::string line;
        if (!std::getline(is, line) || line != "provdet-graph v1")
            throw IoError("bad graph header: '" + line + "'");
        try {
            auto read_count = [&](const char* section) {
                if (!std::getline(is, line)) throw IoError("truncated graph dump");
                std::string prefix = std::string(section) + " ";
                if (line.rfind(prefix, 0) != 0) throw IoError("expected '" + prefix + "count'");
                return std::stoul(line.substr(prefix.size()));
            };

            ProvenanceGraph g;
            unsigned long n = read_count("nodes");
            g.nodes_.reserve(n);
            for (unsigned long i = 0; i < n; ++i) {
                if (!std::getline(is, line)) throw IoError("truncated node section");
                auto f = split4(line);
                g.nodes_.push_back(
                    NodeRecord{std::string(f[0]), parse_entity_type(f[1]), std::string(f[3]),
                               static_cast<std::int64_t>(std::stoll(std::string(f[2])))});
                g.index_[g.nodes_.back().id] = static_cast<int>(i);
            }
            unsigned long m = read_count("edges");
            g.edges_.reserve(m);
            for (unsigned long i = 0; i < m; ++i) {
                if (!std::getline(is, line)) throw IoError("truncated edge section");
                auto f = split4(line);
                auto si = g.find(std::string(f[0])), di = g.find(std::string(f[1]));
                if (!si || !di) throw IoError("edge references unknown node");
                g.edges_.push_back(
                    EdgeRecord{*si, *di, EventSet::parse(f[3]),
                               static_cast<std::int64_t>(std::stoll(std::string(f[2])))});
            }
            g.build_adjacency();
            return g;
        } catch (const Error&) {
            throw;
        } catch (const std::exception& e) {
            throw IoError(std::string("corrupt graph dump: ") + e.what());
        }
    }

private:
    static std::array<std::string_view, 4> split4(std::string_view line) {
        std::array<std::string_view, 4> out;
        std::size_t pos = 0;
        for (int i = 0; i < 3; ++i) {
            std::size_t tab = line.find('\t', pos);
            if (tab == std::string_view::npos) throw IoError("bad graph record: expected 4 fields");
            out[i] = line.substr(pos, tab - pos);
            pos = tab + 1;
        }
        out[3] = line.substr(pos);
        return out;
    }

    void build_adjacency() {
        in_.assign(nodes_.size(), {});
        out_.assign(nodes_.size(), {});
        for (int e = 0; e < static_cast<int>(edges_.size()); ++e) {
            out_[edges_[e].src].push_back({edges_[e].dst, e});
            in_[edges_[e].dst].push_back({edges_[e].src, e});
        }
    }

    std::vector<NodeRecord> nodes_;
    std::vector<EdgeRecord> edges_;
    std::unordered_map<std::string, int> index_;
    std::vector<std::vector<std::pair<int, int>>> in_, out_;
};

}  // namespace provdet
