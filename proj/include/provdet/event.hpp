#pragma once

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>

#include "provdet/error.hpp"
#include "provdet/types.hpp"

namespace provdet {

// One parsed log record. Timestamps are nanoseconds since epoch.
struct Event {
    std::string src_id;
    EntityType src_type = EntityType::Process;
    std::string src_attr;
    std::string dst_id;
    EntityType dst_type = EntityType::Process;
    std::string dst_attr;
    EventType event_type = EventType::Read;
    std::int64_t timestamp_ns = 0;
};

namespace detail {

inline bool has_whitespace(std::string_view s) {
    for (char c : s)
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') return true;
    return false;
}

}  // namespace detail

// Log schema: one event per line, eight tab-separated key=value fields
// (src_id, src_type, src_attr, dst_id, dst_type, dst_attr, event_type,
// timestamp_ns) in any order. Values may contain spaces but not tabs.
inline Event parse_event_line(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) throw MalformedRecord("empty line");

    std::string_view values[8];
    bool seen[8] = {};
    static constexpr std::string_view kKeys[8] = {
        "src_id", "src_type", "src_attr", "dst_id",
        "dst_type", "dst_attr", "event_type", "timestamp_ns"};

    std::size_t pos = 0;
    int fields = 0;
    while (pos <= line.size()) {
        std::size_t tab = line.find('\t', pos);
        std::string_view field =
            line.substr(pos, tab == std::string_view::npos ? std::string_view::npos : tab - pos);
        std::size_t eq = field.find('=');
        if (eq == std::string_view::npos)
            throw MalformedRecord("field without '=': '" + std::string(field) + "'");
        std::string_view key = field.substr(0, eq);
        std::string_view value = field.substr(eq + 1);
        int ki = -1;
        for (int i = 0; i < 8; ++i)
            if (key == kKeys[i]) ki = i;
        if (ki < 0) throw MalformedRecord("unknown field '" + std::string(key) + "'");
        if (seen[ki]) throw MalformedRecord("duplicate field '" + std::string(key) + "'");
        seen[ki] = true;
        values[ki] = value;
        ++fields;
        if (tab == std::string_view::npos) break;
        pos = tab + 1;
    }
    if (fields != 8)
        for (int i = 0; i < 8; ++i)
            if (!seen[i]) throw MalformedRecord("missing field '" + std::string(kKeys[i]) + "'");

    Event ev;
    ev.src_id = std::string(values[0]);
    ev.dst_id = std::string(values[3]);
    if (ev.src_id.empty() || ev.dst_id.empty()) throw MalformedRecord("empty entity id");
    if (detail::has_whitespace(ev.src_id) || detail::has_whitespace(ev.dst_id))
        throw MalformedRecord("entity id contains whitespace");
    ev.src_type = parse_entity_type(values[1]);
    ev.dst_type = parse_entity_type(values[4]);
    ev.src_attr = std::string(values[2]);
    ev.dst_attr = std::string(values[5]);
    ev.event_type = parse_event_type(values[6]);

    std::string_view ts = values[7];
    std::int64_t t = 0;
    auto [p, ec] = std::from_chars(ts.data(), ts.data() + ts.size(), t);
    if (ec != std::errc{} || p != ts.data() + ts.size())
        throw MalformedRecord("bad timestamp '" + std::string(ts) + "'");
    if (t < 0) throw NegativeTimestamp("timestamp_ns < 0");
    ev.timestamp_ns = t;
    return ev;
}

inline std::string format_event_line(const Event& ev) {
    std::string out;
    out.reserve(96 + ev.src_attr.size() + ev.dst_attr.size());
    out += "src_id=";
    out += ev.src_id;
    out += "\tsrc_type=";
    out += to_string(ev.src_type);
    out += "\tsrc_attr=";
    out += ev.src_attr;
    out += "\tdst_id=";
    out += ev.dst_id;
    out += "\tdst_type=";
    out += to_string(ev.dst_type);
    out += "\tdst_attr=";
    out += ev.dst_attr;
    out += "\tevent_type=";
    out += to_string(ev.event_type);
    out += "\ttimestamp_ns=";
    out += std::to_string(ev.timestamp_ns);
    return out;
}

}  // namespace provdet
