#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "provdet/error.hpp"

namespace provdet {

// Entity and event vocabularies are closed and ordered; the ordering fixes
// the one-hot / multi-hot index positions used everywhere downstream.

enum class EntityType : std::uint8_t { Process = 0, File = 1, Netflow = 2 };

inline constexpr int kEntityTypeCount = 3;

enum class EventType : std::uint8_t {
    Connect = 0,
    Execute = 1,
    Open = 2,
    Read = 3,
    RecvFrom = 4,
    RecvMsg = 5,
    SendMsg = 6,
    SendTo = 7,
    Write = 8,
    Clone = 9,
};

inline constexpr int kEventTypeCount = 10;

inline constexpr std::array<std::string_view, kEntityTypeCount> kEntityTypeNames = {
    "process", "file", "netflow"};

inline constexpr std::array<std::string_view, kEventTypeCount> kEventTypeNames = {
    "CONNECT", "EXECUTE", "OPEN",    "READ",  "RECVFROM",
    "RECVMSG", "SENDMSG", "SENDTO",  "WRITE", "CLONE"};

inline std::string_view to_string(EntityType t) {
    return kEntityTypeNames[static_cast<int>(t)];
}

inline std::string_view to_string(EventType t) {
    return kEventTypeNames[static_cast<int>(t)];
}

inline EntityType parse_entity_type(std::string_view s) {
    for (int i = 0; i < kEntityTypeCount; ++i)
        if (s == kEntityTypeNames[i]) return static_cast<EntityType>(i);
    throw UnknownType("unknown entity type: '" + std::string(s) + "'");
}

inline EventType parse_event_type(std::string_view s) {
    for (int i = 0; i < kEventTypeCount; ++i)
        if (s == kEventTypeNames[i]) return static_cast<EventType>(i);
    throw UnknownType("unknown event type: '" + std::string(s) + "'");
}

// Multi-hot set of event types observed on one edge, kept as a bitmask over
// the fixed vocabulary order.
class EventSet {
public:
    EventSet() = default;
    explicit EventSet(std::uint16_t bits) : bits_(bits) {}

    void insert(EventType t) { bits_ |= static_cast<std::uint16_t>(1u << static_cast<int>(t)); }
    bool contains(EventType t) const {
        return (bits_ >> static_cast<int>(t)) & 1u;
    }
    bool empty() const { return bits_ == 0; }
    int size() const { return __builtin_popcount(bits_); }
    std::uint16_t bits() const { return bits_; }

    friend bool operator==(EventSet a, EventSet b) { return a.bits_ == b.bits_; }

    // "READ|WRITE" list in vocabulary order.
    std::string to_string() const {
        std::string out;
        for (int i = 0; i < kEventTypeCount; ++i) {
            if ((bits_ >> i) & 1u) {
                if (!out.empty()) out += '|';
                out += kEventTypeNames[i];
            }
        }
        return out;
    }

    static EventSet parse(std::string_view s) {
        EventSet set;
        std::size_t pos = 0;
        while (pos <= s.size()) {
            std::size_t bar = s.find('|', pos);
            std::string_view item =
                s.substr(pos, bar == std::string_view::npos ? std::string_view::npos : bar - pos);
            if (!item.empty()) set.insert(parse_event_type(item));
            if (bar == std::string_view::npos) break;
            pos = bar + 1;
        }
        return set;
    }

private:
    std::uint16_t bits_ = 0;
};

}  // namespace provdet
