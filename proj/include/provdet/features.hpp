#pragma once

#include <array>
#include <vector>

#include "provdet/embedding.hpp"
#include "provdet/graph.hpp"
#include "provdet/types.hpp"

namespace provdet {

// x_v = [one-hot(type) ‖ mean attribute embedding], dimension 3 + d_attr.
inline std::vector<double> node_feature(const NodeRecord& node, const EmbeddingTable& table) {
    std::vector<double> x(kEntityTypeCount + table.dim(), 0.0);
    x[static_cast<int>(node.type)] = 1.0;
    const auto attr = table.attribute_vector(node.attr);
    std::copy(attr.begin(), attr.end(), x.begin() + kEntityTypeCount);
    return x;
}

// Multi-hot indicator over the event-type vocabulary.
inline std::array<double, kEventTypeCount> edge_feature(const EventSet& events) {
    std::array<double, kEventTypeCount> e{};
    for (int i = 0; i < kEventTypeCount; ++i)
        if (events.contains(static_cast<EventType>(i))) e[i] = 1.0;
    return e;
}

}  // namespace provdet
