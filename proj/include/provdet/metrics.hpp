#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "provdet/error.hpp"

namespace provdet {

// campaign id -> malicious node ids; a node belongs to at most one campaign.
using CampaignLabels = std::map<std::string, std::set<std::string>>;

struct ConfusionCounts {
    std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
};

// verdicts: node id -> flagged. Every labeled malicious node must have a
// verdict; nodes outside `malicious` count as benign.
inline ConfusionCounts confusion(const std::map<std::string, bool>& verdicts,
                                 const std::set<std::string>& malicious) {
    for (const std::string& id : malicious)
        if (!verdicts.count(id)) throw MissingVerdict("no verdict for labeled node '" + id + "'");
    ConfusionCounts c;
    for (const auto& [id, flagged] : verdicts) {
        const bool mal = malicious.count(id) != 0;
        if (mal && flagged) ++c.tp;
        else if (mal) ++c.fn;
        else if (flagged) ++c.fp;
        else ++c.tn;
    }
    return c;
}

// Matthews correlation coefficient; a zero denominator maps to 0 so the
// metric is total.
inline double mcc(const ConfusionCounts& c) {
    const double tp = static_cast<double>(c.tp), fp = static_cast<double>(c.fp);
    const double tn = static_cast<double>(c.tn), fn = static_cast<double>(c.fn);
    const double denom = std::sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn));
    if (denom == 0.0) return 0.0;
    return (tp * tn - fp * fn) / denom;
}

inline double f1(const ConfusionCounts& c) {
    const double tp = static_cast<double>(c.tp);
    const double denom = 2.0 * tp + static_cast<double>(c.fp) + static_cast<double>(c.fn);
    if (denom == 0.0) return 0.0;
    return 2.0 * tp / denom;
}

// Area under the detection-precision curve. For each ranking prefix we take
// (precision, fraction of campaigns hit); D(p) is the best fraction over
// prefixes attaining precision >= p (0 where no prefix qualifies), and ADP
// integrates the exact right-continuous step function over its breakpoints.
inline double adp(const std::vector<std::string>& ranking, const CampaignLabels& campaigns) {
    if (campaigns.empty()) throw NoCampaigns("adp: no attack campaigns");
    std::map<std::string, int> node_campaign;  // node -> campaign index
    int k = 0;
    for (const auto& [cid, nodes] : campaigns) {
        for (const std::string& id : nodes) node_campaign[id] = k;
        ++k;
    }

    std::vector<std::pair<double, double>> points;  // (precision, detected fraction)
    points.reserve(ranking.size());
    std::vector<bool> seen(k, false);
    int hit_campaigns = 0;
    std::int64_t mal = 0;
    for (std::size_t i = 0; i < ranking.size(); ++i) {
        const auto it = node_campaign.find(ranking[i]);
        if (it != node_campaign.end()) {
            ++mal;
            if (!seen[it->second]) {
                seen[it->second] = true;
                ++hit_campaigns;
            }
        }
        points.emplace_back(static_cast<double>(mal) / static_cast<double>(i + 1),
                            static_cast<double>(hit_campaigns) / static_cast<double>(k));
    }

    std::sort(points.begin(), points.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    double area = 0.0, best = 0.0;
    std::size_t i = 0;
    while (i < points.size()) {
        const double p = points[i].first;
        while (i < points.size() && points[i].first == p) {
            best = std::max(best, points[i].second);
            ++i;
        }
        const double next = i < points.size() ? points[i].first : 0.0;
        area += best * (p - next);
    }
    return area;
}

// A campaign counts as detected when at least one of its nodes is flagged.
struct CoverageResult {
    std::map<std::string, bool> detected;
    int detected_count = 0;
    int campaign_count = 0;
};

inline CoverageResult attack_coverage(const std::map<std::string, bool>& verdicts,
                                      const CampaignLabels& campaigns) {
    CoverageResult r;
    r.campaign_count = static_cast<int>(campaigns.size());
    for (const auto& [cid, nodes] : campaigns) {
        bool hit = false;
        for (const std::string& id : nodes) {
            const auto it = verdicts.find(id);
            if (it != verdicts.end() && it->second) {
                hit = true;
                break;
            }
        }
        r.detected[cid] = hit;
        if (hit) ++r.detected_count;
    }
    return r;
}

}  // namespace provdet
