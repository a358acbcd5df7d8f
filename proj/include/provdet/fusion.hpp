#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "provdet/error.hpp"

namespace provdet {

inline constexpr int kViewCount = 3;      // attr, struc, causal
inline constexpr int kDetectorCount = 7;  // D1..D7

enum class NormVariant { Percentile, MinMax, ZScore, Robust };

inline std::string_view to_string(NormVariant v) {
    switch (v) {
        case NormVariant::Percentile: return "percentile";
        case NormVariant::MinMax: return "min-max";
        case NormVariant::ZScore: return "z-score";
        case NormVariant::Robust: return "robust";
    }
    return "?";
}

inline NormVariant parse_norm_variant(std::string_view s) {
    if (s == "percentile") return NormVariant::Percentile;
    if (s == "min-max" || s == "minmax") return NormVariant::MinMax;
    if (s == "z-score" || s == "zscore") return NormVariant::ZScore;
    if (s == "robust") return NormVariant::Robust;
    throw ConfigError("unknown normalizer variant: '" + std::string(s) + "'");
}

// Normalized (attr, struc, causal) triplet.
struct Triplet {
    std::array<double, kViewCount> s{};
    double operator[](int i) const { return s[i]; }
    double& operator[](int i) { return s[i]; }
    double max_view() const { return std::max({s[0], s[1], s[2]}); }
};

// Per-view normalization fitted exclusively on benign validation scores.
// The percentile variant is the default: normalize(s) = (# benign <= s) / n,
// a right-continuous empirical CDF, so the benign maximum maps to exactly 1
// and "threshold = maximum benign score" is tie-stable. The alternatives are
// selectable for ablations only.
class Normalizer {
public:
    static Normalizer fit(const std::array<std::vector<double>, kViewCount>& benign,
                          NormVariant variant) {
        Normalizer n;
        n.variant_ = variant;
        for (int view = 0; view < kViewCount; ++view) {
            if (benign[view].empty()) throw EmptyBenign("no benign scores for view");
            std::vector<double> sorted = benign[view];
            std::sort(sorted.begin(), sorted.end());
            switch (variant) {
                case NormVariant::Percentile:
                    n.stats_[view] = std::move(sorted);
                    break;
                case NormVariant::MinMax:
                    n.stats_[view] = {sorted.front(), sorted.back()};
                    break;
                case NormVariant::ZScore: {
                    double mean = 0.0;
                    for (double x : sorted) mean += x;
                    mean /= static_cast<double>(sorted.size());
                    double var = 0.0;
                    for (double x : sorted) var += (x - mean) * (x - mean);
                    var /= static_cast<double>(sorted.size());
                    n.stats_[view] = {mean, std::sqrt(var)};
                    break;
                }
                case NormVariant::Robust: {
                    n.stats_[view] = {quantile(sorted, 0.5),
                                      quantile(sorted, 0.75) - quantile(sorted, 0.25)};
                    break;
                }
            }
        }
        return n;
    }

    double normalize(int view, double s) const {
        const auto& st = stats_[view];
        switch (variant_) {
            case NormVariant::Percentile: {
                const auto it = std::upper_bound(st.begin(), st.end(), s);
                return static_cast<double>(it - st.begin()) / static_cast<double>(st.size());
            }
            case NormVariant::MinMax: {
                const double range = st[1] - st[0];
                if (range <= 0.0) return 0.0;
                return (s - st[0]) / range;
            }
            case NormVariant::ZScore:
                return (s - st[0]) / std::max(st[1], 1e-12);
            case NormVariant::Robust:
                return (s - st[0]) / std::max(st[1], 1e-12);
        }
        return 0.0;
    }

    Triplet normalize(double attr, double struc, double causal) const {
        return Triplet{{normalize(0, attr), normalize(1, struc), normalize(2, causal)}};
    }

    NormVariant variant() const { return variant_; }

    void save(std::ostream& os) const {
        os << "normalizer " << to_string(variant_) << "\n";
        char buf[32];
        for (int view = 0; view < kViewCount; ++view) {
            os << "view " << view << ' ' << stats_[view].size() << "\n";
            for (std::size_t i = 0; i < stats_[view].size(); ++i) {
                std::snprintf(buf, sizeof buf, "%.17g", stats_[view][i]);
                os << buf << (i + 1 == stats_[view].size() ? '\n' : ' ');
            }
        }
    }

    static Normalizer load(std::istream& is) {
        std::string tok;
        if (!(is >> tok) || tok != "normalizer") throw IoError("bad normalizer header");
        is >> tok;
        Normalizer n;
        n.variant_ = parse_norm_variant(tok);
        for (int view = 0; view < kViewCount; ++view) {
            int idx = 0;
            std::size_t count = 0;
            if (!(is >> tok >> idx >> count) || tok != "view" || idx != view)
                throw IoError("bad normalizer view block");
            n.stats_[view].resize(count);
            for (double& x : n.stats_[view])
                if (!(is >> x)) throw IoError("truncated normalizer stats");
        }
        return n;
    }

private:
    static double quantile(const std::vector<double>& sorted, double q) {
        if (sorted.size() == 1) return sorted[0];
        const double pos = q * static_cast<double>(sorted.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
        const double frac = pos - static_cast<double>(lo);
        return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
    }

    NormVariant variant_ = NormVariant::Percentile;
    std::array<std::vector<double>, kViewCount> stats_;
};

// Softmax-weighted average of the top-k scores with weighting coefficient
// alpha: w_i = e^{alpha s_i} / sum_j e^{alpha s_j}, fused = sum_i w_i s_i.
// The result always lies within [min, max] of the selected scores.
inline double fuse_topk(std::span<const double> scores, double alpha, int k) {
    if (k < 1 || k > static_cast<int>(scores.size())) throw ConfigError("fuse_topk: bad k");
    std::vector<double> top(scores.begin(), scores.end());
    std::partial_sort(top.begin(), top.begin() + k, top.end(), std::greater<double>());
    const double mx = top[0];
    double denom = 0.0, num = 0.0;
    for (int i = 0; i < k; ++i) {
        const double w = std::exp(alpha * (top[i] - mx));
        denom += w;
        num += w * top[i];
    }
    return num / denom;
}

// The seven anomaly dimensions: three single-view scores, the top-2 sum and
// its softmax-weighted variant, the all-view sum and its weighted variant.
inline std::array<double, kDetectorCount> dimension_scores(const Triplet& t, double alpha) {
    std::array<double, kDetectorCount> d{};
    d[0] = t[0];
    d[1] = t[1];
    d[2] = t[2];
    std::array<double, kViewCount> sorted = t.s;
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    d[3] = sorted[0] + sorted[1];
    d[4] = fuse_topk(t.s, alpha, 2);
    d[5] = t[0] + t[1] + t[2];
    d[6] = fuse_topk(t.s, alpha, 3);
    return d;
}

// Calibrated thresholds tau_1..tau_7 (the maximum benign combined score per
// dimension) plus the fusion coefficient and vote threshold. The same alpha
// must be used at calibration and inference.
struct DetectorBank {
    std::array<double, kDetectorCount> tau{};
    double alpha = 5.0;
    int t_v = 4;
    bool strict = false;  // flag on score > tau instead of >= tau

    void save(std::ostream& os) const {
        char buf[32];
        os << "bank";
        for (double t : tau) {
            std::snprintf(buf, sizeof buf, "%.17g", t);
            os << ' ' << buf;
        }
        std::snprintf(buf, sizeof buf, "%.17g", alpha);
        os << ' ' << buf << ' ' << t_v << ' ' << (strict ? 1 : 0) << "\n";
    }

    static DetectorBank load(std::istream& is) {
        std::string tok;
        if (!(is >> tok) || tok != "bank") throw IoError("bad detector bank header");
        DetectorBank b;
        for (double& t : b.tau)
            if (!(is >> t)) throw IoError("truncated detector bank");
        int strict = 0;
        if (!(is >> b.alpha >> b.t_v >> strict)) throw IoError("truncated detector bank");
        b.strict = strict != 0;
        return b;
    }
};

inline DetectorBank calibrate(std::span<const Triplet> benign, double alpha, int t_v = 4,
                              bool strict = false) {
    if (benign.empty()) throw EmptyBenign("calibrate: no benign triplets");
    if (alpha <= 0.0) throw ConfigError("fusion coefficient alpha must be > 0");
    if (t_v < 1 || t_v > kDetectorCount) throw ConfigError("vote threshold must be in [1, 7]");
    DetectorBank bank;
    bank.alpha = alpha;
    bank.t_v = t_v;
    bank.strict = strict;
    bank.tau.fill(-std::numeric_limits<double>::infinity());
    for (const Triplet& t : benign) {
        const auto d = dimension_scores(t, alpha);
        for (int i = 0; i < kDetectorCount; ++i) bank.tau[i] = std::max(bank.tau[i], d[i]);
    }
    return bank;
}

// Detector bits as a 7-bit mask, D1 in bit 0. `disabled_view` (0..2) zeroes
// that view's normalized score before evaluation, so no detector can fire on
// its evidence; -1 evaluates all views.
inline std::uint8_t evaluate_detectors(const Triplet& t, const DetectorBank& bank,
                                       int disabled_view = -1) {
    Triplet u = t;
    if (disabled_view >= 0 && disabled_view < kViewCount) u[disabled_view] = 0.0;
    const auto d = dimension_scores(u, bank.alpha);
    std::uint8_t bits = 0;
    for (int i = 0; i < kDetectorCount; ++i) {
        const bool fire = bank.strict ? d[i] > bank.tau[i] : d[i] >= bank.tau[i];
        if (fire) bits |= static_cast<std::uint8_t>(1u << i);
    }
    return bits;
}

inline int vote_count(std::uint8_t bits) { return __builtin_popcount(bits); }

inline bool vote(std::uint8_t bits, int t_v) {
    if (t_v < 1 || t_v > kDetectorCount) throw ConfigError("vote threshold must be in [1, 7]");
    return vote_count(bits) >= t_v;
}

// "1011101" with D1 leftmost, matching the analyst-facing trace format.
inline std::string detector_string(std::uint8_t bits) {
    std::string s(kDetectorCount, '0');
    for (int i = 0; i < kDetectorCount; ++i)
        if ((bits >> i) & 1u) s[i] = '1';
    return s;
}

inline std::uint8_t parse_detector_string(std::string_view s) {
    if (s.size() != kDetectorCount) throw IoError("bad detector vector");
    std::uint8_t bits = 0;
    for (int i = 0; i < kDetectorCount; ++i)
        if (s[i] == '1') bits |= static_cast<std::uint8_t>(1u << i);
    return bits;
}

struct AlertRecord {
    std::string node_id;
    Triplet norm;
    std::uint8_t detectors = 0;
    int votes = 0;
    bool verdict = false;
};

inline AlertRecord make_alert(const std::string& node_id, const Triplet& t,
                              const DetectorBank& bank, int disabled_view = -1) {
    AlertRecord a;
    a.node_id = node_id;
    a.norm = t;
    a.detectors = evaluate_detectors(t, bank, disabled_view);
    a.votes = vote_count(a.detectors);
    a.verdict = vote(a.detectors, bank.t_v);
    return a;
}

// Total order for ADP: vote count desc, then max normalized view desc, then
// node id asc as the deterministic final tie-break.
inline void rank_nodes(std::vector<AlertRecord>& records) {
    std::stable_sort(records.begin(), records.end(),
                     [](const AlertRecord& a, const AlertRecord& b) {
                         if (a.votes != b.votes) return a.votes > b.votes;
                         const double ma = a.norm.max_view(), mb = b.norm.max_view();
                         if (ma != mb) return ma > mb;
                         return a.node_id < b.node_id;
                     });
}

// Analyst-facing scoring trace: one record per node, ranked.
inline void write_alerts(std::ostream& os, const std::vector<AlertRecord>& records) {
    os << "provdet-alerts v1\n";
    os << "node_id\ts_attr_norm\ts_struc_norm\ts_causal_norm\td1..d7\tvotes\tverdict\n";
    char buf[32];
    for (const AlertRecord& a : records) {
        os << a.node_id;
        for (int i = 0; i < kViewCount; ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", a.norm[i]);
            os << '\t' << buf;
        }
        os << '\t' << detector_string(a.detectors) << '\t' << a.votes << '\t'
           << (a.verdict ? "malicious" : "benign") << "\n";
    }
}

inline std::vector<AlertRecord> load_alerts(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != "provdet-alerts v1")
        throw IoError("bad alerts header: '" + line + "'");
    if (!std::getline(is, line)) throw IoError("missing alerts column header");
    std::vector<AlertRecord> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::size_t pos = 0;
        while (pos <= line.size()) {
            std::size_t tab = line.find('\t', pos);
            f.push_back(line.substr(pos, tab == std::string::npos ? std::string::npos : tab - pos));
            if (tab == std::string::npos) break;
            pos = tab + 1;
        }
        if (f.size() != 7) throw IoError("bad alert record");
        AlertRecord a;
        a.node_id = f[0];
        for (int i = 0; i < kViewCount; ++i) a.norm[i] = std::stod(f[1 + i]);
        a.detectors = parse_detector_string(f[4]);
        a.votes = std::stoi(f[5]);
        a.verdict = f[6] == "malicious";
        out.push_back(std::move(a));
    }
    return out;
}

}  // namespace provdet
