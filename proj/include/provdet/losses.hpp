#pragma once

#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "provdet/error.hpp"
#include "provdet/types.hpp"

namespace provdet {

// Per-class weighted binary cross-entropy on logits, in the stabilized
// log-sum-exp form. Returns the summed loss; grad (if given) receives
// dL/dlogits. A weight of 0 masks the class out entirely.
inline double weighted_bce(std::span<const double> logits, std::span<const double> targets,
                           std::span<const double> weights, std::span<double> grad = {}) {
    if (logits.size() != targets.size() || logits.size() != weights.size())
        throw DimensionMismatch("weighted_bce: mismatched sizes");
    if (!grad.empty() && grad.size() != logits.size())
        throw DimensionMismatch("weighted_bce: bad gradient size");
    double loss = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double z = logits[i], y = targets[i], w = weights[i];
        // -y log σ(z) - (1-y) log(1-σ(z)) = max(z,0) - z y + log(1 + e^{-|z|})
        loss += w * (std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z))));
        if (!grad.empty()) grad[i] = w * (1.0 / (1.0 + std::exp(-z)) - y);
    }
    return loss;
}

// w_i = sqrt((N - n_i) / n_i) over the count n_i of edges containing class i.
// Classes absent from the data are excluded (weight 0); present classes get a
// numerical floor so the formula's zero at n_i = N cannot silence them.
inline std::array<double, kEventTypeCount> class_weights(const std::vector<EventSet>& edges) {
    if (edges.empty()) throw DegenerateGraph("class_weights: no edges");
    const double n_total = static_cast<double>(edges.size());
    std::array<double, kEventTypeCount> w{};
    for (int i = 0; i < kEventTypeCount; ++i) {
        std::int64_t n_i = 0;
        for (const EventSet& e : edges)
            if (e.contains(static_cast<EventType>(i))) ++n_i;
        if (n_i == 0) {
            w[i] = 0.0;
            continue;
        }
        w[i] = std::max(std::sqrt((n_total - static_cast<double>(n_i)) / static_cast<double>(n_i)),
                        1e-3);
    }
    return w;
}

// 1 - cos(reconstruction, target); grad (if given) receives d/d(reconstruction).
// Norms carry a 1e-12 guard: masked reconstruction can transiently emit
// near-zero vectors.
inline double cosine_loss(std::span<const double> recon, std::span<const double> target,
                          std::span<double> grad = {}) {
    if (recon.size() != target.size()) throw DimensionMismatch("cosine_loss: mismatched sizes");
    double rr = 0.0, tt = 0.0, rt = 0.0;
    for (std::size_t i = 0; i < recon.size(); ++i) {
        rr += recon[i] * recon[i];
        tt += target[i] * target[i];
        rt += recon[i] * target[i];
    }
    const double nr = std::sqrt(rr) + 1e-12;
    const double nt = std::sqrt(tt) + 1e-12;
    const double cos = rt / (nr * nt);
    if (!grad.empty()) {
        // d cos / d r = t/(nr nt) - cos * r / nr^2 ; loss = 1 - cos
        for (std::size_t i = 0; i < recon.size(); ++i)
            grad[i] = -(target[i] / (nr * nt) - cos * recon[i] / (nr * nr));
    }
    return 1.0 - cos;
}

}  // namespace provdet
