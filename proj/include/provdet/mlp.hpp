#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "provdet/error.hpp"
#include "provdet/rng.hpp"
#include "provdet/tensor.hpp"

namespace provdet {

// Fully-connected net: tanh on hidden layers, identity on the output layer.
// Forward caches layer activations; backward consumes them and produces
// parameter gradients plus the gradient w.r.t. the input.
struct Mlp {
    std::vector<Matrix> w;               // layer l: sizes[l+1] x sizes[l]
    std::vector<std::vector<double>> b;  // layer l: sizes[l+1]

    struct Cache {
        std::vector<std::vector<double>> act;  // act[0] = input, act[L] = output
    };

    struct Grads {
        std::vector<Matrix> w;
        std::vector<std::vector<double>> b;
        std::vector<double> input;
    };

    static Mlp init(const std::vector<int>& sizes, Rng& rng) {
        Mlp m;
        for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
            Matrix wl(sizes[l + 1], sizes[l]);
            init_uniform(wl, sizes[l], sizes[l + 1], rng);
            m.w.push_back(std::move(wl));
            m.b.emplace_back(sizes[l + 1], 0.0);
        }
        return m;
    }

    int layer_count() const { return static_cast<int>(w.size()); }
    int input_dim() const { return w.front().cols; }
    int output_dim() const { return w.back().rows; }

    std::vector<double> forward(std::span<const double> input, Cache* cache = nullptr) const {
        if (static_cast<int>(input.size()) != input_dim())
            throw ShapeMismatch("mlp input width " + std::to_string(input.size()) + " != " +
                                std::to_string(input_dim()));
        std::vector<double> cur(input.begin(), input.end());
        if (cache) {
            cache->act.clear();
            cache->act.push_back(cur);
        }
        for (int l = 0; l < layer_count(); ++l) {
            std::vector<double> next(w[l].rows);
            matvec(w[l], cur, next);
            for (int i = 0; i < w[l].rows; ++i) next[i] += b[l][i];
            if (l + 1 < layer_count())
                for (double& x : next) x = std::tanh(x);
            cur = std::move(next);
            if (cache) cache->act.push_back(cur);
        }
        return cur;
    }

    // upstream is dL/d(output). Cached activations must come from forward().
    Grads backward(const Cache& cache, std::span<const double> upstream) const {
        if (cache.act.size() != static_cast<std::size_t>(layer_count()) + 1)
            throw ShapeMismatch("mlp backward without forward cache");
        Grads g;
        g.w.reserve(w.size());
        g.b.reserve(b.size());
        for (int l = 0; l < layer_count(); ++l) {
            g.w.emplace_back(w[l].rows, w[l].cols);
            g.b.emplace_back(w[l].rows, 0.0);
        }
        std::vector<double> delta(upstream.begin(), upstream.end());
        for (int l = layer_count() - 1; l >= 0; --l) {
            // delta is dL/d(pre-activation) of layer l; output layer is identity,
            // hidden layers fold the tanh derivative via the cached activation.
            if (l != layer_count() - 1)
                for (std::size_t i = 0; i < delta.size(); ++i)
                    delta[i] *= 1.0 - cache.act[l + 1][i] * cache.act[l + 1][i];
            outer_add(g.w[l], delta, cache.act[l]);
            for (std::size_t i = 0; i < delta.size(); ++i) g.b[l][i] += delta[i];
            std::vector<double> prev(w[l].cols, 0.0);
            matvec_transpose_add(w[l], delta, prev);
            delta = std::move(prev);
        }
        g.input = std::move(delta);
        return g;
    }

    // Accumulating variant used by batch training loops.
    void backward_accumulate(const Cache& cache, std::span<const double> upstream, Grads& acc,
                             std::vector<double>* input_grad = nullptr) const {
        Grads g = backward(cache, upstream);
        for (int l = 0; l < layer_count(); ++l) {
            for (std::size_t i = 0; i < g.w[l].v.size(); ++i) acc.w[l].v[i] += g.w[l].v[i];
            for (std::size_t i = 0; i < g.b[l].size(); ++i) acc.b[l][i] += g.b[l][i];
        }
        if (input_grad)
            for (std::size_t i = 0; i < g.input.size(); ++i) (*input_grad)[i] += g.input[i];
    }

    Grads zero_grads() const {
        Grads g;
        for (int l = 0; l < layer_count(); ++l) {
            g.w.emplace_back(w[l].rows, w[l].cols);
            g.b.emplace_back(w[l].rows, 0.0);
        }
        g.input.clear();
        return g;
    }

    std::size_t param_count() const {
        std::size_t n = 0;
        for (int l = 0; l < layer_count(); ++l) n += w[l].v.size() + b[l].size();
        return n;
    }

    void pack(std::vector<double>& out) const {
        for (int l = 0; l < layer_count(); ++l) {
            out.insert(out.end(), w[l].v.begin(), w[l].v.end());
            out.insert(out.end(), b[l].begin(), b[l].end());
        }
    }

    std::size_t unpack(std::span<const double> in, std::size_t pos = 0) {
        for (int l = 0; l < layer_count(); ++l) {
            std::copy(in.begin() + pos, in.begin() + pos + w[l].v.size(), w[l].v.begin());
            pos += w[l].v.size();
            std::copy(in.begin() + pos, in.begin() + pos + b[l].size(), b[l].begin());
            pos += b[l].size();
        }
        return pos;
    }
};

}  // namespace provdet
