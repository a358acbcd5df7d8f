#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "provdet/error.hpp"
#include "provdet/rng.hpp"
#include "provdet/tokenize.hpp"

namespace provdet {

struct Word2VecConfig {
    int dim = 16;
    int window = 2;
    int negatives = 5;
    int epochs = 30;
    double lr_start = 0.025;
    double lr_min = 1e-4;
};

// Token embedding table trained with skip-gram negative sampling. Training is
// single-threaded and fully determined by (corpus, config, seed).
//
// Out-of-vocabulary tokens resolve to a deterministic pseudo-random unit
// vector keyed by (token, seed): unseen attribute text is exactly the signal
// the attribute view scores, so it must map somewhere stable.
class EmbeddingTable {
public:
    EmbeddingTable() = default;

    static EmbeddingTable train(const std::vector<std::vector<std::string>>& corpus,
                                const Word2VecConfig& cfg, std::uint64_t seed) {
        if (cfg.dim < 2) throw ConfigError("d_attr must be >= 2");
        if (cfg.window < 1) throw ConfigError("window must be >= 1");

        // Sorted vocabulary with corpus frequencies.
        std::map<std::string, std::int64_t> freq;
        for (const auto& seq : corpus)
            for (const auto& tok : seq) ++freq[tok];
        if (freq.empty()) throw EmptyCorpus("embedding corpus has no tokens");

        EmbeddingTable table;
        table.dim_ = cfg.dim;
        table.seed_ = seed;
        table.vocab_.reserve(freq.size());
        std::vector<double> counts;
        for (const auto& [tok, n] : freq) {
            table.index_[tok] = static_cast<int>(table.vocab_.size());
            table.vocab_.push_back(tok);
            counts.push_back(static_cast<double>(n));
        }
        const int v = static_cast<int>(table.vocab_.size());
        const int d = cfg.dim;

        Rng rng(seed);
        table.vectors_.resize(static_cast<std::size_t>(v) * d);
        for (double& x : table.vectors_) x = (rng.uniform() - 0.5) / d;
        std::vector<double> ctx(static_cast<std::size_t>(v) * d, 0.0);

        // Cumulative unigram^0.75 table for negative sampling.
        std::vector<double> cum(v);
        double total = 0.0;
        for (int i = 0; i < v; ++i) {
            total += std::pow(counts[i], 0.75);
            cum[i] = total;
        }
        auto sample_negative = [&] {
            double r = rng.uniform() * total;
            return static_cast<int>(std::lower_bound(cum.begin(), cum.end(), r) - cum.begin());
        };

        // Indexed corpus.
        std::vector<std::vector<int>> seqs;
        seqs.reserve(corpus.size());
        for (const auto& seq : corpus) {
            if (seq.empty()) continue;
            std::vector<int> ids;
            ids.reserve(seq.size());
            for (const auto& tok : seq) ids.push_back(table.index_.at(tok));
            seqs.push_back(std::move(ids));
        }

        std::int64_t pairs_per_epoch = 0;
        for (const auto& s : seqs) {
            const int n = static_cast<int>(s.size());
            for (int i = 0; i < n; ++i)
                pairs_per_epoch += std::min(n - 1, i + cfg.window) - std::max(0, i - cfg.window);
        }
        const std::int64_t total_pairs = std::max<std::int64_t>(1, pairs_per_epoch * cfg.epochs);

        std::vector<double> accum(d);
        std::int64_t done = 0;
        for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
            for (const auto& s : seqs) {
                const int n = static_cast<int>(s.size());
                for (int i = 0; i < n; ++i) {
                    const int center = s[i];
                    double* vc = &table.vectors_[static_cast<std::size_t>(center) * d];
                    for (int j = std::max(0, i - cfg.window);
                         j <= std::min(n - 1, i + cfg.window); ++j) {
                        if (j == i) continue;
                        const int target = s[j];
                        const double lr =
                            cfg.lr_min + (cfg.lr_start - cfg.lr_min) *
                                             (1.0 - static_cast<double>(done) / total_pairs);
                        std::fill(accum.begin(), accum.end(), 0.0);
                        for (int neg = 0; neg <= cfg.negatives; ++neg) {
                            int out;
                            double label;
                            if (neg == 0) {
                                out = target;
                                label = 1.0;
                            } else {
                                out = sample_negative();
                                if (out == target) continue;
                                label = 0.0;
                            }
                            double* uo = &ctx[static_cast<std::size_t>(out) * d];
                            double z = 0.0;
                            for (int kk = 0; kk < d; ++kk) z += vc[kk] * uo[kk];
                            const double g = (sigmoid(z) - label) * lr;
                            for (int kk = 0; kk < d; ++kk) {
                                accum[kk] += g * uo[kk];
                                uo[kk] -= g * vc[kk];
                            }
                        }
                        for (int kk = 0; kk < d; ++kk) vc[kk] -= accum[kk];
                        ++done;
                    }
                }
            }
        }
        return table;
    }

    int dim() const { return dim_; }
    std::uint64_t seed() const { return seed_; }
    const std::vector<std::string>& vocabulary() const { return vocab_; }

    bool contains(const std::string& token) const { return index_.count(token) != 0; }

    // Writes the token's vector (trained, or the hashed OOV fallback) into out.
    void lookup(const std::string& token, std::span<double> out) const {
        if (static_cast<int>(out.size()) != dim_) throw DimensionMismatch("lookup buffer size");
        auto it = index_.find(token);
        if (it != index_.end()) {
            const double* v = &vectors_[static_cast<std::size_t>(it->second) * dim_];
            std::copy(v, v + dim_, out.begin());
            return;
        }
        std::uint64_t state = fnv1a64(token) ^ (seed_ * 0x9e3779b97f4a7c15ULL + 0x2545f4914f6cdd1dULL);
        double norm2 = 0.0;
        for (int k = 0; k < dim_; ++k) {
            const double x = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53 * 2.0 - 1.0;
            out[k] = x;
            norm2 += x * x;
        }
        const double inv = 1.0 / std::sqrt(norm2 > 0 ? norm2 : 1.0);
        for (int k = 0; k < dim_; ++k) out[k] *= inv;
    }

    // Unweighted mean of token vectors; empty or untokenizable text maps to zero.
    std::vector<double> attribute_vector(const std::string& text) const {
        std::vector<double> mean(dim_, 0.0);
        const auto tokens = tokenize_attribute(text);
        if (tokens.empty()) return mean;
        std::vector<double> buf(dim_);
        for (const auto& tok : tokens) {
            lookup(tok, buf);
            for (int k = 0; k < dim_; ++k) mean[k] += buf[k];
        }
        const double inv = 1.0 / static_cast<double>(tokens.size());
        for (double& x : mean) x *= inv;
        return mean;
    }

    void save(std::ostream& os) const {
        os << "provdet-embeddings v1 dim=" << dim_ << " seed=" << seed_ << "\n";
        char buf[32];
        for (std::size_t i = 0; i < vocab_.size(); ++i) {
            os << vocab_[i];
            for (int k = 0; k < dim_; ++k) {
                std::snprintf(buf, sizeof buf, "%.17g", vectors_[i * dim_ + k]);
                os << (k == 0 ? '\t' : ' ') << buf;
            }
            os << "\n";
        }
    }

    static EmbeddingTable load(std::istream& is) {
        std::string line;
        if (!std::getline(is, line)) throw IoError("empty embedding table");
        EmbeddingTable t;
        unsigned long long seed = 0;
        if (std::sscanf(line.c_str(), "provdet-embeddings v1 dim=%d seed=%llu", &t.dim_, &seed) !=
            2)
            throw IoError("bad embedding table header: '" + line + "'");
        t.seed_ = seed;
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            std::size_t tab = line.find('\t');
            if (tab == std::string::npos) throw IoError("bad embedding row");
            t.index_[line.substr(0, tab)] = static_cast<int>(t.vocab_.size());
            t.vocab_.push_back(line.substr(0, tab));
            const char* p = line.c_str() + tab + 1;
            for (int k = 0; k < t.dim_; ++k) {
                char* end = nullptr;
                t.vectors_.push_back(std::strtod(p, &end));
                if (end == p) throw IoError("bad embedding value");
                p = end;
            }
        }
        return t;
    }

private:
    static double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

    int dim_ = 0;
    std::uint64_t seed_ = 0;
    std::vector<std::string> vocab_;
    std::vector<double> vectors_;
    std::unordered_map<std::string, int> index_;
};

}  // namespace provdet
