#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "provdet/error.hpp"
#include "provdet/fusion.hpp"
#include "provdet/synth.hpp"

namespace provdet {

// Pipeline configuration. Defaults reproduce the recommended operating point
// (two encoder layers, hidden 64, mask rate 0.3, learning rate 1e-3, k = 10,
// alpha = 5, vote threshold 4) so a bare run needs no tuning.
struct PipelineConfig {
    // [paths]
    std::string workdir = "work";
    std::string train_log;       // default <workdir>/train.log
    std::string validation_log;  // default <workdir>/validation.log
    std::string test_log;        // default <workdir>/test.log
    std::string labels;          // default <workdir>/labels.tsv

    // [featurize]
    int d_attr = 16;
    int window = 2;
    int negatives = 5;
    int w2v_epochs = 30;

    // [gmae]
    int layers = 2;
    int hidden = 64;
    double mask_rate = 0.3;
    double learning_rate = 1e-3;
    int epochs = 50;

    // [scoring]
    int k = 10;
    int decoder_hidden = 64;
    int decoder_epochs = 100;

    // [fusion]
    double alpha = 5.0;
    int vote_threshold = 4;
    NormVariant normalizer = NormVariant::Percentile;
    bool strict_threshold = false;

    // [synth]
    SynthConfig synth;
    std::vector<AttackScenario> attacks = {AttackScenario{}};

    // [run]
    std::uint64_t seed = 42;

    std::string path(const std::string& explicit_path, const std::string& fallback) const {
        return explicit_path.empty() ? workdir + "/" + fallback : explicit_path;
    }
    std::string train_log_path() const { return path(train_log, "train.log"); }
    std::string validation_log_path() const { return path(validation_log, "validation.log"); }
    std::string test_log_path() const { return path(test_log, "test.log"); }
    std::string labels_path() const { return path(labels, "labels.tsv"); }
};

namespace config_detail {

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("bad boolean for " + key + ": '" + v + "'");
}

// "tag:node_count:knobs" with knobs any subset of the letters a, s, c.
inline AttackScenario parse_attack_spec(const std::string& spec, int index) {
    AttackScenario sc;
    sc.campaign_id = "c" + std::to_string(index + 1);
    std::vector<std::string> parts;
    std::size_t pos = 0;
    while (pos <= spec.size()) {
        std::size_t colon = spec.find(':', pos);
        parts.push_back(
            spec.substr(pos, colon == std::string::npos ? std::string::npos : colon - pos));
        if (colon == std::string::npos) break;
        pos = colon + 1;
    }
    if (parts.empty() || parts[0].empty()) throw ConfigError("empty attack spec");
    sc.tag = parse_scenario(parts[0]);
    if (parts.size() > 1 && !parts[1].empty()) sc.node_count = std::stoi(parts[1]);
    if (parts.size() > 2) {
        sc.knob_attr = parts[2].find('a') != std::string::npos;
        sc.knob_struct = parts[2].find('s') != std::string::npos;
        sc.knob_causal = parts[2].find('c') != std::string::npos;
    }
    return sc;
}

}  // namespace config_detail

// Applies one "section.key=value" assignment.
inline void apply_config_value(PipelineConfig& cfg, const std::string& section,
                               const std::string& key, const std::string& value) {
    using config_detail::parse_attack_spec;
    using config_detail::parse_bool;
    const std::string full = section + "." + key;
    try {
        if (full == "paths.workdir") cfg.workdir = value;
        else if (full == "paths.train_log") cfg.train_log = value;
        else if (full == "paths.validation_log") cfg.validation_log = value;
        else if (full == "paths.test_log") cfg.test_log = value;
        else if (full == "paths.labels") cfg.labels = value;
        else if (full == "featurize.d_attr") cfg.d_attr = std::stoi(value);
        else if (full == "featurize.window") cfg.window = std::stoi(value);
        else if (full == "featurize.negatives") cfg.negatives = std::stoi(value);
        else if (full == "featurize.epochs") cfg.w2v_epochs = std::stoi(value);
        else if (full == "gmae.layers") cfg.layers = std::stoi(value);
        else if (full == "gmae.hidden") cfg.hidden = std::stoi(value);
        else if (full == "gmae.mask_rate") cfg.mask_rate = std::stod(value);
        else if (full == "gmae.learning_rate") cfg.learning_rate = std::stod(value);
        else if (full == "gmae.epochs") cfg.epochs = std::stoi(value);
        else if (full == "scoring.k") cfg.k = std::stoi(value);
        else if (full == "scoring.decoder_hidden") cfg.decoder_hidden = std::stoi(value);
        else if (full == "scoring.decoder_epochs") cfg.decoder_epochs = std::stoi(value);
        else if (full == "fusion.alpha") cfg.alpha = std::stod(value);
        else if (full == "fusion.vote_threshold") cfg.vote_threshold = std::stoi(value);
        else if (full == "fusion.normalizer") cfg.normalizer = parse_norm_variant(value);
        else if (full == "fusion.strict") cfg.strict_threshold = parse_bool(value, full);
        else if (full == "synth.processes") cfg.synth.processes = std::stoi(value);
        else if (full == "synth.files") cfg.synth.files = std::stoi(value);
        else if (full == "synth.netflows") cfg.synth.netflows = std::stoi(value);
        else if (full == "synth.attacks") {
            cfg.attacks.clear();
            std::size_t pos = 0;
            while (pos <= value.size()) {
                std::size_t semi = value.find(';', pos);
                const std::string item = config_detail::trim(value.substr(
                    pos, semi == std::string::npos ? std::string::npos : semi - pos));
                if (!item.empty() && item != "none")
                    cfg.attacks.push_back(
                        parse_attack_spec(item, static_cast<int>(cfg.attacks.size())));
                if (semi == std::string::npos) break;
                pos = semi + 1;
            }
        } else if (full == "run.seed") cfg.seed = std::stoull(value);
        else throw ConfigError("unknown config key '" + full + "'");
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError("bad value for " + full + ": '" + value + "' (" + e.what() + ")");
    }
}

inline PipelineConfig parse_config(std::istream& is) {
    PipelineConfig cfg;
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string t = config_detail::trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[' && t.back() == ']') {
            section = t.substr(1, t.size() - 2);
            continue;
        }
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        apply_config_value(cfg, section, config_detail::trim(t.substr(0, eq)),
                           config_detail::trim(t.substr(eq + 1)));
    }
    // Seed is shared by every stage.
    cfg.synth.seed = cfg.seed;
    return cfg;
}

inline PipelineConfig load_config(const std::string& file) {
    std::ifstream is(file);
    if (!is) throw IoError("cannot open config file '" + file + "'");
    return parse_config(is);
}

// "section.key=value" command-line override.
inline void apply_override(PipelineConfig& cfg, const std::string& assignment) {
    const std::size_t eq = assignment.find('=');
    const std::size_t dotpos = assignment.find('.');
    if (eq == std::string::npos || dotpos == std::string::npos || dotpos > eq)
        throw ConfigError("override must look like section.key=value: '" + assignment + "'");
    apply_config_value(cfg, assignment.substr(0, dotpos),
                       assignment.substr(dotpos + 1, eq - dotpos - 1), assignment.substr(eq + 1));
    if (assignment.rfind("run.seed", 0) == 0) cfg.synth.seed = cfg.seed;
}

}  // namespace provdet
