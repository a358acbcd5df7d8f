#pragma once

#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "provdet/error.hpp"
#include "provdet/tensor.hpp"

namespace provdet {

// Parameter checkpoints: a shape manifest followed by flat value dumps.
// Values print with %.17g, which round-trips doubles exactly.
class TensorDump {
public:
    void add(const std::string& name, int rows, int cols, std::span<const double> values) {
        if (static_cast<std::size_t>(rows) * cols != values.size())
            throw ShapeMismatch("tensor dump '" + name + "': shape/value mismatch");
        entries_.push_back({name, rows, cols, {values.begin(), values.end()}});
    }

    void add(const std::string& name, const Matrix& m) { add(name, m.rows, m.cols, m.v); }
    void add(const std::string& name, std::span<const double> v) {
        add(name, 1, static_cast<int>(v.size()), v);
    }

    void save(std::ostream& os) const {
        os << "provdet-params v1\n";
        os << "tensors " << entries_.size() << "\n";
        char buf[32];
        for (const auto& e : entries_) {
            os << e.name << ' ' << e.rows << ' ' << e.cols << "\n";
            for (std::size_t i = 0; i < e.values.size(); ++i) {
                std::snprintf(buf, sizeof buf, "%.17g", e.values[i]);
                os << buf << ((i + 1) % e.cols == 0 ? '\n' : ' ');
            }
        }
    }

    static TensorDump load(std::istream& is) {
        std::string line;
        if (!std::getline(is, line) || line != "provdet-params v1")
            throw IoError("bad params header: '" + line + "'");
        if (!std::getline(is, line) || line.rfind("tensors ", 0) != 0)
            throw IoError("missing tensor count");
        const unsigned long count = std::stoul(line.substr(8));
        TensorDump d;
        for (unsigned long i = 0; i < count; ++i) {
            std::string name;
            int rows = 0, cols = 0;
            if (!(is >> name >> rows >> cols)) throw IoError("truncated tensor manifest");
            Entry e{name, rows, cols, {}};
            e.values.resize(static_cast<std::size_t>(rows) * cols);
            for (double& x : e.values)
                if (!(is >> x)) throw IoError("truncated tensor values for '" + name + "'");
            d.entries_.push_back(std::move(e));
        }
        return d;
    }

    const std::vector<double>& values(const std::string& name) const {
        for (const auto& e : entries_)
            if (e.name == name) return e.values;
        throw IoError("checkpoint has no tensor '" + name + "'");
    }

    Matrix matrix(const std::string& name) const {
        for (const auto& e : entries_) {
            if (e.name != name) continue;
            Matrix m(e.rows, e.cols);
            m.v = e.values;
            return m;
        }
        throw IoError("checkpoint has no tensor '" + name + "'");
    }

    bool has(const std::string& name) const {
        for (const auto& e : entries_)
            if (e.name == name) return true;
        return false;
    }

private:
    struct Entry {
        std::string name;
        int rows, cols;
        std::vector<double> values;
    };
    std::vector<Entry> entries_;
};

}  // namespace provdet
