#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "eigengrowth/utils.hpp"

// Comma-separated tables: header row, UTF-8, '.' decimal separator. Numbers
// are written in shortest round-trip form so reruns are bit-identical.

namespace eigengrowth::csv {

struct Table {
    std::string name;  // file stem
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add_row(const std::vector<std::string>& row) { rows.push_back(row); }

    std::string serialize() const {
        std::string out;
        for (std::size_t i = 0; i < header.size(); ++i)
            out += header[i] + (i + 1 < header.size() ? "," : "");
        out += "\n";
        for (const auto& r : rows) {
            for (std::size_t i = 0; i < r.size(); ++i)
                out += r[i] + (i + 1 < r.size() ? "," : "");
            out += "\n";
        }
        return out;
    }

    static Table parse(const std::string& name, const std::string& text) {
        Table t;
        t.name = name;
        std::istringstream in(text);
        std::string line;
        bool first = true;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::vector<std::string> cells;
            std::string cur;
            for (char c : line) {
                if (c == ',') {
                    cells.push_back(cur);
                    cur.clear();
                } else if (c != '\r') {
                    cur += c;
                }
            }
            cells.push_back(cur);
            if (first) {
                t.header = cells;
                first = false;
            } else {
                t.rows.push_back(cells);
            }
        }
        return t;
    }

    int column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        throw std::runtime_error("table " + this->name + ": missing column " + name);
    }

    double number(std::size_t row, const std::string& col) const {
        return std::strtod(rows.at(row)[column(col)].c_str(), nullptr);
    }
    std::string text(std::size_t row, const std::string& col) const {
        return rows.at(row)[column(col)];
    }

    std::uint64_t content_hash() const { return utils::fnv1a(serialize()); }
};

inline std::string cell(double v) { return utils::format_double(v); }
inline std::string cell(int v) { return std::to_string(v); }
inline std::string cell(long v) { return std::to_string(v); }
inline std::string cell(bool v) { return v ? "1" : "0"; }
inline std::string cell(const std::string& v) { return v; }

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace eigengrowth::csv
