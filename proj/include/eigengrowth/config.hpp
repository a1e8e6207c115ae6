#pragma once

#include <cctype>
#include <cstdlib>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "eigengrowth/utils.hpp"

// Flat key-value run configuration with [section] blocks. Parsing is strict:
// unknown syntax reports the offending line; typed getters report the key.
// Serialization is canonical (sections and keys in first-appearance order,
// single spacing), so configs round-trip identically and hash stably.

namespace eigengrowth::config {

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

class RunConfig {
  public:
    RunConfig() = default;

    static RunConfig parse(const std::string& text) {
        RunConfig c;
        std::istringstream in(text);
        std::string line;
        std::string section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            std::string s = strip(line);
            if (s.empty() || s[0] == '#') continue;
            if (s.front() == '[') {
                if (s.back() != ']')
                    throw ConfigError("config parse error at line " +
                                      std::to_string(lineno) + ": unterminated section");
                section = strip(s.substr(1, s.size() - 2));
                if (section.empty())
                    throw ConfigError("config parse error at line " +
                                      std::to_string(lineno) + ": empty section name");
                continue;
            }
            auto eq = s.find('=');
            if (eq == std::string::npos)
                throw ConfigError("config parse error at line " + std::to_string(lineno) +
                                  ": expected key = value");
            std::string key = strip(s.substr(0, eq));
            std::string value = strip(s.substr(eq + 1));
            if (key.empty())
                throw ConfigError("config parse error at line " + std::to_string(lineno) +
                                  ": empty key");
            c.set(section, key, value);
        }
        return c;
    }

    void set(const std::string& section, const std::string& key, const std::string& value) {
        std::string full = section.empty() ? key : section + "." + key;
        auto it = index_.find(full);
        if (it == index_.end()) {
            index_[full] = entries_.size();
            entries_.push_back({section, key, value});
        } else {
            entries_[it->second].value = value;
        }
    }

    bool has(const std::string& full_key) const { return index_.count(full_key) > 0; }

    std::string get_string(const std::string& full_key) const {
        auto it = index_.find(full_key);
        if (it == index_.end()) throw ConfigError("missing config key: " + full_key);
        return entries_[it->second].value;
    }
    std::string get_string(const std::string& k, const std::string& dflt) const {
        return has(k) ? get_string(k) : dflt;
    }

    double get_double(const std::string& k) const {
        const std::string v = get_string(k);
        char* end = nullptr;
        double d = std::strtod(v.c_str(), &end);
        if (end == v.c_str() || *end != '\0')
            throw ConfigError("config key " + k + ": expected a number, got '" + v + "'");
        return d;
    }
    double get_double(const std::string& k, double dflt) const {
        return has(k) ? get_double(k) : dflt;
    }

    long get_int(const std::string& k) const {
        double d = get_double(k);
        long l = static_cast<long>(d);
        if (static_cast<double>(l) != d)
            throw ConfigError("config key " + k + ": expected an integer");
        return l;
    }
    long get_int(const std::string& k, long dflt) const {
        return has(k) ? get_int(k) : dflt;
    }

    bool get_bool(const std::string& k, bool dflt) const {
        if (!has(k)) return dflt;
        std::string v = get_string(k);
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw ConfigError("config key " + k + ": expected a boolean");
    }

    std::vector<double> get_doubles(const std::string& k) const {
        std::string v = get_string(k);
        std::vector<double> out;
        std::string cur;
        auto flush = [&] {
            std::string s = strip(cur);
            cur.clear();
            if (s.empty()) return;
            char* end = nullptr;
            double d = std::strtod(s.c_str(), &end);
            if (end == s.c_str() || *end != '\0')
                throw ConfigError("config key " + k + ": bad list element '" + s + "'");
            out.push_back(d);
        };
        for (char ch : v) {
            if (ch == ',')
                flush();
            else
                cur += ch;
        }
        flush();
        return out;
    }

    std::string serialize() const {
        std::string out;
        // top-level keys first, then sections in first-appearance order
        std::vector<std::string> sections;
        for (const auto& e : entries_)
            if (!e.section.empty()) {
                bool seen = false;
                for (const auto& s : sections) seen = seen || (s == e.section);
                if (!seen) sections.push_back(e.section);
            }
        for (const auto& e : entries_)
            if (e.section.empty()) out += e.key + " = " + e.value + "\n";
        for (const auto& s : sections) {
            out += "[" + s + "]\n";
            for (const auto& e : entries_)
                if (e.section == s) out += e.key + " = " + e.value + "\n";
        }
        return out;
    }

    std::uint64_t hash() const { return utils::fnv1a(serialize()); }

    bool operator==(const RunConfig& o) const { return serialize() == o.serialize(); }

    // keys of one section, in order
    std::vector<std::pair<std::string, std::string>> section_items(
        const std::string& section) const {
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& e : entries_)
            if (e.section == section) out.emplace_back(e.key, e.value);
        return out;
    }
    std::vector<std::string> sections() const {
        std::vector<std::string> out;
        for (const auto& e : entries_)
            if (!e.section.empty()) {
                bool seen = false;
                for (const auto& s : out) seen = seen || (s == e.section);
                if (!seen) out.push_back(e.section);
            }
        return out;
    }

  private:
    struct Entry {
        std::string section, key, value;
    };

    static std::string strip(const std::string& s) {
        std::size_t a = 0, b = s.size();
        while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
        while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
        return s.substr(a, b - a);
    }

    std::vector<Entry> entries_;
    std::map<std::string, std::size_t> index_;
};

}  // namespace eigengrowth::config
