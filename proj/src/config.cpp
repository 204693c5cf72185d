#include "wbsim/config.hpp"

#include <fstream>
#include <sstream>

namespace wbsim {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

Config Config::parse_file(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw ConfigError("cannot open config file: " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str(), p.string());
}

Config Config::parse_string(const std::string& text, const std::string& origin) {
    Config c;
    c.origin_ = origin;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": malformed section");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty section name");
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
        if (section.empty())
            throw ConfigError(origin + ":" + std::to_string(lineno) +
                              ": key outside any [section]");
        auto [it, inserted] = c.entries_.emplace(std::make_pair(section, key), value);
        if (!inserted)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key " +
                              section + "." + key);
    }
    return c;
}

bool Config::has(const std::string& section, const std::string& key) const {
    return entries_.count({section, key}) > 0;
}

std::string Config::get_string(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
    auto it = entries_.find({section, key});
    return it == entries_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
    auto it = entries_.find({section, key});
    if (it == entries_.end()) return fallback;
    try {
        std::size_t pos = 0;
        double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("trailing chars");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(origin_ + ": " + section + "." + key + " is not a number: '" +
                          it->second + "'");
    }
}

std::int64_t Config::get_int(const std::string& section, const std::string& key,
                             std::int64_t fallback) const {
    auto it = entries_.find({section, key});
    if (it == entries_.end()) return fallback;
    try {
        std::size_t pos = 0;
        // accept scientific notation for counts like 1e6
        double v = std::stod(it->second, &pos);
        if (pos != it->second.size() || v != double(std::int64_t(v)))
            throw std::invalid_argument("not an integer");
        return std::int64_t(v);
    } catch (const std::exception&) {
        throw ConfigError(origin_ + ": " + section + "." + key + " is not an integer: '" +
                          it->second + "'");
    }
}

bool Config::get_bool(const std::string& section, const std::string& key,
                      bool fallback) const {
    auto it = entries_.find({section, key});
    if (it == entries_.end()) return fallback;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError(origin_ + ": " + section + "." + key + " is not a boolean: '" + v + "'");
}

void Config::reject_unknown(const std::map<std::string, std::set<std::string>>& schema) const {
    std::string bad;
    for (const auto& [sk, value] : entries_) {
        auto sec = schema.find(sk.first);
        if (sec == schema.end() || sec->second.count(sk.second) == 0) {
            if (!bad.empty()) bad += ", ";
            bad += sk.first + "." + sk.second;
        }
    }
    if (!bad.empty()) throw ConfigError(origin_ + ": unknown config keys: " + bad);
}

}  // namespace wbsim
