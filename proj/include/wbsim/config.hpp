#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

// Flat sectioned key-value config files:
//
//   # comment
//   [section]
//   key = value
//
// Unknown sections or keys are rejected against a schema so typos fail loudly
// instead of being ignored.

namespace wbsim {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class Config {
  public:
    static Config parse_file(const std::filesystem::path& p);
    static Config parse_string(const std::string& text, const std::string& origin = "<string>");

    bool has(const std::string& section, const std::string& key) const;
    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key,
                      double fallback) const;
    std::int64_t get_int(const std::string& section, const std::string& key,
                         std::int64_t fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;

    // Throws ConfigError listing every section.key not present in the schema.
    void reject_unknown(const std::map<std::string, std::set<std::string>>& schema) const;

    const std::map<std::pair<std::string, std::string>, std::string>& entries() const {
        return entries_;
    }

  private:
    std::map<std::pair<std::string, std::string>, std::string> entries_;
    std::string origin_;
};

}  // namespace wbsim
