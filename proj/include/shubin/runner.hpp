#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace shubin {

// exit codes
inline constexpr int exit_ok = 0;
inline constexpr int exit_config = 2;
inline constexpr int exit_compute = 3;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// INI file flattened to "section.key" -> value
struct Config {
    std::map<std::string, std::string> values;

    bool has(const std::string& key) const { return values.count(key) != 0; }
    std::string text(const std::string& key, const std::string& fallback) const;
    std::string text(const std::string& key) const;
    double number(const std::string& key, double fallback) const;
    double number(const std::string& key) const;
    long long integer(const std::string& key, long long fallback) const;
    std::vector<double> list(const std::string& key, const std::vector<double>& fallback) const;
};

Config parse_config(const std::filesystem::path& p);
Config parse_config_text(const std::string& text);

const std::vector<std::string>& subcommands();

struct RunRequest {
    std::string command;
    std::filesystem::path config;
    std::filesystem::path out;
    int threads = 0;  // 0: hardware concurrency
    std::optional<std::uint64_t> seed;
};

// Runs one subcommand, writing <command>.csv, <command>.summary.json and manifest.json under
// out. Returns exit_ok, exit_config or exit_compute; diagnostics go to log.
int run(const RunRequest& req, std::ostream& log);

}  // namespace shubin
