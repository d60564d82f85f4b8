#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace selfloop {

enum class ValueType { Int, UInt, Real, Bool, String, Choice, RealList, IntList, StringList };

struct ConfigKey {
    std::string name;
    ValueType type;
    std::string default_value;
    std::string help;
    double min = -1e300;  // numeric bounds, inclusive
    double max = 1e300;
    std::vector<std::string> choices;  // Choice and StringList
};

/// Every key the runner understands, with typed defaults.
const std::vector<ConfigKey>& config_schema();

/// Flat key = value run definition. Unknown keys, malformed values and
/// out-of-range numbers raise ConfigError naming the key.
class RunConfig {
public:
    RunConfig();  // all defaults

    static RunConfig parse(std::istream& in, const std::string& origin = "<config>");
    static RunConfig load(const std::filesystem::path& path);

    void set(const std::string& key, const std::string& value);
    /// "key=value"
    void set_assignment(const std::string& assignment);

    const std::string& raw(const std::string& key) const;
    std::int64_t get_int(const std::string& key) const;
    std::uint64_t get_uint(const std::string& key) const;
    double get_real(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    const std::string& get_string(const std::string& key) const;
    std::vector<double> get_real_list(const std::string& key) const;
    std::vector<std::int64_t> get_int_list(const std::string& key) const;
    std::vector<std::string> get_string_list(const std::string& key) const;

    /// All keys with resolved values, sorted, one "key = value" per line.
    void write(std::ostream& out) const;
    void save(const std::filesystem::path& path) const;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;

private:
    std::map<std::string, std::string> values_;
};

}  // namespace selfloop
