#include "selfloop/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "selfloop/errors.hpp"

namespace selfloop {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

bool parse_int(const std::string& s, std::int64_t& v) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    return ec == std::errc() && p == s.data() + s.size();
}

bool parse_uint(const std::string& s, std::uint64_t& v) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    return ec == std::errc() && p == s.data() + s.size();
}

bool parse_real(const std::string& s, double& v) {
    try {
        std::size_t used = 0;
        v = std::stod(s, &used);
        return used == s.size();
    } catch (const std::exception&) {
        return false;
    }
}

bool parse_bool(const std::string& s, bool& v) {
    if (s == "true" || s == "1" || s == "yes") return v = true, true;
    if (s == "false" || s == "0" || s == "no") return v = false, true;
    return false;
}

const ConfigKey& lookup(const std::string& key) {
    const auto& schema = config_schema();
    auto it = std::find_if(schema.begin(), schema.end(), [&](const ConfigKey& k) { return k.name == key; });
    if (it == schema.end()) throw ConfigError("unknown config key '" + key + "'");
    return *it;
}

std::string bad(const ConfigKey& k, const std::string& v, const std::string& why) {
    return "config key '" + k.name + "': value '" + v + "' " + why;
}

void check_range(const ConfigKey& k, const std::string& v, double x) {
    if (x < k.min || x > k.max) {
        std::ostringstream r;
        r << "outside [" << k.min << ", " << k.max << "]";
        throw ConfigError(bad(k, v, r.str()));
    }
}

void validate(const ConfigKey& k, const std::string& v) {
    switch (k.type) {
        case ValueType::Int: {
            std::int64_t x;
            if (!parse_int(v, x)) throw ConfigError(bad(k, v, "is not an integer"));
            check_range(k, v, static_cast<double>(x));
            break;
        }
        case ValueType::UInt: {
            std::uint64_t x;
            if (!parse_uint(v, x)) throw ConfigError(bad(k, v, "is not a non-negative integer"));
            break;
        }
        case ValueType::Real: {
            double x;
            if (!parse_real(v, x)) throw ConfigError(bad(k, v, "is not a number"));
            check_range(k, v, x);
            break;
        }
        case ValueType::Bool: {
            bool b;
            if (!parse_bool(v, b)) throw ConfigError(bad(k, v, "is not a boolean"));
            break;
        }
        case ValueType::String: break;
        case ValueType::Choice:
            if (std::find(k.choices.begin(), k.choices.end(), v) == k.choices.end())
                throw ConfigError(bad(k, v, "is not one of the allowed choices"));
            break;
        case ValueType::RealList:
            for (const auto& item : split_list(v)) {
                double x;
                if (!parse_real(item, x)) throw ConfigError(bad(k, v, "contains a non-number"));
                check_range(k, v, x);
            }
            if (split_list(v).empty()) throw ConfigError(bad(k, v, "is an empty list"));
            break;
        case ValueType::IntList:
            for (const auto& item : split_list(v)) {
                std::int64_t x;
                if (!parse_int(item, x)) throw ConfigError(bad(k, v, "contains a non-integer"));
                check_range(k, v, static_cast<double>(x));
            }
            if (split_list(v).empty()) throw ConfigError(bad(k, v, "is an empty list"));
            break;
        case ValueType::StringList:
            for (const auto& item : split_list(v))
                if (!k.choices.empty() && std::find(k.choices.begin(), k.choices.end(), item) == k.choices.end())
                    throw ConfigError(bad(k, v, "contains unknown item '" + item + "'"));
            if (split_list(v).empty()) throw ConfigError(bad(k, v, "is an empty list"));
            break;
    }
}

ConfigKey key(std::string name, ValueType type, std::string def, std::string help, double lo = -1e300,
              double hi = 1e300, std::vector<std::string> choices = {}) {
    return {std::move(name), type, std::move(def), std::move(help), lo, hi, std::move(choices)};
}

}  // namespace

const std::vector<ConfigKey>& config_schema() {
    using T = ValueType;
    static const std::vector<ConfigKey> schema = {
        key("seed", T::UInt, "0", "master seed"),

        key("data.source", T::Choice, "synthetic", "synthetic or directory", -1e300, 1e300, {"synthetic", "directory"}),
        key("data.seed", T::UInt, "0", "synthetic dataset seed, independent of the run seed"),
        key("data.train_dir", T::String, "", "training directory (images/, masks/) for source=directory"),
        key("data.test_dir", T::String, "", "test directory; empty means split off data.test_fraction"),
        key("data.train_count", T::Int, "40", "synthetic training images", 1, 1e9),
        key("data.test_count", T::Int, "14", "synthetic test images", 1, 1e9),
        key("data.size", T::Int, "48", "image side in pixels", 8, 4096),
        key("data.blobs_min", T::Int, "3", "synthetic blobs per image, lower bound", 0, 1000),
        key("data.blobs_max", T::Int, "8", "synthetic blobs per image, upper bound", 0, 1000),
        key("data.radius_min", T::Real, "3.0", "synthetic blob semi-axis lower bound", 0.5, 1e6),
        key("data.radius_max", T::Real, "6.5", "synthetic blob semi-axis upper bound", 0.5, 1e6),
        key("data.contrast_min", T::Real, "0.35", "synthetic blob contrast lower bound", 0, 1),
        key("data.contrast_max", T::Real, "0.9", "synthetic blob contrast upper bound", 0, 1),
        key("data.texture", T::Real, "0.12", "synthetic background texture amplitude", 0, 10),
        key("data.noise_level", T::Real, "0.08", "synthetic additive Gaussian noise sigma", 0, 10),
        key("data.label_fraction", T::Real, "0.2", "fraction of the training set that keeps its labels", 1e-9, 1),
        key("data.test_fraction", T::Real, "0", "fraction split off for testing when no test set is given", 0, 0.99),

        key("net.base_width", T::Int, "8", "channels at the first stage", 4, 1024),
        key("net.depth", T::Int, "3", "number of down/up stages", 2, 8),
        key("net.dropout_rate", T::Real, "0.2", "dropout rate in stochastic mode", 0, 0.999),

        key("jigsaw.grid", T::Int, "3", "tiles per side", 2, 16),
        key("jigsaw.k", T::Int, "100", "permutation classes K", 2, 100000),
        key("jigsaw.max_candidates", T::Int, "1000000", "candidate pool size limit", 2, 1e9),

        key("selfloop.q", T::Int, "10", "self-loop iterations Q", 2, 100000),
        key("selfloop.step_size", T::Real, "0.001", "encoder step size inside the self-loop", 0, 1e6),
        key("selfloop.zero_rotations", T::Bool, "false", "disable per-tile rotations"),
        key("selfloop.unlabeled_ss_in_joint", T::Bool, "false", "also add unlabeled L_SS to the joint step"),

        key("train.estimator", T::Choice, "selfloop", "pseudo-label source", -1e300, 1e300,
         {"selfloop", "softmax", "mc_dropout", "ensemble", "none"}),
        key("train.n_labeled", T::Int, "2", "labeled images per batch (N)", 1, 1e6),
        key("train.m_unlabeled", T::Int, "4", "unlabeled images per batch (M)", 0, 1e6),
        key("train.th", T::Real, "0.5", "L_UG mask threshold", 1e-9, 1 - 1e-9),
        key("train.lr", T::Real, "0.001", "outer optimizer learning rate", 1e-12, 10),
        key("train.epochs", T::Int, "60", "training epochs", 0, 1e6),
        key("train.warmup_epochs", T::Int, "0", "supervised-only epochs before unlabeled terms", 0, 1e6),
        key("train.labeled_ss", T::Bool, "true", "labeled L_SS term in the joint step (self-loop only)"),

        key("baseline.mc_passes", T::Int, "10", "MC dropout forward passes", 1, 1e6),
        key("baseline.mc_rate", T::Real, "0.2", "MC dropout rate", 0, 0.999),
        key("baseline.ensemble_size", T::Int, "10", "ensemble members", 1, 1000),

        key("eval.threshold", T::Real, "0.5", "binarization threshold for F1", 1e-9, 1 - 1e-9),

        key("pseudo_eval.q_values", T::IntList, "3,6,10", "self-loop Q columns", 2, 100000),
        key("pseudo_eval.batch", T::Int, "4", "images per self-loop batch during evaluation", 1, 1e6),

        key("compare.methods", T::StringList, "fully_supervised,softmax,mc_dropout,ensemble,selfloop_wo_ss,selfloop",
         "methods to train", -1e300, 1e300,
         {"fully_supervised", "softmax", "mc_dropout", "ensemble", "selfloop_wo_ss", "selfloop"}),
        key("compare.fractions", T::RealList, "0.2,0.5,1.0", "label fractions", 1e-9, 1),
        key("compare.seeds", T::Int, "3", "seeds per cell", 1, 1000),

        key("export.estimator", T::Choice, "selfloop", "pseudo-label source for export", -1e300, 1e300,
         {"selfloop", "softmax", "mc_dropout", "ensemble"}),
    };
    return schema;
}

RunConfig::RunConfig() {
    for (const auto& k : config_schema()) values_[k.name] = k.default_value;
}

RunConfig RunConfig::parse(std::istream& in, const std::string& origin) {
    RunConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
        cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    return parse(in, path.string());
}

void RunConfig::set(const std::string& key, const std::string& value) {
    const auto& k = lookup(key);
    validate(k, value);
    values_[key] = value;
}

void RunConfig::set_assignment(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + assignment + "'");
    set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

const std::string& RunConfig::raw(const std::string& key) const {
    lookup(key);
    return values_.at(key);
}

std::int64_t RunConfig::get_int(const std::string& key) const {
    std::int64_t v = 0;
    parse_int(raw(key), v);
    return v;
}

std::uint64_t RunConfig::get_uint(const std::string& key) const {
    std::uint64_t v = 0;
    parse_uint(raw(key), v);
    return v;
}

double RunConfig::get_real(const std::string& key) const {
    double v = 0;
    parse_real(raw(key), v);
    return v;
}

bool RunConfig::get_bool(const std::string& key) const {
    bool v = false;
    parse_bool(raw(key), v);
    return v;
}

const std::string& RunConfig::get_string(const std::string& key) const { return raw(key); }

std::vector<double> RunConfig::get_real_list(const std::string& key) const {
    std::vector<double> out;
    for (const auto& s : split_list(raw(key))) {
        double v = 0;
        parse_real(s, v);
        out.push_back(v);
    }
    return out;
}

std::vector<std::int64_t> RunConfig::get_int_list(const std::string& key) const {
    std::vector<std::int64_t> out;
    for (const auto& s : split_list(raw(key))) {
        std::int64_t v = 0;
        parse_int(s, v);
        out.push_back(v);
    }
    return out;
}

std::vector<std::string> RunConfig::get_string_list(const std::string& key) const { return split_list(raw(key)); }

void RunConfig::write(std::ostream& out) const {
    for (const auto& [k, v] : values_) out << k << " = " << v << "\n";
}

void RunConfig::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    write(out);
}

}  // namespace selfloop
