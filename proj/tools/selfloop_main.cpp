// Command-line runner: make-data, train, pseudo-eval, compare, export-pseudolabels.

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "selfloop/config.hpp"
#include "selfloop/errors.hpp"
#include "selfloop/experiments.hpp"

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kConfig = 2, kNumeric = 3, kIo = 4 };

struct Common {
    std::string config_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    bool deterministic = false;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config_path, "flat key = value config file");
    cmd->add_option("--out", c.out_dir, "output directory")->capture_default_str();
    cmd->add_option("--seed", c.seed, "master seed (overrides the config)");
    cmd->add_flag("--deterministic", c.deterministic, "pin the metadata timestamp so reruns are byte-identical");
    cmd->add_option("--set", c.overrides, "key=value override, repeatable");
}

selfloop::RunConfig resolve(const Common& c) {
    selfloop::RunConfig cfg = c.config_path.empty() ? selfloop::RunConfig() : selfloop::RunConfig::load(c.config_path);
    for (const auto& kv : c.overrides) cfg.set_assignment(kv);
    if (c.seed) cfg.set("seed", std::to_string(*c.seed));
    return cfg;
}

selfloop::CommandOptions options(const Common& c) {
    selfloop::CommandOptions o;
    o.out_dir = c.out_dir;
    o.deterministic = c.deterministic;
    o.log = &std::cout;
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"semi-supervised segmentation with self-loop uncertainty pseudo-labels"};
    app.require_subcommand(1);

    Common common;
    std::string checkpoint;
    bool show_keys = false;

    auto* make_data = app.add_subcommand("make-data", "write the synthetic dataset as PNG image/mask pairs");
    auto* train = app.add_subcommand("train", "train one model; writes checkpoint, history.csv, metrics.json");
    auto* pseudo = app.add_subcommand("pseudo-eval", "score pseudo-labels of every estimator on the unlabeled split");
    auto* compare = app.add_subcommand("compare", "train all methods over label fractions and seeds");
    auto* export_cmd = app.add_subcommand("export-pseudolabels", "write pseudo-label PNGs and overlays");
    auto* keys = app.add_subcommand("config-keys", "list config keys with defaults");
    for (auto* cmd : {make_data, train, pseudo, compare, export_cmd}) add_common(cmd, common);
    for (auto* cmd : {pseudo, export_cmd}) cmd->add_option("--checkpoint", checkpoint, "trained checkpoint")->required();
    keys->callback([&] { show_keys = true; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (show_keys) {
            for (const auto& k : selfloop::config_schema())
                std::cout << k.name << " = " << k.default_value << "    # " << k.help << "\n";
            return kOk;
        }
        const selfloop::RunConfig cfg = resolve(common);
        const selfloop::CommandOptions opts = options(common);
        if (*make_data) selfloop::cmd_make_data(cfg, opts);
        else if (*train) selfloop::cmd_train(cfg, opts);
        else if (*pseudo) selfloop::cmd_pseudo_eval(cfg, checkpoint, opts);
        else if (*compare) selfloop::cmd_compare(cfg, opts);
        else if (*export_cmd) selfloop::cmd_export_pseudolabels(cfg, checkpoint, opts);
        return kOk;
    } catch (const selfloop::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfig;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfig;
    } catch (const selfloop::NumericFailure& e) {
        std::fprintf(stderr, "numeric failure: %s\n", e.what());
        return kNumeric;
    } catch (const selfloop::IoError& e) {
        std::fprintf(stderr, "I/O error: %s\n", e.what());
        return kIo;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kUsage;
    }
}
