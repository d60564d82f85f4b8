#include "selfloop/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "selfloop/errors.hpp"
#include "selfloop/image_io.hpp"
#include "selfloop/metrics.hpp"
#include "selfloop/plot.hpp"
#include "selfloop/rng.hpp"

namespace selfloop {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

int lcm_int(int a, int b) { return a / std::gcd(a, b) * b; }

std::string timestamp(bool deterministic) {
    if (deterministic) return "1970-01-01T00:00:00Z";
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json metadata(const std::string& command, const CommandOptions& opts) {
    return {{"command", command}, {"created", timestamp(opts.deterministic)}};
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json to_json(const EvalResult& r) {
    json per = json::array();
    for (const auto& s : r.per_image) per.push_back({{"id", s.id}, {"f1", s.f1}, {"balanced_accuracy", s.balanced_accuracy}});
    return {{"mean_f1", r.mean_f1}, {"balanced_accuracy", r.balanced_accuracy}, {"per_image", per}};
}

void check_geometry(const RunConfig& cfg) {
    const int size = static_cast<int>(cfg.get_int("data.size"));
    const int grid = static_cast<int>(cfg.get_int("jigsaw.grid"));
    const int depth = static_cast<int>(cfg.get_int("net.depth"));
    const int multiple = lcm_int(grid, 1 << depth);
    if (size % multiple != 0)
        throw ConfigError("config key 'data.size': " + std::to_string(size) + " is not divisible by " +
                          std::to_string(multiple) + " (jigsaw.grid and 2^net.depth)");
    if (cfg.get_int("data.blobs_min") > cfg.get_int("data.blobs_max"))
        throw ConfigError("config key 'data.blobs_min' exceeds data.blobs_max");
    if (cfg.get_real("data.radius_min") > cfg.get_real("data.radius_max"))
        throw ConfigError("config key 'data.radius_min' exceeds data.radius_max");
    if (cfg.get_real("data.contrast_min") > cfg.get_real("data.contrast_max"))
        throw ConfigError("config key 'data.contrast_min' exceeds data.contrast_max");
}

void log_line(const CommandOptions& opts, const std::string& s) {
    if (opts.log != nullptr) *opts.log << s << std::endl;
}

std::string pct(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
    return buf;
}

std::vector<Sample> labeled_only(std::vector<Sample> samples, const fs::path& origin) {
    std::vector<Sample> out;
    for (auto& s : samples) {
        if (s.labeled()) out.push_back(std::move(s));
        else std::fprintf(stderr, "warning: test image %s has no mask, skipped (%s)\n", s.id.c_str(), origin.c_str());
    }
    return out;
}

}  // namespace

NetworkConfig network_config_from(const RunConfig& cfg) {
    NetworkConfig n;
    n.in_channels = 3;
    n.base_width = static_cast<int>(cfg.get_int("net.base_width"));
    n.depth = static_cast<int>(cfg.get_int("net.depth"));
    n.k_classes = static_cast<int>(cfg.get_int("jigsaw.k"));
    n.dropout_rate = cfg.get_real("net.dropout_rate");
    n.seed = cfg.get_uint("seed");
    return n;
}

TrainConfig train_config_from(const RunConfig& cfg) {
    TrainConfig t;
    t.n_labeled = static_cast<int>(cfg.get_int("train.n_labeled"));
    t.m_unlabeled = static_cast<int>(cfg.get_int("train.m_unlabeled"));
    t.th = cfg.get_real("train.th");
    t.outer_lr = cfg.get_real("train.lr");
    t.epochs = static_cast<int>(cfg.get_int("train.epochs"));
    t.warmup_epochs = static_cast<int>(cfg.get_int("train.warmup_epochs"));
    t.estimator = parse_estimator(cfg.get_string("train.estimator"));
    t.seed = cfg.get_uint("seed");
    t.q = static_cast<int>(cfg.get_int("selfloop.q"));
    t.selfloop_step = cfg.get_real("selfloop.step_size");
    t.zero_rotations = cfg.get_bool("selfloop.zero_rotations");
    t.labeled_ss = cfg.get_bool("train.labeled_ss");
    t.unlabeled_ss_in_joint = cfg.get_bool("selfloop.unlabeled_ss_in_joint");
    t.mc_passes = static_cast<int>(cfg.get_int("baseline.mc_passes"));
    t.mc_rate = cfg.get_real("baseline.mc_rate");
    t.ensemble_size = static_cast<int>(cfg.get_int("baseline.ensemble_size"));
    t.network = network_config_from(cfg);
    check_geometry(cfg);
    try {
        t.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return t;
}

SyntheticParams synthetic_params_from(const RunConfig& cfg, bool test_set) {
    check_geometry(cfg);
    SyntheticParams p;
    p.count = static_cast<int>(cfg.get_int(test_set ? "data.test_count" : "data.train_count"));
    p.size = static_cast<int>(cfg.get_int("data.size"));
    p.channels = 3;
    p.blobs_min = static_cast<int>(cfg.get_int("data.blobs_min"));
    p.blobs_max = static_cast<int>(cfg.get_int("data.blobs_max"));
    p.radius_min = cfg.get_real("data.radius_min");
    p.radius_max = cfg.get_real("data.radius_max");
    p.contrast_min = cfg.get_real("data.contrast_min");
    p.contrast_max = cfg.get_real("data.contrast_max");
    p.texture = cfg.get_real("data.texture");
    p.noise_level = cfg.get_real("data.noise_level");
    p.size_multiple = lcm_int(static_cast<int>(cfg.get_int("jigsaw.grid")), 1 << cfg.get_int("net.depth"));
    p.seed = derive_seed(cfg.get_uint("data.seed"), stream::kSynthetic, test_set ? 1 : 0);
    return p;
}

PermutationSet permutation_set_from(const RunConfig& cfg) {
    try {
        return build_permutation_set(static_cast<int>(cfg.get_int("jigsaw.grid")), static_cast<int>(cfg.get_int("jigsaw.k")),
                                     cfg.get_int("jigsaw.max_candidates"),
                                     derive_seed(cfg.get_uint("seed"), stream::kPermutationSelect));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("jigsaw settings: ") + e.what());
    }
}

SelfLoopConfig selfloop_config_from(const RunConfig& cfg, const PermutationSet& set, int q) {
    SelfLoopConfig s;
    s.q = q;
    s.step_size = cfg.get_real("selfloop.step_size");
    s.perm_set = &set;
    s.seed = derive_seed(cfg.get_uint("seed"), stream::kSelfLoop, 2'000'000);
    s.zero_rotations = cfg.get_bool("selfloop.zero_rotations");
    return s;
}

SplitDataset load_split(const RunConfig& cfg, double label_fraction) {
    const std::uint64_t split_seed = derive_seed(cfg.get_uint("seed"), stream::kSplit);
    if (cfg.get_string("data.source") == "synthetic") {
        SplitDataset split = split_labeled_unlabeled(generate_synthetic_dataset(synthetic_params_from(cfg, false)),
                                                     label_fraction, 0.0, split_seed);
        split.test = generate_synthetic_dataset(synthetic_params_from(cfg, true));
        return split;
    }
    check_geometry(cfg);
    const std::string train_dir = cfg.get_string("data.train_dir");
    if (train_dir.empty()) throw ConfigError("config key 'data.train_dir' is required for data.source=directory");
    const DirectoryLoadOptions load{static_cast<int>(cfg.get_int("data.size")), 3};
    const std::string test_dir = cfg.get_string("data.test_dir");
    const double test_fraction = test_dir.empty() ? cfg.get_real("data.test_fraction") : 0.0;
    SplitDataset split = split_labeled_unlabeled(load_directory_dataset(train_dir, load), label_fraction, test_fraction,
                                                 split_seed);
    if (!test_dir.empty()) split.test = labeled_only(load_directory_dataset(test_dir, load), test_dir);
    return split;
}

MakeDataResult cmd_make_data(const RunConfig& cfg, const CommandOptions& opts) {
    MakeDataResult r;
    const auto train = generate_synthetic_dataset(synthetic_params_from(cfg, false));
    const auto test = generate_synthetic_dataset(synthetic_params_from(cfg, true));
    save_directory_dataset(opts.out_dir / "train", train);
    save_directory_dataset(opts.out_dir / "test", test);
    r.train_images = static_cast<int>(train.size());
    r.test_images = static_cast<int>(test.size());
    r.train_masks = static_cast<int>(std::count_if(train.begin(), train.end(), [](const Sample& s) { return s.labeled(); }));
    r.test_masks = static_cast<int>(std::count_if(test.begin(), test.end(), [](const Sample& s) { return s.labeled(); }));
    cfg.save(opts.out_dir / "config.txt");
    log_line(opts, "train: " + std::to_string(r.train_images) + " images, " + std::to_string(r.train_masks) + " masks");
    log_line(opts, "test: " + std::to_string(r.test_images) + " images, " + std::to_string(r.test_masks) + " masks");
    return r;
}

TrainSummary cmd_train(const RunConfig& cfg, const CommandOptions& opts) {
    const TrainConfig tc = train_config_from(cfg);
    const double fraction = cfg.get_real("data.label_fraction");
    const SplitDataset split = load_split(cfg, fraction);
    const PermutationSet perms = permutation_set_from(cfg);
    ensure_dir(opts.out_dir);
    cfg.save(opts.out_dir / "config.txt");
    save_permutation_set(opts.out_dir / "permutations.txt", perms);

    log_line(opts, "labeled " + std::to_string(split.labeled.size()) + ", unlabeled " +
                       std::to_string(split.unlabeled_count()) + ", test " + std::to_string(split.test.size()) +
                       ", estimator " + to_string(tc.estimator));
    TrainResult result = train(tc, split, perms, [&](const EpochRow& r) {
        char buf[200];
        std::snprintf(buf, sizeof buf, "epoch %3d  l_seg %.4f  l_ug %.4f  l_ss %.4f  masked %.3f  val_f1 %.4f", r.epoch,
                      r.l_seg, r.l_ug, r.l_ss, r.masked_fraction, r.val_f1);
        log_line(opts, buf);
    });

    TrainSummary summary;
    summary.history = result.history;
    if (!split.test.empty()) summary.test = evaluate_model(result.net, split.test, cfg.get_real("eval.threshold"));

    save_checkpoint(opts.out_dir / "checkpoint.bin", result.net);
    save_history_csv(opts.out_dir / "history.csv", result.history);
    json m = {{"metadata", metadata("train", opts)},
              {"estimator", to_string(tc.estimator)},
              {"mode", tc.estimator == Estimator::None ? "fully_supervised" : "semi_supervised"},
              {"label_fraction", fraction},
              {"seed", tc.seed},
              {"epochs", tc.epochs},
              {"labeled", split.labeled.size()},
              {"unlabeled", split.unlabeled_count()},
              {"test", split.test.empty() ? json(nullptr) : to_json(summary.test)}};
    if (!result.history.empty()) {
        const auto& last = result.history.back();
        m["final_epoch"] = {{"l_seg", last.l_seg}, {"l_ug", last.l_ug}, {"l_ss", last.l_ss},
                            {"masked_fraction", last.masked_fraction}};
    }
    write_json(opts.out_dir / "metrics.json", m);
    if (!split.test.empty()) log_line(opts, "test F1 " + pct(summary.test.mean_f1) + "%");
    return summary;
}

std::vector<PseudoEvalRow> run_pseudo_eval(const RunConfig& cfg, const SegNetwork& net, const SplitDataset& split) {
    const TrainConfig tc = train_config_from(cfg);
    const double th = cfg.get_real("eval.threshold");
    const std::uint64_t seed = cfg.get_uint("seed");
    std::vector<PseudoEvalRow> rows;
    auto add = [&](std::string name, Estimator e, int q, const PseudoLabeler& labeler) {
        rows.push_back({std::move(name), e, q, evaluate_pseudo_labels(labeler, split, th)});
    };
    add("oracle", Estimator::None, 0, oracle_labeler(split));
    add("softmax", Estimator::Softmax, 0, softmax_labeler(net));
    add("mc_dropout", Estimator::McDropout, 0,
        mc_dropout_labeler(net, tc.mc_passes, tc.mc_rate, derive_seed(seed, stream::kDropout)));
    const PermutationSet perms = permutation_set_from(cfg);
    const std::vector<SegNetwork> members = train_ensemble(tc, split, perms);
    add("ensemble", Estimator::Ensemble, 0, ensemble_labeler(members));
    const int batch = static_cast<int>(cfg.get_int("pseudo_eval.batch"));
    for (const auto q : cfg.get_int_list("pseudo_eval.q_values")) {
        const int qi = static_cast<int>(q);
        add("SL" + std::to_string(qi), Estimator::SelfLoop, qi,
            selfloop_labeler(net, selfloop_config_from(cfg, perms, qi), batch));
    }
    return rows;
}

std::string format_pseudo_eval_table(const std::vector<PseudoEvalRow>& rows) {
    std::size_t w = 9;
    for (const auto& r : rows) w = std::max(w, r.name.size());
    std::ostringstream out;
    out << std::left << std::setw(static_cast<int>(w)) << "estimator" << std::right << std::setw(10) << "F1 (%)"
        << std::setw(10) << "BA (%)" << "\n";
    for (const auto& r : rows)
        out << std::left << std::setw(static_cast<int>(w)) << r.name << std::right << std::setw(10)
            << pct(r.result.mean_f1) << std::setw(10) << pct(r.result.balanced_accuracy) << "\n";
    return out.str();
}

std::vector<PseudoEvalRow> cmd_pseudo_eval(const RunConfig& cfg, const fs::path& checkpoint,
                                           const CommandOptions& opts) {
    if (!fs::exists(checkpoint)) throw IoError("checkpoint not found: " + checkpoint.string());
    const SegNetwork net = load_checkpoint(checkpoint);
    if (net.config().k_classes != cfg.get_int("jigsaw.k"))
        throw ConfigError("config key 'jigsaw.k' differs from the checkpoint's head size");
    const double fraction = cfg.get_real("data.label_fraction");
    const SplitDataset split = load_split(cfg, fraction);
    if (split.unlabeled_count() == 0) throw ConfigError("pseudo-eval needs unlabeled images; lower data.label_fraction");
    ensure_dir(opts.out_dir);
    cfg.save(opts.out_dir / "config.txt");

    const auto rows = run_pseudo_eval(cfg, net, split);
    json j = {{"metadata", metadata("pseudo-eval", opts)}, {"label_fraction", fraction}, {"rows", json::array()}};
    for (const auto& r : rows) {
        json row = to_json(r.result);
        row["estimator"] = r.name;
        row["label_fraction"] = fraction;
        if (r.q > 0) row["q"] = r.q;
        j["rows"].push_back(std::move(row));
    }
    write_json(opts.out_dir / "pseudo_eval.json", j);
    const std::string table = format_pseudo_eval_table(rows);
    write_text(opts.out_dir / "pseudo_eval.txt", table);
    if (opts.log != nullptr) *opts.log << table;
    return rows;
}

TrainConfig compare_method_config(const RunConfig& cfg, const std::string& method) {
    TrainConfig t = train_config_from(cfg);
    if (method == "fully_supervised") t.estimator = Estimator::None;
    else if (method == "softmax") t.estimator = Estimator::Softmax;
    else if (method == "mc_dropout") t.estimator = Estimator::McDropout;
    else if (method == "ensemble") t.estimator = Estimator::Ensemble;
    else if (method == "selfloop") t.estimator = Estimator::SelfLoop;
    else if (method == "selfloop_wo_ss") {
        t.estimator = Estimator::SelfLoop;
        t.selfloop_step = 0.0;
        t.labeled_ss = false;
        t.unlabeled_ss_in_joint = false;
    } else {
        throw ConfigError("unknown compare method '" + method + "'");
    }
    return t;
}

std::string method_display_name(const std::string& method) {
    static const std::map<std::string, std::string> names = {
        {"fully_supervised", "Fully-supervised"}, {"softmax", "Softmax"},
        {"mc_dropout", "MC dropout"},             {"ensemble", "Ensemble"},
        {"selfloop_wo_ss", "Self-loop w/o L_SS"}, {"selfloop", "Self-loop"}};
    auto it = names.find(method);
    return it == names.end() ? method : it->second;
}

CompareCell run_compare_cell(const RunConfig& cfg, const std::string& method, double label_fraction,
                             std::uint64_t seed, const PermutationSet& perm_set) {
    RunConfig run = cfg;
    run.set("seed", std::to_string(seed));
    TrainConfig tc = compare_method_config(run, method);
    const SplitDataset split = load_split(run, label_fraction);
    TrainResult result = train(tc, split, perm_set);
    CompareCell cell{method, label_fraction, seed, {}, std::move(result.history)};
    if (!split.test.empty()) cell.test = evaluate_model(result.net, split.test, cfg.get_real("eval.threshold"));
    return cell;
}

std::vector<CompareCell> cmd_compare(const RunConfig& cfg, const CommandOptions& opts) {
    const auto methods = cfg.get_string_list("compare.methods");
    const auto fractions = cfg.get_real_list("compare.fractions");
    const auto n_seeds = cfg.get_int("compare.seeds");
    const std::uint64_t base = cfg.get_uint("seed");
    ensure_dir(opts.out_dir);
    cfg.save(opts.out_dir / "config.txt");

    std::vector<CompareCell> cells;
    for (std::int64_t s = 0; s < n_seeds; ++s) {
        const std::uint64_t seed = base + static_cast<std::uint64_t>(s);
        RunConfig run = cfg;
        run.set("seed", std::to_string(seed));
        const PermutationSet perms = permutation_set_from(run);
        for (const double f : fractions) {
            for (const auto& m : methods) {
                if (f >= 1.0 && m != "fully_supervised") continue;
                CompareCell cell = run_compare_cell(cfg, m, f, seed, perms);
                log_line(opts, m + " fraction " + pct(f) + "% seed " + std::to_string(seed) + " test F1 " +
                                   pct(cell.test.mean_f1) + "%");
                cells.push_back(std::move(cell));
            }
        }
    }

    // mean and sample sd per (method, fraction)
    json summary = json::array();
    std::vector<std::vector<double>> means(methods.size(), std::vector<double>(fractions.size(), NAN));
    std::vector<std::vector<double>> sds = means;
    std::vector<std::string> frac_labels;
    for (const double f : fractions) frac_labels.push_back(pct(f).substr(0, pct(f).find('.')) + "%");
    std::ostringstream table;
    std::size_t w = 18;
    table << std::left << std::setw(static_cast<int>(w)) << "method";
    for (const auto& l : frac_labels) table << std::right << std::setw(16) << l;
    table << "\n";
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
        table << std::left << std::setw(static_cast<int>(w)) << method_display_name(methods[mi]);
        for (std::size_t fi = 0; fi < fractions.size(); ++fi) {
            std::vector<double> v;
            for (const auto& c : cells)
                if (c.method == methods[mi] && c.label_fraction == fractions[fi]) v.push_back(c.test.mean_f1);
            if (v.empty()) {
                table << std::right << std::setw(16) << "-";
                continue;
            }
            const double mean = std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
            double ss = 0.0;
            for (double x : v) ss += (x - mean) * (x - mean);
            const double sd = v.size() > 1 ? std::sqrt(ss / double(v.size() - 1)) : 0.0;
            means[mi][fi] = mean;
            sds[mi][fi] = sd;
            table << std::right << std::setw(16) << (pct(mean) + " +- " + pct(sd));
            summary.push_back({{"method", methods[mi]}, {"label_fraction", fractions[fi]}, {"mean_f1", mean},
                               {"sd_f1", sd}, {"runs", v.size()}});
        }
        table << "\n";
    }

    json jcells = json::array();
    for (const auto& c : cells) {
        json h = json::array();
        for (const auto& r : c.history) h.push_back(r.val_f1);
        jcells.push_back({{"method", c.method}, {"label_fraction", c.label_fraction}, {"seed", c.seed},
                          {"test", to_json(c.test)}, {"val_f1_history", h}});
    }
    write_json(opts.out_dir / "compare.json",
               {{"metadata", metadata("compare", opts)}, {"summary", summary}, {"cells", jcells}});
    write_text(opts.out_dir / "compare.txt", table.str());
    if (opts.log != nullptr) *opts.log << table.str();

    std::vector<std::string> names;
    for (const auto& m : methods) names.push_back(method_display_name(m));
    bar_chart(opts.out_dir / "compare_f1.png", "TEST F1 BY LABEL FRACTION", frac_labels, names, means, sds);
    for (std::size_t fi = 0; fi < fractions.size(); ++fi) {
        std::vector<std::string> present;
        std::vector<std::vector<double>> curves;
        for (const auto& m : methods) {
            std::vector<double> sum;
            int n = 0;
            for (const auto& c : cells) {
                if (c.method != m || c.label_fraction != fractions[fi]) continue;
                sum.resize(std::max(sum.size(), c.history.size()), 0.0);
                for (std::size_t e = 0; e < c.history.size(); ++e) sum[e] += c.history[e].val_f1;
                ++n;
            }
            if (n == 0) continue;
            for (auto& x : sum) x /= n;
            present.push_back(method_display_name(m));
            curves.push_back(std::move(sum));
        }
        const std::string label = frac_labels[fi].substr(0, frac_labels[fi].size() - 1);
        line_chart(opts.out_dir / ("curves_" + label + ".png"), "VAL F1 PER EPOCH AT " + frac_labels[fi], present, curves);
    }
    return cells;
}

int cmd_export_pseudolabels(const RunConfig& cfg, const fs::path& checkpoint, const CommandOptions& opts) {
    if (!fs::exists(checkpoint)) throw IoError("checkpoint not found: " + checkpoint.string());
    const SegNetwork net = load_checkpoint(checkpoint);
    if (net.config().k_classes != cfg.get_int("jigsaw.k"))
        throw ConfigError("config key 'jigsaw.k' differs from the checkpoint's head size");
    const TrainConfig tc = train_config_from(cfg);
    const SplitDataset split = load_split(cfg, cfg.get_real("data.label_fraction"));
    const Estimator est = parse_estimator(cfg.get_string("export.estimator"));
    const std::uint64_t seed = cfg.get_uint("seed");
    const PermutationSet perms = permutation_set_from(cfg);
    const int q = static_cast<int>(cfg.get_int("selfloop.q"));

    std::string tag = to_string(est);
    PseudoLabeler labeler;
    std::vector<SegNetwork> members;
    switch (est) {
        case Estimator::Softmax: labeler = softmax_labeler(net); break;
        case Estimator::McDropout:
            labeler = mc_dropout_labeler(net, tc.mc_passes, tc.mc_rate, derive_seed(seed, stream::kDropout));
            break;
        case Estimator::Ensemble:
            members = train_ensemble(tc, split, perms);
            labeler = ensemble_labeler(members);
            break;
        case Estimator::SelfLoop:
            labeler = selfloop_labeler(net, selfloop_config_from(cfg, perms, q), static_cast<int>(cfg.get_int("pseudo_eval.batch")));
            tag += "_q" + std::to_string(q);
            break;
        case Estimator::None: throw ConfigError("config key 'export.estimator' must name an estimator");
    }

    std::vector<UnlabeledSample> images;
    for (std::size_t i = 0; i < split.unlabeled_count(); ++i) images.push_back(split.unlabeled_for_evaluation(i));
    const auto maps = labeler(images);
    ensure_dir(opts.out_dir);
    cfg.save(opts.out_dir / "config.txt");
    const double th = cfg.get_real("eval.threshold");
    for (std::size_t i = 0; i < images.size(); ++i) {
        const RasterMap& p = maps[i].values;
        const RasterMap& x = images[i].image;
        const std::string stem = images[i].id + "_" + tag;
        write_png(opts.out_dir / (stem + "_pseudo.png"), to_image8(p));

        // prediction green, ground truth red, both yellow
        Image8 overlay = to_image8(x);
        const auto& gt = split.hidden_truth(i);
        for (int y = 0; y < p.height(); ++y)
            for (int xx = 0; xx < p.width(); ++xx) {
                const bool pred = p.at(0, y, xx) > th;
                const bool truth = gt.has_value() && gt->at(y, xx) != 0;
                if (!pred && !truth) continue;
                const Rgb c = pred && truth ? Rgb{255, 255, 0} : pred ? Rgb{0, 255, 0} : Rgb{255, 0, 0};
                for (int k = 0; k < 3; ++k) overlay.at(y, xx, k) = static_cast<std::uint8_t>((overlay.at(y, xx, k) + c[k]) / 2);
            }
        write_png(opts.out_dir / (stem + "_overlay.png"), overlay);

        std::ostringstream side;
        side << "estimator = " << tag << "\nseed = " << seed << "\n";
        if (est == Estimator::SelfLoop) {
            side << "q = " << q << "\nlosses =";
            side << std::setprecision(17);
            for (double l : maps[i].per_image_losses) side << " " << l;
            side << "\n";
        }
        if (gt.has_value()) side << "f1 = " << std::setprecision(17) << f1_score(p, *gt, th) << "\n";
        write_text(opts.out_dir / (stem + ".txt"), side.str());
    }
    log_line(opts, "wrote " + std::to_string(images.size()) + " overlays to " + opts.out_dir.string());
    return static_cast<int>(images.size());
}

}  // namespace selfloop
