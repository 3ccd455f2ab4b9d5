// csiauth: simulate CSI-pair datasets, train LiteNP-Net, evaluate detectors
// and run parameter sweeps. Every result file is regenerable from the
// meta.json written next to it.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "csiauth/data.hpp"
#include "csiauth/detector.hpp"
#include "csiauth/experiment.hpp"
#include "csiauth/litenp.hpp"
#include "csiauth/metrics.hpp"

namespace fs = std::filesystem;
using namespace csiauth;

namespace {

struct CommonOptions {
    std::string config_path;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    bool verbose = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("-c,--config", o.config_path, "JSON experiment config (or a meta.json)");
    cmd->add_option("--set", o.overrides, "Override a config key, e.g. --set scenario.snr_db=6");
    cmd->add_option("--seed", o.seed, "Override the master seed");
    cmd->add_option("-o,--out", o.out_dir, "Output directory (overrides output.dir)");
    cmd->add_flag("-v,--verbose", o.verbose, "Progress on stderr");
}

ExperimentConfig resolve(const CommonOptions& o) {
    json doc = json::object();
    if (!o.config_path.empty()) {
        std::ifstream is(o.config_path);
        require(static_cast<bool>(is), "cannot open config " + o.config_path);
        try {
            is >> doc;
        } catch (const json::exception& e) {
            throw Error(o.config_path + ": " + e.what());
        }
    }
    for (const auto& s : o.overrides) apply_override(doc, s);
    if (o.seed) doc["seed"] = *o.seed;
    if (!o.out_dir.empty()) doc["output"]["dir"] = o.out_dir;
    return config_from_json(doc);
}

fs::path out_path(const ExperimentConfig& c, const std::string& name) {
    fs::create_directories(c.output_dir);
    return fs::path(c.output_dir) / name;
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream os(p, std::ios::binary);
    require(static_cast<bool>(os), "cannot open " + p.string() + " for writing");
    return os;
}

void write_meta(const ExperimentConfig& c, const fs::path& p) {
    auto os = open_out(p);
    os << to_json(c).dump(2) << '\n';
}

PairDataset load_dataset(const std::string& path) {
    PairDataset ds;
    ds.samples = load_pair_csv(path);
    require(!ds.samples.empty(), path + ": dataset is empty");
    ds.recount();
    return ds;
}

std::vector<ScoredSample> score_with(DetectorKind kind, const ExperimentConfig& c, const PairDataset& test,
                                     const std::string& train_path, const std::string& model_path,
                                     const std::string& dump_coeffs) {
    const auto m_prime = test.samples.front().u.previous.size();
    switch (kind) {
        case DetectorKind::np:
        case DetectorKind::noise_blind_np: {
            std::optional<PairDataset> train;
            if (c.stats_source == "estimated") train = load_dataset(train_path);
            const ChannelStatistics stats = detector_statistics(c, train ? &*train : nullptr);
            require(stats.dim() == m_prime, "detector/data dimension mismatch: statistics have " +
                                                std::to_string(stats.dim()) + " subcarriers, data has " +
                                                std::to_string(m_prime));
            const NpCoefficients coeffs = kind == DetectorKind::np ? build_np(stats) : build_noise_blind_np(stats);
            if (!dump_coeffs.empty()) save_coefficients(dump_coeffs, coeffs);
            return score_np(coeffs, test.samples);
        }
        case DetectorKind::litenp: {
            const LiteNpModel model = load_model(model_path);
            require(model.m_prime == m_prime, "model/data dimension mismatch: model expects " +
                                                  std::to_string(model.m_prime) + " subcarriers, data has " +
                                                  std::to_string(m_prime));
            return score_dataset_logits(model, test.samples);
        }
        case DetectorKind::pearson: return score_pearson(test.samples);
    }
    return {};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CSI physical-layer authentication lab"};
    app.require_subcommand(1);

    CommonOptions common;

    auto* simulate_cmd = app.add_subcommand("simulate", "Generate train/test pair datasets and meta.json");
    add_common(simulate_cmd, common);

    std::string train_path, test_path, model_path, history_path, dump_coeffs, roc_out, detector_name;
    std::vector<std::string> detector_names;

    auto* train_cmd = app.add_subcommand("train", "Train LiteNP-Net on a pair dataset");
    add_common(train_cmd, common);
    train_cmd->add_option("--train", train_path, "Training pair CSV (default <out>/train.csv)");
    train_cmd->add_option("--model", model_path, "Model file to write (default <out>/model.bin)");
    train_cmd->add_option("--history", history_path, "History CSV (default <out>/history.csv)");

    auto* eval_cmd = app.add_subcommand("evaluate", "Score a test dataset with one or more detectors");
    add_common(eval_cmd, common);
    eval_cmd->add_option("--test", test_path, "Test pair CSV (default <out>/test.csv)");
    eval_cmd->add_option("--train", train_path, "Training CSV for estimated statistics (default <out>/train.csv)");
    eval_cmd->add_option("--model", model_path, "LiteNP model (default <out>/model.bin)");
    eval_cmd->add_option("--detector", detector_names, "Detectors (default: config detectors)");
    eval_cmd->add_option("--dump-coeffs", dump_coeffs, "Write NP coefficients of the last NP detector here");

    auto* sweep_cmd = app.add_subcommand("sweep", "AUC versus one parameter, long-form CSV");
    add_common(sweep_cmd, common);

    auto* roc_cmd = app.add_subcommand("roc-export", "Write the ROC curve of one detector");
    add_common(roc_cmd, common);
    roc_cmd->add_option("--detector", detector_name, "Detector")->required();
    roc_cmd->add_option("--test", test_path, "Test pair CSV (default <out>/test.csv)");
    roc_cmd->add_option("--train", train_path, "Training CSV for estimated statistics");
    roc_cmd->add_option("--model", model_path, "LiteNP model (default <out>/model.bin)");
    roc_cmd->add_option("--output", roc_out, "ROC CSV path (default <out>/roc_<detector>.csv)");

    std::string ingest_in, ingest_out, legit_source;
    int dk_pos = 1, dk_neg = 50, reference = 0;
    bool compensate = false;
    auto* ingest_cmd = app.add_subcommand("ingest", "Experimental CSI CSV -> labelled pair CSV");
    ingest_cmd->add_option("--input", ingest_in, "CSI CSV")->required();
    ingest_cmd->add_option("--output", ingest_out, "Pair CSV to write")->required();
    ingest_cmd->add_option("--dk-pos", dk_pos, "Packet offset of positive pairs");
    ingest_cmd->add_option("--dk-neg", dk_neg, "Packet offset of negative pairs");
    ingest_cmd->add_option("--legit-source", legit_source,
                           "Label by identity instead: pair each packet of this source with the next one received");
    ingest_cmd->add_flag("--phase-compensate", compensate, "Remove the common phase of each measurement");
    ingest_cmd->add_option("--reference", reference, "Reference subcarrier for phase compensation");

    CLI11_PARSE(app, argc, argv);

    try {
        std::ostream* log = common.verbose ? &std::cerr : nullptr;

        if (*ingest_cmd) {
            auto records = load_csi_csv(ingest_in);
            if (compensate) records = phase_compensate(records, reference);
            const PairDataset ds = legit_source.empty() ? build_experimental_pairs(records, dk_pos, dk_neg)
                                                        : build_identity_pairs(records, legit_source);
            auto os = open_out(ingest_out);
            os << "# csiauth ingest source=" << ds.meta.source << " positives=" << ds.meta.positives
               << " negatives=" << ds.meta.negatives << '\n';
            write_pair_csv(os, ds.samples);
            std::cout << "wrote " << ds.size() << " pairs (" << ds.meta.positives << " positive, "
                      << ds.meta.negatives << " negative) to " << ingest_out << '\n';
            return 0;
        }

        const ExperimentConfig cfg = resolve(common);
        auto default_to = [&](std::string& p, const char* name) {
            if (p.empty()) p = (fs::path(cfg.output_dir) / name).string();
        };

        if (*simulate_cmd) {
            const SimulatedData data = simulate(cfg, cfg.seed);
            for (const auto& [name, ds] : {std::pair{"train.csv", &data.train}, std::pair{"test.csv", &data.test}}) {
                auto os = open_out(out_path(cfg, name));
                os << csv_comment_header(cfg, cfg.seed);
                write_pair_csv(os, ds->samples);
                std::cout << "wrote " << name << ": " << ds->size() << " pairs (" << ds->meta.positives
                          << " positive, " << ds->meta.negatives << " negative)\n";
            }
            write_meta(cfg, out_path(cfg, "meta.json"));
            std::cout << "alpha=" << data.train.meta.alpha << " beta=" << data.train.meta.beta
                      << " noise_var=" << data.train.meta.noise_var << '\n';
            return 0;
        }

        if (*train_cmd) {
            default_to(train_path, "train.csv");
            default_to(model_path, "model.bin");
            default_to(history_path, "history.csv");
            const PairDataset train = load_dataset(train_path);
            const TrainResult result = train_litenp(cfg, train, cfg.seed, log);
            fs::create_directories(cfg.output_dir);
            save_model(model_path, result.model);
            auto os = open_out(history_path);
            os << csv_comment_header(cfg, cfg.seed);
            write_history_csv(os, result.history);
            std::cout << "epochs=" << result.history.size() << " best_epoch=" << result.best_epoch
                      << " best_val_loss=" << result.best_val_loss
                      << (result.early_stopped ? " (early stopped)" : "") << '\n';
            return 0;
        }

        if (*eval_cmd) {
            default_to(test_path, "test.csv");
            default_to(train_path, "train.csv");
            default_to(model_path, "model.bin");
            const PairDataset test = load_dataset(test_path);
            std::vector<DetectorKind> kinds;
            for (const auto& n : detector_names) kinds.push_back(parse_detector(n));
            if (kinds.empty()) kinds = cfg.detectors;
            std::vector<DetectorResult> results;
            for (auto kind : kinds) {
                DetectorResult r{kind, score_with(kind, cfg, test, train_path, model_path, dump_coeffs), 0.0};
                r.auc = auc(r.scores);
                auto os = open_out(out_path(cfg, "roc_" + to_string(kind) + ".csv"));
                os << csv_comment_header(cfg, cfg.seed);
                write_roc_csv(os, roc(r.scores));
                std::cout << to_string(kind) << " auc=" << io::format_double(r.auc) << '\n';
                results.push_back(std::move(r));
            }
            auto os = open_out(out_path(cfg, "metrics.csv"));
            write_metrics_csv(os, cfg, cfg.seed, results);
            return 0;
        }

        if (*roc_cmd) {
            default_to(test_path, "test.csv");
            default_to(train_path, "train.csv");
            default_to(model_path, "model.bin");
            const DetectorKind kind = parse_detector(detector_name);
            if (roc_out.empty()) roc_out = out_path(cfg, "roc_" + detector_name + ".csv").string();
            const PairDataset test = load_dataset(test_path);
            const auto scores = score_with(kind, cfg, test, train_path, model_path, "");
            auto os = open_out(roc_out);
            os << csv_comment_header(cfg, cfg.seed);
            write_roc_csv(os, roc(scores));
            std::cout << detector_name << " auc=" << io::format_double(auc(scores)) << " -> " << roc_out << '\n';
            return 0;
        }

        if (*sweep_cmd) {
            require(!cfg.sweep_axis.empty(), "sweep: set sweep.axis and sweep.values");
            const auto rows = run_sweep(cfg, log);
            {
                auto os = open_out(out_path(cfg, "sweep.csv"));
                write_sweep_csv(os, cfg, rows);
            }
            write_meta(cfg, out_path(cfg, "sweep.meta.json"));
            for (const auto& r : rows)
                std::cout << cfg.sweep_axis << '=' << r.axis_value << ' ' << r.detector << " auc=" << r.auc << '\n';
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
