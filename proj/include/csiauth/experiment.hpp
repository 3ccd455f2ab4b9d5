#pragma once

// Experiment driver shared by the command-line tool and the acceptance suite:
// JSON configuration, per-point seeding, dataset generation, detector
// construction/training and scoring.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "csiauth/data.hpp"
#include "csiauth/detector.hpp"
#include "csiauth/litenp.hpp"
#include "csiauth/metrics.hpp"
#include "csiauth/stats.hpp"

namespace csiauth {

using nlohmann::json;

enum class DetectorKind { np, noise_blind_np, litenp, pearson };

inline std::string to_string(DetectorKind k) {
    switch (k) {
        case DetectorKind::np: return "np";
        case DetectorKind::noise_blind_np: return "noise_blind_np";
        case DetectorKind::litenp: return "litenp";
        case DetectorKind::pearson: return "pearson";
    }
    return "?";
}

inline DetectorKind parse_detector(const std::string& s) {
    if (s == "np") return DetectorKind::np;
    if (s == "noise_blind_np") return DetectorKind::noise_blind_np;
    if (s == "litenp") return DetectorKind::litenp;
    if (s == "pearson") return DetectorKind::pearson;
    throw Error("unknown detector '" + s + "' (expected np, noise_blind_np, litenp or pearson)");
}

struct ExperimentConfig {
    std::uint64_t seed = 1;
    OfdmConfig ofdm;
    int pdp_taps = 4;
    double pdp_decay = 1.0;
    ScenarioConfig scenario;
    std::size_t n_train = 50000;
    std::size_t n_test = 10000;
    TrainConfig train;
    int latent_dim = 32;
    std::vector<DetectorKind> detectors{DetectorKind::np, DetectorKind::noise_blind_np, DetectorKind::litenp,
                                        DetectorKind::pearson};
    std::string stats_source = "true";  // or "estimated" (from the training set)
    std::string sweep_axis;             // snr_db | delta_t | distance_over_lambda | latent_dim
    std::vector<double> sweep_values;
    std::vector<double> tpr_at_fpr{0.01, 0.05, 0.1};
    std::string output_dir = "out";

    PowerDelayProfile pdp() const { return exponential_pdp(pdp_taps, pdp_decay); }

    void validate() const {
        ofdm.validate();
        scenario.validate();
        train.validate();
        require(pdp_taps >= 1 && pdp_taps <= ofdm.total_subcarriers, "config: pdp.num_taps must lie in [1, M]");
        require(pdp_decay > 0.0, "config: pdp.decay_rate must be > 0");
        require(n_train >= 2 && n_test >= 2, "config: dataset sizes must be >= 2");
        require(latent_dim >= 1, "config: latent_dim must be >= 1");
        require(stats_source == "true" || stats_source == "estimated",
                "config: stats_source must be 'true' or 'estimated'");
        if (!sweep_axis.empty()) {
            require(sweep_axis == "snr_db" || sweep_axis == "delta_t" || sweep_axis == "distance_over_lambda" ||
                        sweep_axis == "latent_dim",
                    "config: unknown sweep axis '" + sweep_axis + "'");
            require(!sweep_values.empty(), "config: sweep values must be nonempty");
        }
        for (double t : tpr_at_fpr) require(t >= 0.0 && t <= 1.0, "config: tpr_at_fpr targets must lie in [0, 1]");
    }
};

inline json to_json(const ExperimentConfig& c) {
    json detectors = json::array();
    for (auto d : c.detectors) detectors.push_back(to_string(d));
    return json{
        {"seed", c.seed},
        {"ofdm", {{"total_subcarriers", c.ofdm.total_subcarriers},
                  {"active_indices", c.ofdm.active_indices},
                  {"wavelength", c.ofdm.wavelength}}},
        {"pdp", {{"num_taps", c.pdp_taps}, {"decay_rate", c.pdp_decay}}},
        {"scenario", {{"doppler_hz", c.scenario.doppler_hz},
                      {"interval_s", c.scenario.interval_s},
                      {"attacker_distance_m", c.scenario.attacker_distance_m},
                      {"attacker_speed", c.scenario.attacker_speed},
                      {"theta", c.scenario.theta},
                      {"snr_db", c.scenario.snr_db}}},
        {"dataset", {{"n_train", c.n_train}, {"n_test", c.n_test}}},
        {"train", {{"learning_rate", c.train.learning_rate},
                   {"batch_size", c.train.batch_size},
                   {"max_epochs", c.train.max_epochs},
                   {"patience", c.train.patience},
                   {"margin", c.train.margin},
                   {"rmsprop_decay", c.train.rmsprop_decay},
                   {"rmsprop_epsilon", c.train.rmsprop_epsilon},
                   {"validation_fraction", c.train.validation_fraction}}},
        {"latent_dim", c.latent_dim},
        {"detectors", detectors},
        {"stats_source", c.stats_source},
        {"sweep", {{"axis", c.sweep_axis}, {"values", c.sweep_values}}},
        {"tpr_at_fpr", c.tpr_at_fpr},
        {"output", {{"dir", c.output_dir}}},
    };
}

/// Missing keys keep their defaults; unknown keys are rejected.
inline ExperimentConfig config_from_json(const json& user) {
    ExperimentConfig c;
    json merged = to_json(c);
    const json defaults = merged;
    const json flat = user.flatten();
    for (const auto& item : flat.items()) {
        const json::json_pointer ptr(item.key());
        // arrays are replaced wholesale, so drop trailing index tokens
        json::json_pointer probe = ptr;
        while (!probe.empty() && !probe.back().empty() &&
               probe.back().find_first_not_of("0123456789") == std::string::npos)
            probe = probe.parent_pointer();
        require(!probe.empty() && defaults.contains(probe), "config: unknown key '" + item.key() + "'");
    }
    merged.merge_patch(user);
    try {
        c.seed = merged.at("seed").get<std::uint64_t>();
        const auto& o = merged.at("ofdm");
        c.ofdm.total_subcarriers = o.at("total_subcarriers").get<int>();
        c.ofdm.active_indices = o.at("active_indices").get<std::vector<int>>();
        c.ofdm.wavelength = o.at("wavelength").get<double>();
        c.pdp_taps = merged.at("pdp").at("num_taps").get<int>();
        c.pdp_decay = merged.at("pdp").at("decay_rate").get<double>();
        const auto& s = merged.at("scenario");
        c.scenario.doppler_hz = s.at("doppler_hz").get<double>();
        c.scenario.interval_s = s.at("interval_s").get<double>();
        c.scenario.attacker_distance_m = s.at("attacker_distance_m").get<double>();
        c.scenario.attacker_speed = s.at("attacker_speed").get<double>();
        c.scenario.theta = s.at("theta").get<double>();
        c.scenario.snr_db = s.at("snr_db").get<double>();
        c.n_train = merged.at("dataset").at("n_train").get<std::size_t>();
        c.n_test = merged.at("dataset").at("n_test").get<std::size_t>();
        const auto& t = merged.at("train");
        c.train.learning_rate = t.at("learning_rate").get<double>();
        c.train.batch_size = t.at("batch_size").get<int>();
        c.train.max_epochs = t.at("max_epochs").get<int>();
        c.train.patience = t.at("patience").get<int>();
        c.train.margin = t.at("margin").get<double>();
        c.train.rmsprop_decay = t.at("rmsprop_decay").get<double>();
        c.train.rmsprop_epsilon = t.at("rmsprop_epsilon").get<double>();
        c.train.validation_fraction = t.at("validation_fraction").get<double>();
        c.latent_dim = merged.at("latent_dim").get<int>();
        c.detectors.clear();
        for (const auto& d : merged.at("detectors")) c.detectors.push_back(parse_detector(d.get<std::string>()));
        c.stats_source = merged.at("stats_source").get<std::string>();
        c.sweep_axis = merged.at("sweep").at("axis").get<std::string>();
        c.sweep_values = merged.at("sweep").at("values").get<std::vector<double>>();
        c.tpr_at_fpr = merged.at("tpr_at_fpr").get<std::vector<double>>();
        c.output_dir = merged.at("output").at("dir").get<std::string>();
    } catch (const json::exception& e) {
        throw Error(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream is(path);
    require(static_cast<bool>(is), "cannot open config " + path);
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw Error(path + ": " + e.what());
    }
    return config_from_json(j);
}

/// Applies `a.b.c=value` to a JSON document. The value is parsed as JSON when
/// possible, otherwise taken as a string.
inline void apply_override(json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    require(eq != std::string::npos && eq > 0, "override must look like key=value: '" + assignment + "'");
    std::string key = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;
    std::string pointer = "/";
    for (char ch : key) pointer += ch == '.' ? '/' : ch;
    doc[json::json_pointer(pointer)] = value;
}

/// Canonical hash of everything that affects results (the output location
/// is excluded).
inline std::string config_hash(const ExperimentConfig& c) {
    json j = to_json(c);
    j.erase("output");
    return io::hex64(io::fnv1a(j.dump()));
}

inline std::string csv_comment_header(const ExperimentConfig& c, std::uint64_t seed) {
    return "# csiauth config_hash=" + config_hash(c) + " seed=" + std::to_string(seed) + "\n";
}

// ---------------------------------------------------------------------------
// Seeding: a sweep point i runs with master_seed XOR i; everything inside a
// point derives from that seed by purpose.

enum class Purpose : std::uint64_t { train_data = 101, test_data = 102, model_init = 103, training = 104 };

inline std::uint64_t purpose_seed(std::uint64_t point_seed, Purpose p) {
    return derive_seed(point_seed, static_cast<std::uint64_t>(p));
}

inline std::uint64_t sweep_point_seed(std::uint64_t master, std::size_t axis_index) {
    return master ^ static_cast<std::uint64_t>(axis_index);
}

/// Config with the sweep axis set to `value`.
inline ExperimentConfig at_axis(ExperimentConfig c, const std::string& axis, double value) {
    if (axis == "snr_db") c.scenario.snr_db = value;
    else if (axis == "delta_t") c.scenario.interval_s = value;
    else if (axis == "distance_over_lambda") c.scenario.attacker_distance_m = value * c.ofdm.wavelength;
    else if (axis == "latent_dim") c.latent_dim = static_cast<int>(value);
    else throw Error("unknown sweep axis '" + axis + "'");
    c.validate();
    return c;
}

struct SimulatedData {
    PairDataset train;
    PairDataset test;
};

inline SimulatedData simulate(const ExperimentConfig& c, std::uint64_t point_seed) {
    const auto pdp = c.pdp();
    return {gen_sim_dataset(pdp, c.ofdm, c.scenario, c.n_train, purpose_seed(point_seed, Purpose::train_data)),
            gen_sim_dataset(pdp, c.ofdm, c.scenario, c.n_test, purpose_seed(point_seed, Purpose::test_data))};
}

inline ChannelStatistics true_statistics(const ExperimentConfig& c) {
    return true_statistics(c.pdp(), c.ofdm, alpha_of(c.scenario), beta_of(c.scenario, c.ofdm.wavelength),
                           c.scenario.theta, snr_to_noise_var(c.scenario.snr_db, c.pdp()));
}

/// Statistics for the NP detectors: exact model values, or plug-in
/// estimates from the labelled training pairs.
inline ChannelStatistics detector_statistics(const ExperimentConfig& c, const PairDataset* train) {
    if (c.stats_source == "true") return true_statistics(c);
    require(train != nullptr, "estimated statistics need a training dataset");
    const auto legit = train->pairs_with_label(1);
    const auto attacker = train->pairs_with_label(0);
    return estimate_statistics(legit, attacker, snr_to_noise_var(c.scenario.snr_db, c.pdp()), c.scenario.theta);
}

inline std::vector<ScoredSample> score_np(const NpCoefficients& coeffs, std::span<const Sample> samples) {
    std::vector<ScoredSample> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back({np_statistic(s.u.previous, s.u.next, coeffs), s.v});
    return out;
}

inline std::vector<ScoredSample> score_pearson(std::span<const Sample> samples,
                                               PearsonMode mode = PearsonMode::complex_parts) {
    std::vector<ScoredSample> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back({pearson_statistic(s.u.previous, s.u.next, mode), s.v});
    return out;
}

inline TrainResult train_litenp(const ExperimentConfig& c, const PairDataset& train, std::uint64_t point_seed,
                                std::ostream* log = nullptr) {
    TrainConfig tc = c.train;
    tc.seed = purpose_seed(point_seed, Purpose::training);
    const int m_prime = static_cast<int>(train.samples.front().u.previous.size());
    return csiauth::train(init_model(m_prime, c.latent_dim, c.latent_dim, purpose_seed(point_seed, Purpose::model_init)),
                          train.samples, tc, log);
}

struct DetectorResult {
    DetectorKind kind;
    std::vector<ScoredSample> scores;
    double auc = 0.0;
};

/// Builds or trains every configured detector on `data.train` and scores
/// `data.test`. LiteNP is ranked by its pre-activation q, which orders
/// samples exactly like sigmoid(q) without floating-point saturation.
inline std::vector<DetectorResult> run_detectors(const ExperimentConfig& c, const SimulatedData& data,
                                                 std::uint64_t point_seed, std::ostream* log = nullptr) {
    std::vector<DetectorResult> out;
    std::optional<ChannelStatistics> stats;
    auto get_stats = [&]() -> const ChannelStatistics& {
        if (!stats) stats = detector_statistics(c, &data.train);
        return *stats;
    };
    for (auto kind : c.detectors) {
        DetectorResult r{kind, {}, 0.0};
        switch (kind) {
            case DetectorKind::np: r.scores = score_np(build_np(get_stats()), data.test.samples); break;
            case DetectorKind::noise_blind_np:
                r.scores = score_np(build_noise_blind_np(get_stats()), data.test.samples);
                break;
            case DetectorKind::litenp: {
                const auto trained = train_litenp(c, data.train, point_seed);
                if (log)
                    *log << "litenp: " << trained.history.size() << " epochs, best val loss "
                         << trained.best_val_loss << " at epoch " << trained.best_epoch << '\n';
                r.scores = score_dataset_logits(trained.model, data.test.samples);
                break;
            }
            case DetectorKind::pearson: r.scores = score_pearson(data.test.samples); break;
        }
        r.auc = auc(r.scores);
        out.push_back(std::move(r));
    }
    return out;
}

struct SweepRow {
    double axis_value;
    std::string detector;
    double auc;
    std::uint64_t seed;
};

inline std::vector<SweepRow> run_sweep(const ExperimentConfig& c, std::ostream* log = nullptr) {
    require(!c.sweep_axis.empty(), "sweep: no sweep axis configured");
    std::vector<SweepRow> rows;
    for (std::size_t i = 0; i < c.sweep_values.size(); ++i) {
        const double value = c.sweep_values[i];
        const ExperimentConfig point = at_axis(c, c.sweep_axis, value);
        const std::uint64_t seed = sweep_point_seed(c.seed, i);
        if (log) *log << "sweep " << c.sweep_axis << "=" << value << " seed " << seed << '\n';
        const SimulatedData data = simulate(point, seed);
        for (const auto& r : run_detectors(point, data, seed, log))
            rows.push_back({value, to_string(r.kind), r.auc, seed});
    }
    return rows;
}

inline void write_sweep_csv(std::ostream& os, const ExperimentConfig& c, std::span<const SweepRow> rows) {
    os << csv_comment_header(c, c.seed);
    os << "axis_value,detector,auc,seed\n";
    for (const auto& r : rows)
        os << io::format_double(r.axis_value) << ',' << r.detector << ',' << io::format_double(r.auc) << ','
           << r.seed << '\n';
}

inline void write_metrics_csv(std::ostream& os, const ExperimentConfig& c, std::uint64_t seed,
                              std::span<const DetectorResult> results) {
    os << csv_comment_header(c, seed);
    os << "detector,auc";
    for (double t : c.tpr_at_fpr) {
        char name[32];
        std::snprintf(name, sizeof name, "%g", t);
        os << ",tpr_at_fpr_" << name;
    }
    os << '\n';
    for (const auto& r : results) {
        const RocCurve curve = roc(r.scores);
        os << to_string(r.kind) << ',' << io::format_double(r.auc);
        for (double t : c.tpr_at_fpr) os << ',' << io::format_double(threshold_for_fpr(curve, t).tpr);
        os << '\n';
    }
}

}  // namespace csiauth
