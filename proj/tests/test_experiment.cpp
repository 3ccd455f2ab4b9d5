#include <sstream>

#include <gtest/gtest.h>

#include "csiauth/experiment.hpp"

using namespace csiauth;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig c;
    c.n_train = 400;
    c.n_test = 400;
    c.detectors = {DetectorKind::np, DetectorKind::noise_blind_np, DetectorKind::pearson};
    return c;
}

}  // namespace

TEST(Config, DefaultsRoundTrip) {
    const ExperimentConfig c;
    EXPECT_EQ(c.n_train, 50000u);
    EXPECT_EQ(c.n_test, 10000u);
    const auto back = config_from_json(to_json(c));
    EXPECT_EQ(to_json(back).dump(), to_json(c).dump());
    EXPECT_EQ(config_hash(back), config_hash(c));
}

TEST(Config, PartialDocumentKeepsDefaults) {
    const auto c = config_from_json(json::parse(R"({"scenario": {"snr_db": 6}, "seed": 9})"));
    EXPECT_EQ(c.scenario.snr_db, 6.0);
    EXPECT_EQ(c.seed, 9u);
    EXPECT_EQ(c.scenario.doppler_hz, 8.0);
    EXPECT_EQ(c.ofdm.active_count(), 52);
}

TEST(Config, RejectsUnknownAndInvalid) {
    EXPECT_THROW(config_from_json(json::parse(R"({"scenario": {"snr": 6}})")), Error);
    EXPECT_THROW(config_from_json(json::parse(R"({"dataset": {"n_train": 1}})")), Error);
    EXPECT_THROW(config_from_json(json::parse(R"({"detectors": ["svm"]})")), Error);
    EXPECT_THROW(config_from_json(json::parse(R"({"sweep": {"axis": "snr_db", "values": []}})")), Error);
    EXPECT_THROW(config_from_json(json::parse(R"({"stats_source": "guess"})")), Error);
    EXPECT_THROW(config_from_json(json::parse(R"({"scenario": {"snr_db": "high"}})")), Error);
}

TEST(Config, Overrides) {
    json doc = json::object();
    apply_override(doc, "scenario.snr_db=3.5");
    apply_override(doc, "detectors=[\"np\",\"pearson\"]");
    apply_override(doc, "stats_source=estimated");
    const auto c = config_from_json(doc);
    EXPECT_EQ(c.scenario.snr_db, 3.5);
    ASSERT_EQ(c.detectors.size(), 2u);
    EXPECT_EQ(c.detectors[1], DetectorKind::pearson);
    EXPECT_EQ(c.stats_source, "estimated");
    EXPECT_THROW(apply_override(doc, "novalue"), Error);
}

TEST(Config, HashIgnoresOutputLocation) {
    ExperimentConfig a, b;
    b.output_dir = "elsewhere";
    EXPECT_EQ(config_hash(a), config_hash(b));
    b.seed = 2;
    EXPECT_NE(config_hash(a), config_hash(b));
    EXPECT_EQ(csv_comment_header(a, 1), "# csiauth config_hash=" + config_hash(a) + " seed=1\n");
}

TEST(Sweep, AxisApplication) {
    const ExperimentConfig c;
    EXPECT_EQ(at_axis(c, "snr_db", 18).scenario.snr_db, 18.0);
    EXPECT_EQ(at_axis(c, "delta_t", 0.05).scenario.interval_s, 0.05);
    EXPECT_DOUBLE_EQ(at_axis(c, "distance_over_lambda", 2).scenario.attacker_distance_m, 0.25);
    EXPECT_EQ(at_axis(c, "latent_dim", 8).latent_dim, 8);
    EXPECT_THROW(at_axis(c, "bandwidth", 1), Error);
    EXPECT_EQ(sweep_point_seed(5, 3), 6u);
}

TEST(Simulate, Deterministic) {
    const auto c = small_config();
    const auto a = simulate(c, 3), b = simulate(c, 3);
    std::ostringstream sa, sb;
    write_pair_csv(sa, a.train.samples);
    write_pair_csv(sb, b.train.samples);
    EXPECT_EQ(sa.str(), sb.str());
    EXPECT_NE(a.train.samples[0].u.previous.values, a.test.samples[0].u.previous.values);
}

TEST(RunDetectors, NpBeatsPearson) {
    auto c = small_config();
    c.n_test = 10000;
    const auto data = simulate(c, 4);
    const auto r = run_detectors(c, data, 4);
    ASSERT_EQ(r.size(), 3u);
    EXPECT_GE(r[0].auc, r[2].auc - 0.01);
    EXPECT_GE(r[0].auc, r[1].auc - 0.01);
}

TEST(RunDetectors, DegenerateAttackerIsChance) {
    auto c = small_config();
    c.n_test = 10000;
    c.scenario.attacker_distance_m = 0.0;
    const auto r = run_detectors(c, simulate(c, 5), 5);
    EXPECT_EQ(r[0].auc, 0.5);
    EXPECT_EQ(r[1].auc, 0.5);
    EXPECT_NEAR(r[2].auc, 0.5, 0.02);
}

TEST(RunDetectors, EstimatedStatisticsCloseToTrue) {
    auto c = small_config();
    c.n_train = 20000;
    c.n_test = 5000;
    c.detectors = {DetectorKind::np};
    const auto data = simulate(c, 6);
    const double truth = run_detectors(c, data, 6)[0].auc;
    c.stats_source = "estimated";
    EXPECT_NEAR(run_detectors(c, data, 6)[0].auc, truth, 0.01);
}

TEST(Sweep, ReproducibleOutput) {
    auto c = small_config();
    c.sweep_axis = "snr_db";
    c.sweep_values = {0, 12};
    std::ostringstream a, b;
    const auto rows = run_sweep(c);
    write_sweep_csv(a, c, rows);
    write_sweep_csv(b, c, run_sweep(config_from_json(to_json(c))));
    EXPECT_EQ(a.str(), b.str());
    ASSERT_EQ(rows.size(), 6u);
    EXPECT_EQ(rows[0].seed, c.seed);
    EXPECT_EQ(rows[3].seed, c.seed ^ 1u);
    EXPECT_NE(a.str().find("axis_value,detector,auc,seed\n"), std::string::npos);
}

TEST(Metrics, CsvLayout) {
    auto c = small_config();
    c.detectors = {DetectorKind::pearson};
    const auto r = run_detectors(c, simulate(c, 7), 7);
    std::ostringstream os;
    write_metrics_csv(os, c, 7, r);
    EXPECT_NE(os.str().find("detector,auc,tpr_at_fpr_0.01,tpr_at_fpr_0.05,tpr_at_fpr_0.1\npearson,"),
              std::string::npos)
        << os.str();
}
