#include <cmath>

#include <gtest/gtest.h>

#include "csiauth/stats.hpp"
#include "test_support.hpp"

using namespace csiauth;
using csiauth::testing::model_pairs;

namespace {

double frob_rel(const CMatrix& est, const CMatrix& truth) { return (est - truth).norm() / truth.norm(); }

std::vector<CsiMeasurement> firsts(const std::vector<CsiPair>& pairs) {
    std::vector<CsiMeasurement> out;
    for (const auto& p : pairs) out.push_back(p.previous);
    return out;
}

}  // namespace

TEST(TrueSigmaH, FlatChannelIsAllOnes) {
    const CMatrix S = true_sigma_H(PowerDelayProfile::from({1.0}), OfdmConfig{});
    EXPECT_LT((S - CMatrix::Ones(52, 52)).norm(), 1e-12);
    EXPECT_EQ(linalg::numerical_rank(S), 1);
}

TEST(TrueSigmaH, RankEqualsTapCount) {
    for (int L : {2, 4, 6}) {
        const CMatrix S = true_sigma_H(exponential_pdp(L, 1.0), OfdmConfig{});
        EXPECT_EQ(linalg::numerical_rank(S), L);
        EXPECT_LE(linalg::hermitian_defect(S), 1e-12);
    }
}

TEST(TrueSigmaH, EntryFormula) {
    const auto pdp = exponential_pdp(3, 0.8);
    const OfdmConfig cfg;
    const CMatrix S = true_sigma_H(pdp, cfg);
    for (int r : {0, 5, 30, 51})
        for (int c : {0, 7, 26, 50}) {
            cplx expected = 0;
            const int dm = cfg.active_indices[r] - cfg.active_indices[c];
            for (int l = 0; l < 3; ++l)
                expected += pdp.tap_variances[l] * std::polar(1.0, -2.0 * std::numbers::pi * dm * l / 64.0);
            EXPECT_LT(std::abs(S(r, c) - expected), 1e-12);
        }
}

TEST(TrueStatistics, Invariants) {
    const auto s = true_statistics(exponential_pdp(4, 1.0), OfdmConfig{}, 0.7, 0.1, 1.5, 0.06);
    const auto n = s.dim();
    EXPECT_LE((s.sigma_H_hat - s.sigma_H - 0.06 * CMatrix::Identity(n, n)).norm(), 1e-12);
    for (const CMatrix* X : {&s.sigma_H, &s.sigma_H_hat, &s.sigma_ba, &s.sigma_ma})
        EXPECT_LE(linalg::hermitian_defect(*X), 1e-10);
    EXPECT_GT(linalg::min_eigenvalue(s.sigma_ba), 0.0);
    EXPECT_GT(linalg::min_eigenvalue(s.sigma_ma), 0.0);
}

TEST(TrueStatistics, IndistinguishableAttacker) {
    const auto s = true_statistics(exponential_pdp(4, 1.0), OfdmConfig{}, 0.6, 0.6, 1.0, 0.1);
    EXPECT_LE((s.sigma_ma - s.sigma_ba).norm(), 1e-12);
    const auto legit = conditional_params_legit(s), att = conditional_params_attacker(s);
    EXPECT_LE((legit.mean_map - att.mean_map).norm(), 1e-12);
    EXPECT_LE((legit.covariance - att.covariance).norm(), 1e-12);
}

TEST(TrueStatistics, RejectsOutOfRangeParameters) {
    const auto pdp = exponential_pdp(2, 1.0);
    EXPECT_THROW(true_statistics(pdp, OfdmConfig{}, 1.2, 0.1, 1, 0.1), Error);
    EXPECT_THROW(true_statistics(pdp, OfdmConfig{}, 0.5, 0.1, 0, 0.1), Error);
    EXPECT_THROW(true_statistics(pdp, OfdmConfig{}, 0.5, 0.1, 1, -0.1), Error);
}

TEST(ConditionalParams, LegitAlphaZero) {
    const auto s = true_statistics(exponential_pdp(3, 1.0), OfdmConfig::full(8), 0.0, 0.0, 1.0, 0.2);
    const auto p = conditional_params_legit(s);
    EXPECT_LE(p.mean_map.norm(), 1e-15);
    EXPECT_LE((p.covariance - s.sigma_H - 0.2 * CMatrix::Identity(8, 8)).norm(), 1e-12);
}

TEST(ConditionalParams, LegitNoiselessFullRank) {
    const auto s = true_statistics(exponential_pdp(4, 0.5), OfdmConfig::full(4), 0.8, 0.3, 1.0, 0.0);
    const auto p = conditional_params_legit(s);
    EXPECT_LE((p.mean_map - 0.8 * CMatrix::Identity(4, 4)).norm(), 1e-10);
    EXPECT_LE((p.covariance - (1 - 0.64) * s.sigma_H).norm(), 1e-10);
}

TEST(ConditionalParams, SingularSigmaHatRejected) {
    const auto s = true_statistics(exponential_pdp(2, 0.5), OfdmConfig::full(8), 0.8, 0.3, 1.0, 0.5);
    ChannelStatistics bad = s;
    bad.sigma_H_hat = s.sigma_H;  // rank 2 of 8
    EXPECT_THROW(conditional_params_legit(bad), Error);
}

TEST(ConditionalParams, AttackerCases) {
    const auto pdp = exponential_pdp(3, 1.0);
    const auto zero = conditional_params_attacker(true_statistics(pdp, OfdmConfig::full(8), 0.7, 0.0, 1.0, 0.2));
    EXPECT_LE(zero.mean_map.norm(), 1e-15);
    const CMatrix SH = true_sigma_H(pdp, OfdmConfig::full(8));
    EXPECT_LE((zero.covariance - SH - 0.2 * CMatrix::Identity(8, 8)).norm(), 1e-12);

    const auto pdp4 = exponential_pdp(4, 0.5);
    const auto p = conditional_params_attacker(true_statistics(pdp4, OfdmConfig::full(4), 0.7, 1.0, 4.0, 0.0));
    EXPECT_LE(p.covariance.norm(), 1e-10);
    EXPECT_LE((p.mean_map - 0.5 * CMatrix::Identity(4, 4)).norm(), 1e-10);
}

// Fix one measurement, resample the taps from their posterior, evolve and
// re-measure; the empirical mean must match mean_map * measurement.
TEST(ConditionalParams, MonteCarloConditionalMean) {
    const auto pdp = exponential_pdp(2, 0.7);
    const auto cfg = OfdmConfig::full(8);
    const double alpha = 0.8, noise = 0.1;
    const auto s = true_statistics(pdp, cfg, alpha, 0.2, 1.0, noise);
    const auto cond = conditional_params_legit(s);

    Rng rng(21);
    const CMatrix F = steering_matrix(2, cfg);
    const CVector h_obs = measure_csi(F * sample_taps(pdp, rng).taps, noise, rng).values;

    const CMatrix D = pdp.tap_variances.cast<cplx>().asDiagonal();
    linalg::HermitianSolver hat(s.sigma_H_hat, "Sigma_Hhat");
    const CMatrix K = D * F.adjoint();
    const CVector post_mean = K * hat.solve(h_obs);
    const CMatrix post_cov = linalg::hermitian_part(CMatrix(D - K * hat.solve(K.adjoint())));
    const CMatrix chol = Eigen::LLT<CMatrix>(post_cov).matrixL();

    const int draws = 100000;
    CVector sum = CVector::Zero(8);
    CMatrix outer = CMatrix::Zero(8, 8);
    const CVector expected = cond.mean(h_obs);
    for (int i = 0; i < draws; ++i) {
        CVector z(2);
        for (int l = 0; l < 2; ++l) z[l] = complex_normal(rng, 1.0);
        const ChannelTaps h{post_mean + chol * z};
        const CVector next = measure_csi(F * evolve_legitimate(h, pdp, alpha, rng).taps, noise, rng).values;
        sum += next;
        const CVector r = next - expected;
        outer += r * r.adjoint();
    }
    const CVector mean = sum / double(draws);
    for (int m = 0; m < 8; ++m) {
        const double se = std::sqrt(cond.covariance(m, m).real() / 2.0 / draws);
        EXPECT_LE(std::abs(mean[m].real() - expected[m].real()), 3 * se) << m;
        EXPECT_LE(std::abs(mean[m].imag() - expected[m].imag()), 3 * se) << m;
    }
    EXPECT_LT(frob_rel(outer / double(draws), cond.covariance), 0.05);
}

TEST(EstimateAlpha, NoiselessIdenticalPairs) {
    Rng rng(30);
    std::vector<CsiPair> pairs;
    for (int i = 0; i < 50; ++i) {
        CsiMeasurement h{csiauth::testing::random_cvector(6, rng)};
        pairs.push_back({h, h});
    }
    EXPECT_NEAR(estimate_alpha(pairs, 0.0), 1.0, 1e-12);
    EXPECT_NEAR(estimate_beta(pairs, 0.0, 1.0), 1.0, 1e-12);
}

TEST(EstimateAlpha, Consistent) {
    const auto pdp = exponential_pdp(4, 1.0);
    const OfdmConfig cfg;
    const double noise = snr_to_noise_var(12, pdp);
    const auto pairs = model_pairs(pdp, cfg, 0.9, 0.0, 1.0, noise, 20000, 31, false);
    const double a = estimate_alpha(pairs, noise);
    EXPECT_GE(a, 0.88);
    EXPECT_LE(a, 0.92);
    const double a_single = estimate_alpha(pairs, noise, 10);
    EXPECT_NEAR(a_single, 0.9, 0.03);
}

TEST(EstimateAlpha, Uncorrelated) {
    const auto pdp = exponential_pdp(4, 1.0);
    const double noise = snr_to_noise_var(12, pdp);
    const auto pairs = model_pairs(pdp, OfdmConfig{}, 0.0, 0.0, 1.0, noise, 20000, 32, false);
    EXPECT_LT(std::abs(estimate_alpha(pairs, noise)), 0.02);
}

TEST(EstimateAlpha, OverstatedNoiseRejected) {
    const auto pdp = exponential_pdp(4, 1.0);
    const auto pairs = model_pairs(pdp, OfdmConfig{}, 0.9, 0.0, 1.0, 0.1, 200, 33, false);
    EXPECT_THROW(estimate_alpha(pairs, 5.0), Error);
    EXPECT_THROW(estimate_alpha(std::vector<CsiPair>{}, 0.1), Error);
}

TEST(EstimateBeta, Consistent) {
    const auto pdp = exponential_pdp(4, 1.0);
    const double noise = snr_to_noise_var(12, pdp);
    for (double theta : {1.0, 4.0}) {
        const auto pairs = model_pairs(pdp, OfdmConfig{}, 0.9, 0.5, theta, noise, 20000, 34, true);
        const double b = estimate_beta(pairs, noise, theta);
        EXPECT_GE(b, 0.47) << theta;
        EXPECT_LE(b, 0.53) << theta;
    }
}

TEST(EstimateSigmaHHat, BasisVector) {
    CVector e1 = CVector::Zero(5);
    e1[0] = 1;
    const std::vector<CsiMeasurement> xs(10, CsiMeasurement{e1});
    const CMatrix S = estimate_sigma_H_hat(xs);
    CMatrix expected = CMatrix::Zero(5, 5);
    expected(0, 0) = 1;
    EXPECT_EQ(S, expected);
    EXPECT_THROW(estimate_sigma_H_hat(std::vector<CsiMeasurement>{}), Error);
}

TEST(EstimateSigmaHHat, Consistent) {
    const auto pdp = exponential_pdp(4, 1.0);
    const OfdmConfig cfg;
    const double noise = 0.1;
    const auto pairs = model_pairs(pdp, cfg, 0.5, 0.0, 1.0, noise, 100000, 35, false);
    const CMatrix truth = true_sigma_H(pdp, cfg) + noise * CMatrix::Identity(52, 52);
    EXPECT_LT(frob_rel(estimate_sigma_H_hat(firsts(pairs)), truth), 0.05);
}

TEST(EstimateSigmaH, NoiselessMatchesHat) {
    Rng rng(36);
    std::vector<CsiMeasurement> xs;
    for (int i = 0; i < 40; ++i) xs.push_back({csiauth::testing::random_cvector(6, rng)});
    EXPECT_LE((estimate_sigma_H(xs, 0.0) - estimate_sigma_H_hat(xs)).norm(), 1e-10);
}

TEST(EstimateSigmaH, RecoversPopulationOnExactSamples) {
    // samples whose outer-product average is exactly Sigma_H + s^2 I:
    // columns of sqrt(N) * chol(Sigma_Hhat) expanded with +/- signs.
    const auto pdp = exponential_pdp(2, 1.0);
    const auto cfg = OfdmConfig::full(6);
    const double noise = 0.2;
    const CMatrix SH = true_sigma_H(pdp, cfg);
    const CMatrix L = Eigen::LLT<CMatrix>(SH + noise * CMatrix::Identity(6, 6)).matrixL();
    std::vector<CsiMeasurement> xs;
    for (int j = 0; j < 6; ++j) {
        xs.push_back({std::sqrt(6.0) * L.col(j)});
        xs.push_back({-std::sqrt(6.0) * L.col(j)});
    }
    EXPECT_LE((estimate_sigma_H(xs, noise) - SH).norm(), 1e-10);
}

TEST(EstimateConditionalCovariance, ZeroResidualsAreLoaded) {
    Rng rng(37);
    std::vector<CsiPair> pairs;
    for (int i = 0; i < 20; ++i) {
        CsiMeasurement h{csiauth::testing::random_cvector(4, rng)};
        pairs.push_back({h, CsiMeasurement{0.5 * h.values}});
    }
    const CMatrix S = estimate_conditional_covariance(pairs, 0.5 * CMatrix::Identity(4, 4));
    EXPECT_LE((S - 1e-8 * CMatrix::Identity(4, 4)).norm(), 1e-20);
    EXPECT_GT(linalg::min_eigenvalue(S), 0.0);
    EXPECT_THROW(estimate_sigma_ba(std::vector<CsiPair>{}, CMatrix::Identity(4, 4)), Error);
}

TEST(EstimateConditionalCovariance, Consistent) {
    const auto pdp = exponential_pdp(4, 1.0);
    const OfdmConfig cfg;
    const double noise = snr_to_noise_var(12, pdp);
    const auto s = true_statistics(pdp, cfg, 0.9, 0.5, 1.0, noise);
    const auto legit = model_pairs(pdp, cfg, 0.9, 0.5, 1.0, noise, 100000, 38, false);
    EXPECT_LT(frob_rel(estimate_sigma_ba(legit, conditional_params_legit(s).mean_map), s.sigma_ba), 0.05);
    const auto att = model_pairs(pdp, cfg, 0.9, 0.5, 1.0, noise, 100000, 39, true);
    EXPECT_LT(frob_rel(estimate_sigma_ma(att, conditional_params_attacker(s).mean_map), s.sigma_ma), 0.05);
}

TEST(EstimateStatistics, PipelineCloseToTruth) {
    const auto pdp = exponential_pdp(4, 1.0);
    const OfdmConfig cfg;
    const double noise = snr_to_noise_var(12, pdp);
    const auto truth = true_statistics(pdp, cfg, 0.9, 0.5, 1.0, noise);
    const auto legit = model_pairs(pdp, cfg, 0.9, 0.5, 1.0, noise, 20000, 40, false);
    const auto att = model_pairs(pdp, cfg, 0.9, 0.5, 1.0, noise, 20000, 41, true);
    const auto est = estimate_statistics(legit, att, noise, 1.0);
    EXPECT_NEAR(est.alpha, 0.9, 0.02);
    EXPECT_NEAR(est.beta, 0.5, 0.03);
    EXPECT_LT(frob_rel(est.sigma_H, truth.sigma_H), 0.05);
    EXPECT_LT(frob_rel(est.sigma_ba, truth.sigma_ba), 0.05);
    EXPECT_LT(frob_rel(est.sigma_ma, truth.sigma_ma), 0.05);
    EXPECT_LE(linalg::hermitian_defect(est.sigma_ba), 1e-10);
}
