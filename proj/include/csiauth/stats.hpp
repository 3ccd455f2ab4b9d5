#pragma once

// Channel statistics: population covariances of the CFR and its LS estimate,
// the Gaussian conditional models of the next measurement under both
// hypotheses, and their sample estimators.

#include <optional>
#include <span>
#include <vector>

#include "csiauth/channel_sim.hpp"
#include "csiauth/linalg.hpp"

namespace csiauth {

struct CsiPair {
    CsiMeasurement previous;  // legitimate measurement at packet k
    CsiMeasurement next;      // measurement at packet k+1 (legitimate or attacker)
};

/// A labelled pair: v = 1 when `next` came from the legitimate transmitter.
struct Sample {
    CsiPair u;
    int v = 0;
};

struct ChannelStatistics {
    double alpha = 0.0;
    double beta = 0.0;
    double theta = 1.0;
    double noise_var = 0.0;
    CMatrix sigma_H;
    CMatrix sigma_H_hat;
    CMatrix sigma_ba;
    CMatrix sigma_ma;

    Eigen::Index dim() const { return sigma_H.rows(); }

    /// Sigma_H * Sigma_Hhat^{-1}, the LMMSE map from a measurement to its CFR.
    CMatrix lmmse_gain() const {
        linalg::HermitianSolver s(sigma_H_hat, "Sigma_Hhat");
        // Sigma_H Sigma_Hhat^{-1} = (Sigma_Hhat^{-1} Sigma_H)^H for Hermitian factors
        return s.solve(sigma_H).adjoint();
    }
};

struct ConditionalGaussian {
    CMatrix mean_map;
    CMatrix covariance;

    CVector mean(const CVector& previous) const { return mean_map * previous; }
};

/// Sigma_H[m, m'] = sum_l sigma^2(l) exp(-j 2 pi (m - m') l / M) over active m, m'.
inline CMatrix true_sigma_H(const PowerDelayProfile& pdp, const OfdmConfig& config) {
    const CMatrix F = steering_matrix(pdp.num_taps(), config);
    return linalg::hermitian_part(CMatrix(F * pdp.tap_variances.cast<cplx>().asDiagonal() * F.adjoint()));
}

namespace detail {

// a^2 Sigma_{H|Hhat} + (1 - b^2) Sigma_H scaled by 1/theta, plus sigma^2 I.
inline CMatrix conditional_covariance(const CMatrix& sigma_H, const CMatrix& gain, double corr,
                                      double theta, double noise_var) {
    const Eigen::Index n = sigma_H.rows();
    const CMatrix posterior = sigma_H - gain * sigma_H;
    CMatrix cov = (corr * corr / theta) * posterior + ((1.0 - corr * corr) / theta) * sigma_H +
                  noise_var * CMatrix::Identity(n, n);
    return linalg::hermitian_part(cov);
}

}  // namespace detail

/// Exact statistics of the generative model.
inline ChannelStatistics true_statistics(const PowerDelayProfile& pdp, const OfdmConfig& config,
                                         double alpha, double beta, double theta, double noise_var) {
    require(alpha >= 0.0 && alpha <= 1.0, "true_statistics: alpha must lie in [0, 1]");
    require(beta >= 0.0 && beta <= 1.0, "true_statistics: beta must lie in [0, 1]");
    require(theta > 0.0, "true_statistics: theta must be > 0");
    require(noise_var >= 0.0, "true_statistics: noise variance must be >= 0");
    ChannelStatistics s;
    s.alpha = alpha;
    s.beta = beta;
    s.theta = theta;
    s.noise_var = noise_var;
    s.sigma_H = true_sigma_H(pdp, config);
    const Eigen::Index n = s.sigma_H.rows();
    s.sigma_H_hat = s.sigma_H + noise_var * CMatrix::Identity(n, n);
    const CMatrix gain = s.lmmse_gain();
    s.sigma_ba = detail::conditional_covariance(s.sigma_H, gain, alpha, 1.0, noise_var);
    s.sigma_ma = detail::conditional_covariance(s.sigma_H, gain, beta, theta, noise_var);
    return s;
}

inline ConditionalGaussian conditional_params_legit(const ChannelStatistics& s) {
    const CMatrix gain = s.lmmse_gain();
    return {s.alpha * gain, detail::conditional_covariance(s.sigma_H, gain, s.alpha, 1.0, s.noise_var)};
}

inline ConditionalGaussian conditional_params_attacker(const ChannelStatistics& s) {
    const CMatrix gain = s.lmmse_gain();
    return {(s.beta / std::sqrt(s.theta)) * gain,
            detail::conditional_covariance(s.sigma_H, gain, s.beta, s.theta, s.noise_var)};
}

// ---------------------------------------------------------------------------
// Sample estimators

namespace detail {

inline CMatrix stack_previous(std::span<const CsiPair> pairs) {
    CMatrix X(pairs.front().previous.size(), static_cast<Eigen::Index>(pairs.size()));
    for (std::size_t i = 0; i < pairs.size(); ++i) X.col(static_cast<Eigen::Index>(i)) = pairs[i].previous.values;
    return X;
}

inline CMatrix stack_next(std::span<const CsiPair> pairs) {
    CMatrix X(pairs.front().next.size(), static_cast<Eigen::Index>(pairs.size()));
    for (std::size_t i = 0; i < pairs.size(); ++i) X.col(static_cast<Eigen::Index>(i)) = pairs[i].next.values;
    return X;
}

inline void check_pairs(std::span<const CsiPair> pairs, const char* who) {
    require(!pairs.empty(), std::string(who) + ": no samples");
    const Eigen::Index n = pairs.front().previous.size();
    for (const auto& p : pairs)
        require(p.previous.size() == n && p.next.size() == n,
                std::string(who) + ": inconsistent measurement lengths");
}

// Re{ mean(next * conj(prev)) / (mean |prev|^2 - sigma^2) }, pooled over the
// selected subcarriers.
inline double correlation_ratio(std::span<const CsiPair> pairs, double noise_var,
                                std::optional<int> subcarrier, const char* who) {
    check_pairs(pairs, who);
    require(pairs.size() >= 2, std::string(who) + ": need at least two pairs");
    const Eigen::Index n = pairs.front().previous.size();
    Eigen::Index lo = 0, hi = n;
    if (subcarrier) {
        require(*subcarrier >= 0 && *subcarrier < n, std::string(who) + ": subcarrier out of range");
        lo = *subcarrier;
        hi = lo + 1;
    }
    cplx cross{0.0, 0.0};
    double power = 0.0;
    for (const auto& p : pairs) {
        cross += (p.next.values.segment(lo, hi - lo).array() *
                  p.previous.values.segment(lo, hi - lo).array().conjugate()).sum();
        power += p.previous.values.segment(lo, hi - lo).squaredNorm();
    }
    const double count = static_cast<double>(pairs.size()) * static_cast<double>(hi - lo);
    const double denom = power / count - noise_var;
    require(denom > 0.0, std::string(who) + ": nonpositive denominator "
                             "(too little data or overstated noise variance)");
    return (cross / count).real() / denom;
}

}  // namespace detail

/// Pairs are legitimate (Hhat_ba^[k], Hhat_ba^[k+1]). Pools all subcarriers
/// unless `subcarrier` selects one.
inline double estimate_alpha(std::span<const CsiPair> pairs, double noise_var,
                             std::optional<int> subcarrier = std::nullopt) {
    return detail::correlation_ratio(pairs, noise_var, subcarrier, "estimate_alpha");
}

/// Pairs are (Hhat_ba^[k], Hhat_ma^[k+1]).
inline double estimate_beta(std::span<const CsiPair> pairs, double noise_var, double theta,
                            std::optional<int> subcarrier = std::nullopt) {
    require(theta > 0.0, "estimate_beta: theta must be > 0");
    return std::sqrt(theta) * detail::correlation_ratio(pairs, noise_var, subcarrier, "estimate_beta");
}

inline CMatrix estimate_sigma_H_hat(std::span<const CsiMeasurement> samples) {
    require(!samples.empty(), "estimate_sigma_H_hat: no samples");
    const Eigen::Index n = samples.front().size();
    if (static_cast<Eigen::Index>(samples.size()) < n)
        warn("estimate_sigma_H_hat: fewer samples than subcarriers, estimate is rank deficient");
    CMatrix X(n, static_cast<Eigen::Index>(samples.size()));
    for (std::size_t i = 0; i < samples.size(); ++i) {
        require(samples[i].size() == n, "estimate_sigma_H_hat: inconsistent measurement lengths");
        X.col(static_cast<Eigen::Index>(i)) = samples[i].values;
    }
    return linalg::hermitian_part(CMatrix(X * X.adjoint() / static_cast<double>(samples.size())));
}

inline CMatrix estimate_sigma_H(std::span<const CsiMeasurement> samples, double noise_var) {
    const CMatrix hat = estimate_sigma_H_hat(samples);
    return linalg::project_psd(hat - noise_var * CMatrix::Identity(hat.rows(), hat.cols()));
}

/// Residual covariance of `next` around mean_map * previous, diagonally loaded
/// by 1e-8 * trace / M' so the result is positive definite.
inline CMatrix estimate_conditional_covariance(std::span<const CsiPair> pairs, const CMatrix& mean_map) {
    detail::check_pairs(pairs, "estimate_conditional_covariance");
    const Eigen::Index n = pairs.front().previous.size();
    require(mean_map.rows() == n && mean_map.cols() == n,
            "estimate_conditional_covariance: mean map dimension mismatch");
    const CMatrix R = detail::stack_next(pairs) - mean_map * detail::stack_previous(pairs);
    CMatrix cov = linalg::hermitian_part(CMatrix(R * R.adjoint() / static_cast<double>(pairs.size())));
    const double trace = cov.trace().real();
    const double load = trace > 0.0 ? 1e-8 * trace / static_cast<double>(n) : 1e-8;
    cov.diagonal().array() += load;
    return cov;
}

inline CMatrix estimate_sigma_ba(std::span<const CsiPair> pairs, const CMatrix& mean_map) {
    return estimate_conditional_covariance(pairs, mean_map);
}

inline CMatrix estimate_sigma_ma(std::span<const CsiPair> pairs, const CMatrix& mean_map) {
    return estimate_conditional_covariance(pairs, mean_map);
}

/// Full plug-in pipeline: covariances from every k-th measurement, alpha-hat
/// from legitimate pairs, beta-hat from attacker pairs, then the residual
/// covariances around the estimated conditional means.
inline ChannelStatistics estimate_statistics(std::span<const CsiPair> legit,
                                             std::span<const CsiPair> attacker, double noise_var,
                                             double theta) {
    detail::check_pairs(legit, "estimate_statistics");
    detail::check_pairs(attacker, "estimate_statistics");
    std::vector<CsiMeasurement> prev;
    prev.reserve(legit.size() + attacker.size());
    for (const auto& p : legit) prev.push_back(p.previous);
    for (const auto& p : attacker) prev.push_back(p.previous);

    ChannelStatistics s;
    s.theta = theta;
    s.noise_var = noise_var;
    s.alpha = estimate_alpha(legit, noise_var);
    s.beta = estimate_beta(attacker, noise_var, theta);
    s.sigma_H_hat = estimate_sigma_H_hat(prev);
    s.sigma_H = linalg::project_psd(s.sigma_H_hat -
                                    noise_var * CMatrix::Identity(s.sigma_H_hat.rows(), s.sigma_H_hat.cols()));
    const CMatrix gain = s.lmmse_gain();
    s.sigma_ba = estimate_sigma_ba(legit, s.alpha * gain);
    s.sigma_ma = estimate_sigma_ma(attacker, (s.beta / std::sqrt(theta)) * gain);
    return s;
}

}  // namespace csiauth
