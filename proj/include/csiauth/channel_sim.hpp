#pragma once

// Correlated multipath channel generator: exponential power delay profiles,
// Bell-spectrum temporal/spatial correlation, Gauss-Markov tap evolution for
// the legitimate and attacker links, and noisy LS CSI on active subcarriers.

#include <cmath>
#include <numbers>
#include <vector>

#include "csiauth/core.hpp"

namespace csiauth {

struct OfdmConfig {
    int total_subcarriers = 64;
    std::vector<int> active_indices = legacy_active_indices();
    double wavelength = 0.125;

    int active_count() const { return static_cast<int>(active_indices.size()); }

    /// 52 occupied bins of a 64-point legacy 802.11 symbol: +1..+26 and -26..-1
    /// (bins 38..63), DC and band edges left empty.
    static std::vector<int> legacy_active_indices() {
        std::vector<int> idx;
        for (int m = 1; m <= 26; ++m) idx.push_back(m);
        for (int m = 38; m <= 63; ++m) idx.push_back(m);
        return idx;
    }

    /// All M subcarriers active.
    static OfdmConfig full(int total, double wavelength = 0.125) {
        OfdmConfig c;
        c.total_subcarriers = total;
        c.active_indices.clear();
        for (int m = 0; m < total; ++m) c.active_indices.push_back(m);
        c.wavelength = wavelength;
        return c;
    }

    void validate() const {
        require(total_subcarriers > 0, "ofdm: total_subcarriers must be positive");
        require(!active_indices.empty(), "ofdm: active_indices must be nonempty");
        require(wavelength > 0.0, "ofdm: wavelength must be positive");
        for (std::size_t i = 0; i < active_indices.size(); ++i) {
            require(active_indices[i] >= 0 && active_indices[i] < total_subcarriers,
                    "ofdm: active index out of range");
            require(i == 0 || active_indices[i] > active_indices[i - 1],
                    "ofdm: active indices must be strictly increasing");
        }
    }
};

struct PowerDelayProfile {
    RVector tap_variances;

    int num_taps() const { return static_cast<int>(tap_variances.size()); }
    double total_power() const { return tap_variances.sum(); }

    static PowerDelayProfile from(std::vector<double> variances) {
        PowerDelayProfile p;
        p.tap_variances = Eigen::Map<const RVector>(variances.data(),
                                                     static_cast<Eigen::Index>(variances.size()));
        p.validate();
        return p;
    }

    void validate() const {
        require(tap_variances.size() >= 1, "pdp: at least one tap required");
        require((tap_variances.array() >= 0.0).all(), "pdp: tap variances must be nonnegative");
        require(tap_variances.maxCoeff() > 0.0, "pdp: at least one tap must carry power");
    }

    PowerDelayProfile normalized() const {
        validate();
        PowerDelayProfile p;
        p.tap_variances = tap_variances / tap_variances.sum();
        return p;
    }
};

struct ChannelTaps {
    CVector taps;
};

struct CsiMeasurement {
    CVector values;

    Eigen::Index size() const { return values.size(); }
};

struct ScenarioConfig {
    double doppler_hz = 8.0;
    double interval_s = 0.02;
    double attacker_distance_m = 0.125;
    double attacker_speed = 1.0;  // only fixes the time-to-distance mapping; cancels in rho
    double theta = 1.0;
    double snr_db = 12.0;

    void validate() const {
        require(doppler_hz > 0.0, "scenario: doppler_hz must be > 0");
        require(interval_s >= 0.0, "scenario: interval_s must be >= 0");
        require(attacker_distance_m >= 0.0, "scenario: attacker distance must be >= 0");
        require(theta > 0.0, "scenario: theta must be > 0");
        require(std::isfinite(snr_db), "scenario: snr_db must be finite");
    }
};

/// sigma^2(l) proportional to exp(-decay_rate * l), unit total power.
inline PowerDelayProfile exponential_pdp(int num_taps, double decay_rate) {
    require(num_taps >= 1, "exponential_pdp: num_taps must be >= 1");
    require(decay_rate > 0.0, "exponential_pdp: decay_rate must be > 0");
    PowerDelayProfile p;
    p.tap_variances.resize(num_taps);
    for (int l = 0; l < num_taps; ++l) p.tap_variances[l] = std::exp(-decay_rate * l);
    p.tap_variances /= p.tap_variances.sum();
    return p;
}

/// R(dt) = exp(-2 pi f_d dt / sqrt(A)), A = 9.
inline double bell_autocorrelation(double doppler_hz, double delta_t) {
    require(doppler_hz > 0.0, "bell_autocorrelation: doppler must be > 0");
    require(delta_t >= 0.0, "bell_autocorrelation: delta_t must be >= 0");
    return std::exp(-2.0 * std::numbers::pi * doppler_hz * delta_t / 3.0);
}

/// rho(d) = R(d / (f_d lambda)); f_d cancels.
inline double spatial_correlation(double distance_m, double wavelength) {
    require(distance_m >= 0.0, "spatial_correlation: distance must be >= 0");
    require(wavelength > 0.0, "spatial_correlation: wavelength must be > 0");
    return std::exp(-2.0 * std::numbers::pi * (distance_m / wavelength) / 3.0);
}

inline double alpha_of(const ScenarioConfig& s) {
    s.validate();
    return bell_autocorrelation(s.doppler_hz, s.interval_s);
}

inline double beta_of(const ScenarioConfig& s, double wavelength) {
    s.validate();
    return spatial_correlation(s.attacker_distance_m, wavelength) *
           bell_autocorrelation(s.doppler_hz, s.interval_s);
}

inline ChannelTaps sample_taps(const PowerDelayProfile& pdp, Rng& rng) {
    ChannelTaps t;
    t.taps.resize(pdp.num_taps());
    for (int l = 0; l < pdp.num_taps(); ++l) t.taps[l] = complex_normal(rng, pdp.tap_variances[l]);
    return t;
}

inline ChannelTaps evolve_legitimate(const ChannelTaps& current, const PowerDelayProfile& pdp,
                                     double alpha, Rng& rng) {
    require(alpha >= 0.0 && alpha <= 1.0, "evolve_legitimate: alpha must lie in [0, 1]");
    require(current.taps.size() == pdp.num_taps(), "evolve_legitimate: tap count mismatch");
    const double innov = std::sqrt(1.0 - alpha * alpha);
    ChannelTaps next;
    next.taps.resize(current.taps.size());
    for (int l = 0; l < pdp.num_taps(); ++l)
        next.taps[l] = alpha * current.taps[l] + innov * complex_normal(rng, pdp.tap_variances[l]);
    return next;
}

inline ChannelTaps evolve_attacker(const ChannelTaps& current, const PowerDelayProfile& pdp,
                                   double beta, double theta, Rng& rng) {
    require(beta >= 0.0 && beta <= 1.0, "evolve_attacker: beta must lie in [0, 1]");
    require(theta > 0.0, "evolve_attacker: theta must be > 0");
    require(current.taps.size() == pdp.num_taps(), "evolve_attacker: tap count mismatch");
    const double scale = 1.0 / std::sqrt(theta);
    const double innov = std::sqrt(1.0 - beta * beta);
    ChannelTaps next;
    next.taps.resize(current.taps.size());
    for (int l = 0; l < pdp.num_taps(); ++l)
        next.taps[l] = scale * (beta * current.taps[l] +
                                innov * complex_normal(rng, pdp.tap_variances[l]));
    return next;
}

/// Rows are the DFT steering phases exp(-j 2 pi m l / M) for the active m.
inline CMatrix steering_matrix(int num_taps, const OfdmConfig& config) {
    require(num_taps <= config.total_subcarriers, "steering_matrix: L must not exceed M");
    const int rows = config.active_count();
    CMatrix F(rows, num_taps);
    const double M = config.total_subcarriers;
    for (int r = 0; r < rows; ++r) {
        const int m = config.active_indices[r];
        for (int l = 0; l < num_taps; ++l) {
            // reduce m*l mod M first to keep the phase argument small
            const double k = static_cast<double>((static_cast<long long>(m) * l) %
                                                 config.total_subcarriers);
            F(r, l) = std::polar(1.0, -2.0 * std::numbers::pi * k / M);
        }
    }
    return F;
}

inline CVector taps_to_cfr(const ChannelTaps& taps, const OfdmConfig& config) {
    require(taps.taps.size() <= config.total_subcarriers, "taps_to_cfr: L must not exceed M");
    return steering_matrix(static_cast<int>(taps.taps.size()), config) * taps.taps;
}

inline CsiMeasurement measure_csi(const CVector& cfr, double noise_var, Rng& rng) {
    require(noise_var >= 0.0, "measure_csi: noise variance must be >= 0");
    CsiMeasurement out{cfr};
    if (noise_var == 0.0) return out;
    for (Eigen::Index m = 0; m < out.values.size(); ++m) out.values[m] += complex_normal(rng, noise_var);
    return out;
}

/// Noise variance for a given SNR against the profile's total power (unity
/// for a normalized profile).
inline double snr_to_noise_var(double snr_db, const PowerDelayProfile& pdp) {
    return std::pow(10.0, -snr_db / 10.0) * pdp.total_power();
}

}  // namespace csiauth
