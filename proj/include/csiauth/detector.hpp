#pragma once

// Neyman-Pearson detector for "is packet k+1 from the same transmitter as
// packet k": quadratic-form coefficients, the statistic in complex and
// real-stacked forms, a direct log-likelihood oracle, and the noise-blind and
// Pearson baselines.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <string>

#include "csiauth/io.hpp"
#include "csiauth/linalg.hpp"
#include "csiauth/stats.hpp"

namespace csiauth {

/// Lambda = y^H A y + Re{x^H B y} + x^H C x, x = Hhat^[k], y = Hhat^[k+1].
struct NpCoefficients {
    CMatrix A;
    CMatrix B;
    CMatrix C;

    Eigen::Index dim() const { return A.rows(); }
};

/// 2M' x 2M' real expansions [[Re, -Im], [Im, Re]].
struct RealCoefficients {
    RMatrix A;
    RMatrix B;
    RMatrix C;
};

struct DecisionThreshold {
    double value = 0.0;
};

enum class Decision { legitimate, rogue };

enum class PearsonMode { complex_parts, amplitude };

namespace detail {

// Coefficients of the log-likelihood ratio between CN(a G x, S_ba) and
// CN(b G x, S_ma), constant terms dropped.
inline NpCoefficients np_from_model(const CMatrix& gain, const CMatrix& sigma_ba, const CMatrix& sigma_ma,
                                    double a, double b) {
    const CMatrix ba_inv = linalg::HermitianSolver(sigma_ba, "Sigma_ba").inverse();
    const CMatrix ma_inv = linalg::HermitianSolver(sigma_ma, "Sigma_ma").inverse();
    NpCoefficients c;
    c.A = linalg::hermitian_part(CMatrix(-(ba_inv - ma_inv)));
    c.B = 2.0 * gain.adjoint() * (a * ba_inv - b * ma_inv);
    c.C = linalg::hermitian_part(CMatrix(-gain.adjoint() * (a * a * ba_inv - b * b * ma_inv) * gain));
    require(c.A.allFinite() && c.B.allFinite() && c.C.allFinite(), "build_np: non-finite coefficients");
    return c;
}

}  // namespace detail

inline NpCoefficients build_np(const ChannelStatistics& s) {
    return detail::np_from_model(s.lmmse_gain(), s.sigma_ba, s.sigma_ma, s.alpha,
                                 s.beta / std::sqrt(s.theta));
}

/// Baseline that ignores estimation noise in the mean model (Sigma_H
/// Sigma_Hhat^{-1} -> I). Its covariances are completed consistently with
/// those means: (1 - a^2) Sigma_H + s^2 I and ((1 - b^2) / theta) Sigma_H + s^2 I.
inline NpCoefficients build_noise_blind_np(const ChannelStatistics& s) {
    const Eigen::Index n = s.dim();
    const CMatrix I = CMatrix::Identity(n, n);
    const CMatrix sba = (1.0 - s.alpha * s.alpha) * s.sigma_H + s.noise_var * I;
    const CMatrix sma = ((1.0 - s.beta * s.beta) / s.theta) * s.sigma_H + s.noise_var * I;
    return detail::np_from_model(I, linalg::hermitian_part(sba), linalg::hermitian_part(sma), s.alpha,
                                 s.beta / std::sqrt(s.theta));
}

/// Sum of the three terms before discarding the imaginary part; for
/// Hermitian A and C only round-off survives in the imaginary part.
inline cplx np_statistic_unreduced(const CVector& prev, const CVector& next, const NpCoefficients& c) {
    require(prev.size() == c.dim() && next.size() == c.dim(), "np_statistic: dimension mismatch");
    const cplx t1 = next.dot(c.A * next);  // Eigen's dot conjugates the left operand
    const double t2 = prev.dot(c.B * next).real();
    const cplx t3 = prev.dot(c.C * prev);
    return t1 + t2 + t3;
}

inline double np_statistic(const CsiMeasurement& prev, const CsiMeasurement& next, const NpCoefficients& c) {
    return np_statistic_unreduced(prev.values, next.values, c).real();
}

inline RVector realify_vector(const CVector& h) {
    RVector x(2 * h.size());
    x << h.real(), h.imag();
    return x;
}

inline RVector realify_vector(const CsiMeasurement& h) { return realify_vector(h.values); }

inline RMatrix realify_matrix(const CMatrix& K) {
    require(K.rows() == K.cols(), "realify_matrix: matrix must be square");
    const Eigen::Index n = K.rows();
    RMatrix R(2 * n, 2 * n);
    R.topLeftCorner(n, n) = K.real();
    R.topRightCorner(n, n) = -K.imag();
    R.bottomLeftCorner(n, n) = K.imag();
    R.bottomRightCorner(n, n) = K.real();
    return R;
}

inline RealCoefficients realify(const NpCoefficients& c) {
    return {realify_matrix(c.A), realify_matrix(c.B), realify_matrix(c.C)};
}

inline double np_statistic_real(const RVector& x0, const RVector& x1, const RealCoefficients& c) {
    const Eigen::Index n = c.A.rows();
    require(x0.size() == n && x1.size() == n, "np_statistic_real: dimension mismatch");
    return x1.dot(c.A * x1) + x0.dot(c.B * x1) + x0.dot(c.C * x0);
}

namespace detail {

inline double complex_gaussian_logpdf(const CVector& x, const CVector& mean, const CMatrix& cov,
                                      const std::string& what) {
    linalg::HermitianSolver solver(cov, what);
    const CVector r = x - mean;
    const CVector z = solver.solve(r);
    const double quad = r.dot(z).real();
    return -static_cast<double>(x.size()) * std::log(std::numbers::pi) - solver.log_det() - quad;
}

}  // namespace detail

/// log f(next | prev, H0) - log f(next | prev, H1), evaluated from the two
/// complex Gaussian densities directly.
inline double log_likelihood_oracle(const CsiMeasurement& prev, const CsiMeasurement& next,
                                    const ChannelStatistics& s) {
    require(prev.size() == s.dim() && next.size() == s.dim(), "log_likelihood_oracle: dimension mismatch");
    const CMatrix gain = s.lmmse_gain();
    const CVector mu0 = s.alpha * (gain * prev.values);
    const CVector mu1 = (s.beta / std::sqrt(s.theta)) * (gain * prev.values);
    return detail::complex_gaussian_logpdf(next.values, mu0, s.sigma_ba, "Sigma_ba") -
           detail::complex_gaussian_logpdf(next.values, mu1, s.sigma_ma, "Sigma_ma");
}

inline double pearson_correlation(const RVector& a, const RVector& b) {
    require(a.size() == b.size() && a.size() >= 2, "pearson: vectors must have equal length >= 2");
    const RVector da = a.array() - a.mean();
    const RVector db = b.array() - b.mean();
    const double va = da.squaredNorm();
    const double vb = db.squaredNorm();
    require(va > 0.0 && vb > 0.0, "pearson: zero-variance input");
    return std::clamp(da.dot(db) / std::sqrt(va * vb), -1.0, 1.0);
}

inline double pearson_statistic(const CsiMeasurement& prev, const CsiMeasurement& next,
                                PearsonMode mode = PearsonMode::complex_parts) {
    require(prev.size() == next.size(), "pearson_statistic: dimension mismatch");
    if (mode == PearsonMode::amplitude)
        return pearson_correlation(prev.values.cwiseAbs(), next.values.cwiseAbs());
    return pearson_correlation(realify_vector(prev), realify_vector(next));
}

/// Greater-is-legitimate; a statistic equal to the threshold is rogue.
inline Decision decide(double statistic, DecisionThreshold threshold) {
    return statistic > threshold.value ? Decision::legitimate : Decision::rogue;
}

// Binary dump: "NPCOEF01", u64 M', then A, B, C row-major with interleaved
// (re, im) little-endian doubles.
inline void save_coefficients(const std::string& path, const NpCoefficients& c) {
    std::ofstream os(path, std::ios::binary);
    require(static_cast<bool>(os), "cannot open " + path + " for writing");
    io::write_magic(os, "NPCOEF01");
    io::write_u64(os, static_cast<std::uint64_t>(c.dim()));
    io::write_matrix(os, c.A);
    io::write_matrix(os, c.B);
    io::write_matrix(os, c.C);
    require(static_cast<bool>(os), "write failed: " + path);
}

inline NpCoefficients load_coefficients(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    require(static_cast<bool>(is), "cannot open " + path);
    io::expect_magic(is, "NPCOEF01", path);
    const auto n = static_cast<Eigen::Index>(io::read_u64(is));
    require(n > 0 && n < 1 << 16, path + ": implausible dimension");
    NpCoefficients c;
    c.A = io::read_cmatrix(is, n, n);
    c.B = io::read_cmatrix(is, n, n);
    c.C = io::read_cmatrix(is, n, n);
    return c;
}

}  // namespace csiauth
