#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace csiauth {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

/// Thrown on any contract violation (bad arguments, singular matrices,
/// malformed files). The message names the offending quantity.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw Error(msg);
}

using Rng = std::mt19937_64;

// Substream purposes. A single master seed fans out into independent
// generators so each consumer is reproducible on its own.
enum class Stream : std::uint64_t {
    taps = 1,
    innovation_legit = 2,
    innovation_attacker = 3,
    noise = 4,
    shuffle = 5,
    label = 6,
    model_init = 7,
    training = 8,
    split = 9,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t purpose) {
    return splitmix64(splitmix64(master) ^ splitmix64(purpose + 0x632be59bd9b4e019ULL));
}

inline Rng substream(std::uint64_t master, Stream purpose) {
    return Rng(derive_seed(master, static_cast<std::uint64_t>(purpose)));
}

/// Circularly-symmetric complex Gaussian with E|z|^2 = variance.
inline cplx complex_normal(Rng& rng, double variance) {
    if (variance <= 0.0) return {0.0, 0.0};
    std::normal_distribution<double> n(0.0, std::sqrt(variance / 2.0));
    const double re = n(rng);
    const double im = n(rng);
    return {re, im};
}

}  // namespace csiauth

#include <iostream>

namespace csiauth {

inline void warn(const std::string& msg) { std::cerr << "warning: " << msg << '\n'; }

}  // namespace csiauth
