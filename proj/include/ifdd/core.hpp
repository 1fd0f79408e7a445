// SPDX-License-Identifier: Apache-2.0
#ifndef IFDD_CORE_HPP
#define IFDD_CORE_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace ifdd {

using cplx = std::complex<double>;
using CVec = std::vector<cplx>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kSpeedOfLight = 299792458.0;

/// Invalid numerology, frame layout or block length.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Input outside the mathematical domain of an operation (zero pilot, zero-norm vector).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A delay exceeds the cyclic prefix, so subcarrier orthogonality cannot hold.
class OrthogonalityError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

enum class Duplex { tdd, ifdd };

inline const char* to_string(Duplex mode) { return mode == Duplex::tdd ? "TDD" : "IFDD"; }

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

inline double energy(const CVec& v) {
    double e = 0.0;
    for (const auto& x : v) e += std::norm(x);
    return e;
}

/// splitmix64 finaliser; used for counter-based seed derivation.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed for (stream, index) under a master seed. Independent of evaluation order.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
    return mix64(mix64(master ^ mix64(stream)) + index);
}

}  // namespace ifdd

#endif  // IFDD_CORE_HPP
