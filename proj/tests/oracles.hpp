// SPDX-License-Identifier: Apache-2.0
// Slow, obviously-correct reference computations the library is checked against.
#ifndef IFDD_TESTS_ORACLES_HPP
#define IFDD_TESTS_ORACLES_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;
inline constexpr double pi = 3.14159265358979323846;

/// X[k] = (1/sqrt(N)) sum_n x[n] e^{-j2pi kn/N}, or the inverse.
inline std::vector<cplx> dft(const std::vector<cplx>& x, bool inverse = false) {
    const std::size_t n = x.size();
    const double sign = inverse ? 1.0 : -1.0;
    std::vector<cplx> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        cplx acc{};
        for (std::size_t t = 0; t < n; ++t) {
            const double arg = sign * 2.0 * pi * static_cast<double>((k * t) % n) / static_cast<double>(n);
            acc += x[t] * std::polar(1.0, arg);
        }
        out[k] = acc / std::sqrt(static_cast<double>(n));
    }
    return out;
}

/// (1/N) sum_{n<N} e^{j2pi f n / B}, term by term.
inline cplx dirichlet(double f_hz, double bandwidth_hz, std::size_t n_sub) {
    cplx acc{};
    for (std::size_t n = 0; n < n_sub; ++n) acc += std::polar(1.0, 2.0 * pi * f_hz * static_cast<double>(n) / bandwidth_hz);
    return acc / static_cast<double>(n_sub);
}

/// Average SIR on subcarrier l: |G(f)|^2 / sum_{n != l} |G((n - l) f_sub + f)|^2.
inline double sir(double f_hz, std::size_t l, double bandwidth_hz, std::size_t n_sub) {
    const double fsub = bandwidth_hz / static_cast<double>(n_sub);
    const double s = std::norm(dirichlet(f_hz, bandwidth_hz, n_sub));
    double i = 0.0;
    for (std::size_t n = 0; n < n_sub; ++n) {
        if (n == l) continue;
        const double shift = (static_cast<double>(n) - static_cast<double>(l)) * fsub;
        i += std::norm(dirichlet(shift + f_hz, bandwidth_hz, n_sub));
    }
    return s / i;
}

/// J0 by its power series; accurate to ~1e-15 for |x| < 10.
inline double bessel_j0(double x) {
    double term = 1.0, sum = 1.0;
    const double q = -x * x / 4.0;
    for (int k = 1; k < 60; ++k) {
        term *= q / (static_cast<double>(k) * static_cast<double>(k));
        sum += term;
    }
    return sum;
}

/// Frequency correlation of L+1 equal taps at unit subcarrier spacing, by summation.
inline double uniform_pdp_correlation(std::size_t n_taps, std::size_t n_sub) {
    cplx acc{};
    for (std::size_t t = 0; t < n_taps; ++t)
        acc += std::polar(1.0, -2.0 * pi * static_cast<double>(t) / static_cast<double>(n_sub));
    return std::abs(acc) / static_cast<double>(n_taps);
}

inline double h2(double p) {
    if (p <= 0.0 || p >= 1.0) return 0.0;
    return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

/// Components with amplitude density rising linearly to `a`: |x| = a sqrt(U), random sign.
inline std::vector<cplx> triangular_signal(std::size_t n, double a, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::bernoulli_distribution sign(0.5);
    std::vector<cplx> out(n);
    for (auto& x : out) {
        const double re = a * std::sqrt(u(rng)) * (sign(rng) ? 1.0 : -1.0);
        const double im = a * std::sqrt(u(rng)) * (sign(rng) ? 1.0 : -1.0);
        x = {re, im};
    }
    return out;
}

}  // namespace oracle

#endif  // IFDD_TESTS_ORACLES_HPP
