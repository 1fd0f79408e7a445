// SPDX-License-Identifier: Apache-2.0
#ifndef IFDD_FFT_HPP
#define IFDD_FFT_HPP

#include <map>
#include <memory>
#include <span>

#include "ifdd/core.hpp"

namespace ifdd::detail {

// Unnormalised DFT plan. Power-of-two sizes use an iterative radix-2
// transform; other sizes fall back to direct summation.
class FftPlan {
public:
    explicit FftPlan(std::size_t n) : n_(n), pow2_(n != 0 && (n & (n - 1)) == 0) {
        twiddle_.resize(n);
        for (std::size_t k = 0; k < n; ++k)
            twiddle_[k] = std::polar(1.0, -2.0 * kPi * static_cast<double>(k) / static_cast<double>(n));
        if (pow2_) {
            bitrev_.resize(n);
            std::size_t bits = 0;
            while ((std::size_t{1} << bits) < n) ++bits;
            for (std::size_t i = 0; i < n; ++i) {
                std::size_t r = 0;
                for (std::size_t b = 0; b < bits; ++b)
                    if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
                bitrev_[i] = r;
            }
        }
    }

    std::size_t size() const { return n_; }

    // forward: X[k] = sum x[n] e^{-j2pi kn/N}; inverse uses e^{+j...}. No scaling.
    void transform(std::span<cplx> data, bool inverse) const {
        if (pow2_)
            radix2(data, inverse);
        else
            direct(data, inverse);
    }

private:
    cplx tw(std::size_t k, bool inverse) const {
        const cplx w = twiddle_[k % n_];
        return inverse ? std::conj(w) : w;
    }

    void radix2(std::span<cplx> a, bool inverse) const {
        for (std::size_t i = 0; i < n_; ++i)
            if (i < bitrev_[i]) std::swap(a[i], a[bitrev_[i]]);
        for (std::size_t len = 2; len <= n_; len <<= 1) {
            const std::size_t half = len / 2;
            const std::size_t step = n_ / len;
            for (std::size_t i = 0; i < n_; i += len) {
                for (std::size_t j = 0; j < half; ++j) {
                    const cplx u = a[i + j];
                    const cplx v = a[i + j + half] * tw(j * step, inverse);
                    a[i + j] = u + v;
                    a[i + j + half] = u - v;
                }
            }
        }
    }

    void direct(std::span<cplx> a, bool inverse) const {
        CVec out(n_);
        for (std::size_t k = 0; k < n_; ++k) {
            cplx acc{};
            for (std::size_t m = 0; m < n_; ++m) acc += a[m] * tw(k * m, inverse);
            out[k] = acc;
        }
        std::copy(out.begin(), out.end(), a.begin());
    }

    std::size_t n_;
    bool pow2_;
    CVec twiddle_;
    std::vector<std::size_t> bitrev_;
};

inline const FftPlan& plan_for(std::size_t n) {
    thread_local std::map<std::size_t, std::unique_ptr<FftPlan>> cache;
    auto& slot = cache[n];
    if (!slot) slot = std::make_unique<FftPlan>(n);
    return *slot;
}

/// Unitary DFT (1/sqrt(N) on both directions).
inline void unitary_dft(std::span<cplx> data, bool inverse) {
    plan_for(data.size()).transform(data, inverse);
    const double scale = 1.0 / std::sqrt(static_cast<double>(data.size()));
    for (auto& x : data) x *= scale;
}

}  // namespace ifdd::detail

#endif  // IFDD_FFT_HPP
