#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "spad/model.hpp"

namespace spad::test {

inline double rel_diff(double a, double b) {
    if (a == b) {
        return 0.0;
    }
    return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
}

// Brute-force definitions of the expansion terms; these are the ground truth
// the closed forms are checked against.
inline double brute_survival(double p0, double d, std::uint64_t m) {
    long double prod = 1.0L;
    for (std::uint64_t x = 1; x < m; ++x) {
        prod *= 1.0L - static_cast<long double>(p0) * std::exp(-static_cast<long double>(x) * d);
    }
    return static_cast<double>(prod);
}

inline double brute_alpha(double p0, double d, std::uint64_t m) {
    long double sum = 0.0L;
    for (std::uint64_t x = 1; x < m; ++x) {
        sum += static_cast<long double>(p0) * std::exp(-static_cast<long double>(x) * d);
    }
    return static_cast<double>(sum);
}

inline double brute_beta(double p0, double d, std::uint64_t m) {
    long double sum = 0.0L;
    for (std::uint64_t x = 1; x < m; ++x) {
        for (std::uint64_t y = x + 1; y < m; ++y) {
            sum += static_cast<long double>(p0) * std::exp(-static_cast<long double>(x) * d) *
                   static_cast<long double>(p0) * std::exp(-static_cast<long double>(y) * d);
        }
    }
    return static_cast<double>(sum);
}

// Random parameter sets inside the physically interesting box.
struct ParamSampler {
    std::mt19937_64 rng;

    explicit ParamSampler(std::uint64_t seed) : rng(seed) {}

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
    }

    DetectorParams draw() {
        DetectorParams p;
        p.mu = uniform(1e-3, 0.1);
        p.eta = 1.0;
        p.p_dark = uniform(0.0, 1e-3);
        p.p0 = uniform(0.0, 0.15);
        p.gate_period_s = 1e-6;
        p.tau_s = p.gate_period_s / uniform(0.05, 2.0);
        return p;
    }
};

inline double mean(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) {
        s += x;
    }
    return s / static_cast<double>(v.size());
}

inline double stddev(std::span<const double> v) {
    const double m = mean(v);
    double ss = 0.0;
    for (double x : v) {
        ss += (x - m) * (x - m);
    }
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace spad::test
