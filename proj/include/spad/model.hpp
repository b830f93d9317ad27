#pragma once

#include <cstdint>
#include <vector>

namespace spad {

// Physical parameters of a gated single-photon detector.
//
// The interval distribution depends on them only through the reduced triple
// (q, p0, d):
//   q  = exp(-mu*eta) * (1 - p_dark)   per-gate probability of no photon/dark count
//   d  = gate_period_s / tau_s          afterpulse decay per gate
// with the afterpulse probability m gates after an avalanche
//   P_a(m) = p0 * exp(-m * d).
struct DetectorParams {
    double mu = 0.0;             // mean photons per effective gate
    double eta = 1.0;            // overall detection efficiency
    double p_dark = 0.0;         // dark count probability per gate
    double p0 = 0.0;             // afterpulse amplitude, < 1
    double tau_s = 1.0;          // detrapping lifetime [s]
    double gate_period_s = 1.0;  // gating period T [s]

    double mu_eta() const { return mu * eta; }
    double decay_per_gate() const { return gate_period_s / tau_s; }

    // Throws std::invalid_argument on out-of-range fields. p_dark == 1 is
    // tolerated here (a detector that fires on every gate can still be
    // simulated under a gate-count stop); operations that need q < 1 or
    // q > 0 check at the call site.
    void validate() const;

    // Build params from the reduced triple; mu carries the whole mu*eta
    // product (eta = 1) and tau is reconstructed from the gate period.
    static DetectorParams from_reduced(double mu_eta, double p_dark, double p0,
                                       double decay_per_gate, double gate_period_s = 1.0);
};

enum class PmfMode {
    ExactProduct,  // survival term as the literal product of (1 - P_a(x))
    SecondOrder,   // survival term as 1 - alpha + beta
};

// The interval distribution in reduced coordinates. This is the layer the
// fitter optimizes over; the DetectorParams-level free functions below
// delegate here.
struct IntervalModel {
    double q = 1.0;   // geometric tail ratio, in [0, 1]
    double p0 = 0.0;  // afterpulse amplitude, in [0, 1)
    double d = 1.0;   // afterpulse decay per gate, > 0

    static IntervalModel from_params(const DetectorParams& p);

    // P_a(m) = p0 * exp(-m d), m >= 1.
    double afterpulse_prob(std::uint64_t m) const;

    // q * (1 - P_a(m)).
    double no_count_prob(std::uint64_t m) const;

    // prod_{x=1}^{m-1} (1 - P_a(x)); 1 for m = 1.
    double survival_exact(std::uint64_t m) const;

    // First-order expansion term: sum_{x=1}^{m-1} P_a(x).
    double alpha(std::uint64_t m) const;

    // Second-order expansion term: sum_{1 <= x < y <= m-1} P_a(x) P_a(y).
    double beta(std::uint64_t m) const;

    // P(m) = [1 - q (1 - P_a(m))] * q^{m-1} * S(m) with S the survival term
    // of the chosen mode. Throws std::domain_error when q == 1 (the
    // distribution would not be normalizable).
    double pmf(std::uint64_t m, PmfMode mode) const;

    // log10 P(m); stable for large m where the pmf itself underflows.
    // Returns -inf where the second-order survival term is <= 0.
    double log10_pmf(std::uint64_t m, PmfMode mode) const;

    // P(m) for m = 1..m_max in one O(m_max) pass.
    std::vector<double> pmf_prefix(std::uint64_t m_max, PmfMode mode) const;
    std::vector<double> log10_pmf_prefix(std::uint64_t m_max, PmfMode mode) const;

    // P_T = p0 / (exp(d) - 1).
    double total_afterpulse() const;
};

// --- DetectorParams-level operations ---------------------------------------

// P_a(m). Rejects m = 0 (the model starts at the first gate after a detection).
double afterpulse_prob(const DetectorParams& params, std::uint64_t m);

// P_nc(m) = exp(-mu eta) (1 - p_dark) (1 - P_a(m)).
double no_count_prob(const DetectorParams& params, std::uint64_t m);

// prod_{x=1}^{m-1} (1 - P_a(x)).
double survival_product_exact(const DetectorParams& params, std::uint64_t m);

// Expansion terms of the survival product.
double expansion_alpha(const DetectorParams& params, std::uint64_t m);
double expansion_beta(const DetectorParams& params, std::uint64_t m);

// Probability that the gap between consecutive detections is exactly m gates.
double interval_pmf(const DetectorParams& params, std::uint64_t m, PmfMode mode);

// P(1..m_max) in one pass.
std::vector<double> interval_pmf_prefix(const DetectorParams& params, std::uint64_t m_max,
                                        PmfMode mode);

// Total afterpulse probability P_T = p0 / (exp(T/tau) - 1).
double total_afterpulse(const DetectorParams& params);

// q = exp(-mu eta) (1 - p_dark), the geometric ratio of the interval tail.
double geometric_slope(const DetectorParams& params);

}  // namespace spad
