#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "spad/intervals.hpp"
#include "spad/model.hpp"

namespace spad {

enum class ResidualWeighting {
    Uniform,          // equal weight per log residual
    InverseVariance,  // weight by inverse Poisson variance of the log pmf
};

struct FitSeed {
    double q = 0.9;
    double p0 = 1e-6;
    double d = 0.5;
};

struct FitOptions {
    PmfMode mode = PmfMode::SecondOrder;

    // Bin policy: include bins 1..L where L is the last bin with
    // count >= k_min, skipping (or pseudo-counting) empty bins.
    std::uint64_t k_min = 5;
    bool drop_zero_bins = true;    // false: substitute a 0.5 pseudo-count
    std::uint64_t m_fit_max = 0;   // 0 = histogram m_max

    // Inverse-variance by default: with uniform weights the many near-empty
    // tail bins admitted by the k_min rule dominate the objective and bias
    // the estimates once ensembles grow large.
    ResidualWeighting weighting = ResidualWeighting::InverseVariance;

    // Pinning either value makes mu*eta and p_dark separately identifiable.
    std::optional<double> pin_p_dark;
    std::optional<double> pin_mu_eta;

    // Optional explicit start point; otherwise initial_guess() is used.
    std::optional<FitSeed> seed;

    int restarts = 3;  // additional simplex runs from perturbed best points
    int max_iterations = 4000;
    double objective_tol = 1e-12;
    double param_tol = 1e-9;

    int bootstrap_resamples = 0;  // 0 = no standard errors
    std::uint64_t bootstrap_seed = 1;
};

struct FitResidual {
    std::uint64_t m = 0;
    std::uint64_t count = 0;
    double log10_empirical = 0.0;
    double log10_model = 0.0;
};

struct FitStdErrors {
    double q = 0.0;
    double p0 = 0.0;
    double d = 0.0;
    double p_total = 0.0;
    int resamples = 0;
};

struct FitResult {
    double q_hat = 0.0;
    double p0_hat = 0.0;
    double d_hat = 0.0;        // T/tau per gate
    double tau_s_hat = 0.0;    // from the configured gate period
    double p_total_hat = 0.0;  // p0_hat / (exp(d_hat) - 1)

    // Only set when a pin makes the q = exp(-mu eta)(1 - p_dark) degeneracy
    // resolvable; with no pins only q_hat is reported.
    std::optional<double> mu_eta_hat;
    std::optional<double> p_dark_hat;

    // Coefficient of determination over the included bins. r_squared is
    // evaluated on the pmf itself, r_squared_log10 on the fitted log10
    // domain; absent when the data has zero variance.
    std::optional<double> r_squared;
    std::optional<double> r_squared_log10;

    std::vector<FitResidual> residuals;
    double objective = 0.0;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
    bool hit_bounds = false;

    std::optional<FitStdErrors> std_errors;
};

// Seed estimate from the histogram alone: tail line on log10 pmf for q, the
// early-bin excess over that line for p0 and d. Throws InsufficientStatistics
// when fewer than two usable tail bins exist.
FitSeed initial_guess(const IntervalHistogram& hist, const FitOptions& options = {});

// Weighted least squares of log10 model against log10 empirical pmf over the
// included bins. Deterministic given histogram and options. Non-convergence
// is reported through the converged flag with the best point found.
FitResult fit_model(const IntervalHistogram& hist, double gate_period_s,
                    const FitOptions& options = {});

// Recompute the pmf-domain R^2 of a result against a histogram.
std::optional<double> r_squared(const IntervalHistogram& hist, const FitResult& result,
                                const FitOptions& options = {});

// Afterpulse estimate independent of the full model fit: extrapolate the
// log-linear tail over every bin and compare areas; the excess above the
// line is attributed to afterpulses. knee_exclusion = 0 picks the knee
// automatically (first bin whose excess over the tail line is below twice
// its counting noise).
double area_ratio_afterpulse(const IntervalHistogram& hist, std::uint64_t knee_exclusion = 0,
                             const FitOptions& options = {});

// The automatic knee choice used by area_ratio_afterpulse.
std::uint64_t default_knee_exclusion(const IntervalHistogram& hist,
                                     const FitOptions& options = {});

struct DecompositionResult {
    double eta_hat = 0.0;
    double p_dark_hat = 0.0;
    double eta_stderr = 0.0;
    double p_dark_stderr = 0.0;
    double slope = 0.0;      // regression of ln q on mu: slope = -eta
    double intercept = 0.0;  // ln(1 - p_dark)
};

// Split q into eta and p_dark from runs at two or more known mu values:
// ln q = -eta mu + ln(1 - p_dark). Throws on fewer than two distinct mu.
DecompositionResult decompose_efficiency(std::span<const std::pair<double, double>> mu_and_q);

// Normalized detector response across a gate, from a delay scan.
struct DelayScanProfile {
    std::vector<double> delay_s;  // strictly increasing
    std::vector<double> rate;     // normalized to unit peak

    void validate() const;  // throws std::invalid_argument
    static DelayScanProfile from_counts(std::vector<double> delay_s,
                                        std::vector<double> counts);
};

// Equivalent-area width: integral of the normalized response over delay,
// by the trapezoid rule. Requires at least three samples.
double effective_gate_width(const DelayScanProfile& profile);

}  // namespace spad
