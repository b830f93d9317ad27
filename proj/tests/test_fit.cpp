#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "spad/errors.hpp"
#include "spad/fit.hpp"
#include "spad/intervals.hpp"
#include "spad/model.hpp"
#include "spad/simulate.hpp"
#include "test_helpers.hpp"

using namespace spad;
using test::rel_diff;

namespace {

// Histogram whose empirical pmf equals the analytic model to quantization.
IntervalHistogram analytic_histogram(const IntervalModel& im, PmfMode mode,
                                     std::uint64_t m_max, double scale = 1e15) {
    const std::vector<double> pmf = im.pmf_prefix(m_max, mode);
    std::vector<std::uint64_t> counts(m_max, 0);
    for (std::uint64_t m = 1; m <= m_max; ++m) {
        counts[m - 1] = static_cast<std::uint64_t>(std::llround(pmf[m - 1] * scale));
    }
    return IntervalHistogram(std::move(counts));
}

IntervalHistogram simulated_histogram(const DetectorParams& params, std::uint64_t detections,
                                      std::uint64_t seed, std::uint64_t m_max = 10000) {
    SimConfig c;
    c.params = params;
    c.stop = StopCondition::detections(detections);
    c.seed = seed;
    return build_histogram(extract_intervals(simulate_stream(c)), m_max);
}

}  // namespace

TEST_CASE("initial_guess on geometric data") {
    // pure geometric simulated run: q seed lands within 1e-3 of truth
    const double q = 0.95;
    DetectorParams p = DetectorParams::from_reduced(-std::log(q), 0.0, 0.0, 1.0);
    const IntervalHistogram hist = simulated_histogram(p, 1000001, 5);
    const FitSeed seed = initial_guess(hist);
    CHECK(std::abs(seed.q - q) < 1e-3);
}

TEST_CASE("initial_guess slope from two exact bins") {
    // two usable bins on an exact geometric decade: the line is determined
    std::vector<std::uint64_t> counts(10, 0);
    counts[1] = 900;  // m = 2
    counts[2] = 810;  // m = 3, ratio 0.9
    const IntervalHistogram hist{std::move(counts)};
    const FitSeed seed = initial_guess(hist);
    CHECK(seed.q == doctest::Approx(0.9).epsilon(1e-12));
}

TEST_CASE("initial_guess rejects degenerate histograms") {
    std::vector<std::uint64_t> counts(10, 0);
    counts[0] = 5000;  // everything in bin 1
    const IntervalHistogram hist{std::move(counts)};
    CHECK_THROWS_AS(initial_guess(hist), InsufficientStatistics);

    const IntervalHistogram empty(10);
    CHECK_THROWS_AS(initial_guess(empty), InsufficientStatistics);
}

TEST_CASE("fit recovers parameters from noise-free model data") {
    const IntervalModel truth{0.9878741, 0.0185, 0.25};
    for (PmfMode mode : {PmfMode::SecondOrder, PmfMode::ExactProduct}) {
        const IntervalHistogram hist = analytic_histogram(truth, mode, 3000);
        FitOptions opt;
        opt.mode = mode;
        const FitResult r = fit_model(hist, 1e-6, opt);
        REQUIRE(r.converged);
        CHECK(rel_diff(r.q_hat, truth.q) < 1e-6);
        CHECK(rel_diff(r.p0_hat, truth.p0) < 1e-3);
        CHECK(rel_diff(r.d_hat, truth.d) < 1e-3);
        CHECK(rel_diff(r.p_total_hat, truth.total_afterpulse()) < 1e-3);
        CHECK(r.tau_s_hat == doctest::Approx(1e-6 / r.d_hat));
        REQUIRE(r.r_squared.has_value());
        REQUIRE(r.r_squared_log10.has_value());
        CHECK(*r.r_squared > 1.0 - 1e-9);
        CHECK(*r.r_squared_log10 > 1.0 - 1e-6);
        CHECK_FALSE(r.mu_eta_hat.has_value());  // no pin: q only
        CHECK_FALSE(r.p_dark_hat.has_value());
        CHECK(r.p_total_hat ==
              doctest::Approx(r.p0_hat / std::expm1(r.d_hat)).epsilon(1e-12));
    }
}

TEST_CASE("fit is deterministic and idempotent") {
    const IntervalModel truth{0.98, 0.03, 0.4};
    const IntervalHistogram hist = analytic_histogram(truth, PmfMode::SecondOrder, 1500);
    const FitResult a = fit_model(hist, 1.0);
    const FitResult b = fit_model(hist, 1.0);
    CHECK(a.q_hat == b.q_hat);
    CHECK(a.p0_hat == b.p0_hat);
    CHECK(a.d_hat == b.d_hat);
    CHECK(a.objective == b.objective);

    // refit from the converged point: objective cannot move materially
    FitOptions warm;
    warm.seed = FitSeed{a.q_hat, a.p0_hat, a.d_hat};
    const FitResult c = fit_model(hist, 1.0, warm);
    CHECK(a.objective - c.objective < 1e-9 * (1.0 + a.objective));
    CHECK(rel_diff(a.q_hat, c.q_hat) < 1e-6);
}

TEST_CASE("fit closure on a simulated run with pinned dark counts") {
    const double mu_eta = 0.012, p_dark = 2e-4, d = 0.25;
    const double p_total = 0.065;
    const double p0 = p_total * std::expm1(d);
    DetectorParams p = DetectorParams::from_reduced(mu_eta, p_dark, p0, d);
    const IntervalHistogram hist = simulated_histogram(p, 500001, 404);

    FitOptions opt;
    opt.pin_p_dark = p_dark;
    const FitResult r = fit_model(hist, 1e-6, opt);
    REQUIRE(r.converged);
    REQUIRE(r.mu_eta_hat.has_value());
    CHECK(rel_diff(*r.mu_eta_hat, mu_eta) < 0.015);
    CHECK(rel_diff(r.p_total_hat, p_total) < 0.08);
    CHECK(*r.p_dark_hat == p_dark);
}

TEST_CASE("fit on afterpulse-free data reports a negligible p_total") {
    const double q = 0.988;
    DetectorParams p = DetectorParams::from_reduced(-std::log(q), 0.0, 0.0, 1.0);
    const IntervalHistogram hist = simulated_histogram(p, 500001, 1717);

    FitOptions opt;
    opt.bootstrap_resamples = 40;
    opt.bootstrap_seed = 7;
    const FitResult r = fit_model(hist, 1.0, opt);
    REQUIRE(r.converged);
    CHECK(r.p_total_hat < 1e-3);
    REQUIRE(r.std_errors.has_value());
    CHECK(r.std_errors->q > 0.0);
    CHECK(std::abs(r.q_hat - q) < 3.5 * r.std_errors->q);

    // bootstrap errors are reproducible
    const FitResult r2 = fit_model(hist, 1.0, opt);
    CHECK(r.std_errors->q == r2.std_errors->q);
    CHECK(r.std_errors->p_total == r2.std_errors->p_total);
}

TEST_CASE("pinning mu_eta reports dark counts instead") {
    const IntervalModel truth{0.9878741, 0.0185, 0.25};  // q for mu_eta=0.012, Pd=2e-4
    const IntervalHistogram hist = analytic_histogram(truth, PmfMode::SecondOrder, 3000);
    FitOptions opt;
    opt.pin_mu_eta = 0.012;
    const FitResult r = fit_model(hist, 1.0, opt);
    REQUIRE(r.p_dark_hat.has_value());
    CHECK(*r.p_dark_hat == doctest::Approx(2e-4).epsilon(0.02));
    CHECK(*r.mu_eta_hat == 0.012);

    // both pins fix q entirely
    FitOptions both;
    both.pin_mu_eta = 0.012;
    both.pin_p_dark = 2e-4;
    const FitResult rb = fit_model(hist, 1.0, both);
    CHECK(rb.q_hat == doctest::Approx(truth.q).epsilon(1e-7));
    CHECK(rel_diff(rb.p0_hat, truth.p0) < 1e-3);
}

TEST_CASE("r_squared is absent for zero-variance data") {
    std::vector<std::uint64_t> counts = {50, 50};
    const IntervalHistogram hist{std::move(counts)};
    FitResult fake;
    fake.q_hat = 0.5;
    fake.p0_hat = 0.0;
    fake.d_hat = 1.0;
    FitOptions opt;
    opt.k_min = 5;
    CHECK_FALSE(r_squared(hist, fake, opt).has_value());
}

TEST_CASE("area ratio on analytic data with known total afterpulse") {
    const double d = 0.25;
    const double p_total = 0.05;
    const IntervalModel im{0.9878741, p_total * std::expm1(d), d};
    const IntervalHistogram hist = analytic_histogram(im, PmfMode::ExactProduct, 2000, 1e12);
    const double est = area_ratio_afterpulse(hist);
    CHECK(rel_diff(est, p_total) < 0.05);
}

TEST_CASE("area ratio is near zero without afterpulsing") {
    const double q = 0.988;
    DetectorParams p = DetectorParams::from_reduced(-std::log(q), 0.0, 0.0, 1.0);
    const IntervalHistogram hist = simulated_histogram(p, 300001, 2121);
    CHECK(area_ratio_afterpulse(hist) < 0.005);
}

TEST_CASE("area ratio agrees with the fitted total afterpulse") {
    const double d = 0.25;
    const double p_total = 0.065;
    DetectorParams p =
        DetectorParams::from_reduced(0.012, 2e-4, p_total * std::expm1(d), d);
    const IntervalHistogram hist = simulated_histogram(p, 2000001, 31415);

    FitOptions opt;
    opt.pin_p_dark = 2e-4;
    const FitResult r = fit_model(hist, 1e-6, opt);
    const double area = area_ratio_afterpulse(hist);
    CHECK(rel_diff(area, r.p_total_hat) < 0.08);
}

TEST_CASE("decompose_efficiency recovers eta and dark counts exactly") {
    const double eta = 0.15, p_dark = 2e-4;
    std::vector<std::pair<double, double>> runs;
    for (double mu : {0.04, 0.08, 0.16, 0.32}) {
        DetectorParams p;
        p.mu = mu;
        p.eta = eta;
        p.p_dark = p_dark;
        runs.emplace_back(mu, geometric_slope(p));
    }
    const DecompositionResult r = decompose_efficiency(runs);
    CHECK(r.eta_hat == doctest::Approx(eta).epsilon(1e-12));
    CHECK(r.p_dark_hat == doctest::Approx(p_dark).epsilon(1e-9));
    CHECK(r.eta_stderr == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("decompose_efficiency rejects degenerate designs") {
    std::vector<std::pair<double, double>> one = {{0.08, 0.99}};
    CHECK_THROWS_AS(decompose_efficiency(one), std::invalid_argument);

    std::vector<std::pair<double, double>> same = {{0.08, 0.99}, {0.08, 0.988}};
    CHECK_THROWS_AS(decompose_efficiency(same), std::invalid_argument);

    std::vector<std::pair<double, double>> badq = {{0.04, 0.99}, {0.08, 0.0}};
    CHECK_THROWS_AS(decompose_efficiency(badq), std::invalid_argument);
}

TEST_CASE("effective gate width on analytic profiles") {
    // rectangle sampled on its support: exactly the width
    DelayScanProfile rect;
    for (int i = 0; i <= 5; ++i) {
        rect.delay_s.push_back(static_cast<double>(i) * 1e-9);
        rect.rate.push_back(1.0);
    }
    CHECK(effective_gate_width(rect) == doctest::Approx(5e-9).epsilon(1e-12));

    // triangle of base B: B/2
    DelayScanProfile tri;
    tri.delay_s = {0.0, 4e-9, 8e-9};
    tri.rate = {0.0, 1.0, 0.0};
    CHECK(effective_gate_width(tri) == doctest::Approx(4e-9).epsilon(1e-12));

    // Gaussian of width sigma: sigma sqrt(2 pi) within trapezoid error
    DelayScanProfile gauss;
    const double sigma = 1e-9;
    for (int i = -160; i <= 160; ++i) {
        const double t = static_cast<double>(i) * 0.05 * sigma;
        gauss.delay_s.push_back(t);
        gauss.rate.push_back(std::exp(-0.5 * (t / sigma) * (t / sigma)));
    }
    CHECK(effective_gate_width(gauss) ==
          doctest::Approx(sigma * 2.5066282746310005).epsilon(1e-6));
}

TEST_CASE("gate width input validation") {
    DelayScanProfile bad;
    bad.delay_s = {0.0, 1.0, 1.0};
    bad.rate = {0.0, 1.0, 0.0};
    CHECK_THROWS_AS(effective_gate_width(bad), std::invalid_argument);

    bad.delay_s = {0.0, 1.0, 2.0};
    bad.rate = {0.0, 0.5, 0.0};  // peak != 1
    CHECK_THROWS_AS(effective_gate_width(bad), std::invalid_argument);

    bad.delay_s = {0.0, 1.0};
    bad.rate = {0.0, 1.0};
    CHECK_THROWS_AS(effective_gate_width(bad), std::invalid_argument);

    // normalization from raw counts
    const DelayScanProfile p =
        DelayScanProfile::from_counts({0.0, 1.0, 2.0, 3.0}, {0.0, 200.0, 200.0, 0.0});
    CHECK(p.rate[1] == 1.0);
    CHECK(effective_gate_width(p) == doctest::Approx(2.0));
}

TEST_CASE("estimator spread shrinks like one over sqrt N") {
    const double d = 0.25;
    const double p0 = 0.065 * std::expm1(d);
    DetectorParams p = DetectorParams::from_reduced(0.012, 2e-4, p0, d);
    FitOptions opt;
    opt.pin_p_dark = 2e-4;

    std::vector<double> log_n, log_spread;
    int stream = 0;
    for (std::uint64_t n : {3000ull, 30000ull, 300000ull}) {
        std::vector<double> estimates;
        for (int run = 0; run < 16; ++run) {
            const IntervalHistogram hist = simulated_histogram(
                p, n + 1, derive_stream_seed(606, static_cast<std::uint64_t>(stream++)));
            estimates.push_back(*fit_model(hist, 1e-6, opt).mu_eta_hat);
        }
        log_n.push_back(std::log(static_cast<double>(n)));
        log_spread.push_back(std::log(test::stddev(estimates)));
    }
    // least-squares slope through the three points
    const double mx = test::mean(log_n), my = test::mean(log_spread);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < log_n.size(); ++i) {
        sxx += (log_n[i] - mx) * (log_n[i] - mx);
        sxy += (log_n[i] - mx) * (log_spread[i] - my);
    }
    const double slope = sxy / sxx;
    CHECK(slope == doctest::Approx(-0.5).epsilon(0.3));  // -0.5 +- 0.15
}
