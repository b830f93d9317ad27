#include "spad/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "spad/errors.hpp"
#include "spad/simplex.hpp"

namespace spad {

namespace {

constexpr double kHugeObjective = 1e100;

double clamp(double v, double lo, double hi) {
    return std::min(std::max(v, lo), hi);
}

double logit(double p) {
    return std::log(p / (1.0 - p));
}

double sigmoid(double t) {
    return 1.0 / (1.0 + std::exp(-t));
}

struct Bin {
    std::uint64_t m = 0;
    std::uint64_t count = 0;
    double count_eff = 0.0;  // pseudo-count for empty bins when not dropping
    double log10_pmf = 0.0;
    double weight = 1.0;
};

struct BinData {
    std::vector<Bin> bins;
    std::uint64_t last_m = 0;  // largest included gap
    double total = 0.0;
    std::uint64_t usable = 0;  // bins with count >= k_min
    std::uint64_t k_min = 1;
};

BinData prepare_bins(const IntervalHistogram& hist, const FitOptions& options) {
    if (options.k_min == 0) {
        throw std::invalid_argument("FitOptions: k_min must be >= 1");
    }
    if (hist.total() == 0) {
        throw InsufficientStatistics("histogram is empty");
    }
    const std::uint64_t limit = options.m_fit_max == 0
                                    ? hist.m_max()
                                    : std::min(options.m_fit_max, hist.m_max());

    std::uint64_t last = 0;
    for (std::uint64_t m = limit; m >= 1; --m) {
        if (hist.count(m) >= options.k_min) {
            last = m;
            break;
        }
    }
    if (last == 0) {
        throw InsufficientStatistics("no bin reaches the k_min count threshold");
    }

    BinData data;
    data.total = static_cast<double>(hist.total());
    data.last_m = last;
    data.k_min = options.k_min;
    for (std::uint64_t m = 1; m <= last; ++m) {
        const std::uint64_t c = hist.count(m);
        if (c == 0 && options.drop_zero_bins) {
            continue;
        }
        Bin b;
        b.m = m;
        b.count = c;
        b.count_eff = c == 0 ? 0.5 : static_cast<double>(c);
        b.log10_pmf = std::log10(b.count_eff / data.total);
        b.weight = options.weighting == ResidualWeighting::Uniform ? 1.0 : b.count_eff;
        if (c >= options.k_min) {
            ++data.usable;
        }
        data.bins.push_back(b);
    }
    return data;
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};

LineFit weighted_line_fit(std::span<const double> x, std::span<const double> y,
                          std::span<const double> w) {
    double sw = 0.0, sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sw += w[i];
        sx += w[i] * x[i];
        sy += w[i] * y[i];
    }
    const double mx = sx / sw;
    const double my = sy / sw;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += w[i] * (x[i] - mx) * (x[i] - mx);
        sxy += w[i] * (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) {
        throw std::invalid_argument("line fit: degenerate abscissa");
    }
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    return f;
}

// Reference straight line through the geometric tail of the histogram; the
// seed estimate and the knee finder both hang off it. Bins below a count
// floor are left out: near-empty bins carry a large log bias once zero
// counts are dropped, and they sit at the far end of the lever arm. The
// later half of the floor-passing bins is used so the afterpulse bend stays
// out of the reference.
struct RefLine {
    LineFit line;
    std::uint64_t region_start = 0;  // first gap the line was fitted on
};

RefLine reference_tail_line(const BinData& data) {
    const double floor = std::max(static_cast<double>(data.k_min),
                                  std::min(30.0, data.total / 1000.0));
    std::vector<const Bin*> solid;
    for (const Bin& b : data.bins) {
        if (b.count_eff >= floor) {
            solid.push_back(&b);
        }
    }
    if (solid.size() < 4) {
        solid.clear();
        for (const Bin& b : data.bins) {
            solid.push_back(&b);
        }
    }
    std::size_t start = solid.size() / 2;
    if (solid.size() - start < 2) {
        start = solid.size() - 2;
    }
    std::vector<double> x, y, w;
    for (std::size_t i = start; i < solid.size(); ++i) {
        x.push_back(static_cast<double>(solid[i]->m));
        y.push_back(solid[i]->log10_pmf);
        w.push_back(solid[i]->count_eff);
    }
    RefLine out;
    out.line = weighted_line_fit(x, y, w);
    out.region_start = solid[start]->m;
    return out;
}

// Free parameters in unconstrained coordinates. q may be pinned away when
// both p_dark and mu*eta are fixed by the caller.
struct ParamMap {
    bool q_free = true;
    double q_fixed = 0.0;

    std::size_t dim() const { return q_free ? 3 : 2; }

    std::vector<double> encode(const FitSeed& s) const {
        const double q = clamp(s.q, 1e-15, 1.0 - 1e-15);
        const double p0 = clamp(s.p0, 1e-15, 1.0 - 1e-15);
        const double d = clamp(s.d, 1e-12, 1e6);
        if (q_free) {
            return {logit(q), logit(p0), std::log(d)};
        }
        return {logit(p0), std::log(d)};
    }

    IntervalModel decode(std::span<const double> theta) const {
        IntervalModel m;
        if (q_free) {
            m.q = sigmoid(theta[0]);
            m.p0 = sigmoid(theta[1]);
            m.d = std::exp(theta[2]);
        } else {
            m.q = q_fixed;
            m.p0 = sigmoid(theta[0]);
            m.d = std::exp(theta[1]);
        }
        return m;
    }

    bool near_bounds(std::span<const double> theta) const {
        for (double t : theta) {
            if (std::abs(t) > 30.0) {
                return true;
            }
        }
        return false;
    }
};

double fit_objective(const BinData& data, PmfMode mode, const IntervalModel& model) {
    if (model.q <= 0.0 || model.q >= 1.0 || !(model.d > 0.0) || !std::isfinite(model.d)) {
        return kHugeObjective;
    }
    const std::vector<double> lg = model.log10_pmf_prefix(data.last_m, mode);
    double sum = 0.0;
    for (const Bin& b : data.bins) {
        const double lm = lg[b.m - 1];
        if (!std::isfinite(lm)) {
            return kHugeObjective;
        }
        const double r = b.log10_pmf - lm;
        sum += b.weight * r * r;
    }
    return std::isfinite(sum) ? sum : kHugeObjective;
}

struct RSquaredPair {
    std::optional<double> linear;
    std::optional<double> log10;
};

RSquaredPair compute_r_squared(const BinData& data, PmfMode mode, const IntervalModel& model) {
    const std::vector<double> lg = model.log10_pmf_prefix(data.last_m, mode);
    double my = 0.0, mly = 0.0;
    for (const Bin& b : data.bins) {
        my += b.count_eff / data.total;
        mly += b.log10_pmf;
    }
    const double n = static_cast<double>(data.bins.size());
    my /= n;
    mly /= n;
    double ss_res = 0.0, ss_tot = 0.0, lss_res = 0.0, lss_tot = 0.0;
    for (const Bin& b : data.bins) {
        const double y = b.count_eff / data.total;
        const double yhat = std::pow(10.0, lg[b.m - 1]);
        ss_res += (y - yhat) * (y - yhat);
        ss_tot += (y - my) * (y - my);
        const double lr = b.log10_pmf - lg[b.m - 1];
        lss_res += lr * lr;
        lss_tot += (b.log10_pmf - mly) * (b.log10_pmf - mly);
    }
    RSquaredPair out;
    if (ss_tot > 0.0) {
        out.linear = 1.0 - ss_res / ss_tot;
    }
    if (lss_tot > 0.0) {
        out.log10 = 1.0 - lss_res / lss_tot;
    }
    return out;
}

FitSeed seed_from_bins(const BinData& data) {
    if (data.usable < 2) {
        throw InsufficientStatistics("initial guess needs >= 2 tail bins above the count "
                                     "threshold");
    }
    const RefLine ref = reference_tail_line(data);
    FitSeed seed;
    seed.q = clamp(std::pow(10.0, ref.line.slope), 1e-6, 1.0 - 1e-9);

    // Bins above the extrapolated line, before the tail region, carry the
    // afterpulse knee: their relative excess decays like exp(-d m).
    std::vector<double> xs, ys;
    for (const Bin& b : data.bins) {
        if (b.m >= ref.region_start) {
            break;
        }
        const double line_pmf = std::pow(
            10.0, ref.line.intercept + ref.line.slope * static_cast<double>(b.m));
        const double ratio = b.count_eff / data.total / line_pmf - 1.0;
        if (ratio > 0.0) {
            xs.push_back(static_cast<double>(b.m));
            ys.push_back(std::log(ratio));
        }
    }
    if (xs.size() >= 2) {
        std::vector<double> w(xs.size(), 1.0);
        const LineFit excess = weighted_line_fit(xs, ys, w);
        seed.d = clamp(-excess.slope, 1e-3, 6.0);
        // excess ratio ~ q P_a(m) / (1 - q) => p0 = exp(intercept) (1 - q) / q
        seed.p0 = clamp(std::exp(excess.intercept) * (1.0 - seed.q) / seed.q, 1e-9, 0.9);
    } else {
        seed.p0 = 1e-6;
        seed.d = 0.5;
    }
    return seed;
}

}  // namespace

FitSeed initial_guess(const IntervalHistogram& hist, const FitOptions& options) {
    return seed_from_bins(prepare_bins(hist, options));
}

namespace {

FitResult run_fit(const BinData& data, double gate_period_s, const FitOptions& options) {
    ParamMap map;
    if (options.pin_p_dark && options.pin_mu_eta) {
        map.q_free = false;
        map.q_fixed = std::exp(-*options.pin_mu_eta) * (1.0 - *options.pin_p_dark);
        if (map.q_fixed <= 0.0 || map.q_fixed >= 1.0) {
            throw std::invalid_argument("fit_model: pinned values give q outside (0, 1)");
        }
    }

    FitSeed seed = options.seed ? *options.seed : seed_from_bins(data);
    std::vector<double> theta0 = map.encode(seed);

    auto objective = [&](std::span<const double> theta) {
        return fit_objective(data, options.mode, map.decode(theta));
    };

    SimplexOptions sopt;
    sopt.max_iterations = options.max_iterations;
    sopt.objective_tol = options.objective_tol;
    sopt.param_tol = options.param_tol;

    SimplexResult best = simplex_minimize(objective, theta0, sopt);
    int iterations = best.iterations;
    int evaluations = best.evaluations;
    bool converged = best.converged;

    // Deterministic perturbed restarts around the incumbent.
    for (int k = 1; k <= options.restarts; ++k) {
        std::vector<double> start = best.x;
        for (std::size_t i = 0; i < start.size(); ++i) {
            const double sign = (i + static_cast<std::size_t>(k)) % 2 == 0 ? 1.0 : -1.0;
            start[i] += sign * 0.2 * static_cast<double>(k);
        }
        SimplexResult r = simplex_minimize(objective, start, sopt);
        iterations += r.iterations;
        evaluations += r.evaluations;
        if (r.fx < best.fx) {
            best = r;
            converged = r.converged;
        }
    }

    const IntervalModel model = map.decode(best.x);
    FitResult result;
    result.q_hat = model.q;
    result.p0_hat = model.p0;
    result.d_hat = model.d;
    result.tau_s_hat = gate_period_s / model.d;
    result.p_total_hat = model.total_afterpulse();
    result.objective = best.fx;
    result.iterations = iterations;
    result.evaluations = evaluations;
    result.converged = converged && best.fx < kHugeObjective;
    result.hit_bounds = map.near_bounds(best.x);

    if (options.pin_p_dark && options.pin_mu_eta) {
        result.p_dark_hat = *options.pin_p_dark;
        result.mu_eta_hat = *options.pin_mu_eta;
    } else if (options.pin_p_dark) {
        result.p_dark_hat = *options.pin_p_dark;
        double mu_eta = std::log((1.0 - *options.pin_p_dark) / model.q);
        if (mu_eta < 0.0) {
            mu_eta = 0.0;
            result.hit_bounds = true;
        }
        result.mu_eta_hat = mu_eta;
    } else if (options.pin_mu_eta) {
        result.mu_eta_hat = *options.pin_mu_eta;
        double p_dark = 1.0 - model.q * std::exp(*options.pin_mu_eta);
        if (p_dark < 0.0) {
            p_dark = 0.0;
            result.hit_bounds = true;
        }
        result.p_dark_hat = p_dark;
    }
    // With no pin, mu*eta and p_dark enter only through q and stay unreported.

    const std::vector<double> lg = model.log10_pmf_prefix(data.last_m, options.mode);
    result.residuals.reserve(data.bins.size());
    for (const Bin& b : data.bins) {
        result.residuals.push_back({b.m, b.count, b.log10_pmf, lg[b.m - 1]});
    }
    const RSquaredPair r2 = compute_r_squared(data, options.mode, model);
    result.r_squared = r2.linear;
    result.r_squared_log10 = r2.log10;
    return result;
}

// Multinomial resample of the histogram, interval count preserved.
IntervalHistogram resample_histogram(const IntervalHistogram& hist, std::mt19937_64& rng) {
    IntervalHistogram out(hist.m_max());
    std::uint64_t remaining = hist.total();
    double mass_left = static_cast<double>(hist.total());
    for (std::uint64_t m = 1; m <= hist.m_max() && remaining > 0; ++m) {
        const std::uint64_t c = hist.count(m);
        if (c == 0) {
            continue;
        }
        const double p = clamp(static_cast<double>(c) / mass_left, 0.0, 1.0);
        std::binomial_distribution<std::uint64_t> draw(remaining, p);
        const std::uint64_t k = p >= 1.0 ? remaining : draw(rng);
        for (std::uint64_t i = 0; i < k; ++i) {
            out.record(m);
        }
        remaining -= k;
        mass_left -= static_cast<double>(c);
    }
    for (std::uint64_t i = 0; i < remaining; ++i) {
        out.record(hist.m_max() + 1);  // overflow
    }
    return out;
}

double sample_std(std::span<const double> v) {
    if (v.size() < 2) {
        return 0.0;
    }
    double mean = 0.0;
    for (double x : v) {
        mean += x;
    }
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) {
        ss += (x - mean) * (x - mean);
    }
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

FitResult fit_model(const IntervalHistogram& hist, double gate_period_s,
                    const FitOptions& options) {
    if (!(gate_period_s > 0.0)) {
        throw std::invalid_argument("fit_model: gate period must be > 0");
    }
    const BinData data = prepare_bins(hist, options);
    if (data.bins.size() < 4) {
        throw InsufficientStatistics("fit needs more usable bins than free parameters");
    }
    FitResult result = run_fit(data, gate_period_s, options);

    if (options.bootstrap_resamples > 0) {
        std::mt19937_64 rng(options.bootstrap_seed);
        FitOptions repopt = options;
        repopt.bootstrap_resamples = 0;
        repopt.restarts = 1;
        repopt.seed = FitSeed{result.q_hat, result.p0_hat, result.d_hat};
        std::vector<double> qs, p0s, ds, pts;
        for (int rep = 0; rep < options.bootstrap_resamples; ++rep) {
            const IntervalHistogram re = resample_histogram(hist, rng);
            try {
                const FitResult r = fit_model(re, gate_period_s, repopt);
                qs.push_back(r.q_hat);
                p0s.push_back(r.p0_hat);
                ds.push_back(r.d_hat);
                pts.push_back(r.p_total_hat);
            } catch (const InsufficientStatistics&) {
                // A resample can lose the tail; skip it.
            }
        }
        FitStdErrors se;
        se.q = sample_std(qs);
        se.p0 = sample_std(p0s);
        se.d = sample_std(ds);
        se.p_total = sample_std(pts);
        se.resamples = static_cast<int>(qs.size());
        result.std_errors = se;
    }
    return result;
}

std::optional<double> r_squared(const IntervalHistogram& hist, const FitResult& result,
                                const FitOptions& options) {
    const BinData data = prepare_bins(hist, options);
    IntervalModel model{result.q_hat, result.p0_hat, result.d_hat};
    return compute_r_squared(data, options.mode, model).linear;
}

std::uint64_t default_knee_exclusion(const IntervalHistogram& hist, const FitOptions& options) {
    const BinData data = prepare_bins(hist, options);
    if (data.bins.size() < 4) {
        return 0;
    }
    const RefLine ref = reference_tail_line(data);
    for (const Bin& b : data.bins) {
        if (b.m >= ref.region_start) {
            break;
        }
        const double line_pmf = std::pow(
            10.0, ref.line.intercept + ref.line.slope * static_cast<double>(b.m));
        const double excess = b.count_eff / data.total - line_pmf;
        const double noise = std::sqrt(std::max(b.count_eff, 1.0)) / data.total;
        if (excess < 2.0 * noise) {
            return b.m - 1;
        }
    }
    return ref.region_start - 1;
}

double area_ratio_afterpulse(const IntervalHistogram& hist, std::uint64_t knee_exclusion,
                             const FitOptions& options) {
    const BinData data = prepare_bins(hist, options);
    const std::uint64_t knee =
        knee_exclusion == 0 ? default_knee_exclusion(hist, options) : knee_exclusion;

    // Same count floor as the reference line: the area is ~15x as sensitive
    // to the line mass as the line itself, so near-empty bins stay out.
    const double floor = std::max(static_cast<double>(data.k_min),
                                  std::min(30.0, data.total / 1000.0));
    std::vector<double> x, y, w;
    for (const Bin& b : data.bins) {
        if (b.m > knee && b.count_eff >= floor) {
            x.push_back(static_cast<double>(b.m));
            y.push_back(b.log10_pmf);
            w.push_back(b.count_eff);
        }
    }
    if (x.size() < 2) {
        throw InsufficientStatistics("area ratio: not enough tail bins past the knee");
    }
    const LineFit line = weighted_line_fit(x, y, w);
    const double s = std::pow(10.0, line.slope);
    if (!(s > 0.0) || s >= 1.0) {
        return 0.0;  // tail is not decaying; no afterpulse excess measurable
    }
    // Line mass over every tracked bin, summed as a geometric series.
    const double a = std::pow(10.0, line.intercept);
    const double line_area =
        a * s * (1.0 - std::pow(s, static_cast<double>(hist.m_max()))) / (1.0 - s);
    const double data_area = 1.0 - hist.overflow_mass();
    if (data_area <= 0.0) {
        return 0.0;
    }
    return clamp(1.0 - line_area / data_area, 0.0, 1.0);
}

DecompositionResult decompose_efficiency(std::span<const std::pair<double, double>> mu_and_q) {
    const std::size_t n = mu_and_q.size();
    if (n < 2) {
        throw std::invalid_argument("decompose_efficiency: need at least two runs");
    }
    std::vector<double> x(n), y(n), w(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& [mu, q] = mu_and_q[i];
        if (!(q > 0.0) || q > 1.0) {
            throw std::invalid_argument("decompose_efficiency: q values must be in (0, 1]");
        }
        x[i] = mu;
        y[i] = std::log(q);
    }
    double mx = 0.0;
    for (double v : x) {
        mx += v;
    }
    mx /= static_cast<double>(n);
    double sxx = 0.0;
    for (double v : x) {
        sxx += (v - mx) * (v - mx);
    }
    if (sxx == 0.0) {
        throw std::invalid_argument("decompose_efficiency: all mu values identical");
    }

    const LineFit line = weighted_line_fit(x, y, w);
    DecompositionResult out;
    out.slope = line.slope;
    out.intercept = line.intercept;
    out.eta_hat = clamp(-line.slope, 0.0, 1.0);
    out.p_dark_hat = clamp(-std::expm1(line.intercept), 0.0, 1.0 - 1e-15);

    if (n > 2) {
        double ss_res = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = y[i] - (line.intercept + line.slope * x[i]);
            ss_res += r * r;
        }
        const double s2 = ss_res / static_cast<double>(n - 2);
        out.eta_stderr = std::sqrt(s2 / sxx);
        const double se_intercept =
            std::sqrt(s2 * (1.0 / static_cast<double>(n) + mx * mx / sxx));
        out.p_dark_stderr = (1.0 - out.p_dark_hat) * se_intercept;
    }
    return out;
}

void DelayScanProfile::validate() const {
    if (delay_s.size() != rate.size()) {
        throw std::invalid_argument("DelayScanProfile: delay/rate size mismatch");
    }
    if (delay_s.size() < 2) {
        throw std::invalid_argument("DelayScanProfile: need at least two samples");
    }
    double peak = 0.0;
    for (std::size_t i = 0; i < delay_s.size(); ++i) {
        if (!std::isfinite(delay_s[i]) || !std::isfinite(rate[i])) {
            throw std::invalid_argument("DelayScanProfile: non-finite sample");
        }
        if (i > 0 && delay_s[i] <= delay_s[i - 1]) {
            throw std::invalid_argument("DelayScanProfile: delays must be strictly increasing");
        }
        if (rate[i] < 0.0 || rate[i] > 1.0 + 1e-9) {
            throw std::invalid_argument("DelayScanProfile: rates must lie in [0, 1]");
        }
        peak = std::max(peak, rate[i]);
    }
    if (std::abs(peak - 1.0) > 1e-6) {
        throw std::invalid_argument("DelayScanProfile: rates are not normalized to unit peak");
    }
}

DelayScanProfile DelayScanProfile::from_counts(std::vector<double> delay_s,
                                               std::vector<double> counts) {
    double peak = 0.0;
    for (double c : counts) {
        peak = std::max(peak, c);
    }
    if (!(peak > 0.0)) {
        throw std::invalid_argument("DelayScanProfile: all counts are zero");
    }
    for (double& c : counts) {
        c /= peak;
    }
    DelayScanProfile p{std::move(delay_s), std::move(counts)};
    p.validate();
    return p;
}

double effective_gate_width(const DelayScanProfile& profile) {
    profile.validate();
    if (profile.delay_s.size() < 3) {
        throw std::invalid_argument("effective_gate_width: need at least three samples");
    }
    double area = 0.0;
    double peak = 0.0;
    for (std::size_t i = 0; i + 1 < profile.delay_s.size(); ++i) {
        area += 0.5 * (profile.rate[i] + profile.rate[i + 1]) *
                (profile.delay_s[i + 1] - profile.delay_s[i]);
        peak = std::max(peak, profile.rate[i]);
    }
    peak = std::max(peak, profile.rate.back());
    return area / peak;
}

}  // namespace spad
