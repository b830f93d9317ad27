#include "spad/model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace spad {

namespace {

// Below this decay the closed-form geometric sums divide two near-zero
// quantities; direct summation is used instead.
constexpr double kSmallDecay = 1e-6;

// Afterpulse terms below this no longer move a double product away from 1.
constexpr double kNegligibleTerm = 1e-18;

void require_gate_index(std::uint64_t m) {
    if (m == 0) {
        throw std::invalid_argument("gate count m must be >= 1");
    }
}

void require_field(bool ok, const char* what) {
    if (!ok) {
        throw std::invalid_argument(std::string("DetectorParams: ") + what);
    }
}

// sum_{x=1}^{n} r^x for r = exp(-d), via expm1 or term-by-term when d is tiny.
double geometric_sum(double d, std::uint64_t n) {
    if (n == 0) {
        return 0.0;
    }
    if (d < kSmallDecay) {
        double sum = 0.0;
        const double r = std::exp(-d);
        double term = r;
        for (std::uint64_t x = 1; x <= n; ++x) {
            sum += term;
            term *= r;
        }
        return sum;
    }
    // r (1 - r^n) / (1 - r) = exp(-d) expm1(-n d) / expm1(-d)
    return std::exp(-d) * std::expm1(-static_cast<double>(n) * d) / std::expm1(-d);
}

}  // namespace

void DetectorParams::validate() const {
    require_field(std::isfinite(mu) && mu >= 0.0, "mu must be finite and >= 0");
    require_field(std::isfinite(eta) && eta >= 0.0 && eta <= 1.0, "eta must be in [0, 1]");
    require_field(std::isfinite(p_dark) && p_dark >= 0.0 && p_dark <= 1.0,
                  "p_dark must be in [0, 1]");
    require_field(std::isfinite(p0) && p0 >= 0.0 && p0 < 1.0, "p0 must be in [0, 1)");
    require_field(std::isfinite(tau_s) && tau_s > 0.0, "tau_s must be > 0");
    require_field(std::isfinite(gate_period_s) && gate_period_s > 0.0,
                  "gate_period_s must be > 0");
}

DetectorParams DetectorParams::from_reduced(double mu_eta, double p_dark, double p0,
                                            double decay_per_gate, double gate_period_s) {
    DetectorParams p;
    p.mu = mu_eta;
    p.eta = 1.0;
    p.p_dark = p_dark;
    p.p0 = p0;
    p.gate_period_s = gate_period_s;
    p.tau_s = gate_period_s / decay_per_gate;
    return p;
}

IntervalModel IntervalModel::from_params(const DetectorParams& p) {
    IntervalModel m;
    m.q = std::exp(-p.mu_eta()) * (1.0 - p.p_dark);
    m.p0 = p.p0;
    m.d = p.decay_per_gate();
    return m;
}

double IntervalModel::afterpulse_prob(std::uint64_t m) const {
    require_gate_index(m);
    return p0 * std::exp(-static_cast<double>(m) * d);
}

double IntervalModel::no_count_prob(std::uint64_t m) const {
    return q * (1.0 - afterpulse_prob(m));
}

double IntervalModel::survival_exact(std::uint64_t m) const {
    require_gate_index(m);
    if (p0 == 0.0) {
        return 1.0;
    }
    double prod = 1.0;
    for (std::uint64_t x = 1; x < m; ++x) {
        const double pa = p0 * std::exp(-static_cast<double>(x) * d);
        if (pa < kNegligibleTerm) {
            // Remaining factors are 1 - eps with sum of eps bounded by the
            // geometric tail; fold them in as a single first-order factor.
            const double tail = pa * -std::expm1(-static_cast<double>(m - x) * d) /
                                -std::expm1(-d);
            prod *= 1.0 - tail;
            break;
        }
        prod *= 1.0 - pa;
    }
    return prod;
}

double IntervalModel::alpha(std::uint64_t m) const {
    require_gate_index(m);
    return p0 * geometric_sum(d, m - 1);
}

double IntervalModel::beta(std::uint64_t m) const {
    require_gate_index(m);
    if (m < 3 || p0 == 0.0) {
        return 0.0;
    }
    // sum over pairs = ((sum P_a)^2 - sum P_a^2) / 2
    const double s1 = p0 * geometric_sum(d, m - 1);
    const double s2 = p0 * p0 * geometric_sum(2.0 * d, m - 1);
    return 0.5 * (s1 * s1 - s2);
}

double IntervalModel::pmf(std::uint64_t m, PmfMode mode) const {
    require_gate_index(m);
    if (q >= 1.0) {
        throw std::domain_error(
            "interval distribution is not normalizable: q = 1 (no photon, dark or "
            "afterpulse probability)");
    }
    const double pa = afterpulse_prob(m);
    const double count_prob = (1.0 - q) + q * pa;  // 1 - q (1 - P_a(m))
    const double surv =
        mode == PmfMode::ExactProduct ? survival_exact(m) : 1.0 - alpha(m) + beta(m);
    const double tail = m == 1 ? 1.0 : std::pow(q, static_cast<double>(m - 1));
    return count_prob * tail * surv;
}

double IntervalModel::log10_pmf(std::uint64_t m, PmfMode mode) const {
    require_gate_index(m);
    if (q >= 1.0) {
        throw std::domain_error("interval distribution is not normalizable: q = 1");
    }
    const double pa = afterpulse_prob(m);
    const double count_prob = (1.0 - q) + q * pa;
    const double surv =
        mode == PmfMode::ExactProduct ? survival_exact(m) : 1.0 - alpha(m) + beta(m);
    if (surv <= 0.0) {
        return -std::numeric_limits<double>::infinity();
    }
    double lg = std::log10(count_prob) + std::log10(surv);
    if (m > 1) {
        lg += static_cast<double>(m - 1) * std::log10(q);
    }
    return lg;
}

std::vector<double> IntervalModel::pmf_prefix(std::uint64_t m_max, PmfMode mode) const {
    require_gate_index(m_max);
    if (q >= 1.0) {
        throw std::domain_error("interval distribution is not normalizable: q = 1");
    }
    std::vector<double> out;
    out.reserve(m_max);
    double surv = 1.0;  // survival term at current m (exact mode)
    for (std::uint64_t m = 1; m <= m_max; ++m) {
        if (m > 1) {
            surv *= 1.0 - p0 * std::exp(-static_cast<double>(m - 1) * d);
        }
        const double s = mode == PmfMode::ExactProduct ? surv : 1.0 - alpha(m) + beta(m);
        const double pa = p0 * std::exp(-static_cast<double>(m) * d);
        const double count_prob = (1.0 - q) + q * pa;
        const double tail = m == 1 ? 1.0 : std::pow(q, static_cast<double>(m - 1));
        out.push_back(count_prob * tail * s);
    }
    return out;
}

std::vector<double> IntervalModel::log10_pmf_prefix(std::uint64_t m_max, PmfMode mode) const {
    require_gate_index(m_max);
    if (q >= 1.0) {
        throw std::domain_error("interval distribution is not normalizable: q = 1");
    }
    std::vector<double> out;
    out.reserve(m_max);
    const double lq = std::log10(q);
    double surv = 1.0;
    for (std::uint64_t m = 1; m <= m_max; ++m) {
        if (m > 1) {
            surv *= 1.0 - p0 * std::exp(-static_cast<double>(m - 1) * d);
        }
        const double s = mode == PmfMode::ExactProduct ? surv : 1.0 - alpha(m) + beta(m);
        const double pa = p0 * std::exp(-static_cast<double>(m) * d);
        const double count_prob = (1.0 - q) + q * pa;
        double lg;
        if (s <= 0.0) {
            lg = -std::numeric_limits<double>::infinity();
        } else {
            lg = std::log10(count_prob) + std::log10(s);
            if (m > 1) {
                lg += static_cast<double>(m - 1) * lq;
            }
        }
        out.push_back(lg);
    }
    return out;
}

double IntervalModel::total_afterpulse() const {
    return p0 / std::expm1(d);
}

// --- DetectorParams-level wrappers ------------------------------------------

double afterpulse_prob(const DetectorParams& params, std::uint64_t m) {
    params.validate();
    return IntervalModel::from_params(params).afterpulse_prob(m);
}

double no_count_prob(const DetectorParams& params, std::uint64_t m) {
    params.validate();
    return IntervalModel::from_params(params).no_count_prob(m);
}

double survival_product_exact(const DetectorParams& params, std::uint64_t m) {
    params.validate();
    return IntervalModel::from_params(params).survival_exact(m);
}

double expansion_alpha(const DetectorParams& params, std::uint64_t m) {
    params.validate();
    return IntervalModel::from_params(params).alpha(m);
}

double expansion_beta(const DetectorParams& params, std::uint64_t m) {
    params.validate();
    return IntervalModel::from_params(params).beta(m);
}

double interval_pmf(const DetectorParams& params, std::uint64_t m, PmfMode mode) {
    params.validate();
    return IntervalModel::from_params(params).pmf(m, mode);
}

std::vector<double> interval_pmf_prefix(const DetectorParams& params, std::uint64_t m_max,
                                        PmfMode mode) {
    params.validate();
    return IntervalModel::from_params(params).pmf_prefix(m_max, mode);
}

double total_afterpulse(const DetectorParams& params) {
    params.validate();
    return IntervalModel::from_params(params).total_afterpulse();
}

double geometric_slope(const DetectorParams& params) {
    params.validate();
    return std::exp(-params.mu_eta()) * (1.0 - params.p_dark);
}

}  // namespace spad
