#include "spad/simulate.hpp"

#include <cmath>
#include <deque>
#include <random>
#include <stdexcept>

namespace spad {

namespace {

constexpr std::uint64_t kHazardTableCap = 1u << 20;

double u01(std::mt19937_64& rng) {
    // 53-bit mantissa draw in [0, 1); identical on every platform.
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Gates after an avalanche beyond which P_a < eps.
std::uint64_t horizon_gates(double p0, double d, double eps) {
    if (p0 <= eps) {
        return 0;
    }
    const double k = std::log(p0 / eps) / d;
    if (k >= 1e18) {
        throw std::invalid_argument("simulate_stream: afterpulse horizon too long (d too small)");
    }
    return static_cast<std::uint64_t>(k) + 1;
}

}  // namespace

void SimConfig::validate() const {
    params.validate();
    if (!(horizon_eps > 0.0) || !(horizon_eps < 1.0)) {
        throw std::invalid_argument("SimConfig: horizon_eps must be in (0, 1)");
    }
    const double q = std::exp(-params.mu_eta()) * (1.0 - params.p_dark);
    if (stop.kind == StopCondition::Kind::Detections) {
        if (q <= 0.0) {
            throw std::invalid_argument(
                "SimConfig: every gate fires (q = 0); use a gate-count stop");
        }
        if (q >= 1.0) {
            throw std::invalid_argument(
                "SimConfig: nothing ever fires (q = 1); a detection-count stop would not "
                "terminate");
        }
    }
}

EventStream simulate_stream(const SimConfig& config) {
    config.validate();
    const DetectorParams& p = config.params;
    const double q = std::exp(-p.mu_eta()) * (1.0 - p.p_dark);
    const double base_hazard = 1.0 - q;
    const double d = p.decay_per_gate();
    const std::uint64_t horizon = horizon_gates(p.p0, d, config.horizon_eps);

    // P_a(m) for m = 1..min(horizon, cap); larger lags are computed directly.
    std::vector<double> pa_table;
    const std::uint64_t table_len = std::min(horizon, kHazardTableCap);
    pa_table.resize(table_len + 1, 0.0);
    for (std::uint64_t m = 1; m <= table_len; ++m) {
        pa_table[m] = p.p0 * std::exp(-static_cast<double>(m) * d);
    }
    auto pa_at = [&](std::uint64_t lag) -> double {
        if (lag > horizon) {
            return 0.0;
        }
        if (lag <= table_len) {
            return pa_table[lag];
        }
        return p.p0 * std::exp(-static_cast<double>(lag) * d);
    };

    const bool stop_on_detections = config.stop.kind == StopCondition::Kind::Detections;
    EventStream out;
    if (stop_on_detections) {
        out.gates.reserve(config.stop.target);
    }

    std::mt19937_64 rng(config.seed);
    std::uint64_t gate = 0;
    std::uint64_t last_detection = 0;  // 0 = none yet
    std::deque<std::uint64_t> active;  // prior detections within the horizon

    while (stop_on_detections ? out.gates.size() < config.stop.target
                              : gate < config.stop.target) {
        ++gate;
        double hazard;
        if (config.memory == AfterpulseMemory::LastAvalancheOnly) {
            const double pa = last_detection == 0 ? 0.0 : pa_at(gate - last_detection);
            hazard = base_hazard + q * pa;
        } else {
            while (!active.empty() && gate - active.front() > horizon) {
                active.pop_front();
            }
            double no_ap = 1.0;
            for (std::uint64_t g : active) {
                no_ap *= 1.0 - pa_at(gate - g);
            }
            hazard = 1.0 - q * no_ap;
        }
        if (u01(rng) < hazard) {
            out.gates.push_back(gate);
            last_detection = gate;
            if (config.memory == AfterpulseMemory::Accumulating) {
                active.push_back(gate);
            }
        }
    }
    out.n_gates_simulated = gate;
    return out;
}

double per_gate_count_prob(const DetectorParams& params,
                           std::optional<std::uint64_t> gates_since_last) {
    params.validate();
    const double q = std::exp(-params.mu_eta()) * (1.0 - params.p_dark);
    if (!gates_since_last.has_value()) {
        return 1.0 - q;
    }
    const IntervalModel model = IntervalModel::from_params(params);
    return 1.0 - model.no_count_prob(*gates_since_last);
}

std::uint64_t derive_stream_seed(std::uint64_t base_seed, std::uint64_t stream_index) {
    // splitmix64 applied twice: once over the base, once over base ^ index.
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    };
    return mix(mix(base_seed) ^ stream_index);
}

}  // namespace spad
