#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "spad/model.hpp"

namespace spad {

// Which avalanche history feeds the afterpulse probability of a gate.
enum class AfterpulseMemory {
    // Only the most recent detection contributes: p_ap(g) = P_a(g - g_last).
    // This matches the analytic interval model exactly.
    LastAvalancheOnly,
    // Every prior detection contributes:
    // p_ap(g) = 1 - prod_j (1 - P_a(g - g_j)), truncated at horizon_eps.
    Accumulating,
};

struct StopCondition {
    enum class Kind { Detections, Gates };

    static StopCondition detections(std::uint64_t n) { return {Kind::Detections, n}; }
    static StopCondition gates(std::uint64_t n) { return {Kind::Gates, n}; }

    Kind kind = Kind::Gates;
    std::uint64_t target = 0;
};

struct SimConfig {
    DetectorParams params;
    StopCondition stop = StopCondition::gates(0);
    std::uint64_t seed = 1;
    AfterpulseMemory memory = AfterpulseMemory::LastAvalancheOnly;
    // Afterpulse contributions below this are treated as zero.
    double horizon_eps = 1e-12;

    void validate() const;  // throws std::invalid_argument
};

// Gate indices of the detections, 1-based and strictly increasing.
struct EventStream {
    std::vector<std::uint64_t> gates;
    std::uint64_t n_gates_simulated = 0;
};

// Gate-by-gate Bernoulli simulation of the detector. Deterministic given the
// seed. A run owns all of its state; concurrent runs with distinct seeds are
// independent.
EventStream simulate_stream(const SimConfig& config);

// Per-gate detection probability given the gates elapsed since the last
// detection (nullopt = no detection yet, afterpulse contribution zero).
// Equals 1 - no_count_prob(params, m) when m is set.
double per_gate_count_prob(const DetectorParams& params,
                           std::optional<std::uint64_t> gates_since_last);

// Seed for parallel stream `stream_index` derived from a base seed
// (splitmix64 over the pair). Distinct indices give uncorrelated mt19937_64
// seedings; use one stream per concurrent run.
std::uint64_t derive_stream_seed(std::uint64_t base_seed, std::uint64_t stream_index);

}  // namespace spad
