#pragma once

#include <cstdint>
#include <optional>

#include "spad/fit.hpp"
#include "spad/intervals.hpp"

namespace spad {

struct MonitorConfig {
    std::size_t window = 10000;     // intervals held in the sliding window
    std::size_t refresh_every = 0;  // fit cadence in new intervals; 0 = window / 10
    std::uint64_t m_max = 10000;
    double gate_period_s = 1.0;
    FitOptions fit;
    std::size_t min_intervals = 100;  // below this the sample carries no fit

    void validate() const;
    std::size_t effective_refresh() const;
};

struct MonitorSample {
    std::uint64_t events_seen = 0;
    std::uint64_t intervals_seen = 0;
    std::size_t window_fill = 0;
    bool stale = false;
    std::optional<FitResult> fit;
};

// Incremental monitoring: events stream in one at a time, the window tracks
// the most recent intervals, and every refresh_every new intervals a fit of
// the current window snapshot is emitted. Ingestion is single-writer; each
// emitted sample is computed on an immutable copy of the window state.
class MonitorLoop {
public:
    explicit MonitorLoop(MonitorConfig config);

    // Feed the next detection (strictly increasing gate index). Returns a
    // sample at refresh boundaries, nullopt otherwise.
    std::optional<MonitorSample> on_event(std::uint64_t gate_index);

    // Snapshot of the current window without new data, flagged stale; used
    // when the source stops delivering events.
    MonitorSample heartbeat() const;

    const MonitorConfig& config() const { return config_; }
    std::uint64_t intervals_seen() const { return intervals_; }

private:
    MonitorSample make_sample(bool stale) const;

    MonitorConfig config_;
    SlidingWindow window_;
    std::uint64_t last_gate_ = 0;
    std::uint64_t events_ = 0;
    std::uint64_t intervals_ = 0;
};

}  // namespace spad
