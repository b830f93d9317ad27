#include "spad/monitor.hpp"

#include <stdexcept>

#include "spad/errors.hpp"

namespace spad {

void MonitorConfig::validate() const {
    if (window < 2) {
        throw std::invalid_argument("MonitorConfig: window must hold at least 2 intervals");
    }
    if (!(gate_period_s > 0.0)) {
        throw std::invalid_argument("MonitorConfig: gate period must be > 0");
    }
    if (m_max == 0) {
        throw std::invalid_argument("MonitorConfig: m_max must be >= 1");
    }
}

std::size_t MonitorConfig::effective_refresh() const {
    if (refresh_every > 0) {
        return refresh_every;
    }
    return std::max<std::size_t>(1, window / 10);
}

MonitorLoop::MonitorLoop(MonitorConfig config)
    : config_(std::move(config)), window_(config_.window, config_.m_max) {
    config_.validate();
}

std::optional<MonitorSample> MonitorLoop::on_event(std::uint64_t gate_index) {
    if (gate_index == 0 || gate_index <= last_gate_) {
        throw std::invalid_argument("MonitorLoop: gate indices must be strictly increasing");
    }
    ++events_;
    if (events_ == 1) {
        last_gate_ = gate_index;
        return std::nullopt;
    }
    const std::uint64_t gap = gate_index - last_gate_;
    last_gate_ = gate_index;
    window_.push(gap);
    ++intervals_;
    if (intervals_ % config_.effective_refresh() == 0) {
        return make_sample(false);
    }
    return std::nullopt;
}

MonitorSample MonitorLoop::heartbeat() const {
    return make_sample(true);
}

MonitorSample MonitorLoop::make_sample(bool stale) const {
    MonitorSample sample;
    sample.events_seen = events_;
    sample.intervals_seen = intervals_;
    sample.window_fill = window_.size();
    sample.stale = stale;
    if (window_.size() >= config_.min_intervals) {
        try {
            // Immutable snapshot; ingestion may continue while callers hold it.
            const IntervalHistogram snapshot = window_.histogram();
            sample.fit = fit_model(snapshot, config_.gate_period_s, config_.fit);
        } catch (const InsufficientStatistics&) {
            sample.fit.reset();
        }
    }
    return sample;
}

}  // namespace spad
