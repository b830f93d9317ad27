#pragma once

#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include "spad/simulate.hpp"

namespace spad {

// Counts of inter-detection gaps m = 1..m_max plus a single overflow bin for
// gaps beyond m_max. total() == overflow() + sum of counts, always; the
// empirical pmf therefore sums to exactly 1 in rational arithmetic.
class IntervalHistogram {
public:
    explicit IntervalHistogram(std::uint64_t m_max = 10000);

    // Adopt pre-binned data: counts[i] is the number of gaps of length i + 1.
    explicit IntervalHistogram(std::vector<std::uint64_t> counts, std::uint64_t overflow = 0);

    void record(std::uint64_t gap);  // gap >= 1
    // Undo a prior record(); used by the sliding window. Throws if the bin is
    // already empty.
    void remove(std::uint64_t gap);

    std::uint64_t m_max() const { return static_cast<std::uint64_t>(counts_.size()); }
    std::uint64_t count(std::uint64_t m) const;
    std::uint64_t overflow() const { return overflow_; }
    std::uint64_t total() const { return total_; }

    double empirical_pmf(std::uint64_t m) const;  // count(m) / total()
    double overflow_mass() const;                 // overflow() / total()

    // Largest gap with a nonzero count (0 when empty; overflow not counted).
    std::uint64_t max_recorded_gap() const;

    bool operator==(const IntervalHistogram&) const = default;

private:
    friend IntervalHistogram merge(const IntervalHistogram&, const IntervalHistogram&);

    std::vector<std::uint64_t> counts_;  // counts_[m - 1] = occurrences of gap m
    std::uint64_t overflow_ = 0;
    std::uint64_t total_ = 0;
};

// Pointwise sum of two histograms with equal m_max. Any interval spanning the
// boundary between the two underlying streams is not represented; the caller
// owning the seam must record it explicitly.
IntervalHistogram merge(const IntervalHistogram& a, const IntervalHistogram& b);

// Consecutive gate differences of a stream; empty for fewer than two
// detections. Throws std::invalid_argument on non-increasing input.
std::vector<std::uint64_t> extract_intervals(const EventStream& stream);
std::vector<std::uint64_t> extract_intervals(std::span<const std::uint64_t> gates);

IntervalHistogram build_histogram(std::span<const std::uint64_t> gaps, std::uint64_t m_max);

// The most recent `capacity` intervals with their histogram kept
// incrementally consistent. Single writer; histogram() hands out a reference
// whose lifetime must not outlive the next push, copy it for a snapshot.
class SlidingWindow {
public:
    SlidingWindow(std::size_t capacity, std::uint64_t m_max = 10000);

    void push(std::uint64_t gap);

    std::size_t size() const { return ring_.size(); }
    std::size_t capacity() const { return capacity_; }
    const IntervalHistogram& histogram() const { return hist_; }
    const std::deque<std::uint64_t>& contents() const { return ring_; }

private:
    std::size_t capacity_;
    std::deque<std::uint64_t> ring_;
    IntervalHistogram hist_;
};

}  // namespace spad
