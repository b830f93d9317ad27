#include "spad/intervals.hpp"

#include <stdexcept>

namespace spad {

IntervalHistogram::IntervalHistogram(std::uint64_t m_max) {
    if (m_max == 0) {
        throw std::invalid_argument("IntervalHistogram: m_max must be >= 1");
    }
    counts_.assign(m_max, 0);
}

IntervalHistogram::IntervalHistogram(std::vector<std::uint64_t> counts, std::uint64_t overflow)
    : counts_(std::move(counts)), overflow_(overflow) {
    if (counts_.empty()) {
        throw std::invalid_argument("IntervalHistogram: need at least one bin");
    }
    total_ = overflow_;
    for (std::uint64_t c : counts_) {
        total_ += c;
    }
}

void IntervalHistogram::record(std::uint64_t gap) {
    if (gap == 0) {
        throw std::invalid_argument("IntervalHistogram: gap must be >= 1");
    }
    if (gap <= counts_.size()) {
        ++counts_[gap - 1];
    } else {
        ++overflow_;
    }
    ++total_;
}

void IntervalHistogram::remove(std::uint64_t gap) {
    if (gap == 0) {
        throw std::invalid_argument("IntervalHistogram: gap must be >= 1");
    }
    std::uint64_t& slot = gap <= counts_.size() ? counts_[gap - 1] : overflow_;
    if (slot == 0 || total_ == 0) {
        throw std::logic_error("IntervalHistogram: removing from an empty bin");
    }
    --slot;
    --total_;
}

std::uint64_t IntervalHistogram::count(std::uint64_t m) const {
    if (m == 0 || m > counts_.size()) {
        return 0;
    }
    return counts_[m - 1];
}

double IntervalHistogram::empirical_pmf(std::uint64_t m) const {
    if (total_ == 0) {
        return 0.0;
    }
    return static_cast<double>(count(m)) / static_cast<double>(total_);
}

double IntervalHistogram::overflow_mass() const {
    if (total_ == 0) {
        return 0.0;
    }
    return static_cast<double>(overflow_) / static_cast<double>(total_);
}

std::uint64_t IntervalHistogram::max_recorded_gap() const {
    for (std::size_t i = counts_.size(); i > 0; --i) {
        if (counts_[i - 1] != 0) {
            return static_cast<std::uint64_t>(i);
        }
    }
    return 0;
}

IntervalHistogram merge(const IntervalHistogram& a, const IntervalHistogram& b) {
    if (a.m_max() != b.m_max()) {
        throw std::invalid_argument("merge: histograms have different m_max");
    }
    IntervalHistogram out(a.m_max());
    for (std::size_t i = 0; i < out.counts_.size(); ++i) {
        out.counts_[i] = a.counts_[i] + b.counts_[i];
    }
    out.overflow_ = a.overflow_ + b.overflow_;
    out.total_ = a.total_ + b.total_;
    return out;
}

std::vector<std::uint64_t> extract_intervals(std::span<const std::uint64_t> gates) {
    std::vector<std::uint64_t> gaps;
    if (gates.size() < 2) {
        return gaps;
    }
    gaps.reserve(gates.size() - 1);
    for (std::size_t i = 1; i < gates.size(); ++i) {
        if (gates[i] <= gates[i - 1]) {
            throw std::invalid_argument("extract_intervals: gate indices must be strictly "
                                        "increasing");
        }
        gaps.push_back(gates[i] - gates[i - 1]);
    }
    return gaps;
}

std::vector<std::uint64_t> extract_intervals(const EventStream& stream) {
    return extract_intervals(std::span<const std::uint64_t>(stream.gates));
}

IntervalHistogram build_histogram(std::span<const std::uint64_t> gaps, std::uint64_t m_max) {
    IntervalHistogram hist(m_max);
    for (std::uint64_t g : gaps) {
        hist.record(g);
    }
    return hist;
}

SlidingWindow::SlidingWindow(std::size_t capacity, std::uint64_t m_max)
    : capacity_(capacity), hist_(m_max) {
    if (capacity == 0) {
        throw std::invalid_argument("SlidingWindow: capacity must be >= 1");
    }
}

void SlidingWindow::push(std::uint64_t gap) {
    ring_.push_back(gap);
    hist_.record(gap);
    if (ring_.size() > capacity_) {
        hist_.remove(ring_.front());
        ring_.pop_front();
    }
}

}  // namespace spad
