#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "spad/simulate.hpp"

namespace spad {

// Event files are newline-delimited, one detection per line, with a header
// line declaring the time base:
//
//     # optional comments
//     gates            (or "seconds")
//     1
//     3
//     ...
//
// Gate indices must be strictly increasing and >= 1; timestamps must be
// monotone non-decreasing seconds since the start of the run.
enum class EventTimeBase { GateIndex, Seconds };

struct EventFileData {
    EventTimeBase base = EventTimeBase::GateIndex;
    std::vector<std::uint64_t> gates;      // populated for GateIndex files
    std::vector<double> timestamps_s;      // populated for Seconds files
};

EventFileData read_event_file(const std::filesystem::path& path);

void write_event_file(const std::filesystem::path& path, std::span<const std::uint64_t> gates,
                      EventTimeBase base, double gate_frequency_hz = 0.0);

struct GateConversionStats {
    std::uint64_t accepted = 0;
    std::uint64_t rejected = 0;    // outside the phase window or before gate 1
    std::uint64_t duplicates = 0;  // collapsed onto an already-hit gate
};

// Map timestamps onto gate indices: t -> round(t f) accepted when the phase
// residual |t f - round(t f)| stays within tolerance (fraction of a period,
// in (0, 0.5]). More than 1% rejects aborts with a ParseError, which usually
// means the configured gate frequency or phase is wrong.
EventStream timestamps_to_gates(std::span<const double> timestamps_s,
                                double gate_frequency_hz, double phase_tolerance_fraction,
                                GateConversionStats* stats = nullptr);

// Delay-scan tables: two columns (delay_s, counts), comma or whitespace
// separated, '#' comments, an optional non-numeric header row.
struct DelayScanData {
    std::vector<double> delay_s;
    std::vector<double> counts;
};

DelayScanData read_delay_scan(const std::filesystem::path& path);

// FNV-1a 64-bit content digest, used for report provenance.
std::uint64_t fnv1a64(std::span<const unsigned char> bytes);
std::uint64_t digest_file(const std::filesystem::path& path);

// Doubles rendered with 17 significant digits (round-trip exact).
std::string format_double(double v);

}  // namespace spad
