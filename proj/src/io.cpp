#include "spad/io.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "spad/errors.hpp"

namespace spad {

namespace {

std::string trimmed(const std::string& s) {
    std::size_t a = 0;
    std::size_t b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) {
        ++a;
    }
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) {
        --b;
    }
    return s.substr(a, b - a);
}

bool is_comment_or_blank(const std::string& line) {
    const std::string t = trimmed(line);
    return t.empty() || t[0] == '#';
}

bool parse_u64(const std::string& s, std::uint64_t& out) {
    std::istringstream iss(s);
    iss >> out;
    if (iss.fail() || s.find('-') != std::string::npos) {
        return false;
    }
    std::string rest;
    iss >> rest;
    return rest.empty();
}

bool parse_f64(const std::string& s, double& out) {
    std::istringstream iss(s);
    iss >> out;
    if (iss.fail()) {
        return false;
    }
    std::string rest;
    iss >> rest;
    return rest.empty() && std::isfinite(out);
}

}  // namespace

EventFileData read_event_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open event file: " + path.string());
    }
    EventFileData data;
    std::string line;
    std::size_t lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (is_comment_or_blank(line)) {
            continue;
        }
        const std::string t = trimmed(line);
        if (!header_seen) {
            if (t == "gates") {
                data.base = EventTimeBase::GateIndex;
            } else if (t == "seconds") {
                data.base = EventTimeBase::Seconds;
            } else {
                throw ParseError("event file header must be 'gates' or 'seconds', got '" + t +
                                     "'",
                                 lineno);
            }
            header_seen = true;
            continue;
        }
        if (data.base == EventTimeBase::GateIndex) {
            std::uint64_t g = 0;
            if (!parse_u64(t, g) || g == 0) {
                throw ParseError("expected a gate index >= 1, got '" + t + "'", lineno);
            }
            if (!data.gates.empty() && g <= data.gates.back()) {
                throw ParseError("gate indices must be strictly increasing (" +
                                     std::to_string(g) + " after " +
                                     std::to_string(data.gates.back()) + ")",
                                 lineno);
            }
            data.gates.push_back(g);
        } else {
            double ts = 0.0;
            if (!parse_f64(t, ts) || ts < 0.0) {
                throw ParseError("expected a timestamp in seconds, got '" + t + "'", lineno);
            }
            if (!data.timestamps_s.empty() && ts < data.timestamps_s.back()) {
                throw ParseError("timestamps must be monotone non-decreasing", lineno);
            }
            data.timestamps_s.push_back(ts);
        }
    }
    if (!header_seen) {
        throw ParseError("event file has no header line: " + path.string());
    }
    return data;
}

void write_event_file(const std::filesystem::path& path, std::span<const std::uint64_t> gates,
                      EventTimeBase base, double gate_frequency_hz) {
    if (base == EventTimeBase::Seconds && !(gate_frequency_hz > 0.0)) {
        throw std::invalid_argument("write_event_file: seconds output needs a gate frequency");
    }
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write event file: " + path.string());
    }
    out << (base == EventTimeBase::GateIndex ? "gates" : "seconds") << '\n';
    for (std::uint64_t g : gates) {
        if (base == EventTimeBase::GateIndex) {
            out << g << '\n';
        } else {
            out << format_double(static_cast<double>(g) / gate_frequency_hz) << '\n';
        }
    }
    if (!out) {
        throw std::runtime_error("failed writing event file: " + path.string());
    }
}

EventStream timestamps_to_gates(std::span<const double> timestamps_s,
                                double gate_frequency_hz, double phase_tolerance_fraction,
                                GateConversionStats* stats) {
    if (!(gate_frequency_hz > 0.0)) {
        throw std::invalid_argument("timestamps_to_gates: gate frequency must be > 0");
    }
    if (!(phase_tolerance_fraction > 0.0) || phase_tolerance_fraction > 0.5) {
        throw std::invalid_argument("timestamps_to_gates: tolerance must be in (0, 0.5]");
    }
    GateConversionStats local;
    EventStream out;
    out.gates.reserve(timestamps_s.size());
    for (double t : timestamps_s) {
        const double x = t * gate_frequency_hz;
        const double rounded = std::round(x);
        if (std::abs(x - rounded) > phase_tolerance_fraction || rounded < 1.0 ||
            rounded >= 9.22e18) {
            ++local.rejected;
            continue;
        }
        const std::uint64_t g = static_cast<std::uint64_t>(rounded);
        if (!out.gates.empty() && g == out.gates.back()) {
            ++local.duplicates;
            continue;
        }
        if (!out.gates.empty() && g < out.gates.back()) {
            // Cannot happen for monotone input; guard against caller misuse.
            ++local.rejected;
            continue;
        }
        out.gates.push_back(g);
        ++local.accepted;
    }
    out.n_gates_simulated = out.gates.empty() ? 0 : out.gates.back();
    if (stats != nullptr) {
        *stats = local;
    }
    if (!timestamps_s.empty() &&
        static_cast<double>(local.rejected) > 0.01 * static_cast<double>(timestamps_s.size())) {
        throw ParseError("timestamps_to_gates: " + std::to_string(local.rejected) + " of " +
                         std::to_string(timestamps_s.size()) +
                         " events fall outside the gate phase window; check the configured "
                         "gate frequency and phase");
    }
    return out;
}

DelayScanData read_delay_scan(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open delay scan: " + path.string());
    }
    DelayScanData data;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (is_comment_or_blank(line)) {
            continue;
        }
        std::string t = trimmed(line);
        for (char& c : t) {
            if (c == ',' || c == ';' || c == '\t') {
                c = ' ';
            }
        }
        std::istringstream iss(t);
        double delay = 0.0, counts = 0.0;
        if (!(iss >> delay >> counts)) {
            // Tolerate a single header row of column names.
            if (data.delay_s.empty() && lineno <= 2) {
                continue;
            }
            throw ParseError("expected 'delay_s counts', got '" + trimmed(line) + "'", lineno);
        }
        std::string rest;
        iss >> rest;
        if (!rest.empty()) {
            throw ParseError("trailing characters after two columns", lineno);
        }
        if (!std::isfinite(delay) || !std::isfinite(counts) || counts < 0.0) {
            throw ParseError("delay scan values must be finite with counts >= 0", lineno);
        }
        data.delay_s.push_back(delay);
        data.counts.push_back(counts);
    }
    if (data.delay_s.empty()) {
        throw ParseError("delay scan contains no samples: " + path.string());
    }
    return data;
}

std::uint64_t fnv1a64(std::span<const unsigned char> bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t digest_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open for digest: " + path.string());
    }
    std::uint64_t h = 0xcbf29ce484222325ull;
    char buf[65536];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        const std::streamsize n = in.gcount();
        for (std::streamsize i = 0; i < n; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ull;
        }
    }
    return h;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace spad
