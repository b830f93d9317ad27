#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace spad {

// Malformed input data (event files, delay scans, timestamp streams).
// line() is 1-based; 0 means the error is not tied to a specific line.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& msg, std::size_t line = 0)
        : std::runtime_error(line ? msg + " (line " + std::to_string(line) + ")" : msg),
          line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// Not enough usable data to run an estimator (too few bins, too few intervals).
class InsufficientStatistics : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace spad
