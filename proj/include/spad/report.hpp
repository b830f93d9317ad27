#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace spad {

// Ordered key/value tree rendered as flat text ("key = value" per line) or
// as JSON nested on the dots in the keys. Keys are emitted in insertion
// order; rendering the same report twice is byte-identical, and reports over
// the same inputs differ only in the generated_at entry.
class Report {
public:
    static constexpr std::string_view kSchema = "spadchar-report/1";

    void set(std::string key, std::string value);
    void set_number(std::string key, double value);   // 17 significant digits
    void set_integer(std::string key, std::int64_t value);
    void set_unsigned(std::string key, std::uint64_t value);
    void set_bool(std::string key, bool value);

    std::optional<std::string> get(std::string_view key) const;

    std::string to_text() const;
    std::string to_json() const;  // pretty-printed, trailing newline

private:
    using Value = std::variant<std::string, double, std::int64_t, std::uint64_t, bool>;
    std::vector<std::pair<std::string, Value>> entries_;

    void put(std::string key, Value v);
};

}  // namespace spad
