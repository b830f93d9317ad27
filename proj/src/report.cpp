#include "spad/report.hpp"

#include <json.hpp>

#include "spad/io.hpp"

namespace spad {

void Report::put(std::string key, Value v) {
    for (auto& [k, existing] : entries_) {
        if (k == key) {
            existing = std::move(v);
            return;
        }
    }
    entries_.emplace_back(std::move(key), std::move(v));
}

void Report::set(std::string key, std::string value) {
    put(std::move(key), Value(std::move(value)));
}

void Report::set_number(std::string key, double value) {
    put(std::move(key), Value(value));
}

void Report::set_integer(std::string key, std::int64_t value) {
    put(std::move(key), Value(value));
}

void Report::set_unsigned(std::string key, std::uint64_t value) {
    put(std::move(key), Value(value));
}

void Report::set_bool(std::string key, bool value) {
    put(std::move(key), Value(value));
}

std::optional<std::string> Report::get(std::string_view key) const {
    for (const auto& [k, v] : entries_) {
        if (k == key) {
            return std::visit(
                [](const auto& x) -> std::string {
                    using T = std::decay_t<decltype(x)>;
                    if constexpr (std::is_same_v<T, std::string>) {
                        return x;
                    } else if constexpr (std::is_same_v<T, double>) {
                        return format_double(x);
                    } else if constexpr (std::is_same_v<T, bool>) {
                        return x ? "true" : "false";
                    } else {
                        return std::to_string(x);
                    }
                },
                v);
        }
    }
    return std::nullopt;
}

std::string Report::to_text() const {
    std::string out;
    for (const auto& [k, v] : entries_) {
        out += k;
        out += " = ";
        out += *get(k);
        out += '\n';
    }
    return out;
}

std::string Report::to_json() const {
    nlohmann::ordered_json root = nlohmann::ordered_json::object();
    for (const auto& [key, v] : entries_) {
        nlohmann::ordered_json* node = &root;
        std::size_t pos = 0;
        while (true) {
            const std::size_t dot = key.find('.', pos);
            if (dot == std::string::npos) {
                break;
            }
            node = &(*node)[key.substr(pos, dot - pos)];
            pos = dot + 1;
        }
        const std::string leaf = key.substr(pos);
        std::visit([&](const auto& x) { (*node)[leaf] = x; }, v);
    }
    return root.dump(2) + "\n";
}

}  // namespace spad
