#pragma once

// Strict readers over nlohmann::json used by the document parsers.

#include <fmt/format.h>

#include <initializer_list>
#include <string>
#include <string_view>

#include "fogsim/errors.hpp"
#include "json.hpp"

namespace fogsim::detail {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

inline Json parse_document(std::string_view text, std::string_view what) {
    try {
        return Json::parse(text.begin(), text.end());
    } catch (const Json::parse_error& e) {
        throw ParseError(fmt::format("{}: malformed JSON at byte {}: {}", what, e.byte, e.what()));
    }
}

/// Field access with a context string ("devices[3] 'phone-1'") baked into every error.
class ObjectReader {
public:
    ObjectReader(const Json& obj, std::string context) : obj_(obj), context_(std::move(context)) {
        if (!obj_.is_object()) throw ParseError(fmt::format("{}: expected an object", context_));
    }

    const std::string& context() const { return context_; }

    void allow_only(std::initializer_list<std::string_view> keys) const {
        for (const auto& [key, _] : obj_.items()) {
            bool known = false;
            for (auto k : keys) known = known || key == k;
            if (!known) throw ParseError(fmt::format("{}: unknown field '{}'", context_, key));
        }
    }

    bool has(std::string_view key) const { return obj_.contains(key); }

    const Json& at(std::string_view key) const {
        auto it = obj_.find(key);
        if (it == obj_.end()) throw ParseError(fmt::format("{}: missing required field '{}'", context_, key));
        return *it;
    }

    std::string string(std::string_view key) const {
        const Json& v = at(key);
        if (!v.is_string()) throw ParseError(fmt::format("{}: field '{}' must be a string", context_, key));
        return v.get<std::string>();
    }

    double number(std::string_view key) const {
        const Json& v = at(key);
        if (!v.is_number()) throw ParseError(fmt::format("{}: field '{}' must be a number", context_, key));
        return v.get<double>();
    }

    double number_or(std::string_view key, double fallback) const { return has(key) ? number(key) : fallback; }

    std::string string_or(std::string_view key, std::string fallback) const {
        return has(key) ? string(key) : fallback;
    }

    const Json& array(std::string_view key) const {
        const Json& v = at(key);
        if (!v.is_array()) throw ParseError(fmt::format("{}: field '{}' must be an array", context_, key));
        return v;
    }

private:
    const Json& obj_;
    std::string context_;
};

}  // namespace fogsim::detail
