#pragma once

#include "aads/errors.hpp"

#include "json.hpp"

#include <initializer_list>
#include <string>

namespace aads::config {

/// Rejects keys outside `allowed` so that misspelled options are not silently ignored.
inline void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed, const std::string& where)
{
    if (!j.is_object())
        throw ParseError(where + ": expected a JSON object");
    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* a : allowed)
            known = known || item.key() == a;
        if (!known)
            throw ParseError(where + ": unknown field \"" + item.key() + "\"");
    }
}

/// Overwrites `out` when `key` is present.
template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& out, const std::string& where)
{
    if (!j.contains(key))
        return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(where + ": field \"" + key + "\": " + e.what());
    }
}

} // namespace aads::config
