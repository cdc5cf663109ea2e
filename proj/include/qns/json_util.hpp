#pragma once

#include <json.hpp>

#include <initializer_list>
#include <stdexcept>
#include <string>

namespace qns {

using json = nlohmann::json;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require_keys(const json& j, const std::string& where,
                         std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) { ok = true; break; }
        if (!ok) throw ConfigError(where + ": unknown key '" + it.key() + "'");
    }
}

inline double get_num(const json& j, const std::string& where, const char* key) {
    if (!j.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
    if (!j[key].is_number()) throw ConfigError(where + ": key '" + key + "' must be a number");
    return j[key].get<double>();
}

inline double get_num_or(const json& j, const char* key, double dflt) {
    if (!j.contains(key)) return dflt;
    return j[key].get<double>();
}

} // namespace qns
