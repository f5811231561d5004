// Copyright Contributors to the Splatforge Project
// SPDX-License-Identifier: Apache-2.0
//
// Strict reading of JSON config sections: every key must be known, missing keys keep their
// defaults, and type mismatches name the full key path.
//
#pragma once

#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "splatforge/core/error.hpp"
#include "splatforge/core/math.hpp"

namespace splatforge {

class JsonFields {
  public:
    JsonFields(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(where() + "expected an object");
    }

    template <class T>
    JsonFields& get(const std::string& key, T& out) {
        seen_.insert(key);
        const auto it = j_.find(key);
        if (it == j_.end()) return *this;
        try {
            out = it->template get<T>();
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(where() + key + ": " + e.what());
        }
        return *this;
    }

    JsonFields& get(const std::string& key, Vec3& out) {
        std::array<double, 3> a{out.x(), out.y(), out.z()};
        get(key, a);
        out = Vec3(a[0], a[1], a[2]);
        return *this;
    }

    /// Returns the sub-object for `key` (or null when absent) and marks the key as known.
    const nlohmann::json* child(const std::string& key) {
        seen_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    std::string child_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    /// Throws on any key that was never requested.
    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError("unknown config key '" + child_path(it.key()) + "'");
    }

  private:
    std::string where() const { return path_.empty() ? "" : path_ + ": "; }
    const nlohmann::json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

}  // namespace splatforge
