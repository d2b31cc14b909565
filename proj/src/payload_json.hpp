#pragma once

#include <string>

#include <json.hpp>

#include "taskprog/corpus.hpp"
#include "taskprog/errors.hpp"

namespace taskprog::detail {

inline nlohmann::ordered_json payload_to_json(const Payload& payload) {
    if (const auto* ref = std::get_if<std::string>(&payload)) return *ref;
    return std::get<FeatureVector>(payload);
}

inline Payload payload_from_json(const nlohmann::ordered_json& j, const std::string& where) {
    if (j.is_string()) return j.get<std::string>();
    if (j.is_array()) {
        FeatureVector features;
        features.reserve(j.size());
        for (const auto& v : j) {
            if (!v.is_number()) throw DataError(where + ": payload array entries must be numbers");
            features.push_back(v.get<double>());
        }
        return features;
    }
    throw DataError(where + ": payload must be a string reference or a number array");
}

}  // namespace taskprog::detail
