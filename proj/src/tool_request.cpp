/*
 * Copyright 2026 The geoqa Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "geoqa/tool_request.hpp"

#include <cmath>
#include <set>

#include "geoqa/geo.hpp"
#include "geoqa/text.hpp"

namespace geoqa {

namespace {

struct ParamSpec {
    enum class Type { point, positive_number, enumeration, label };
    std::string name;
    Type type;
    std::vector<std::string> values;
};

const std::vector<ParamSpec>& schema(ToolFunction f) {
    using T = ParamSpec::Type;
    static const std::vector<ParamSpec> time = {
        {"origin", T::point, {}},
        {"destination", T::point, {}},
        {"mode", T::enumeration, {"walking", "driving", "cycling", "transit"}},
    };
    static const std::vector<ParamSpec> distance = {
        {"origin", T::point, {}},
        {"destination", T::point, {}},
        {"kind", T::enumeration, {"straight", "walking", "driving"}},
    };
    static const std::vector<ParamSpec> surrounding = {
        {"center", T::point, {}},
        {"radius", T::positive_number, {}},
        {"label", T::label, {}},
    };
    static const std::vector<ParamSpec> rush = {
        {"origin", T::point, {}},
        {"destination", T::point, {}},
        {"mode", T::enumeration, {"driving", "transit"}},
    };
    switch (f) {
        case ToolFunction::time_query: return time;
        case ToolFunction::distance_query: return distance;
        case ToolFunction::surrounding_pois_query: return surrounding;
        case ToolFunction::rush_hour_query: return rush;
    }
    return time;
}

[[noreturn]] void invalid(const std::string& msg) { throw ToolError(ToolError::Code::invalid_params, msg); }

}  // namespace

std::string_view to_string(ToolFunction f) {
    switch (f) {
        case ToolFunction::time_query: return "time_query";
        case ToolFunction::distance_query: return "distance_query";
        case ToolFunction::surrounding_pois_query: return "surrounding_pois_query";
        case ToolFunction::rush_hour_query: return "rush_hour_query";
    }
    return "?";
}

std::string_view to_string(TimeBucket b) {
    switch (b) {
        case TimeBucket::midnight_00: return "midnight_00";
        case TimeBucket::offpeak_15: return "offpeak_15";
        case TimeBucket::peak_08: return "peak_08";
    }
    return "?";
}

std::string_view to_string(ToolError::Code c) {
    switch (c) {
        case ToolError::Code::invalid_params: return "invalid_params";
        case ToolError::Code::cache_miss_no_provider: return "cache_miss_no_provider";
        case ToolError::Code::provider_failure: return "provider_failure";
    }
    return "?";
}

std::optional<ToolFunction> parse_tool_function(std::string_view s) {
    for (auto f : {ToolFunction::time_query, ToolFunction::distance_query, ToolFunction::surrounding_pois_query,
                   ToolFunction::rush_hour_query}) {
        if (to_string(f) == s) return f;
    }
    return std::nullopt;
}

std::optional<TimeBucket> parse_time_bucket(std::string_view s) {
    for (auto b : {TimeBucket::midnight_00, TimeBucket::offpeak_15, TimeBucket::peak_08}) {
        if (to_string(b) == s) return b;
    }
    return std::nullopt;
}

std::string ToolRequest::key() const {
    std::string k = std::string(to_string(function)) + "|" + std::string(to_string(bucket));
    for (const auto& [name, value] : params) k += "|" + name + "=" + value;
    return k;
}

ToolRequest normalize_request(ToolFunction function, const ToolParams& params, std::optional<TimeBucket> bucket) {
    ToolRequest r;
    r.function = function;
    const auto& specs = schema(function);
    std::set<std::string> known;
    for (const auto& spec : specs) {
        known.insert(spec.name);
        auto it = params.find(spec.name);
        if (it == params.end()) invalid("missing parameter '" + spec.name + "' for " + std::string(to_string(function)));
        const std::string raw = trim(it->second);
        switch (spec.type) {
            case ParamSpec::Type::point:
                try {
                    r.params[spec.name] = format_point(parse_point(raw));
                } catch (const std::invalid_argument& e) {
                    invalid("parameter '" + spec.name + "': " + e.what());
                }
                break;
            case ParamSpec::Type::positive_number: {
                double v = 0;
                try {
                    v = parse_double(raw);
                } catch (const std::exception&) {
                    invalid("parameter '" + spec.name + "' is not a number: " + raw);
                }
                if (!(v > 0) || !std::isfinite(v)) invalid("parameter '" + spec.name + "' must be > 0");
                r.params[spec.name] = format_number(std::round(v * 1e6) / 1e6);
                break;
            }
            case ParamSpec::Type::enumeration: {
                const auto v = to_lower(raw);
                bool ok = false;
                for (const auto& allowed : spec.values) ok = ok || allowed == v;
                if (!ok) invalid("parameter '" + spec.name + "' has unsupported value '" + raw + "'");
                r.params[spec.name] = v;
                break;
            }
            case ParamSpec::Type::label: {
                const auto v = to_lower(raw);
                if (!category_of_label(v)) invalid("unknown POI label '" + raw + "'");
                r.params[spec.name] = v;
                break;
            }
        }
    }
    for (const auto& [name, _] : params) {
        if (!known.contains(name)) invalid("unexpected parameter '" + name + "'");
    }

    const bool transit = r.params.contains("mode") && r.params.at("mode") == "transit";
    if (function == ToolFunction::rush_hour_query) {
        r.bucket = TimeBucket::peak_08;
    } else if (bucket) {
        r.bucket = (*bucket == TimeBucket::midnight_00 && transit) ? TimeBucket::offpeak_15 : *bucket;
    } else {
        r.bucket = transit ? TimeBucket::offpeak_15 : TimeBucket::midnight_00;
    }
    return r;
}

std::vector<std::string> result_columns(ToolFunction f) {
    switch (f) {
        case ToolFunction::time_query:
        case ToolFunction::rush_hour_query: return {"duration_s"};
        case ToolFunction::distance_query: return {"distance_m"};
        case ToolFunction::surrounding_pois_query:
            return {"name", "label", "latitude", "longitude", "straight_distance_m"};
    }
    return {};
}

nlohmann::json to_json(const ToolRequest& r) {
    return {{"function", to_string(r.function)}, {"params", r.params}, {"time_bucket", to_string(r.bucket)}};
}

ToolRequest request_from_json(const nlohmann::json& j) {
    auto f = parse_tool_function(j.at("function").get<std::string>());
    if (!f) invalid("unknown function " + j.at("function").dump());
    auto b = parse_time_bucket(j.at("time_bucket").get<std::string>());
    if (!b) invalid("unknown time bucket " + j.at("time_bucket").dump());
    return normalize_request(*f, j.at("params").get<ToolParams>(), *b);
}

const std::map<std::string, std::vector<std::string>>& poi_taxonomy() {
    static const std::map<std::string, std::vector<std::string>> taxonomy = {
        {"education", {"primary school", "middle school", "kindergarten"}},
        {"healthcare", {"hospital", "clinic", "pharmacy"}},
        {"transportation", {"subway station", "bus stop"}},
        {"shopping", {"shopping mall", "supermarket"}},
        {"leisure", {"park", "gym"}},
        {"life services", {"bank", "post office"}},
    };
    return taxonomy;
}

std::optional<std::string> category_of_label(std::string_view label) {
    for (const auto& [category, labels] : poi_taxonomy()) {
        for (const auto& l : labels) {
            if (l == label) return category;
        }
    }
    return std::nullopt;
}

}  // namespace geoqa
