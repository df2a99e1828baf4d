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

#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace geoqa {

enum class ToolFunction { time_query, distance_query, surrounding_pois_query, rush_hour_query };

// Collection windows for cached travel metrics (UTC+8): midnight baseline,
// 15:00 weekday off-peak, 08:00 weekday peak.
enum class TimeBucket { midnight_00, offpeak_15, peak_08 };

std::string_view to_string(ToolFunction f);
std::string_view to_string(TimeBucket b);
std::optional<ToolFunction> parse_tool_function(std::string_view s);
std::optional<TimeBucket> parse_time_bucket(std::string_view s);

class ToolError : public std::runtime_error {
public:
    enum class Code { invalid_params, cache_miss_no_provider, provider_failure };
    ToolError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
    Code code() const { return code_; }

private:
    Code code_;
};

std::string_view to_string(ToolError::Code c);

using ToolParams = std::map<std::string, std::string>;

// A normalized tool call. Construct through normalize_request so that
// coordinates are rounded, enums case-folded and bucket rules applied.
struct ToolRequest {
    ToolFunction function = ToolFunction::time_query;
    ToolParams params;
    TimeBucket bucket = TimeBucket::midnight_00;

    // Canonical serialization used as the cache key.
    std::string key() const;
    bool operator==(const ToolRequest&) const = default;
};

// Validates params against the function schema and canonicalizes them.
// Bucket rules: rush_hour_query is always peak_08; transit at midnight_00 is
// re-keyed to offpeak_15; when no bucket is given, time_query transit uses
// offpeak_15 and everything else midnight_00.
// Throws ToolError(invalid_params).
ToolRequest normalize_request(ToolFunction function, const ToolParams& params,
                              std::optional<TimeBucket> bucket = std::nullopt);

// Result column schema per function.
std::vector<std::string> result_columns(ToolFunction f);

nlohmann::json to_json(const ToolRequest& r);
ToolRequest request_from_json(const nlohmann::json& j);

// The POI label taxonomy: six top-level categories with refined labels.
const std::map<std::string, std::vector<std::string>>& poi_taxonomy();
std::optional<std::string> category_of_label(std::string_view label);

}  // namespace geoqa
