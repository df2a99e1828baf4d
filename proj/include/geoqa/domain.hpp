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

// Core vocabulary: geographic entities, QA instances and their supervision.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "geoqa/answer.hpp"
#include "geoqa/answer_rule.hpp"
#include "geoqa/geo.hpp"
#include "geoqa/table.hpp"
#include "geoqa/tool_request.hpp"

namespace geoqa {

struct Community {
    std::string id;
    std::string city;
    std::string name;
    std::string district;
    std::string address;
    GeoPoint location;
    double greening_rate = 0.0;  // percent, [0, 100]
    double avg_price = 0.0;      // currency per square meter, > 0
    std::string property_type;
    std::string sales_status;
};

struct Poi {
    std::string id;
    std::string city;
    std::string name;
    std::string category;
    std::string label;
    GeoPoint location;
};

enum class PairKind { poi_community, community_community };

struct ProximityPair {
    PairKind kind = PairKind::poi_community;
    std::string subject_id;
    std::string neighbor_id;
    double straight_distance = 0.0;  // meters
};

const std::vector<std::string>& property_types();
const std::vector<std::string>& sales_statuses();

// Half-open byte span [start, end) into the UTF-8 question.
struct SlotAnnotation {
    std::string slot_type;
    std::string value;
    std::size_t start = 0;
    std::size_t end = 0;

    bool operator==(const SlotAnnotation&) const = default;
};

struct SqlStep {
    std::string statement;
    std::string caption;  // caption of the primary table the statement reads
    Table expected_result;

    bool operator==(const SqlStep&) const = default;
};

struct ToolStep {
    ToolFunction function = ToolFunction::time_query;
    ToolParams params;
    TimeBucket time_bucket = TimeBucket::midnight_00;
    // Entity names whose coordinates fill point parameters, e.g. origin -> name.
    std::map<std::string, std::string> param_entities;
    // Candidate entity this call speaks for during synthesis.
    std::string subject;
    Table expected_result;

    ToolRequest request() const;
    bool operator==(const ToolStep&) const = default;
};

inline constexpr const char* kDbAgent = "db_agent";
inline constexpr const char* kMapAgent = "map_agent";

struct QAInstance {
    std::string id;
    std::string template_id;
    std::string city;
    std::string question;
    int question_type = 1;
    std::vector<std::string> intents;
    std::vector<SlotAnnotation> slots;
    std::vector<SqlStep> sql_trace;
    std::vector<ToolStep> tool_trace;
    std::vector<std::string> agent_route;
    CanonicalAnswer answer;
    std::string nl_answer;
    AnswerRule answer_rule;
};

// Column-name conventions for coordinate extraction from result rows.
struct CoordinateColumns {
    std::vector<std::string> name = {"name", "community_name", "poi_name", "neighbor_name"};
    std::vector<std::string> latitude = {"latitude", "lat"};
    std::vector<std::string> longitude = {"longitude", "lon", "lng"};
};

// entity name -> location for every row that carries a (name, latitude,
// longitude) triple. Rows with non-numeric coordinates are skipped.
std::map<std::string, GeoPoint> coordinate_map(const Table& t, const CoordinateColumns& cols = {});

// Structural invariants (type vs trace shape, slot spans, answer validity).
// Returns human-readable violations; empty when the instance is well formed.
std::vector<std::string> check_instance(const QAInstance& inst);

// Whitespace/punctuation tokenization used for IOB export.
inline constexpr const char* kTokenizationId = "ws-punct-v1";

struct Token {
    std::string text;
    std::size_t start = 0;
    std::size_t end = 0;
};
std::vector<Token> tokenize(std::string_view text);

// IOB tags aligned with tokenize(question).
std::vector<std::string> iob_tags(std::string_view question, const std::vector<SlotAnnotation>& slots);

nlohmann::json to_json(const SlotAnnotation& s);
SlotAnnotation slot_from_json(const nlohmann::json& j);
nlohmann::json to_json(const QAInstance& inst);
QAInstance instance_from_json(const nlohmann::json& j);

// Line-delimited dataset files, one instance per line.
std::string serialize_instance(const QAInstance& inst);
std::vector<QAInstance> read_dataset(const std::filesystem::path& path);
void write_dataset(const std::filesystem::path& path, const std::vector<QAInstance>& instances);

}  // namespace geoqa
