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

// Answer derivation over SQL rows and tool payloads. The same rule drives
// gold-answer construction, re-validation and post-tool synthesis.

#include <optional>
#include <string>
#include <vector>

#include "geoqa/answer.hpp"
#include "geoqa/table.hpp"

namespace geoqa {

enum class RuleKind { lookup, list, count, argmin, argmax, threshold, passthrough, compare };
enum class RuleSource { sql, tool };

std::string_view to_string(RuleKind k);
std::optional<RuleKind> parse_rule_kind(std::string_view s);

struct AnswerRule {
    RuleKind kind = RuleKind::lookup;
    RuleSource source = RuleSource::sql;
    std::size_t step = 0;             // sql source: which SQL step
    std::string column;               // value column; empty means first column
    std::string key_column = "name";  // sql source: entity column for argmin/argmax/threshold
    std::string unit;                 // Number unit for lookup/count
    std::optional<double> threshold;  // threshold: keep values <= threshold
    std::optional<std::size_t> limit; // list: take at most this many (and require that many)

    bool operator==(const AnswerRule&) const = default;
};

// One executed tool call as seen by synthesis: the candidate entity it speaks
// for and the tabular payload it returned.
struct ToolObservation {
    std::string subject;
    std::string column;  // first result column, e.g. duration_s
    Table payload;
};

struct Derivation {
    std::optional<CanonicalAnswer> answer;
    std::string error;  // set when answer is empty
};

// Numeric cells: duration_s -> Duration, distance_m / straight_distance_m ->
// Distance, anything else -> Number{unit}. Text cells -> Text.
CanonicalAnswer scalar_answer(const Cell& c, const std::string& column, const std::string& unit = "");

// Ties in argmin/argmax break by entity name (lexicographically smallest).
Derivation derive_from_sql(const AnswerRule& rule, const std::vector<Table>& sql_results);
Derivation derive_from_tools(const AnswerRule& rule, const std::vector<ToolObservation>& observations);
Derivation derive_answer(const AnswerRule& rule, const std::vector<Table>& sql_results,
                         const std::vector<ToolObservation>& observations);

nlohmann::json to_json(const AnswerRule& r);
AnswerRule rule_from_json(const nlohmann::json& j);

// "RULE argmin" / "RULE threshold threshold=1200" / "RULE list limit=3"
std::string format_rule_line(const AnswerRule& r);
std::optional<AnswerRule> parse_rule_line(std::string_view line);

}  // namespace geoqa
