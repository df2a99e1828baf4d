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

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

namespace geoqa {

namespace answer {

// Multiset of entity names; order carries no meaning.
struct EntitySet {
    std::vector<std::string> items;
};
struct Number {
    double value = 0.0;
    std::string unit;  // e.g. "count", "percent", "yuan_per_sqm"
};
struct Duration {
    double seconds = 0.0;
};
struct Distance {
    double meters = 0.0;
};
struct Boolean {
    bool value = false;
};
struct Text {
    std::string value;
};

}  // namespace answer

using CanonicalAnswer = std::variant<answer::EntitySet, answer::Number, answer::Duration,
                                     answer::Distance, answer::Boolean, answer::Text>;

// Trim and collapse internal whitespace runs to one space.
std::string normalize_text(std::string_view s);

// Maps a unit alias to its canonical unit and the factor converting a value in
// the alias unit into the canonical unit. Unknown units map to themselves.
std::pair<std::string, double> canonical_unit(std::string_view unit);

bool answer_valid(const CanonicalAnswer& a);

// Strict exact match. Entity sets compare as multisets of normalized names;
// numeric variants compare after unit normalization (values rounded to 1e-6);
// different variants never match.
bool answer_equal(const CanonicalAnswer& pred, const CanonicalAnswer& gold);

// Item decomposition used for partial credit: entity set elements, or a single
// normalized token for scalar answers.
std::vector<std::string> answer_items(const CanonicalAnswer& a);

std::string_view answer_kind(const CanonicalAnswer& a);

nlohmann::json to_json(const CanonicalAnswer& a);
CanonicalAnswer answer_from_json(const nlohmann::json& j);

// Line-oriented answer envelope:
//   ANSWER entity_set: A | B | C
//   ANSWER number: 32000 yuan_per_sqm
//   ANSWER duration: 936
//   ANSWER distance: 1300
//   ANSWER boolean: true
//   ANSWER text: free text
//   ANSWER unanswerable
// Anything before the last ANSWER line is ignored.
std::string format_answer_envelope(const std::optional<CanonicalAnswer>& a);

struct ParsedAnswer {
    enum class Status { ok, unanswerable, malformed };
    Status status = Status::malformed;
    std::optional<CanonicalAnswer> answer;
};
ParsedAnswer parse_answer_envelope(std::string_view text);

}  // namespace geoqa
