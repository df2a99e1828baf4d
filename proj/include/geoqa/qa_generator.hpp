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

// Template DSL, instantiation into fully supervised QA instances, plausibility
// filtering, re-validation, paraphrasing and stratified splitting.

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "geoqa/chat.hpp"
#include "geoqa/domain.hpp"
#include "geoqa/geo_store.hpp"
#include "geoqa/rng.hpp"
#include "geoqa/tool_cache.hpp"

namespace geoqa {

class TemplateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SamplingExhausted : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A placeholder and how to sample it. Options by kind:
//   city          -
//   district      min_communities
//   community     district (placeholder)
//   poi           label (placeholder)
//   poi_label     near (community placeholder), within (meters or placeholder)
//   price         district (placeholder), ranks (k-th cheapest + 100)
//   sales_status  district (placeholder)
//   choice        values
struct PlaceholderSpec {
    std::string name;
    std::string kind;
    std::string slot;  // slot type; empty = not annotated
    nlohmann::json options = nlohmann::json::object();
};

struct SqlPattern {
    std::string statement;  // {p} literals, {table:family} table names
    std::size_t min_rows = 1;
    std::size_t max_rows = 1000;
};

struct ToolPattern {
    ToolFunction function = ToolFunction::time_query;
    std::map<std::string, std::string> params;  // "@{p}" = coordinates of entity p
    std::optional<TimeBucket> bucket;
    std::optional<std::size_t> for_each_row;  // expand over rows of this SQL step; binds {row}
    bool require_nonempty = true;
};

struct Template {
    std::string template_id;
    int question_type = 1;
    std::vector<std::string> intents;
    std::string question;
    std::vector<PlaceholderSpec> placeholders;
    std::vector<SqlPattern> sql;
    std::vector<ToolPattern> tools;
    nlohmann::json answer_rule;  // AnswerRule JSON; threshold/limit may name placeholders
    double threshold_scale = 1.0;
    std::string nl_answer;
};

Template template_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Template& t);
// All *.json files of a directory, sorted by template_id. Throws TemplateError.
std::vector<Template> load_templates(const std::filesystem::path& dir);
std::filesystem::path default_template_dir();

struct BoundValue {
    std::string text;
    bool numeric = false;
    std::string slot;
};
using Binding = std::map<std::string, BoundValue>;

Binding sample_bindings(const Template& t, const GeoStore& store, Rng& rng);

struct Rejection {
    std::string reason;  // short code, e.g. "sql_error", "plausibility"
    std::string detail;
};

using InstanceOrRejection = std::variant<QAInstance, Rejection>;

InstanceOrRejection instantiate(const Template& t, const Binding& binding, const GeoStore& store, ToolCache& cache,
                                const std::string& instance_id);

struct PlausibilityLimits {
    double walking_m = 10000.0;
    double cycling_m = 20000.0;
};
std::optional<Rejection> plausibility_filter(const QAInstance& inst, const PlausibilityLimits& limits = {});

struct GenerationConfig {
    std::uint64_t seed = 7;
    std::size_t attempts_per_template = 100;
    PlausibilityLimits limits;
};

struct GenerationReport {
    std::size_t attempted = 0;
    std::size_t accepted = 0;
    std::map<std::string, std::size_t> rejected;  // by reason
    std::map<std::string, std::size_t> accepted_by_template;

    std::size_t rejected_total() const;
    nlohmann::json to_json() const;
};

struct GenerationResult {
    std::vector<QAInstance> instances;
    GenerationReport report;
};

GenerationResult generate_dataset(const std::vector<Template>& templates, const GeoStore& store, ToolCache& cache,
                                  const GenerationConfig& config);

// Re-executes SQL, replays tools against the cache, re-derives the answer and
// checks structural and plausibility invariants. Empty result = valid.
std::vector<std::string> validate_instance(const QAInstance& inst, const GeoStore& store, ToolCache& cache,
                                           const PlausibilityLimits& limits = {});

struct SplitSpec {
    double train = 8, val = 1, test = 1;
    std::uint64_t seed = 7;
};

struct DatasetSplit {
    std::vector<QAInstance> train, val, test;
    std::vector<std::string> warnings;
};

// Per template stratum, largest-remainder allocation of the ratios; strata
// smaller than 3 go to train with a warning.
DatasetSplit stratified_split(const std::vector<QAInstance>& instances, const SplitSpec& spec);
std::array<std::size_t, 3> split_counts(std::size_t n, const SplitSpec& spec);

// Rewrites the question through the backend; every slot value must survive
// verbatim (spans are re-located), otherwise the original is kept.
QAInstance paraphrase_hook(const QAInstance& inst, ChatBackend* backend);

std::string render_nl_answer(const CanonicalAnswer& a);

}  // namespace geoqa
