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

// Answer metrics, trace metrics, the episode runner and the GT-injection
// ablation ladder.

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "geoqa/agent.hpp"
#include "geoqa/db_agent.hpp"
#include "geoqa/map_agent.hpp"
#include "geoqa/slu.hpp"

namespace geoqa {

// Item-level F1 over answer_items multisets; 0 when either side is empty.
double item_f1(const CanonicalAnswer& pred, const CanonicalAnswer& gold);
double item_f1(const std::optional<CanonicalAnswer>& pred, const CanonicalAnswer& gold);
bool accuracy(const std::optional<CanonicalAnswer>& pred, const CanonicalAnswer& gold);

// Row multisets compared cell by cell; column names are ignored.
bool rows_equal_unordered(const Table& a, const Table& b);

struct TraceMetrics {
    std::size_t sql_total = 0, sql_executable = 0, sql_pass = 0;
    std::size_t api_total = 0, api_match = 0;
    std::size_t plan_total = 0, plan_match = 0;
    double ecr() const;
    double pass_at_1() const;
    double api_label_accuracy() const;
    double planning_accuracy() const;
    nlohmann::json to_json() const;
};

// Throws std::invalid_argument when transcripts and golds are misaligned.
TraceMetrics trace_metrics(const std::vector<EpisodeTranscript>& transcripts, const std::vector<QAInstance>& golds);

struct ScoreCell {
    std::size_t n = 0;
    double acc_sum = 0, f1_sum = 0;
    double acc() const { return n ? acc_sum / static_cast<double>(n) : 0.0; }
    double f1() const { return n ? f1_sum / static_cast<double>(n) : 0.0; }
};

struct EvalReport {
    std::string label;
    std::map<int, ScoreCell> per_type;
    ScoreCell overall;
    TraceMetrics trace;
    std::optional<SluMetrics> slu;
    std::size_t episodes = 0;
    std::map<std::string, std::size_t> failures;
    nlohmann::json to_json() const;
    std::string render() const;
};

EvalReport evaluate(const std::vector<EpisodeTranscript>& transcripts, const std::vector<QAInstance>& golds,
                    const std::string& label = "");

// Per-instance backend construction; the oracle and fault backends need the gold.
using BackendFactory = std::function<std::shared_ptr<ChatBackend>(const QAInstance&)>;

enum class SluMode { lexicon, fewshot };
std::optional<SluMode> parse_slu_mode(std::string_view s);

struct RunConfig {
    std::string label;
    SluMode slu = SluMode::fewshot;
    Injection inject;
    std::size_t step_cap = 25;
    std::size_t attempt_cap = 3;
    std::size_t parallelism = 1;
    std::uint64_t seed = 7;
};

struct RunEnvironment {
    const GeoStore* store = nullptr;
    ToolCache* cache = nullptr;
    const CaptionIndex* index = nullptr;
    LexiconSlu* lexicon = nullptr;  // needed for SluMode::lexicon; predict() is stateless
    std::vector<DbExample> db_examples;
    std::vector<FewShotExample> fewshot_pool;
    BackendFactory backend;
};

EpisodeTranscript run_instance(const QAInstance& gold, const RunEnvironment& env, const RunConfig& config);

struct SuiteResult {
    std::vector<EpisodeTranscript> transcripts;
    EvalReport report;
};

SuiteResult run_suite(const std::vector<QAInstance>& instances, const RunEnvironment& env, const RunConfig& config);

// {none, slu, slu+sql, slu+sql+api}
std::vector<Injection> ablation_ladder();
std::vector<SuiteResult> run_ablation(const std::vector<QAInstance>& instances, const RunEnvironment& env,
                                      const RunConfig& config);

}  // namespace geoqa
