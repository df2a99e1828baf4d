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

// Supervisor state machine, the supervisor <-> specialist protocol and the
// episode transcript.

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "geoqa/chat.hpp"
#include "geoqa/domain.hpp"
#include "geoqa/slu.hpp"

namespace geoqa {

// GT-injection switches. inject_slu is honoured by the episode runner, the
// other two by the specialists through AgentTask.
struct Injection {
    bool slu = false;
    bool sql = false;
    bool api = false;
    std::string label() const;
};

struct AgentTask {
    std::string task_description;
    std::string question;
    std::vector<std::string> intents;
    std::vector<SlotAnnotation> slots;
    std::map<std::string, GeoPoint> context;  // entity name -> location
    std::vector<std::string> history;         // one line per earlier exchange
    std::size_t db_step = 0;                  // successful db dispatches so far
    std::optional<SqlStep> injected_sql;
    std::optional<std::vector<ToolStep>> injected_tools;
    std::optional<AnswerRule> injected_rule;
};

nlohmann::json to_json(const AgentTask& t);

enum class AgentStatus { success, error, unable };
std::string_view to_string(AgentStatus s);

struct ToolCallRecord {
    ToolRequest request;
    std::string subject;
    bool ok = false;
    std::string error;
    Table payload;
};

struct AgentResult {
    AgentStatus status = AgentStatus::error;
    std::string error_report;
    std::optional<Table> rows;                   // db_agent
    std::map<std::string, GeoPoint> coordinates; // db_agent
    std::vector<ToolCallRecord> tool_calls;      // map_agent, successful attempt
    std::optional<CanonicalAnswer> derived;      // map_agent synthesis
    std::optional<AnswerRule> rule;

    static AgentResult failure(AgentStatus s, std::string report);
    bool has_evidence() const { return rows.has_value() || !tool_calls.empty() || derived.has_value(); }
};

nlohmann::json to_json(const AgentResult& r);

struct SqlCandidateRecord {
    std::string statement;
    std::string source;  // "generated" | "gt_injected"
    std::string caption;
    bool executed = false;
    std::string error;
    std::optional<Table> rows;
};

struct BackendCallRecord {
    std::string purpose;
    std::string reply;
};

struct DispatchRecord {
    std::string specialist;
    nlohmann::json task;
    nlohmann::json result;
    AgentStatus status = AgentStatus::error;
    std::vector<ToolRequest> tool_requests;  // successful calls of this dispatch
};

struct EpisodeTranscript {
    std::string instance_id;
    SluPrediction slu;
    std::vector<std::vector<std::string>> plans;  // specialist sequence of every plan/replan
    std::vector<DispatchRecord> dispatches;
    std::vector<SqlCandidateRecord> sql_candidates;
    std::vector<ToolCallRecord> tool_calls;  // every attempted call
    std::vector<BackendCallRecord> backend_calls;
    std::optional<CanonicalAnswer> answer;  // empty = unanswerable
    std::string failure;                    // why unanswerable, when it is
    std::size_t step_count = 0;

    std::vector<std::string> dispatched_route() const;
    nlohmann::json to_json() const;
};

// Inverse of EpisodeTranscript::to_json for everything scoring needs.
// Tool-call payloads are not persisted and come back empty.
EpisodeTranscript transcript_from_json(const nlohmann::json& j);

// Collects every backend call, SQL candidate and tool call of one episode.
// Also wraps a backend so nothing escapes the record.
class EpisodeLog {
public:
    explicit EpisodeLog(EpisodeTranscript& t) : t_(t) {}
    std::string complete(ChatBackend& backend, const ChatRequest& request);
    void sql_candidate(SqlCandidateRecord r);
    void tool_call(const ToolCallRecord& r);
    EpisodeTranscript& transcript() { return t_; }

private:
    EpisodeTranscript& t_;
};

class Specialist {
public:
    virtual ~Specialist() = default;
    virtual std::string name() const = 0;
    virtual AgentResult handle(const AgentTask& task, EpisodeLog& log) = 0;
};

struct Directive {
    std::string specialist;
    std::string description;
};

// "STEP <db_agent|map_agent>: <description>" lines. A lone "DONE" line is an
// empty plan (nothing left to do). Unknown specialist names, or neither STEP
// nor DONE lines, make the reply unparseable.
std::optional<std::vector<Directive>> parse_plan(std::string_view reply);
std::string format_plan(const std::vector<Directive>& plan);

struct SupervisorConfig {
    std::size_t step_cap = 25;
    bool backend_sufficiency = false;  // ask SUFFICIENT: yes/no after each success
    Injection inject;
    const QAInstance* gold = nullptr;  // needed by inject.sql / inject.api
};

// Accumulated evidence handed to the finalizer.
struct EvidencePool {
    std::vector<Table> sql_tables;
    std::map<std::string, GeoPoint> coordinates;
    std::vector<ToolObservation> observations;
    std::optional<CanonicalAnswer> derived;
    nlohmann::json to_json() const;
};

// Without a backend: the map agent's derived value, else a single-cell SQL
// result, else the first column of the last table as an entity set.
std::optional<CanonicalAnswer> rule_finalize(const EvidencePool& evidence);

class Supervisor {
public:
    Supervisor(std::shared_ptr<ChatBackend> backend, std::map<std::string, Specialist*> specialists,
               SupervisorConfig config = {});

    std::optional<std::vector<Directive>> plan(const std::string& question, const SluPrediction& slu, EpisodeLog& log);
    // Never throws for backend or specialist failures; they end in the transcript.
    EpisodeTranscript run_episode(const std::string& instance_id, const std::string& question, const SluPrediction& slu);

private:
    std::optional<std::vector<Directive>> ask_plan(Purpose purpose, const std::string& user, const nlohmann::json& ctx,
                                                   EpisodeLog& log);
    std::optional<CanonicalAnswer> finalize(const std::string& question, const SluPrediction& slu,
                                            const EvidencePool& evidence, EpisodeLog& log);
    nlohmann::json base_context(const std::string& question, const SluPrediction& slu) const;

    std::shared_ptr<ChatBackend> backend_;
    std::map<std::string, Specialist*> specialists_;
    SupervisorConfig config_;
    std::string plan_prompt_;
    std::string finalize_prompt_;
};

}  // namespace geoqa
