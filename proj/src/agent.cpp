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

#include "geoqa/agent.hpp"

#include <algorithm>

#include "geoqa/text.hpp"

namespace geoqa {

namespace {

nlohmann::json points_json(const std::map<std::string, GeoPoint>& m) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [name, p] : m) j[name] = format_point(p);
    return j;
}

nlohmann::json slots_json(const std::vector<SlotAnnotation>& slots) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& s : slots) j.push_back(to_json(s));
    return j;
}

std::string slu_text(const SluPrediction& slu) {
    std::string out = "Intents: " + join(slu.intents, ", ") + "\nSlots:\n";
    for (const auto& s : slu.slots) out += "- " + s.slot_type + ": " + s.value + "\n";
    return out;
}

const char* kPlanFormatReminder =
    "Your reply had no valid plan. Reply again with one line per directive, each of the form "
    "STEP <db_agent|map_agent>: <sub-task>.";

}  // namespace

std::string Injection::label() const {
    std::vector<std::string> parts;
    if (slu) parts.push_back("slu");
    if (sql) parts.push_back("sql");
    if (api) parts.push_back("api");
    return parts.empty() ? "none" : join(parts, "+");
}

nlohmann::json to_json(const AgentTask& t) {
    nlohmann::json j = {{"task_description", t.task_description},
                        {"question", t.question},
                        {"intents", t.intents},
                        {"slots", slots_json(t.slots)},
                        {"context", points_json(t.context)},
                        {"history", t.history},
                        {"db_step", t.db_step}};
    if (t.injected_sql) j["injected_sql"] = t.injected_sql->statement;
    if (t.injected_tools) j["injected_tools"] = t.injected_tools->size();
    return j;
}

std::string_view to_string(AgentStatus s) {
    switch (s) {
        case AgentStatus::success: return "success";
        case AgentStatus::error: return "error";
        case AgentStatus::unable: return "unable";
    }
    return "?";
}

AgentResult AgentResult::failure(AgentStatus s, std::string report) {
    AgentResult r;
    r.status = s;
    r.error_report = report.empty() ? "unspecified failure" : std::move(report);
    return r;
}

nlohmann::json to_json(const AgentResult& r) {
    nlohmann::json j = {{"status", to_string(r.status)}};
    if (!r.error_report.empty()) j["error_report"] = r.error_report;
    if (r.rows) j["rows"] = to_json(*r.rows);
    if (!r.coordinates.empty()) j["coordinates"] = points_json(r.coordinates);
    if (!r.tool_calls.empty()) {
        j["tool_calls"] = nlohmann::json::array();
        for (const auto& c : r.tool_calls) {
            j["tool_calls"].push_back({{"request", to_json(c.request)}, {"subject", c.subject}, {"payload", to_json(c.payload)}});
        }
    }
    if (r.derived) j["derived"] = to_json(*r.derived);
    if (r.rule) j["rule"] = to_json(*r.rule);
    return j;
}

std::vector<std::string> EpisodeTranscript::dispatched_route() const {
    std::vector<std::string> out;
    for (const auto& d : dispatches) out.push_back(d.specialist);
    return out;
}

nlohmann::json EpisodeTranscript::to_json() const {
    nlohmann::json j;
    j["instance_id"] = instance_id;
    j["slu"] = geoqa::to_json(slu);
    j["plans"] = plans;
    j["dispatches"] = nlohmann::json::array();
    for (const auto& d : dispatches) {
        nlohmann::json reqs = nlohmann::json::array();
        for (const auto& r : d.tool_requests) reqs.push_back(geoqa::to_json(r));
        j["dispatches"].push_back({{"specialist", d.specialist},
                                   {"status", to_string(d.status)},
                                   {"task", d.task},
                                   {"result", d.result},
                                   {"tool_requests", reqs}});
    }
    j["sql_candidates"] = nlohmann::json::array();
    for (const auto& c : sql_candidates) {
        nlohmann::json x = {{"statement", c.statement}, {"source", c.source}, {"caption", c.caption}, {"executed", c.executed}};
        if (!c.error.empty()) x["error"] = c.error;
        if (c.rows) x["rows"] = geoqa::to_json(*c.rows);
        j["sql_candidates"].push_back(std::move(x));
    }
    j["tool_calls"] = nlohmann::json::array();
    for (const auto& c : tool_calls) {
        nlohmann::json x = {{"request", geoqa::to_json(c.request)}, {"ok", c.ok}};
        if (!c.error.empty()) x["error"] = c.error;
        j["tool_calls"].push_back(std::move(x));
    }
    j["backend_calls"] = nlohmann::json::array();
    for (const auto& c : backend_calls) j["backend_calls"].push_back({{"purpose", c.purpose}, {"reply", c.reply}});
    j["answer"] = answer ? geoqa::to_json(*answer) : nlohmann::json(nullptr);
    j["unanswerable"] = !answer.has_value();
    if (!failure.empty()) j["failure"] = failure;
    j["step_count"] = step_count;
    return j;
}

EpisodeTranscript transcript_from_json(const nlohmann::json& j) {
    EpisodeTranscript t;
    t.instance_id = j.at("instance_id").get<std::string>();
    t.slu.intents = j.at("slu").at("intents").get<std::vector<std::string>>();
    for (const auto& s : j.at("slu").at("slots")) t.slu.slots.push_back(slot_from_json(s));
    t.plans = j.at("plans").get<std::vector<std::vector<std::string>>>();
    for (const auto& d : j.at("dispatches")) {
        DispatchRecord r;
        r.specialist = d.at("specialist").get<std::string>();
        const auto st = d.at("status").get<std::string>();
        r.status = st == "success" ? AgentStatus::success : st == "unable" ? AgentStatus::unable : AgentStatus::error;
        r.task = d.value("task", nlohmann::json());
        r.result = d.value("result", nlohmann::json());
        for (const auto& q : d.at("tool_requests")) r.tool_requests.push_back(request_from_json(q));
        t.dispatches.push_back(std::move(r));
    }
    for (const auto& c : j.at("sql_candidates")) {
        SqlCandidateRecord r;
        r.statement = c.at("statement").get<std::string>();
        r.source = c.at("source").get<std::string>();
        r.caption = c.value("caption", "");
        r.executed = c.at("executed").get<bool>();
        r.error = c.value("error", "");
        if (c.contains("rows")) r.rows = table_from_json(c.at("rows"));
        t.sql_candidates.push_back(std::move(r));
    }
    for (const auto& c : j.at("tool_calls")) {
        ToolCallRecord r;
        r.request = request_from_json(c.at("request"));
        r.ok = c.at("ok").get<bool>();
        r.error = c.value("error", "");
        t.tool_calls.push_back(std::move(r));
    }
    for (const auto& c : j.at("backend_calls")) {
        t.backend_calls.push_back({c.at("purpose").get<std::string>(), c.at("reply").get<std::string>()});
    }
    if (!j.at("answer").is_null()) t.answer = answer_from_json(j.at("answer"));
    t.failure = j.value("failure", "");
    t.step_count = j.at("step_count").get<std::size_t>();
    return t;
}

std::string EpisodeLog::complete(ChatBackend& backend, const ChatRequest& request) {
    try {
        auto reply = backend.complete(request);
        t_.backend_calls.push_back({std::string(to_string(request.purpose)), reply});
        return reply;
    } catch (const std::exception& e) {
        t_.backend_calls.push_back({std::string(to_string(request.purpose)), std::string("<error> ") + e.what()});
        throw;
    }
}

void EpisodeLog::sql_candidate(SqlCandidateRecord r) { t_.sql_candidates.push_back(std::move(r)); }

void EpisodeLog::tool_call(const ToolCallRecord& r) { t_.tool_calls.push_back(r); }

std::optional<std::vector<Directive>> parse_plan(std::string_view reply) {
    std::vector<Directive> plan;
    bool done = false;
    for (const auto& raw : split_lines(reply)) {
        const auto line = trim(raw);
        done = done || line == "DONE";
        if (!starts_with(line, "STEP ")) continue;
        const auto colon = line.find(':');
        if (colon == std::string::npos) return std::nullopt;
        Directive d{trim(line.substr(5, colon - 5)), trim(line.substr(colon + 1))};
        if (d.specialist != kDbAgent && d.specialist != kMapAgent) return std::nullopt;
        plan.push_back(std::move(d));
    }
    if (plan.empty() && !done) return std::nullopt;
    return plan;
}

std::string format_plan(const std::vector<Directive>& plan) {
    std::string out;
    for (const auto& d : plan) out += "STEP " + d.specialist + ": " + d.description + "\n";
    return out;
}

nlohmann::json EvidencePool::to_json() const {
    nlohmann::json j;
    j["sql_tables"] = nlohmann::json::array();
    for (const auto& t : sql_tables) j["sql_tables"].push_back(geoqa::to_json(t));
    j["coordinates"] = points_json(coordinates);
    j["observations"] = nlohmann::json::array();
    for (const auto& o : observations) {
        j["observations"].push_back({{"subject", o.subject}, {"column", o.column}, {"payload", geoqa::to_json(o.payload)}});
    }
    j["derived"] = derived ? geoqa::to_json(*derived) : nlohmann::json(nullptr);
    return j;
}

std::optional<CanonicalAnswer> rule_finalize(const EvidencePool& evidence) {
    if (evidence.derived) return evidence.derived;
    if (evidence.sql_tables.empty()) return std::nullopt;
    const auto& t = evidence.sql_tables.back();
    if (t.rows.empty() || t.columns.empty()) return std::nullopt;
    if (t.rows.size() == 1 && t.columns.size() == 1) {
        const auto& c = t.rows[0][0];
        return scalar_answer(c, t.columns[0]);
    }
    if (t.rows.size() == 1 && t.columns.size() == 2 && is_numeric(t.rows[0][1])) {
        return scalar_answer(t.rows[0][1], t.columns[1]);
    }
    answer::EntitySet s;
    for (const auto& r : t.rows) s.items.push_back(cell_text(r[0]));
    return s;
}

Supervisor::Supervisor(std::shared_ptr<ChatBackend> backend, std::map<std::string, Specialist*> specialists,
                       SupervisorConfig config)
    : backend_(std::move(backend)), specialists_(std::move(specialists)), config_(config) {
    if (!backend_) throw std::invalid_argument("supervisor needs a chat backend");
    if (config_.step_cap == 0) throw std::invalid_argument("step_cap must be >= 1");
    plan_prompt_ = load_asset("prompts/supervisor_v1.txt");
    finalize_prompt_ = load_asset("prompts/finalize_v1.txt");
}

nlohmann::json Supervisor::base_context(const std::string& question, const SluPrediction& slu) const {
    return {{"question", question}, {"intents", slu.intents}, {"slots", slots_json(slu.slots)}};
}

std::optional<std::vector<Directive>> Supervisor::ask_plan(Purpose purpose, const std::string& user,
                                                           const nlohmann::json& ctx, EpisodeLog& log) {
    ChatRequest req;
    req.purpose = purpose;
    req.system = plan_prompt_;
    req.context = ctx;
    req.messages.push_back({"user", user});
    auto reply = log.complete(*backend_, req);
    if (auto p = parse_plan(reply)) return p;
    req.messages.push_back({"assistant", reply});
    req.messages.push_back({"user", kPlanFormatReminder});
    reply = log.complete(*backend_, req);
    return parse_plan(reply);
}

std::optional<std::vector<Directive>> Supervisor::plan(const std::string& question, const SluPrediction& slu,
                                                       EpisodeLog& log) {
    return ask_plan(Purpose::plan, "Question: " + question + "\n" + slu_text(slu) + "\nWrite the plan.",
                    base_context(question, slu), log);
}

std::optional<CanonicalAnswer> Supervisor::finalize(const std::string& question, const SluPrediction& slu,
                                                    const EvidencePool& evidence, EpisodeLog& log) {
    ChatRequest req;
    req.purpose = Purpose::finalize;
    req.system = finalize_prompt_;
    req.context = base_context(question, slu);
    req.context["evidence"] = evidence.to_json();
    std::string user = "Question: " + question + "\n\nEvidence:\n";
    for (std::size_t i = 0; i < evidence.sql_tables.size(); ++i) {
        user += "[database result " + std::to_string(i + 1) + "]\n" + render_table(evidence.sql_tables[i]) + "\n";
    }
    for (const auto& o : evidence.observations) {
        user += "[map result for " + o.subject + "]\n" + render_table(o.payload, 20) + "\n";
    }
    if (evidence.derived) user += "[map agent conclusion] " + format_answer_envelope(*evidence.derived) + "\n";
    req.messages.push_back({"user", user});
    const auto reply = log.complete(*backend_, req);
    const auto parsed = parse_answer_envelope(reply);
    switch (parsed.status) {
        case ParsedAnswer::Status::ok: return parsed.answer;
        case ParsedAnswer::Status::unanswerable: return std::nullopt;
        case ParsedAnswer::Status::malformed: break;
    }
    return answer::Text{normalize_text(reply)};
}

EpisodeTranscript Supervisor::run_episode(const std::string& instance_id, const std::string& question,
                                          const SluPrediction& slu) {
    EpisodeTranscript t;
    t.instance_id = instance_id;
    t.slu = slu;
    EpisodeLog log(t);
    auto unanswerable = [&](std::string why) {
        t.answer.reset();
        t.failure = std::move(why);
        return t;
    };
    auto route_of = [](const std::vector<Directive>& dirs) {
        std::vector<std::string> r;
        for (const auto& d : dirs) r.push_back(d.specialist);
        return r;
    };

    try {
        t.step_count = 1;
        auto first = plan(question, slu, log);
        if (!first || first->empty()) return unanswerable("plan_parse_failure");
        std::vector<Directive> dirs = *first;
        t.plans.push_back(route_of(dirs));

        EvidencePool ev;
        std::vector<std::string> history;
        std::vector<std::string> completed;
        std::size_t idx = 0;
        std::size_t db_done = 0;
        auto replan = [&](const std::string& why) -> bool {
            if (t.step_count >= config_.step_cap) return false;
            ++t.step_count;
            auto ctx = base_context(question, slu);
            ctx["completed"] = completed;
            ctx["failure"] = why;
            std::string user = "Question: " + question + "\n" + slu_text(slu) + "\nCompleted directives: " +
                               (completed.empty() ? "none" : join(completed, ", ")) + "\nProblem: " + why +
                               "\nWrite the revised plan for the remaining work.";
            auto next = ask_plan(Purpose::replan, user, ctx, log);
            if (!next) {
                t.failure = "replan_parse_failure";
                return false;
            }
            dirs.resize(idx);
            dirs.insert(dirs.end(), next->begin(), next->end());
            t.plans.push_back(route_of(dirs));
            return true;
        };

        while (idx < dirs.size()) {
            if (t.step_count >= config_.step_cap) return unanswerable("step_cap");
            ++t.step_count;
            const auto d = dirs[idx];
            AgentTask task;
            task.task_description = d.description;
            task.question = question;
            task.intents = slu.intents;
            task.slots = slu.slots;
            task.context = ev.coordinates;
            task.history = history;
            task.db_step = db_done;
            if (config_.gold && config_.inject.sql && d.specialist == kDbAgent && db_done < config_.gold->sql_trace.size()) {
                task.injected_sql = config_.gold->sql_trace[db_done];
            }
            if (config_.gold && config_.inject.api && d.specialist == kMapAgent && !config_.gold->tool_trace.empty()) {
                task.injected_tools = config_.gold->tool_trace;
                task.injected_rule = config_.gold->answer_rule;
            }

            AgentResult r;
            auto it = specialists_.find(d.specialist);
            if (it == specialists_.end()) {
                r = AgentResult::failure(AgentStatus::unable, "no specialist named " + d.specialist);
            } else {
                try {
                    r = it->second->handle(task, log);
                } catch (const BackendError&) {
                    throw;
                } catch (const std::exception& e) {
                    r = AgentResult::failure(AgentStatus::error, e.what());
                }
            }
            if (r.status == AgentStatus::success && !r.has_evidence()) {
                r = AgentResult::failure(AgentStatus::error, "specialist reported success without evidence");
            }
            DispatchRecord rec{d.specialist, to_json(task), to_json(r), r.status, {}};
            for (const auto& c : r.tool_calls) rec.tool_requests.push_back(c.request);
            t.dispatches.push_back(std::move(rec));
            history.push_back(d.specialist + " (" + d.description + "): " + std::string(to_string(r.status)) +
                              (r.error_report.empty() ? "" : " - " + r.error_report));

            if (r.status != AgentStatus::success) {
                if (!replan(d.specialist + " " + std::string(to_string(r.status)) + ": " + r.error_report)) {
                    return unanswerable(t.failure.empty() ? "step_cap" : t.failure);
                }
                continue;
            }
            if (r.rows) {
                ev.sql_tables.push_back(*r.rows);
                ++db_done;
            }
            for (const auto& [name, p] : r.coordinates) ev.coordinates[name] = p;
            for (const auto& c : r.tool_calls) {
                ev.observations.push_back({c.subject, c.payload.columns.empty() ? "" : c.payload.columns.front(), c.payload});
            }
            if (r.derived) ev.derived = r.derived;
            completed.push_back(d.specialist);
            ++idx;

            if (config_.backend_sufficiency) {
                if (t.step_count >= config_.step_cap) return unanswerable("step_cap");
                ++t.step_count;
                ChatRequest req;
                req.purpose = Purpose::sufficiency;
                req.system = plan_prompt_;
                req.context = base_context(question, slu);
                req.context["completed"] = completed;
                req.context["remaining"] = dirs.size() - idx;
                req.messages.push_back({"user", "Question: " + question + "\nEvidence so far:\n" + join(history, "\n") +
                                                    "\nIs the evidence sufficient to answer? Reply SUFFICIENT: yes or SUFFICIENT: no."});
                const auto reply = to_lower(log.complete(*backend_, req));
                const bool yes = reply.find("sufficient: yes") != std::string::npos;
                const bool no = reply.find("sufficient: no") != std::string::npos;
                if (yes) break;
                if (no && idx >= dirs.size() && !replan("evidence judged insufficient")) {
                    return unanswerable(t.failure.empty() ? "step_cap" : t.failure);
                }
            }
        }
        t.answer = finalize(question, slu, ev, log);
        if (!t.answer) t.failure = "finalizer_unanswerable";
    } catch (const BackendError& e) {
        return unanswerable(std::string("backend_error: ") + e.what());
    }
    return t;
}

}  // namespace geoqa
