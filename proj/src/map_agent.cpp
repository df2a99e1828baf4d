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

#include "geoqa/map_agent.hpp"

#include "geoqa/text.hpp"

namespace geoqa {

std::optional<MapDecision> parse_map_reply(std::string_view reply) {
    MapDecision d;
    bool any = false;
    for (const auto& raw : split_lines(reply)) {
        const auto line = trim(raw);
        if (starts_with(line, "UNABLE:")) {
            d.unable = trim(line.substr(7));
            if (d.unable->empty()) d.unable = "unspecified";
            any = true;
        } else if (starts_with(line, "RULE")) {
            auto r = parse_rule_line(line);
            if (!r) throw std::invalid_argument("malformed RULE line: " + line);
            d.rule = r;
        } else if (starts_with(line, "CALL ")) {
            any = true;
            auto rest = trim(line.substr(5));
            const auto sp = rest.find(' ');
            const auto fname = rest.substr(0, sp);
            auto f = parse_tool_function(fname);
            if (!f) throw std::invalid_argument("unknown function '" + fname + "'");
            ToolCallSpec call;
            call.function = *f;
            if (sp != std::string::npos) {
                for (const auto& part : split(rest.substr(sp + 1), ';')) {
                    if (trim(part).empty()) continue;
                    const auto eq = part.find('=');
                    if (eq == std::string::npos) throw std::invalid_argument("parameter without '=': " + trim(part));
                    const auto k = trim(part.substr(0, eq));
                    const auto v = trim(part.substr(eq + 1));
                    if (k == "bucket") {
                        auto b = parse_time_bucket(v);
                        if (!b) throw std::invalid_argument("unknown bucket '" + v + "'");
                        call.bucket = b;
                    } else {
                        call.params[k] = v;
                    }
                }
            }
            d.calls.push_back(std::move(call));
        }
    }
    if (!any) return std::nullopt;
    return d;
}

std::string format_call(const ToolCallSpec& call) {
    std::vector<std::string> parts;
    for (const auto& [k, v] : call.params) parts.push_back(k + "=" + v);
    if (call.bucket) parts.push_back("bucket=" + std::string(to_string(*call.bucket)));
    return "CALL " + std::string(to_string(call.function)) + " " + join(parts, "; ");
}

MapAgent::MapAgent(ToolCache& cache, std::shared_ptr<ChatBackend> backend, MapAgentConfig config)
    : cache_(cache), backend_(std::move(backend)), config_(config) {
    if (config_.attempt_cap == 0) throw std::invalid_argument("attempt_cap must be >= 1");
    prompt_ = load_asset("prompts/map_tool_v1.txt") + "\n# Tools\n" + load_asset("tools.json");
}

AgentResult MapAgent::invoke_and_synthesize(const std::vector<std::pair<ToolRequest, std::string>>& calls,
                                            const AnswerRule& rule, EpisodeLog& log) {
    AgentResult r;
    std::vector<ToolObservation> obs;
    for (const auto& [req, subject] : calls) {
        ToolCallRecord rec{req, subject, false, {}, {}};
        try {
            rec.payload = cache_.call(req);
            rec.ok = true;
        } catch (const ToolError& e) {
            rec.error = std::string(to_string(e.code())) + ": " + e.what();
        }
        log.tool_call(rec);
        if (!rec.ok) return AgentResult::failure(AgentStatus::error, rec.error);
        obs.push_back({subject, rec.payload.columns.empty() ? "" : rec.payload.columns.front(), rec.payload});
        r.tool_calls.push_back(std::move(rec));
    }
    if (r.tool_calls.empty()) return AgentResult::failure(AgentStatus::error, "no tool calls");
    r.rule = rule;
    if (rule.source == RuleSource::tool) {
        const auto d = derive_from_tools(rule, obs);
        if (!d.answer) return AgentResult::failure(AgentStatus::error, "rule " + std::string(to_string(rule.kind)) + ": " + d.error);
        r.derived = d.answer;
    }
    r.status = AgentStatus::success;
    return r;
}

AgentResult MapAgent::handle(const AgentTask& task, EpisodeLog& log) {
    if (task.injected_tools) {
        std::vector<std::pair<ToolRequest, std::string>> calls;
        for (const auto& s : *task.injected_tools) calls.emplace_back(s.request(), s.subject);
        AnswerRule rule;
        rule.kind = RuleKind::passthrough;
        rule.source = RuleSource::tool;
        return invoke_and_synthesize(calls, task.injected_rule.value_or(rule), log);
    }

    ChatRequest req;
    req.purpose = Purpose::tool;
    req.system = prompt_;
    req.context = to_json(task);
    std::string user = "Question: " + task.question + "\nSub-task: " + task.task_description + "\nSlots:\n";
    for (const auto& s : task.slots) user += "- " + s.slot_type + ": " + s.value + "\n";
    user += "Known entities:\n";
    for (const auto& [name, p] : task.context) user += "- " + name + " (" + format_point(p) + ")\n";
    if (task.context.empty()) user += "(none)\n";
    req.messages.push_back({"user", user});

    std::string last_error;
    for (std::size_t attempt = 0; attempt < config_.attempt_cap; ++attempt) {
        const auto reply = log.complete(*backend_, req);
        req.messages.push_back({"assistant", reply});
        std::optional<MapDecision> d;
        try {
            d = parse_map_reply(reply);
            if (!d) last_error = "no CALL lines found";
        } catch (const std::invalid_argument& e) {
            last_error = e.what();
        }
        if (d && d->unable && d->calls.empty()) return AgentResult::failure(AgentStatus::unable, *d->unable);
        if (d && d->calls.empty()) last_error = "no CALL lines found";
        if (d && !d->calls.empty()) {
            std::vector<std::pair<ToolRequest, std::string>> calls;
            bool resolved = true;
            for (const auto& c : d->calls) {
                ToolParams params;
                std::string subject;
                for (const auto& [k, v] : c.params) {
                    if (starts_with(v, "@")) {
                        const auto name = trim(v.substr(1));
                        auto it = task.context.find(name);
                        if (it == task.context.end()) {
                            return AgentResult::failure(AgentStatus::unable, "coordinates of '" + name + "' are missing");
                        }
                        params[k] = format_point(it->second);
                        if (k == "origin" || k == "center") subject = name;
                    } else {
                        params[k] = v;
                        if ((k == "origin" || k == "center") && subject.empty()) subject = v;
                    }
                }
                try {
                    calls.emplace_back(normalize_request(c.function, params, c.bucket), subject);
                } catch (const ToolError& e) {
                    last_error = e.what();
                    resolved = false;
                    break;
                }
            }
            if (resolved) {
                AnswerRule passthrough;
                passthrough.kind = RuleKind::passthrough;
                passthrough.source = RuleSource::tool;
                auto r = invoke_and_synthesize(calls, d->rule.value_or(passthrough), log);
                if (r.status == AgentStatus::success) return r;
                last_error = r.error_report;
            }
        }
        req.messages.push_back({"user", "That did not work: " + last_error + "\nCorrect the calls and reply again."});
        req.context["previous_error"] = last_error;
        req.context["attempt"] = attempt + 1;
    }
    return AgentResult::failure(AgentStatus::error, "cannot derive a conclusive answer within " +
                                                        std::to_string(config_.attempt_cap) + " attempts: " + last_error);
}

}  // namespace geoqa
