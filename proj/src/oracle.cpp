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

#include "geoqa/oracle.hpp"

#include <cmath>
#include <regex>

#include "geoqa/map_agent.hpp"
#include "geoqa/slu.hpp"
#include "geoqa/text.hpp"

namespace geoqa {

namespace {

struct Substitution {
    std::string type;
    std::string gold;
    std::string pred;
};

std::vector<Substitution> align(const std::vector<SlotAnnotation>& gold, const nlohmann::json& pred_json) {
    std::map<std::string, std::vector<std::string>> pred;
    if (pred_json.is_array()) {
        for (const auto& s : pred_json) pred[s.at("slot_type").get<std::string>()].push_back(s.at("value").get<std::string>());
    }
    std::map<std::string, std::size_t> seen;
    std::vector<Substitution> out;
    for (const auto& g : gold) {
        const auto i = seen[g.slot_type]++;
        const auto& p = pred[g.slot_type];
        out.push_back({g.slot_type, g.value, i < p.size() ? p[i] : ""});
    }
    return out;
}

bool numeric_text(const std::string& s) {
    try {
        (void)parse_double(s);
        return true;
    } catch (const std::exception&) {
        return false;
    }
}

// Two-phase so that A->B, B->C does not chain.
std::string ground_sql(std::string sql, const std::vector<Substitution>& subs) {
    std::vector<std::pair<std::string, std::string>> marks;
    for (std::size_t i = 0; i < subs.size(); ++i) {
        const auto& s = subs[i];
        if (s.gold == s.pred) continue;
        const auto mark = "\x01" + std::to_string(i) + "\x01";
        if (numeric_text(s.gold)) {
            const std::regex re("(^|[^0-9A-Za-z_.])" + replace_all(s.gold, ".", "\\.") + "(?![0-9A-Za-z_.])");
            sql = std::regex_replace(sql, re, "$1" + mark);
            marks.emplace_back(mark, s.pred.empty() ? "NULL" : (numeric_text(s.pred) ? s.pred : sql_quote(s.pred)));
        } else {
            sql = replace_all(sql, sql_quote(s.gold), mark);
            marks.emplace_back(mark, sql_quote(s.pred));
        }
    }
    for (const auto& [m, v] : marks) sql = replace_all(sql, m, v);
    return sql;
}

std::string ground_value(const std::string& v, const std::vector<Substitution>& subs) {
    for (const auto& s : subs) {
        if (s.type == "city") continue;
        if (to_lower(s.gold) == to_lower(v)) return s.pred;
    }
    return v;
}

AnswerRule ground_rule(AnswerRule r, const std::vector<Substitution>& subs) {
    for (const auto& s : subs) {
        if (s.gold == s.pred || !numeric_text(s.gold)) continue;
        const double g = parse_double(s.gold);
        const double p = numeric_text(s.pred) ? parse_double(s.pred) : 0.0;
        if (s.type == "count_x" && r.limit && static_cast<double>(*r.limit) == g) {
            r.limit = static_cast<std::size_t>(std::max(0.0, p));
        }
        if (s.type == "duration_limit" && r.threshold && g > 0) r.threshold = *r.threshold / g * p;
    }
    return r;
}

std::string route_directive(const QAInstance& gold, const std::string& specialist, std::size_t db_index) {
    if (specialist == kDbAgent) {
        const auto& cap = gold.sql_trace[db_index].caption;
        return "STEP db_agent: query " + cap + " for the entities in the question";
    }
    return "STEP map_agent: call the map functions over the gathered coordinates";
}

class OracleBackend : public ChatBackend {
public:
    explicit OracleBackend(QAInstance gold) : gold_(std::move(gold)) {}
    std::string name() const override { return "oracle"; }

    std::string complete(const ChatRequest& req) override {
        const auto subs = align(gold_.slots, req.context.value("slots", nlohmann::json::array()));
        switch (req.purpose) {
            case Purpose::slu: return slu_reply();
            case Purpose::plan: return plan_reply({});
            case Purpose::replan: return plan_reply(req.context.value("completed", std::vector<std::string>{}));
            case Purpose::sufficiency: return "SUFFICIENT: " + std::string(req.context.value("remaining", 0) == 0 ? "yes" : "no");
            case Purpose::caption: return "CAPTION: " + gold_.sql_trace.at(db_step(req)).caption;
            case Purpose::sql: return sql_reply(req, subs);
            case Purpose::tool: return tool_reply(subs);
            case Purpose::finalize: return finalize_reply(req, subs);
            case Purpose::paraphrase: return "QUESTION: " + gold_.question;
        }
        throw BackendError("oracle: unsupported purpose");
    }

    std::string slu_reply() const {
        std::vector<std::pair<std::string, std::string>> slots;
        for (const auto& s : gold_.slots) slots.emplace_back(s.slot_type, s.value);
        return format_slu_envelope(gold_.intents, slots);
    }

    std::string plan_reply(const std::vector<std::string>& completed) const {
        const auto db_done = static_cast<std::size_t>(std::count(completed.begin(), completed.end(), kDbAgent));
        const bool map_done = std::count(completed.begin(), completed.end(), kMapAgent) > 0;
        std::string out;
        for (std::size_t i = db_done; i < gold_.sql_trace.size(); ++i) out += route_directive(gold_, kDbAgent, i) + "\n";
        if (!gold_.tool_trace.empty() && !map_done) out += route_directive(gold_, kMapAgent, 0) + "\n";
        return out.empty() ? "DONE" : out;
    }

    std::size_t db_step(const ChatRequest& req) const {
        const auto i = req.context.value("db_step", std::size_t{0});
        return std::min(i, gold_.sql_trace.size() - 1);
    }

    std::string sql_reply(const ChatRequest& req, const std::vector<Substitution>& subs) const {
        return "```sql\n" + ground_sql(gold_.sql_trace.at(db_step(req)).statement, subs) + "\n```";
    }

    std::string tool_reply(const std::vector<Substitution>& subs) const {
        if (gold_.tool_trace.empty()) return "UNABLE: no map function applies to this sub-task";
        std::string out;
        for (const auto& step : gold_.tool_trace) {
            ToolCallSpec call{step.function, {}, std::nullopt};
            for (const auto& [k, v] : step.params) {
                if (auto it = step.param_entities.find(k); it != step.param_entities.end()) {
                    call.params[k] = "@" + ground_value(it->second, subs);
                } else {
                    call.params[k] = ground_value(v, subs);
                }
            }
            if (step.function != ToolFunction::rush_hour_query &&
                normalize_request(step.function, step.params, std::nullopt).bucket != step.time_bucket) {
                call.bucket = step.time_bucket;
            }
            out += format_call(call) + "\n";
        }
        return out + format_rule_line(ground_rule(gold_.answer_rule, subs)) + "\n";
    }

    std::string finalize_reply(const ChatRequest& req, const std::vector<Substitution>& subs) const {
        const auto& ev = req.context.value("evidence", nlohmann::json::object());
        const auto rule = ground_rule(gold_.answer_rule, subs);
        Derivation d;
        if (rule.source == RuleSource::sql) {
            std::vector<Table> tables;
            for (const auto& t : ev.value("sql_tables", nlohmann::json::array())) tables.push_back(table_from_json(t));
            d = derive_from_sql(rule, tables);
        } else if (ev.contains("derived") && !ev["derived"].is_null()) {
            d.answer = answer_from_json(ev["derived"]);
        } else {
            std::vector<ToolObservation> obs;
            for (const auto& o : ev.value("observations", nlohmann::json::array())) {
                obs.push_back({o.at("subject").get<std::string>(), o.at("column").get<std::string>(), table_from_json(o.at("payload"))});
            }
            d = derive_from_tools(rule, obs);
        }
        return format_answer_envelope(d.answer);
    }

private:
    QAInstance gold_;
};

// Value the gold trace depends on: quoted or numeric in SQL, an entity or a
// parameter of a tool step.
std::optional<std::size_t> critical_slot(const QAInstance& gold) {
    for (std::size_t i = 0; i < gold.slots.size(); ++i) {
        const auto& v = gold.slots[i].value;
        if (gold.slots[i].slot_type == "city") continue;
        for (const auto& s : gold.sql_trace) {
            if (s.statement.find(sql_quote(v)) != std::string::npos) return i;
            if (numeric_text(v) && s.statement.find(" " + v) != std::string::npos) return i;
        }
        for (const auto& t : gold.tool_trace) {
            for (const auto& [_, e] : t.param_entities) {
                if (e == v) return i;
            }
            for (const auto& [_, p] : t.params) {
                if (to_lower(p) == to_lower(v)) return i;
            }
        }
    }
    return std::nullopt;
}

class FaultBackend : public ChatBackend {
public:
    FaultBackend(const QAInstance& gold, FaultStage stage)
        : gold_(gold), stage_(stage), oracle_(std::make_shared<OracleBackend>(gold)) {}
    std::string name() const override { return "fault:" + std::string(to_string(stage_)); }

    std::string complete(const ChatRequest& req) override {
        if (stage_ == FaultStage::slu && req.purpose == Purpose::slu) {
            const auto drop = critical_slot(gold_);
            std::vector<std::pair<std::string, std::string>> slots;
            for (std::size_t i = 0; i < gold_.slots.size(); ++i) {
                if (!drop || i != *drop) slots.emplace_back(gold_.slots[i].slot_type, gold_.slots[i].value);
            }
            return format_slu_envelope(gold_.intents, slots);
        }
        if (stage_ == FaultStage::sql && req.purpose == Purpose::sql) {
            return "```sql\nSELECT name FROM no_such_table WHERE 1 = 1\n```";
        }
        const auto reply = oracle_->complete(req);
        if (stage_ == FaultStage::tool && req.purpose == Purpose::tool) return corrupt_tools(reply);
        return reply;
    }

private:
    static std::string corrupt_tools(const std::string& reply) {
        static const std::map<std::string, std::string> swap = {
            {"mode=walking", "mode=driving"},   {"mode=driving", "mode=transit"}, {"mode=cycling", "mode=walking"},
            {"mode=transit", "mode=driving"},   {"kind=straight", "kind=driving"}, {"kind=walking", "kind=straight"},
            {"kind=driving", "kind=straight"},
        };
        std::string out;
        for (auto line : split_lines(reply)) {
            if (starts_with(line, "CALL ")) {
                for (const auto& [from, to] : swap) {
                    const auto pos = line.find(from);
                    if (pos != std::string::npos && (pos + from.size() == line.size() || line[pos + from.size()] == ';')) {
                        line.replace(pos, from.size(), to);
                        break;
                    }
                }
                static const std::regex radius(R"(radius=(\d+))");
                std::smatch m;
                if (std::regex_search(line, m, radius)) {
                    line.replace(static_cast<std::size_t>(m.position(0)), static_cast<std::size_t>(m.length(0)),
                                 "radius=" + std::to_string(std::stol(m[1].str()) / 4));
                }
            }
            out += line + "\n";
        }
        return out;
    }

    QAInstance gold_;
    FaultStage stage_;
    std::shared_ptr<OracleBackend> oracle_;
};

}  // namespace

std::shared_ptr<ChatBackend> make_oracle_backend(const QAInstance& gold) { return std::make_shared<OracleBackend>(gold); }

std::string_view to_string(FaultStage s) {
    switch (s) {
        case FaultStage::slu: return "slu";
        case FaultStage::sql: return "sql";
        case FaultStage::tool: return "tool";
    }
    return "?";
}

std::shared_ptr<ChatBackend> make_fault_backend(const QAInstance& gold, FaultStage stage) {
    return std::make_shared<FaultBackend>(gold, stage);
}

bool stage_exercised(const QAInstance& gold, FaultStage stage) {
    switch (stage) {
        case FaultStage::slu: return critical_slot(gold).has_value();
        case FaultStage::sql: return !gold.sql_trace.empty();
        case FaultStage::tool: return !gold.tool_trace.empty();
    }
    return false;
}

}  // namespace geoqa
