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

#include "geoqa/domain.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <optional>
#include <stdexcept>

#include "geoqa/text.hpp"

namespace geoqa {

const std::vector<std::string>& property_types() {
    static const std::vector<std::string> v = {"residential", "apartment", "villa", "commercial"};
    return v;
}

const std::vector<std::string>& sales_statuses() {
    static const std::vector<std::string> v = {"on sale", "sold out", "upcoming"};
    return v;
}

std::map<std::string, GeoPoint> coordinate_map(const Table& t, const CoordinateColumns& cols) {
    auto first_of = [&](const std::vector<std::string>& names) -> std::optional<std::size_t> {
        for (const auto& n : names) {
            if (auto i = t.column_index(n)) return i;
        }
        return std::nullopt;
    };
    std::map<std::string, GeoPoint> out;
    const auto name = first_of(cols.name);
    const auto lat = first_of(cols.latitude);
    const auto lon = first_of(cols.longitude);
    if (!name || !lat || !lon) return out;
    for (const auto& r : t.rows) {
        if (!is_numeric(r[*lat]) || !is_numeric(r[*lon])) continue;
        const GeoPoint p{as_double(r[*lat]), as_double(r[*lon])};
        if (p.valid()) out.emplace(cell_text(r[*name]), round_coordinates(p));
    }
    return out;
}

ToolRequest ToolStep::request() const { return normalize_request(function, params, time_bucket); }

std::vector<std::string> check_instance(const QAInstance& inst) {
    std::vector<std::string> problems;
    if (inst.question_type < 1 || inst.question_type > 3) problems.push_back("question_type out of range");
    if (inst.sql_trace.empty()) problems.push_back("sql_trace is empty");
    if (inst.question_type == 1 && !inst.tool_trace.empty()) problems.push_back("type 1 with tool steps");
    if (inst.question_type != 1 && inst.tool_trace.empty()) problems.push_back("type 2/3 without tool steps");
    if (!answer_valid(inst.answer)) problems.push_back("invalid canonical answer");
    std::vector<std::pair<std::size_t, std::size_t>> spans;
    for (const auto& s : inst.slots) {
        if (s.end > inst.question.size() || s.start >= s.end) {
            problems.push_back("slot span out of range: " + s.slot_type);
            continue;
        }
        if (inst.question.substr(s.start, s.end - s.start) != s.value) {
            problems.push_back("slot span does not match value: " + s.slot_type + "=" + s.value);
        }
        spans.emplace_back(s.start, s.end);
    }
    std::sort(spans.begin(), spans.end());
    for (std::size_t i = 1; i < spans.size(); ++i) {
        if (spans[i].first < spans[i - 1].second) problems.push_back("overlapping slot spans");
    }
    for (const auto& step : inst.tool_trace) {
        try {
            if (!(step.request().params == step.params)) problems.push_back("tool params not normalized");
        } catch (const ToolError& e) {
            problems.push_back(std::string("tool step invalid: ") + e.what());
        }
    }
    return problems;
}

std::vector<Token> tokenize(std::string_view text) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < text.size()) {
        const auto c = static_cast<unsigned char>(text[i]);
        if (std::isspace(c)) {
            ++i;
            continue;
        }
        if (c < 0x80 && std::ispunct(c)) {
            out.push_back({std::string(1, text[i]), i, i + 1});
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < text.size()) {
            const auto d = static_cast<unsigned char>(text[j]);
            if (std::isspace(d) || (d < 0x80 && std::ispunct(d))) break;
            ++j;
        }
        out.push_back({std::string(text.substr(i, j - i)), i, j});
        i = j;
    }
    return out;
}

std::vector<std::string> iob_tags(std::string_view question, const std::vector<SlotAnnotation>& slots) {
    const auto tokens = tokenize(question);
    std::vector<std::string> tags(tokens.size(), "O");
    for (const auto& s : slots) {
        bool first = true;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            if (tokens[i].start >= s.start && tokens[i].end <= s.end) {
                tags[i] = (first ? "B-" : "I-") + s.slot_type;
                first = false;
            }
        }
    }
    return tags;
}

nlohmann::json to_json(const SlotAnnotation& s) {
    return {{"slot_type", s.slot_type}, {"value", s.value}, {"span", {s.start, s.end}}};
}

SlotAnnotation slot_from_json(const nlohmann::json& j) {
    SlotAnnotation s;
    s.slot_type = j.at("slot_type").get<std::string>();
    s.value = j.at("value").get<std::string>();
    s.start = j.at("span").at(0).get<std::size_t>();
    s.end = j.at("span").at(1).get<std::size_t>();
    return s;
}

nlohmann::json to_json(const QAInstance& inst) {
    nlohmann::json slots = nlohmann::json::array();
    for (const auto& s : inst.slots) slots.push_back(to_json(s));
    nlohmann::json sql = nlohmann::json::array();
    for (const auto& s : inst.sql_trace) {
        sql.push_back({{"statement", s.statement}, {"caption", s.caption}, {"expected_result", to_json(s.expected_result)}});
    }
    nlohmann::json tools = nlohmann::json::array();
    for (const auto& t : inst.tool_trace) {
        tools.push_back({{"function", to_string(t.function)},
                         {"params", t.params},
                         {"time_bucket", to_string(t.time_bucket)},
                         {"param_entities", t.param_entities},
                         {"subject", t.subject},
                         {"expected_result", to_json(t.expected_result)}});
    }
    nlohmann::json j;
    j["id"] = inst.id;
    j["template_id"] = inst.template_id;
    j["city"] = inst.city;
    j["question"] = inst.question;
    j["question_type"] = inst.question_type;
    j["intents"] = inst.intents;
    j["slots"] = std::move(slots);
    j["sql_trace"] = std::move(sql);
    j["tool_trace"] = std::move(tools);
    j["agent_route"] = inst.agent_route;
    j["answer"] = to_json(inst.answer);
    j["nl_answer"] = inst.nl_answer;
    j["answer_rule"] = to_json(inst.answer_rule);
    nlohmann::json tokens = nlohmann::json::array();
    for (const auto& t : tokenize(inst.question)) tokens.push_back(t.text);
    j["iob"] = {{"tokenization", kTokenizationId}, {"tokens", std::move(tokens)}, {"tags", iob_tags(inst.question, inst.slots)}};
    return j;
}

QAInstance instance_from_json(const nlohmann::json& j) {
    QAInstance inst;
    inst.id = j.at("id").get<std::string>();
    inst.template_id = j.at("template_id").get<std::string>();
    inst.city = j.at("city").get<std::string>();
    inst.question = j.at("question").get<std::string>();
    inst.question_type = j.at("question_type").get<int>();
    inst.intents = j.at("intents").get<std::vector<std::string>>();
    for (const auto& s : j.at("slots")) inst.slots.push_back(slot_from_json(s));
    for (const auto& s : j.at("sql_trace")) {
        inst.sql_trace.push_back(SqlStep{s.at("statement").get<std::string>(), s.value("caption", std::string()),
                                         table_from_json(s.at("expected_result"))});
    }
    for (const auto& t : j.at("tool_trace")) {
        ToolStep step;
        auto f = parse_tool_function(t.at("function").get<std::string>());
        auto b = parse_time_bucket(t.at("time_bucket").get<std::string>());
        if (!f || !b) throw std::invalid_argument("bad tool step in " + inst.id);
        step.function = *f;
        step.time_bucket = *b;
        step.params = t.at("params").get<ToolParams>();
        step.param_entities = t.value("param_entities", std::map<std::string, std::string>{});
        step.subject = t.value("subject", std::string());
        step.expected_result = table_from_json(t.at("expected_result"));
        inst.tool_trace.push_back(std::move(step));
    }
    inst.agent_route = j.at("agent_route").get<std::vector<std::string>>();
    inst.answer = answer_from_json(j.at("answer"));
    inst.nl_answer = j.value("nl_answer", std::string());
    inst.answer_rule = rule_from_json(j.at("answer_rule"));
    return inst;
}

std::string serialize_instance(const QAInstance& inst) { return to_json(inst).dump(); }

std::vector<QAInstance> read_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read dataset " + path.string());
    std::vector<QAInstance> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            out.push_back(instance_from_json(nlohmann::json::parse(line)));
        } catch (const std::exception& e) {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

void write_dataset(const std::filesystem::path& path, const std::vector<QAInstance>& instances) {
    std::string content;
    for (const auto& inst : instances) {
        content += serialize_instance(inst);
        content += '\n';
    }
    write_file(path, content);
}

}  // namespace geoqa
