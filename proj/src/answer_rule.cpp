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

#include "geoqa/answer_rule.hpp"

#include <algorithm>

#include "geoqa/text.hpp"

namespace geoqa {

namespace {

Derivation fail(std::string msg) { return Derivation{std::nullopt, std::move(msg)}; }
Derivation ok(CanonicalAnswer a) { return Derivation{std::move(a), {}}; }

struct Candidate {
    std::string name;
    double value;
};

Derivation pick_extreme(std::vector<Candidate> c, bool minimum) {
    if (c.empty()) return fail("no candidates to compare");
    std::sort(c.begin(), c.end(), [&](const Candidate& a, const Candidate& b) {
        if (a.value != b.value) return minimum ? a.value < b.value : a.value > b.value;
        return a.name < b.name;
    });
    return ok(answer::EntitySet{{c.front().name}});
}

Derivation filter_threshold(const std::vector<Candidate>& c, std::optional<double> threshold) {
    if (!threshold) return fail("threshold rule without threshold");
    answer::EntitySet out;
    for (const auto& x : c) {
        if (x.value <= *threshold) out.items.push_back(x.name);
    }
    if (out.items.empty()) return fail("no candidate satisfies the threshold");
    return ok(out);
}

}  // namespace

CanonicalAnswer scalar_answer(const Cell& c, const std::string& column, const std::string& unit) {
    if (!is_numeric(c)) return answer::Text{cell_text(c)};
    const double v = as_double(c);
    if (column == "duration_s") return answer::Duration{v};
    if (column == "distance_m" || column == "straight_distance_m") return answer::Distance{v};
    return answer::Number{v, unit};
}


std::string_view to_string(RuleKind k) {
    switch (k) {
        case RuleKind::lookup: return "lookup";
        case RuleKind::list: return "list";
        case RuleKind::count: return "count";
        case RuleKind::argmin: return "argmin";
        case RuleKind::argmax: return "argmax";
        case RuleKind::threshold: return "threshold";
        case RuleKind::passthrough: return "passthrough";
        case RuleKind::compare: return "compare";
    }
    return "?";
}

std::optional<RuleKind> parse_rule_kind(std::string_view s) {
    for (auto k : {RuleKind::lookup, RuleKind::list, RuleKind::count, RuleKind::argmin, RuleKind::argmax,
                   RuleKind::threshold, RuleKind::passthrough, RuleKind::compare}) {
        if (to_string(k) == s) return k;
    }
    if (s == "threshold_filter") return RuleKind::threshold;
    return std::nullopt;
}

Derivation derive_from_sql(const AnswerRule& rule, const std::vector<Table>& sql_results) {
    if (rule.step >= sql_results.size()) return fail("missing SQL result for step " + std::to_string(rule.step));
    const Table& t = sql_results[rule.step];
    std::size_t col = 0;
    if (!rule.column.empty()) {
        auto idx = t.column_index(rule.column);
        if (!idx) return fail("result has no column '" + rule.column + "'");
        col = *idx;
    }
    if (t.columns.empty()) return fail("result has no columns");

    auto candidates = [&]() -> std::optional<std::vector<Candidate>> {
        auto key = t.column_index(rule.key_column);
        if (!key) return std::nullopt;
        std::vector<Candidate> c;
        for (const auto& r : t.rows) {
            if (!is_numeric(r[col])) return std::nullopt;
            c.push_back({cell_text(r[*key]), as_double(r[col])});
        }
        return c;
    };

    switch (rule.kind) {
        case RuleKind::lookup:
        case RuleKind::passthrough:
            if (t.rows.empty()) return fail("empty result");
            return ok(scalar_answer(t.rows.front()[col], t.columns[col], rule.unit));
        case RuleKind::list: {
            answer::EntitySet s;
            for (const auto& r : t.rows) s.items.push_back(cell_text(r[col]));
            if (s.items.empty()) return fail("empty result");
            if (rule.limit) {
                if (s.items.size() < *rule.limit) return fail("fewer results than requested");
                s.items.resize(*rule.limit);
            }
            return ok(s);
        }
        case RuleKind::count:
            return ok(answer::Number{static_cast<double>(t.rows.size()), rule.unit.empty() ? "count" : rule.unit});
        case RuleKind::argmin:
        case RuleKind::argmax: {
            auto c = candidates();
            if (!c) return fail("cannot rank rows by '" + rule.column + "'");
            return pick_extreme(std::move(*c), rule.kind == RuleKind::argmin);
        }
        case RuleKind::threshold: {
            auto c = candidates();
            if (!c) return fail("cannot filter rows by '" + rule.column + "'");
            return filter_threshold(*c, rule.threshold);
        }
        case RuleKind::compare: {
            if (t.rows.size() < 2 || !is_numeric(t.rows[0][col]) || !is_numeric(t.rows[1][col])) {
                return fail("compare needs two numeric rows");
            }
            const double d = as_double(t.rows[1][col]) - as_double(t.rows[0][col]);
            if (d < 0) return fail("negative difference");
            return ok(scalar_answer(Cell{d}, t.columns[col], rule.unit));
        }
    }
    return fail("unsupported rule");
}

Derivation derive_from_tools(const AnswerRule& rule, const std::vector<ToolObservation>& obs) {
    if (obs.empty()) return fail("no tool results");

    auto scalar = [](const ToolObservation& o) -> std::optional<double> {
        if (o.payload.rows.size() != 1 || o.payload.rows[0].empty() || !is_numeric(o.payload.rows[0][0])) {
            return std::nullopt;
        }
        return as_double(o.payload.rows[0][0]);
    };
    auto candidates = [&]() -> std::optional<std::vector<Candidate>> {
        std::vector<Candidate> c;
        for (const auto& o : obs) {
            auto v = scalar(o);
            if (!v || o.subject.empty()) return std::nullopt;
            c.push_back({o.subject, *v});
        }
        return c;
    };

    switch (rule.kind) {
        case RuleKind::passthrough:
        case RuleKind::lookup: {
            const auto& o = obs.back();
            if (o.payload.rows.empty()) return fail("empty tool result");
            return ok(scalar_answer(o.payload.rows.front().front(), o.payload.columns.front(), rule.unit));
        }
        case RuleKind::list: {
            const auto& p = obs.front().payload;
            auto idx = p.column_index("name");
            if (!idx) return fail("tool result has no name column");
            answer::EntitySet s;
            for (const auto& r : p.rows) s.items.push_back(cell_text(r[*idx]));
            if (s.items.empty()) return fail("empty tool result");
            if (rule.limit) {
                if (s.items.size() < *rule.limit) return fail("fewer results than requested");
                s.items.resize(*rule.limit);
            }
            return ok(s);
        }
        case RuleKind::count:
            return ok(answer::Number{static_cast<double>(obs.front().payload.rows.size()),
                                     rule.unit.empty() ? "count" : rule.unit});
        case RuleKind::argmin:
        case RuleKind::argmax: {
            auto c = candidates();
            if (!c) return fail("tool results are not comparable scalars");
            return pick_extreme(std::move(*c), rule.kind == RuleKind::argmin);
        }
        case RuleKind::threshold: {
            auto c = candidates();
            if (!c) return fail("tool results are not comparable scalars");
            return filter_threshold(*c, rule.threshold);
        }
        case RuleKind::compare: {
            if (obs.size() != 2) return fail("compare needs exactly two tool results");
            auto a = scalar(obs[0]);
            auto b = scalar(obs[1]);
            if (!a || !b) return fail("tool results are not scalars");
            const double d = *b - *a;
            if (d < 0) return fail("negative difference");
            return ok(scalar_answer(Cell{d}, obs[0].payload.columns.front(), rule.unit));
        }
    }
    return fail("unsupported rule");
}

Derivation derive_answer(const AnswerRule& rule, const std::vector<Table>& sql_results,
                         const std::vector<ToolObservation>& observations) {
    return rule.source == RuleSource::sql ? derive_from_sql(rule, sql_results)
                                          : derive_from_tools(rule, observations);
}

nlohmann::json to_json(const AnswerRule& r) {
    nlohmann::json j = {{"kind", to_string(r.kind)},
                        {"source", r.source == RuleSource::sql ? "sql" : "tool"},
                        {"step", r.step},
                        {"column", r.column},
                        {"key_column", r.key_column},
                        {"unit", r.unit}};
    if (r.threshold) j["threshold"] = *r.threshold;
    if (r.limit) j["limit"] = *r.limit;
    return j;
}

AnswerRule rule_from_json(const nlohmann::json& j) {
    AnswerRule r;
    auto kind = parse_rule_kind(j.at("kind").get<std::string>());
    if (!kind) throw std::invalid_argument("unknown rule kind " + j.at("kind").dump());
    r.kind = *kind;
    const auto source = j.value("source", std::string("sql"));
    if (source != "sql" && source != "tool") throw std::invalid_argument("unknown rule source " + source);
    r.source = source == "sql" ? RuleSource::sql : RuleSource::tool;
    r.step = j.value("step", std::size_t{0});
    r.column = j.value("column", std::string());
    r.key_column = j.value("key_column", std::string("name"));
    r.unit = j.value("unit", std::string());
    if (j.contains("threshold") && !j["threshold"].is_null()) r.threshold = j["threshold"].get<double>();
    if (j.contains("limit") && !j["limit"].is_null()) r.limit = j["limit"].get<std::size_t>();
    return r;
}

std::string format_rule_line(const AnswerRule& r) {
    std::string line = "RULE " + std::string(to_string(r.kind));
    if (r.threshold) line += " threshold=" + format_number(*r.threshold);
    if (r.limit) line += " limit=" + std::to_string(*r.limit);
    if (!r.unit.empty()) line += " unit=" + r.unit;
    return line;
}

std::optional<AnswerRule> parse_rule_line(std::string_view line) {
    const auto t = trim(line);
    if (!starts_with(t, "RULE ")) return std::nullopt;
    AnswerRule r;
    r.source = RuleSource::tool;
    bool first = true;
    for (const auto& tok : split(t.substr(5), ' ')) {
        if (tok.empty()) continue;
        if (first) {
            auto k = parse_rule_kind(tok);
            if (!k) return std::nullopt;
            r.kind = *k;
            first = false;
            continue;
        }
        const auto eq = tok.find('=');
        if (eq == std::string::npos) return std::nullopt;
        const auto name = tok.substr(0, eq);
        const auto value = tok.substr(eq + 1);
        try {
            if (name == "threshold") {
                r.threshold = parse_double(value);
            } else if (name == "limit") {
                r.limit = static_cast<std::size_t>(parse_double(value));
            } else if (name == "unit") {
                r.unit = value;
            } else {
                return std::nullopt;
            }
        } catch (const std::exception&) {
            return std::nullopt;
        }
    }
    if (first) return std::nullopt;
    return r;
}

}  // namespace geoqa
