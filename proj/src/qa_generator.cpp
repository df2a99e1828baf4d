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

#include "geoqa/qa_generator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "geoqa/text.hpp"

namespace geoqa {

namespace {

const std::map<std::string, std::string>& default_slots() {
    static const std::map<std::string, std::string> m = {
        {"city", "city"},           {"district", "district"}, {"community", "community_name"}, {"poi", "poi_name"},
        {"poi_label", "poi_label"}, {"price", "price"},       {"sales_status", "sales_status"}, {"choice", ""},
    };
    return m;
}

std::optional<TableFamily> parse_family(std::string_view s) {
    for (auto f : {TableFamily::community, TableFamily::poi, TableFamily::poi_community, TableFamily::community_community}) {
        if (to_string(f) == s) return f;
    }
    return std::nullopt;
}

// Splits "{name}" references out of a pattern. Callback gets (literal) or
// (placeholder name).
template <class Literal, class Ref>
void scan_pattern(const std::string& pattern, Literal&& literal, Ref&& ref) {
    std::size_t i = 0;
    while (i < pattern.size()) {
        const auto open = pattern.find('{', i);
        if (open == std::string::npos) {
            literal(pattern.substr(i));
            break;
        }
        const auto close = pattern.find('}', open);
        if (close == std::string::npos) throw TemplateError("unterminated placeholder in: " + pattern);
        if (open > i) literal(pattern.substr(i, open - i));
        ref(pattern.substr(open + 1, close - open - 1));
        i = close + 1;
    }
}

const BoundValue& bound(const Binding& b, const std::string& name) {
    auto it = b.find(name);
    if (it == b.end()) throw TemplateError("unbound placeholder {" + name + "}");
    return it->second;
}

std::string fill_text(const std::string& pattern, const Binding& b, const std::map<std::string, std::string>& extra = {}) {
    std::string out;
    scan_pattern(pattern, [&](const std::string& lit) { out += lit; },
                 [&](const std::string& name) {
                     if (auto it = extra.find(name); it != extra.end()) {
                         out += it->second;
                     } else {
                         out += bound(b, name).text;
                     }
                 });
    return out;
}

struct FilledSql {
    std::string statement;
    std::string caption;
};

FilledSql fill_sql(const std::string& pattern, const Binding& b) {
    FilledSql out;
    const auto& city = bound(b, "city").text;
    scan_pattern(pattern, [&](const std::string& lit) { out.statement += lit; },
                 [&](const std::string& name) {
                     if (starts_with(name, "table:")) {
                         auto family = parse_family(name.substr(6));
                         if (!family) throw TemplateError("unknown table family in {" + name + "}");
                         out.statement += table_name(city, *family);
                         if (out.caption.empty()) out.caption = caption_text(city, *family);
                         return;
                     }
                     const auto& v = bound(b, name);
                     out.statement += v.numeric ? v.text : sql_quote(v.text);
                 });
    return out;
}

std::vector<std::string> pattern_refs(const std::string& pattern) {
    std::vector<std::string> refs;
    scan_pattern(pattern, [](const std::string&) {}, [&](const std::string& n) { refs.push_back(n); });
    return refs;
}

double option_number(const nlohmann::json& v, const Binding& b) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) return parse_double(bound(b, v.get<std::string>()).text);
    throw TemplateError("expected a number or placeholder name, got " + v.dump());
}

std::string value_text(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number()) return format_number(v.get<double>());
    throw TemplateError("choice values must be strings or numbers");
}

}  // namespace

Template template_from_json(const nlohmann::json& j) {
    Template t;
    try {
        t.template_id = j.at("template_id").get<std::string>();
        t.question_type = j.at("question_type").get<int>();
        t.intents = j.at("intents").get<std::vector<std::string>>();
        t.question = j.at("question").get<std::string>();
        for (const auto& p : j.at("placeholders")) {
            PlaceholderSpec spec;
            spec.name = p.at("name").get<std::string>();
            spec.kind = p.at("kind").get<std::string>();
            if (!default_slots().contains(spec.kind)) throw TemplateError("unknown placeholder kind " + spec.kind);
            spec.slot = p.contains("slot") ? (p["slot"].is_null() ? "" : p["slot"].get<std::string>())
                                           : default_slots().at(spec.kind);
            spec.options = p.value("options", nlohmann::json::object());
            t.placeholders.push_back(std::move(spec));
        }
        for (const auto& s : j.at("sql")) {
            SqlPattern sp;
            sp.statement = s.at("statement").get<std::string>();
            sp.min_rows = s.value("min_rows", std::size_t{1});
            sp.max_rows = s.value("max_rows", std::size_t{1000});
            t.sql.push_back(std::move(sp));
        }
        for (const auto& s : j.value("tools", nlohmann::json::array())) {
            ToolPattern tp;
            auto f = parse_tool_function(s.at("function").get<std::string>());
            if (!f) throw TemplateError("unknown tool function " + s.at("function").dump());
            tp.function = *f;
            tp.params = s.at("params").get<std::map<std::string, std::string>>();
            if (s.contains("bucket")) {
                auto bk = parse_time_bucket(s["bucket"].get<std::string>());
                if (!bk) throw TemplateError("unknown bucket " + s["bucket"].dump());
                tp.bucket = *bk;
            }
            if (s.contains("for_each_row")) tp.for_each_row = s["for_each_row"].get<std::size_t>();
            tp.require_nonempty = s.value("require_nonempty", true);
            t.tools.push_back(std::move(tp));
        }
        t.answer_rule = j.at("answer_rule");
        t.threshold_scale = j.value("threshold_scale", 1.0);
        t.nl_answer = j.value("nl_answer", std::string("{answer}"));
    } catch (const nlohmann::json::exception& e) {
        throw TemplateError("template " + t.template_id + ": " + e.what());
    }

    // Static checks.
    const auto where = "template " + t.template_id + ": ";
    if (t.question_type < 1 || t.question_type > 3) throw TemplateError(where + "question_type must be 1, 2 or 3");
    if (t.sql.empty()) throw TemplateError(where + "needs at least one SQL step");
    if (t.question_type == 1 && !t.tools.empty()) throw TemplateError(where + "type 1 templates cannot call tools");
    if (t.question_type != 1 && t.tools.empty()) throw TemplateError(where + "type 2/3 templates need tool steps");
    if (t.intents.empty()) throw TemplateError(where + "needs at least one intent");
    std::set<std::string> names;
    bool has_city = false;
    for (const auto& p : t.placeholders) {
        if (!names.insert(p.name).second) throw TemplateError(where + "duplicate placeholder " + p.name);
        has_city = has_city || p.kind == "city";
        if (p.kind == "choice") {
            if (!p.options.contains("values") || p.options["values"].empty()) {
                throw TemplateError(where + "choice placeholder " + p.name + " needs values");
            }
            if (p.slot == "count_x") {
                for (const auto& v : p.options["values"]) {
                    if (!v.is_number_integer() || v.get<int>() < 1 || v.get<int>() > 3) {
                        throw TemplateError(where + "{" + p.name + "} values must lie in {1,2,3}");
                    }
                }
            }
        }
    }
    if (!has_city || !names.contains("city")) throw TemplateError(where + "needs a {city} placeholder");
    auto check_refs = [&](const std::string& pattern, const std::set<std::string>& extra) {
        for (const auto& r : pattern_refs(pattern)) {
            if (starts_with(r, "table:")) {
                if (!parse_family(r.substr(6))) throw TemplateError(where + "unknown table family " + r);
                continue;
            }
            if (!names.contains(r) && !extra.contains(r)) throw TemplateError(where + "unbound placeholder {" + r + "}");
        }
    };
    check_refs(t.question, {});
    for (const auto& s : t.sql) check_refs(s.statement, {});
    for (const auto& tp : t.tools) {
        for (const auto& [k, v] : tp.params) {
            check_refs(v, tp.for_each_row ? std::set<std::string>{"row"} : std::set<std::string>{});
        }
        if (tp.for_each_row && *tp.for_each_row >= t.sql.size()) throw TemplateError(where + "for_each_row out of range");
    }
    check_refs(t.nl_answer, {"answer"});
    try {
        auto rule = t.answer_rule;
        if (rule.contains("threshold") && rule["threshold"].is_string()) rule["threshold"] = 0;
        if (rule.contains("limit") && rule["limit"].is_string()) rule["limit"] = 1;
        const auto r = rule_from_json(rule);
        if (t.question_type == 1 && r.source != RuleSource::sql) throw TemplateError(where + "type 1 answers must come from SQL");
    } catch (const std::invalid_argument& e) {
        throw TemplateError(where + e.what());
    }
    return t;
}

nlohmann::json to_json(const Template& t) {
    nlohmann::json j;
    j["template_id"] = t.template_id;
    j["question_type"] = t.question_type;
    j["intents"] = t.intents;
    j["question"] = t.question;
    j["placeholders"] = nlohmann::json::array();
    for (const auto& p : t.placeholders) {
        j["placeholders"].push_back({{"name", p.name}, {"kind", p.kind}, {"slot", p.slot}, {"options", p.options}});
    }
    j["sql"] = nlohmann::json::array();
    for (const auto& s : t.sql) j["sql"].push_back({{"statement", s.statement}, {"min_rows", s.min_rows}, {"max_rows", s.max_rows}});
    j["tools"] = nlohmann::json::array();
    for (const auto& tp : t.tools) {
        nlohmann::json x = {{"function", to_string(tp.function)}, {"params", tp.params}, {"require_nonempty", tp.require_nonempty}};
        if (tp.bucket) x["bucket"] = to_string(*tp.bucket);
        if (tp.for_each_row) x["for_each_row"] = *tp.for_each_row;
        j["tools"].push_back(std::move(x));
    }
    j["answer_rule"] = t.answer_rule;
    j["threshold_scale"] = t.threshold_scale;
    j["nl_answer"] = t.nl_answer;
    return j;
}

std::vector<Template> load_templates(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw TemplateError("template directory not found: " + dir.string());
    std::vector<Template> out;
    std::set<std::string> ids;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.path().extension() != ".json") continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(read_file(entry.path()));
        } catch (const nlohmann::json::exception& e) {
            throw TemplateError(entry.path().string() + ": " + e.what());
        }
        auto t = template_from_json(j);
        if (!ids.insert(t.template_id).second) throw TemplateError("duplicate template id " + t.template_id);
        out.push_back(std::move(t));
    }
    std::sort(out.begin(), out.end(), [](const Template& a, const Template& b) { return a.template_id < b.template_id; });
    if (out.empty()) throw TemplateError("no templates in " + dir.string());
    return out;
}

std::filesystem::path default_template_dir() { return asset_dir() / "templates"; }

Binding sample_bindings(const Template& t, const GeoStore& store, Rng& rng) {
    Binding b;
    std::map<std::string, std::set<std::string>> used;  // slot type -> values taken
    auto take = [&](const std::string& slot, std::vector<std::string> candidates, const std::string& what) {
        if (!slot.empty()) {
            std::erase_if(candidates, [&](const std::string& c) { return used[slot].contains(c); });
        }
        if (candidates.empty()) throw SamplingExhausted("no " + what + " left for template " + t.template_id);
        const auto v = rng.pick(candidates);
        if (!slot.empty()) used[slot].insert(v);
        return v;
    };
    auto city_of = [&]() -> const std::string& { return bound(b, "city").text; };
    auto district_members = [&](const std::string& district) {
        std::vector<const Community*> out;
        for (const auto& c : store.communities()) {
            if (c.city == city_of() && c.district == district) out.push_back(&c);
        }
        return out;
    };

    for (const auto& p : t.placeholders) {
        const auto& o = p.options;
        BoundValue v;
        v.slot = p.slot;
        if (p.kind == "city") {
            auto cities = store.config().cities;
            if (o.contains("values")) cities = o["values"].get<std::vector<std::string>>();
            v.text = take(p.slot, cities, "city");
        } else if (p.kind == "district") {
            const std::size_t min = o.value("min_communities", std::size_t{1});
            std::map<std::string, std::size_t> counts;
            for (const auto& c : store.communities()) {
                if (c.city == city_of()) ++counts[c.district];
            }
            std::vector<std::string> names;
            for (const auto& [d, n] : counts) {
                if (n >= min) names.push_back(d);
            }
            v.text = take(p.slot, names, "district with " + std::to_string(min) + " communities");
        } else if (p.kind == "community") {
            std::vector<std::string> names;
            const std::string district = o.contains("district") ? bound(b, o["district"].get<std::string>()).text : "";
            for (const auto& c : store.communities()) {
                if (c.city == city_of() && (district.empty() || c.district == district)) names.push_back(c.name);
            }
            v.text = take(p.slot, names, "community");
        } else if (p.kind == "poi") {
            std::vector<std::string> names;
            const std::string label = o.contains("label") ? bound(b, o["label"].get<std::string>()).text : "";
            for (const auto& x : store.pois()) {
                if (x.city == city_of() && (label.empty() || x.label == label)) names.push_back(x.name);
            }
            v.text = take(p.slot, names, "POI");
        } else if (p.kind == "poi_label") {
            std::set<std::string> labels;
            const Community* near = nullptr;
            if (o.contains("near")) near = store.find_community(city_of(), bound(b, o["near"].get<std::string>()).text);
            const double within = o.contains("within") ? option_number(o["within"], b) : 0.0;
            for (const auto& x : store.pois()) {
                if (x.city != city_of()) continue;
                if (near && haversine(near->location, x.location) > within) continue;
                labels.insert(x.label);
            }
            v.text = take(p.slot, {labels.begin(), labels.end()}, "POI label");
        } else if (p.kind == "price") {
            const auto members = district_members(bound(b, o.at("district").get<std::string>()).text);
            if (members.empty()) throw SamplingExhausted("no communities for price in " + t.template_id);
            std::vector<double> prices;
            for (const auto* c : members) prices.push_back(c->avg_price);
            std::sort(prices.begin(), prices.end());
            std::vector<std::size_t> ranks = o.value("ranks", std::vector<std::size_t>{1, 2, 3});
            const std::size_t k = std::min(ranks[rng.index(ranks.size())], prices.size());
            v.text = format_number(std::floor(prices[k - 1]) + 100.0);
            v.numeric = true;
        } else if (p.kind == "sales_status") {
            std::set<std::string> statuses;
            for (const auto* c : district_members(bound(b, o.at("district").get<std::string>()).text)) {
                statuses.insert(c->sales_status);
            }
            v.text = take(p.slot, {statuses.begin(), statuses.end()}, "sales status");
        } else if (p.kind == "choice") {
            const auto& values = o.at("values");
            const auto& pick = values.at(rng.index(values.size()));
            v.text = value_text(pick);
            v.numeric = pick.is_number();
        }
        b[p.name] = std::move(v);
    }
    return b;
}

std::string render_nl_answer(const CanonicalAnswer& a) {
    return std::visit(
        [](const auto& x) -> std::string {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, answer::EntitySet>) {
                return join(x.items, ", ");
            } else if constexpr (std::is_same_v<T, answer::Number>) {
                if (x.unit == "yuan_per_sqm") return format_number(x.value) + " yuan per square meter";
                if (x.unit == "percent") return format_number(x.value) + "%";
                return format_number(x.value);
            } else if constexpr (std::is_same_v<T, answer::Duration>) {
                char buf[64];
                std::snprintf(buf, sizeof buf, "%s seconds (about %.0f minutes)", format_number(x.seconds).c_str(),
                              std::round(x.seconds / 60.0));
                return buf;
            } else if constexpr (std::is_same_v<T, answer::Distance>) {
                return format_number(x.meters) + " meters";
            } else if constexpr (std::is_same_v<T, answer::Boolean>) {
                return x.value ? "yes" : "no";
            } else {
                return x.value;
            }
        },
        a);
}

InstanceOrRejection instantiate(const Template& t, const Binding& binding, const GeoStore& store, ToolCache& cache,
                                const std::string& instance_id) {
    QAInstance inst;
    inst.id = instance_id;
    inst.template_id = t.template_id;
    inst.city = bound(binding, "city").text;
    inst.question_type = t.question_type;
    inst.intents = t.intents;

    // Question text and slot spans by placeholder position.
    scan_pattern(t.question, [&](const std::string& lit) { inst.question += lit; },
                 [&](const std::string& name) {
                     const auto& v = bound(binding, name);
                     const auto start = inst.question.size();
                     inst.question += v.text;
                     if (!v.slot.empty()) inst.slots.push_back({v.slot, v.text, start, inst.question.size()});
                 });

    std::vector<Table> sql_results;
    std::map<std::string, GeoPoint> coords;
    for (std::size_t i = 0; i < t.sql.size(); ++i) {
        const auto filled = fill_sql(t.sql[i].statement, binding);
        auto outcome = store.execute_sql(filled.statement);
        if (!outcome.ok()) return Rejection{"sql_error", outcome.error};
        const auto n = outcome.rows->rows.size();
        if (n < t.sql[i].min_rows) return Rejection{"empty_sql_result", filled.statement};
        if (n > t.sql[i].max_rows) return Rejection{"too_many_rows", filled.statement};
        for (const auto& [name, p] : coordinate_map(*outcome.rows)) coords.emplace(name, p);
        inst.sql_trace.push_back({filled.statement, filled.caption, *outcome.rows});
        sql_results.push_back(std::move(*outcome.rows));
        inst.agent_route.push_back(kDbAgent);
    }

    std::vector<ToolObservation> observations;
    for (const auto& tp : t.tools) {
        std::vector<std::map<std::string, std::string>> expansions;
        if (tp.for_each_row) {
            const auto& rows = sql_results[*tp.for_each_row];
            const auto name_col = rows.column_index("name");
            if (!name_col) return Rejection{"template_error", "for_each_row step has no name column"};
            for (const auto& r : rows.rows) expansions.push_back({{"row", cell_text(r[*name_col])}});
        } else {
            expansions.push_back({});
        }
        for (const auto& extra : expansions) {
            ToolStep step;
            step.function = tp.function;
            ToolParams raw;
            for (const auto& [k, pattern] : tp.params) {
                if (starts_with(pattern, "@")) {
                    const auto entity = fill_text(pattern.substr(1), binding, extra);
                    auto it = coords.find(entity);
                    if (it == coords.end()) return Rejection{"missing_coordinates", entity};
                    raw[k] = format_point(it->second);
                    step.param_entities[k] = entity;
                } else {
                    raw[k] = fill_text(pattern, binding, extra);
                }
            }
            ToolRequest req;
            try {
                req = normalize_request(tp.function, raw, tp.bucket);
            } catch (const ToolError& e) {
                return Rejection{"invalid_tool_params", e.what()};
            }
            step.params = req.params;
            step.time_bucket = req.bucket;
            for (const auto* key : {"origin", "center"}) {
                if (auto it = step.param_entities.find(key); it != step.param_entities.end()) step.subject = it->second;
            }
            try {
                step.expected_result = cache.call(req);
            } catch (const ToolError& e) {
                return Rejection{"tool_error", e.what()};
            }
            if (tp.require_nonempty && step.expected_result.rows.empty()) return Rejection{"empty_tool_result", req.key()};
            observations.push_back({step.subject, step.expected_result.columns.front(), step.expected_result});
            inst.tool_trace.push_back(std::move(step));
        }
    }
    if (!inst.tool_trace.empty()) inst.agent_route.push_back(kMapAgent);

    auto rule_json = t.answer_rule;
    if (rule_json.contains("threshold") && rule_json["threshold"].is_string()) {
        rule_json["threshold"] = parse_double(bound(binding, rule_json["threshold"].get<std::string>()).text) * t.threshold_scale;
    }
    if (rule_json.contains("limit") && rule_json["limit"].is_string()) {
        rule_json["limit"] = static_cast<std::size_t>(parse_double(bound(binding, rule_json["limit"].get<std::string>()).text));
    }
    inst.answer_rule = rule_from_json(rule_json);
    const auto d = derive_answer(inst.answer_rule, sql_results, observations);
    if (!d.answer) return Rejection{"answer_underivable", d.error};
    inst.answer = *d.answer;
    inst.nl_answer = fill_text(t.nl_answer, binding, {{"answer", render_nl_answer(inst.answer)}});

    if (auto problems = check_instance(inst); !problems.empty()) return Rejection{"invariant_violation", join(problems, "; ")};
    return inst;
}

std::optional<Rejection> plausibility_filter(const QAInstance& inst, const PlausibilityLimits& limits) {
    for (const auto& step : inst.tool_trace) {
        std::string mode;
        if (auto it = step.params.find("mode"); it != step.params.end()) mode = it->second;
        if (auto it = step.params.find("kind"); it != step.params.end()) mode = it->second;
        double limit = 0;
        if (mode == "walking") {
            limit = limits.walking_m;
        } else if (mode == "cycling") {
            limit = limits.cycling_m;
        } else {
            continue;
        }
        const double d = haversine(parse_point(step.params.at("origin")), parse_point(step.params.at("destination")));
        if (d > limit) {
            return Rejection{"plausibility", mode + " step spans " + format_number(std::round(d)) + " m (limit " +
                                                 format_number(limit) + " m)"};
        }
    }
    return std::nullopt;
}

std::size_t GenerationReport::rejected_total() const {
    std::size_t n = 0;
    for (const auto& [_, c] : rejected) n += c;
    return n;
}

nlohmann::json GenerationReport::to_json() const {
    return {{"attempted", attempted},
            {"accepted", accepted},
            {"rejected", rejected_total()},
            {"rejected_by_reason", rejected},
            {"accepted_by_template", accepted_by_template}};
}

GenerationResult generate_dataset(const std::vector<Template>& templates, const GeoStore& store, ToolCache& cache,
                                  const GenerationConfig& config) {
    GenerationResult result;
    auto& report = result.report;
    for (const auto& t : templates) {
        Rng rng(fnv1a(t.template_id, config.seed));
        std::set<std::string> questions;
        report.accepted_by_template[t.template_id] = 0;
        for (std::size_t attempt = 0; attempt < config.attempts_per_template; ++attempt) {
            ++report.attempted;
            char id[128];
            std::snprintf(id, sizeof id, "%s-%05zu", t.template_id.c_str(), attempt);
            Binding binding;
            try {
                binding = sample_bindings(t, store, rng);
            } catch (const SamplingExhausted&) {
                ++report.rejected["sampling_exhausted"];
                continue;
            }
            auto out = instantiate(t, binding, store, cache, id);
            if (auto* r = std::get_if<Rejection>(&out)) {
                ++report.rejected[r->reason];
                continue;
            }
            auto& inst = std::get<QAInstance>(out);
            if (auto r = plausibility_filter(inst, config.limits)) {
                ++report.rejected[r->reason];
                continue;
            }
            if (!questions.insert(inst.question).second) {
                ++report.rejected["duplicate"];
                continue;
            }
            ++report.accepted;
            ++report.accepted_by_template[t.template_id];
            result.instances.push_back(std::move(inst));
        }
    }
    return result;
}

std::vector<std::string> validate_instance(const QAInstance& inst, const GeoStore& store, ToolCache& cache,
                                           const PlausibilityLimits& limits) {
    std::vector<std::string> problems;
    for (const auto& p : check_instance(inst)) problems.push_back(inst.id + ": " + p);
    std::vector<Table> sql_results;
    std::map<std::string, GeoPoint> coords;
    for (std::size_t i = 0; i < inst.sql_trace.size(); ++i) {
        const auto& step = inst.sql_trace[i];
        auto out = store.execute_sql(step.statement);
        if (!out.ok()) {
            problems.push_back(inst.id + ": sql step " + std::to_string(i) + " fails: " + out.error);
        } else if (!(*out.rows == step.expected_result)) {
            problems.push_back(inst.id + ": sql step " + std::to_string(i) + " rows differ from the recorded result");
        }
        for (const auto& [name, p] : coordinate_map(step.expected_result)) coords.emplace(name, p);
        sql_results.push_back(step.expected_result);
    }
    std::vector<ToolObservation> observations;
    for (std::size_t i = 0; i < inst.tool_trace.size(); ++i) {
        const auto& step = inst.tool_trace[i];
        const auto tag = inst.id + ": tool step " + std::to_string(i);
        for (const auto& [param, entity] : step.param_entities) {
            auto it = coords.find(entity);
            if (it == coords.end() || !step.params.contains(param) || step.params.at(param) != format_point(it->second)) {
                problems.push_back(tag + ": parameter " + param + " does not match the coordinates of " + entity);
            }
        }
        try {
            const auto payload = cache.call(step.request());
            if (!(payload == step.expected_result)) problems.push_back(tag + ": replayed payload differs");
        } catch (const ToolError& e) {
            problems.push_back(tag + ": " + e.what());
        }
        if (!step.expected_result.columns.empty()) {
            observations.push_back({step.subject, step.expected_result.columns.front(), step.expected_result});
        }
    }
    const auto d = derive_answer(inst.answer_rule, sql_results, observations);
    if (!d.answer) {
        problems.push_back(inst.id + ": answer cannot be re-derived: " + d.error);
    } else if (!answer_equal(*d.answer, inst.answer)) {
        problems.push_back(inst.id + ": re-derived answer differs from the recorded answer");
    }
    std::vector<std::string> route(inst.sql_trace.size(), kDbAgent);
    if (!inst.tool_trace.empty()) route.push_back(kMapAgent);
    if (route != inst.agent_route) problems.push_back(inst.id + ": agent_route does not match the traces");
    if (auto r = plausibility_filter(inst, limits)) problems.push_back(inst.id + ": " + r->detail);
    return problems;
}

std::array<std::size_t, 3> split_counts(std::size_t n, const SplitSpec& spec) {
    const double ratios[3] = {spec.train, spec.val, spec.test};
    const double total = ratios[0] + ratios[1] + ratios[2];
    if (!(total > 0) || ratios[0] < 0 || ratios[1] < 0 || ratios[2] < 0) {
        throw std::invalid_argument("split ratios must be non-negative with a positive sum");
    }
    std::array<std::size_t, 3> counts{};
    std::array<double, 3> frac{};
    std::size_t assigned = 0;
    for (int i = 0; i < 3; ++i) {
        const double exact = static_cast<double>(n) * ratios[i] / total;
        counts[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
        frac[i] = exact - static_cast<double>(counts[i]);
        assigned += counts[i];
    }
    while (assigned < n) {
        int best = 0;
        for (int i = 1; i < 3; ++i) {
            if (frac[i] > frac[best] + 1e-12) best = i;
        }
        ++counts[best];
        frac[best] = -1.0;
        ++assigned;
    }
    return counts;
}

DatasetSplit stratified_split(const std::vector<QAInstance>& instances, const SplitSpec& spec) {
    std::map<std::string, std::vector<const QAInstance*>> strata;
    for (const auto& inst : instances) {
        if (inst.template_id.empty()) throw std::invalid_argument("instance " + inst.id + " has no template_id");
        strata[inst.template_id].push_back(&inst);
    }
    DatasetSplit out;
    for (auto& [tid, members] : strata) {
        std::sort(members.begin(), members.end(), [](auto* a, auto* b) { return a->id < b->id; });
        if (members.size() < 3) {
            out.warnings.push_back("stratum " + tid + " has " + std::to_string(members.size()) +
                                   " instances; all assigned to train");
            for (auto* m : members) out.train.push_back(*m);
            continue;
        }
        Rng rng(fnv1a(tid, spec.seed));
        rng.shuffle(members);
        const auto counts = split_counts(members.size(), spec);
        std::size_t i = 0;
        for (; i < counts[0]; ++i) out.train.push_back(*members[i]);
        for (; i < counts[0] + counts[1]; ++i) out.val.push_back(*members[i]);
        for (; i < members.size(); ++i) out.test.push_back(*members[i]);
    }
    for (auto* part : {&out.train, &out.val, &out.test}) {
        std::sort(part->begin(), part->end(), [](const QAInstance& a, const QAInstance& b) { return a.id < b.id; });
    }
    return out;
}

QAInstance paraphrase_hook(const QAInstance& inst, ChatBackend* backend) {
    if (!backend) return inst;
    ChatRequest req;
    req.purpose = Purpose::paraphrase;
    try {
        req.system = load_asset("prompts/paraphrase_v1.txt");
    } catch (const std::exception&) {
        req.system = "Rewrite the question naturally. Keep every quoted value verbatim. Reply with QUESTION: <text>.";
    }
    std::string values;
    for (const auto& s : inst.slots) values += "- " + s.slot_type + ": \"" + s.value + "\"\n";
    req.messages.push_back({"user", "Question: " + inst.question + "\nValues to keep verbatim:\n" + values});
    req.context = {{"instance", to_json(inst)}};
    std::string reply;
    try {
        reply = backend->complete(req);
    } catch (const std::exception& e) {
        log_warning("paraphrase backend failed for " + inst.id + ": " + e.what());
        return inst;
    }
    std::string rewritten;
    for (const auto& line : split_lines(reply)) {
        const auto tl = trim(line);
        if (starts_with(tl, "QUESTION:")) rewritten = trim(tl.substr(9));
    }
    if (rewritten.empty()) {
        log_warning("paraphrase for " + inst.id + " has no QUESTION line; original kept");
        return inst;
    }

    QAInstance out = inst;
    out.question = rewritten;
    std::vector<std::size_t> order(inst.slots.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return inst.slots[a].start < inst.slots[b].start; });
    std::vector<std::pair<std::size_t, std::size_t>> taken;
    for (auto i : order) {
        auto& s = out.slots[i];
        std::size_t pos = 0, found = std::string::npos;
        while ((pos = rewritten.find(s.value, pos)) != std::string::npos) {
            const auto end = pos + s.value.size();
            const bool overlaps = std::any_of(taken.begin(), taken.end(),
                                              [&](const auto& r) { return pos < r.second && r.first < end; });
            if (!overlaps) {
                found = pos;
                break;
            }
            ++pos;
        }
        if (found == std::string::npos) {
            log_warning("paraphrase for " + inst.id + " dropped slot value '" + s.value + "'; original kept");
            return inst;
        }
        s.start = found;
        s.end = found + s.value.size();
        taken.emplace_back(s.start, s.end);
    }
    if (!check_instance(out).empty()) return inst;
    return out;
}

}  // namespace geoqa
