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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "geoqa/qa_generator.hpp"
#include "geoqa/text.hpp"
#include "support.hpp"

using namespace geoqa;
using geoqa::testing::TempDir;

namespace {

constexpr double kMetersPerDegree = 6371000.0 * std::numbers::pi / 180.0;

struct World {
    TempDir dir{"qagen"};
    GeoStore store;
    ToolCache cache;
    std::vector<Template> templates;

    explicit World(const FixtureSpec& spec = {})
        : store(geoqa::testing::synthetic_store(dir.path(), spec)),
          cache(std::make_shared<SyntheticProvider>(store.pois(), spec.seed)),
          templates(load_templates(default_template_dir())) {}

    const Template& get(const std::string& id) const {
        for (const auto& t : templates) {
            if (t.template_id == id) return t;
        }
        throw std::runtime_error("no template " + id);
    }
};

World& world() {
    static World w;
    return w;
}

const GenerationResult& generated() {
    static const GenerationResult r = [] {
        GenerationConfig cfg;
        cfg.attempts_per_template = 40;
        return generate_dataset(world().templates, world().store, world().cache, cfg);
    }();
    return r;
}

// Independent oracle of the synthetic driving time.
double drive_seconds(const GeoPoint& a, const GeoPoint& b) {
    const double dlat = (b.latitude - a.latitude) * std::numbers::pi / 180.0;
    const double dlon = (b.longitude - a.longitude) * std::numbers::pi / 180.0;
    const double h = std::pow(std::sin(dlat / 2), 2) + std::cos(a.latitude * std::numbers::pi / 180.0) *
                                                           std::cos(b.latitude * std::numbers::pi / 180.0) *
                                                           std::pow(std::sin(dlon / 2), 2);
    const double d = 2 * 6371000.0 * std::asin(std::sqrt(h));
    return std::llround(d * 1.4 / (40000.0 / 3600.0));
}

QAInstance with_step(const std::string& fn, const std::string& mode_key, const std::string& mode, double meters) {
    QAInstance inst;
    inst.id = "x";
    ToolStep s;
    s.function = *parse_tool_function(fn);
    const GeoPoint a{23.0, 113.0};
    const GeoPoint b{23.0 + meters / kMetersPerDegree, 113.0};
    s.params = {{"origin", format_point(a)}, {"destination", format_point(b)}, {mode_key, mode}};
    inst.tool_trace.push_back(s);
    return inst;
}

}  // namespace

TEST_CASE("default template set covers all types, tool functions and rule kinds") {
    const auto& ts = world().templates;
    CHECK(ts.size() >= 12);
    std::map<int, int> per_type;
    std::set<std::string> functions, kinds, intents, slots;
    for (const auto& t : ts) {
        ++per_type[t.question_type];
        for (const auto& tp : t.tools) functions.insert(std::string(to_string(tp.function)));
        kinds.insert(t.answer_rule.at("kind").get<std::string>());
        intents.insert(t.intents.begin(), t.intents.end());
        for (const auto& p : t.placeholders) {
            if (!p.slot.empty()) slots.insert(p.slot);
        }
        CHECK(t.question.find("{city}") != std::string::npos);
    }
    for (int q = 1; q <= 3; ++q) CHECK(per_type[q] >= 4);
    CHECK(functions.size() == 4);
    for (const auto* k : {"lookup", "argmin", "argmax", "count", "threshold", "list"}) CHECK(kinds.contains(k));
    CHECK(intents.size() == 16);
    CHECK(slots.size() == 12);
}

TEST_CASE("template validation rejects X outside 1..3 and unbound placeholders") {
    auto j = to_json(world().get("t2_amenity_proximity"));
    for (auto& p : j["placeholders"]) {
        if (p["name"] == "x") p["options"]["values"] = {1, 2, 4};
    }
    CHECK_THROWS_AS(template_from_json(j), TemplateError);

    auto k = to_json(world().get("t1_price_lookup"));
    k["question"] = "What is the price of {community} near {nowhere} in {city}?";
    CHECK_THROWS_AS(template_from_json(k), TemplateError);

    auto round = template_from_json(to_json(world().get("t3_budget_proximity")));
    CHECK(to_json(round) == to_json(world().get("t3_budget_proximity")));
}

TEST_CASE("three communities from a district of two -> sampling_exhausted") {
    FixtureSpec spec;
    spec.cities = {"Guangzhou"};
    spec.districts_per_city = 1;
    spec.communities_per_city = 2;
    spec.pois_per_city = 5;
    World small(spec);
    auto j = to_json(small.get("t3_commute_least_drive"));
    j["placeholders"].insert(j["placeholders"].begin() + 1, nlohmann::json{{"name", "district"}, {"kind", "district"}});
    for (auto& p : j["placeholders"]) {
        if (p["kind"] == "community") p["options"] = nlohmann::json{{"district", "district"}};
    }
    const auto t = template_from_json(j);
    Rng rng(1);
    CHECK_THROWS_AS(sample_bindings(t, small.store, rng), SamplingExhausted);

    GenerationConfig cfg;
    cfg.attempts_per_template = 5;
    const auto r = generate_dataset({t}, small.store, small.cache, cfg);
    CHECK(r.report.accepted == 0);
    CHECK(r.report.rejected.at("sampling_exhausted") == 5);
}

TEST_CASE("bindings: same seed -> identical; repeated slot types distinct; entities consistent with city") {
    const auto& t = world().get("t3_commute_least_drive");
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng a(seed), b(seed);
        const auto x = sample_bindings(t, world().store, a);
        const auto y = sample_bindings(t, world().store, b);
        REQUIRE(x.size() == y.size());
        for (const auto& [k, v] : x) CHECK(y.at(k).text == v.text);
        const auto& city = x.at("city").text;
        std::set<std::string> names;
        for (const auto* n : {"community_1", "community_2", "community_3"}) {
            CHECK(world().store.find_community(city, x.at(n).text) != nullptr);
            names.insert(x.at(n).text);
        }
        CHECK(names.size() == 3);
        CHECK(world().store.find_poi(city, x.at("poi").text) != nullptr);
    }
}

TEST_CASE("type 1 price lookup: no tool steps, answer equals the stored price") {
    const auto& t = world().get("t1_price_lookup");
    Rng rng(3);
    for (int i = 0; i < 10; ++i) {
        const auto b = sample_bindings(t, world().store, rng);
        auto out = instantiate(t, b, world().store, world().cache, "p" + std::to_string(i));
        REQUIRE(std::holds_alternative<QAInstance>(out));
        const auto& inst = std::get<QAInstance>(out);
        CHECK(inst.tool_trace.empty());
        CHECK(inst.agent_route == std::vector<std::string>{kDbAgent});
        const auto* c = world().store.find_community(b.at("city").text, b.at("community").text);
        REQUIRE(c);
        const auto* n = std::get_if<answer::Number>(&inst.answer);
        REQUIRE(n);
        CHECK(n->value == doctest::Approx(c->avg_price));
        for (const auto& s : inst.slots) CHECK(inst.question.substr(s.start, s.end - s.start) == s.value);
    }
}

TEST_CASE("type 3 least drive time: 1 SQL + 3 time_query + argmin matching an independent oracle") {
    const auto& t = world().get("t3_commute_least_drive");
    Rng rng(11);
    for (int i = 0; i < 10; ++i) {
        const auto b = sample_bindings(t, world().store, rng);
        auto out = instantiate(t, b, world().store, world().cache, "d" + std::to_string(i));
        REQUIRE(std::holds_alternative<QAInstance>(out));
        const auto& inst = std::get<QAInstance>(out);
        CHECK(inst.sql_trace.size() == 1);
        REQUIRE(inst.tool_trace.size() == 3);
        for (const auto& s : inst.tool_trace) CHECK(s.function == ToolFunction::time_query);
        CHECK(inst.answer_rule.kind == RuleKind::argmin);

        const auto& city = b.at("city").text;
        const auto poi = world().store.find_poi(city, b.at("poi").text)->location;
        std::string best;
        double best_t = 1e300;
        for (const auto* n : {"community_1", "community_2", "community_3"}) {
            const auto& name = b.at(n).text;
            const double s = drive_seconds(world().store.find_community(city, name)->location, poi);
            if (s < best_t || (s == best_t && name < best)) {
                best_t = s;
                best = name;
            }
        }
        const auto* set = std::get_if<answer::EntitySet>(&inst.answer);
        REQUIRE(set);
        CHECK(set->items == std::vector<std::string>{best});
    }
}

TEST_CASE("X=3 nearest request with only 2 in-radius results is discarded") {
    const auto& t = world().get("t2_amenity_proximity");
    const auto& store = world().store;
    bool found = false;
    for (const auto& c : store.communities()) {
        for (const auto& [cat, labels] : poi_taxonomy()) {
            for (const auto& label : labels) {
                std::size_t n = 0;
                for (const auto& p : store.pois()) {
                    n += p.city == c.city && p.label == label && haversine(c.location, p.location) <= 3000.0;
                }
                if (n != 2) continue;
                Binding b;
                b["city"] = {c.city, false, "city"};
                b["community"] = {c.name, false, "community_name"};
                b["radius"] = {"3000", true, "radius"};
                b["poi_label"] = {label, false, "poi_label"};
                b["x"] = {"3", true, "count_x"};
                auto out = instantiate(t, b, store, world().cache, "x");
                REQUIRE(std::holds_alternative<Rejection>(out));
                CHECK(std::get<Rejection>(out).reason == "answer_underivable");
                b["x"] = {"2", true, "count_x"};
                CHECK(std::holds_alternative<QAInstance>(instantiate(t, b, store, world().cache, "x")));
                found = true;
                break;
            }
            if (found) break;
        }
        if (found) break;
    }
    CHECK(found);
}

TEST_CASE("generation: accounting, all types, zero re-validation mismatches") {
    const auto& r = generated();
    CHECK(r.report.attempted == 40 * world().templates.size());
    CHECK(r.report.accepted + r.report.rejected_total() == r.report.attempted);
    CHECK(r.report.accepted == r.instances.size());
    std::set<int> types;
    std::size_t mismatches = 0;
    for (const auto& inst : r.instances) {
        types.insert(inst.question_type);
        for (const auto& p : validate_instance(inst, world().store, world().cache)) {
            MESSAGE(p);
            ++mismatches;
        }
    }
    CHECK(types == std::set<int>{1, 2, 3});
    CHECK(mismatches == 0);
}

TEST_CASE("generation is a pure function of fixture, templates and seed") {
    World other;
    GenerationConfig cfg;
    cfg.attempts_per_template = 40;
    const auto again = generate_dataset(other.templates, other.store, other.cache, cfg);
    REQUIRE(again.instances.size() == generated().instances.size());
    for (std::size_t i = 0; i < again.instances.size(); ++i) {
        CHECK(serialize_instance(again.instances[i]) == serialize_instance(generated().instances[i]));
    }
    cfg.seed = 99;
    const auto reseeded = generate_dataset(other.templates, other.store, other.cache, cfg);
    bool differs = reseeded.instances.size() != again.instances.size();
    for (std::size_t i = 0; !differs && i < again.instances.size(); ++i) {
        differs = again.instances[i].question != reseeded.instances[i].question;
    }
    CHECK(differs);
}

TEST_CASE("plausibility: walking 20 km rejected, 9.9 km kept, driving 30 km kept") {
    CHECK(plausibility_filter(with_step("time_query", "mode", "walking", 20000)).has_value());
    CHECK(plausibility_filter(with_step("time_query", "mode", "walking", 20000))->reason == "plausibility");
    CHECK_FALSE(plausibility_filter(with_step("time_query", "mode", "walking", 9900)).has_value());
    CHECK_FALSE(plausibility_filter(with_step("time_query", "mode", "driving", 30000)).has_value());
    CHECK(plausibility_filter(with_step("time_query", "mode", "cycling", 20500)).has_value());
    CHECK_FALSE(plausibility_filter(with_step("time_query", "mode", "cycling", 19500)).has_value());
    CHECK(plausibility_filter(with_step("distance_query", "kind", "walking", 12000)).has_value());
    QAInstance none;
    CHECK_FALSE(plausibility_filter(none).has_value());
}

TEST_CASE("split counts: 100 -> 80/10/10, 10 -> 8/1/1, always summing to n") {
    CHECK(split_counts(100, {}) == std::array<std::size_t, 3>{80, 10, 10});
    CHECK(split_counts(10, {}) == std::array<std::size_t, 3>{8, 1, 1});
    for (std::size_t n = 3; n < 200; ++n) {
        const auto c = split_counts(n, {});
        CHECK(c[0] + c[1] + c[2] == n);
        CHECK(std::abs(static_cast<double>(c[0]) - 0.8 * static_cast<double>(n)) <= 1.0);
        CHECK(std::abs(static_cast<double>(c[1]) - 0.1 * static_cast<double>(n)) <= 1.0);
        CHECK(std::abs(static_cast<double>(c[2]) - 0.1 * static_cast<double>(n)) <= 1.0);
    }
    CHECK_THROWS(split_counts(10, {0, 0, 0, 1}));
}

TEST_CASE("stratified split is a deterministic partition; tiny strata go to train") {
    std::vector<QAInstance> all;
    auto add = [&](const std::string& tid, int n) {
        for (int i = 0; i < n; ++i) {
            QAInstance q;
            q.template_id = tid;
            q.id = tid + "-" + std::to_string(i);
            all.push_back(q);
        }
    };
    add("a", 100);
    add("b", 10);
    add("c", 2);
    const auto s = stratified_split(all, {});
    const auto s2 = stratified_split(all, {});
    auto ids = [](const std::vector<QAInstance>& v) {
        std::vector<std::string> out;
        for (const auto& q : v) out.push_back(q.id);
        return out;
    };
    CHECK(ids(s.train) == ids(s2.train));
    CHECK(ids(s.test) == ids(s2.test));
    CHECK(s.train.size() == 80 + 8 + 2);
    CHECK(s.val.size() == 11);
    CHECK(s.test.size() == 11);
    REQUIRE(s.warnings.size() == 1);
    CHECK(s.warnings[0].find("stratum c ") != std::string::npos);
    std::set<std::string> seen;
    for (const auto* part : {&s.train, &s.val, &s.test}) {
        for (const auto& q : *part) CHECK(seen.insert(q.id).second);
    }
    CHECK(seen.size() == all.size());
    SplitSpec other;
    other.seed = 8;
    CHECK(ids(stratified_split(all, other).test) != ids(s.test));
}

TEST_CASE("paraphrase hook keeps slot integrity") {
    const auto& inst = generated().instances.front();
    CHECK(serialize_instance(paraphrase_hook(inst, nullptr)) == serialize_instance(inst));

    auto backend = std::make_shared<ScriptedBackend>();
    // Drops every slot value.
    backend->push(Purpose::paraphrase, "QUESTION: Tell me about that place.");
    CHECK(paraphrase_hook(inst, backend.get()).question == inst.question);
    // No envelope.
    backend->push(Purpose::paraphrase, "Sure!");
    CHECK(paraphrase_hook(inst, backend.get()).question == inst.question);
    // Backend failure (empty queue, no fallback).
    CHECK(paraphrase_hook(inst, backend.get()).question == inst.question);

    // Keeps every value: reverse the slot order behind a new prefix.
    std::string rewrite = "Quick question:";
    for (auto it = inst.slots.rbegin(); it != inst.slots.rend(); ++it) rewrite += " [" + it->value + "]";
    backend->push(Purpose::paraphrase, "QUESTION: " + rewrite);
    const auto out = paraphrase_hook(inst, backend.get());
    CHECK(out.question == rewrite);
    REQUIRE(out.slots.size() == inst.slots.size());
    for (std::size_t i = 0; i < out.slots.size(); ++i) {
        CHECK(out.slots[i].value == inst.slots[i].value);
        CHECK(out.question.substr(out.slots[i].start, out.slots[i].end - out.slots[i].start) == out.slots[i].value);
    }
}
