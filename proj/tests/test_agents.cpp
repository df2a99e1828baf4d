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

#include <chrono>

#include "geoqa/evaluator.hpp"
#include "geoqa/oracle.hpp"
#include "geoqa/qa_generator.hpp"
#include "support.hpp"

using namespace geoqa;
using geoqa::testing::TempDir;

namespace {

struct World {
    TempDir dir{"agents"};
    GeoStore store;
    ToolCache cache;
    CaptionIndex index;
    std::vector<QAInstance> instances;

    World()
        : store(geoqa::testing::synthetic_store(dir.path())),
          cache(std::make_shared<SyntheticProvider>(store.pois(), 7)),
          index(CaptionIndex::from_store(store)) {
        GenerationConfig cfg;
        cfg.attempts_per_template = 15;
        instances = generate_dataset(load_templates(default_template_dir()), store, cache, cfg).instances;
        cache.freeze();
    }

    RunEnvironment env(BackendFactory f) {
        RunEnvironment e;
        e.store = &store;
        e.cache = &cache;
        e.index = &index;
        e.db_examples = default_db_examples();
        e.fewshot_pool = default_fewshot_pool();
        e.backend = std::move(f);
        return e;
    }

    const QAInstance& first_of_type(int type) const {
        for (const auto& i : instances) {
            if (i.question_type == type) return i;
        }
        throw std::runtime_error("no instance of type " + std::to_string(type));
    }
};

World& world() {
    static World w;
    return w;
}

BackendFactory oracle_factory() {
    return [](const QAInstance& g) { return make_oracle_backend(g); };
}

}  // namespace

TEST_CASE("oracle closure over generated instances") {
    auto& w = world();
    REQUIRE(w.instances.size() > 100);
    RunConfig cfg;
    auto res = run_suite(w.instances, w.env(oracle_factory()), cfg);
    std::size_t shown = 0;
    for (std::size_t i = 0; i < w.instances.size() && shown < 5; ++i) {
        if (!accuracy(res.transcripts[i].answer, w.instances[i].answer)) {
            ++shown;
            MESSAGE(w.instances[i].template_id << " " << w.instances[i].id << " failure=" << res.transcripts[i].failure
                                               << "\n" << res.transcripts[i].to_json().dump(1).substr(0, 3000));
        }
    }
    MESSAGE(res.report.render());
    CHECK(res.report.overall.acc() == 1.0);
    CHECK(res.report.overall.f1() == 1.0);
    CHECK(res.report.trace.ecr() == 1.0);
    CHECK(res.report.trace.pass_at_1() == 1.0);
    CHECK(res.report.trace.api_label_accuracy() == 1.0);
    CHECK(res.report.trace.planning_accuracy() == 1.0);
}

TEST_CASE("plan grammar") {
    auto p = parse_plan("Thinking first.\nSTEP db_agent: fetch prices\nSTEP map_agent: time the drive\n");
    REQUIRE(p);
    REQUIRE(p->size() == 2);
    CHECK((*p)[0].specialist == "db_agent");
    CHECK((*p)[1].description == "time the drive");
    CHECK(parse_plan(format_plan(*p))->size() == 2);
    auto done = parse_plan("DONE");
    REQUIRE(done);
    CHECK(done->empty());
    CHECK_FALSE(parse_plan("I would ask the database and then the map."));
    CHECK_FALSE(parse_plan("STEP web_agent: browse"));
}

TEST_CASE("oracle plans follow the gold route") {
    auto& w = world();
    for (int type : {1, 2}) {
        const auto& g = w.first_of_type(type);
        EpisodeTranscript t;
        EpisodeLog log(t);
        Supervisor sup(make_oracle_backend(g), {});
        auto plan = sup.plan(g.question, gold_prediction(g), log);
        REQUIRE(plan);
        std::vector<std::string> route;
        for (const auto& d : *plan) route.push_back(d.specialist);
        CHECK(route == g.agent_route);
        if (type == 1) CHECK(route == std::vector<std::string>{kDbAgent});
        if (type == 2) CHECK(route.back() == kMapAgent);
    }
}

TEST_CASE("prose plan ends in plan_parse_failure after one reprompt") {
    auto& w = world();
    const auto& g = w.first_of_type(1);
    auto b = std::make_shared<ScriptedBackend>();
    b->set_responder(Purpose::plan, [](const ChatRequest&) -> std::optional<std::string> {
        return "First I will look things up, then answer.";
    });
    RunConfig cfg;
    cfg.inject.slu = true;
    auto t = run_instance(g, w.env([b](const QAInstance&) { return b; }), cfg);
    CHECK_FALSE(t.answer);
    CHECK(t.failure == "plan_parse_failure");
    CHECK(b->calls(Purpose::plan) == 2);
}

TEST_CASE("always-error backend terminates within the step cap") {
    auto& w = world();
    std::vector<QAInstance> batch;
    for (std::size_t i = 0; batch.size() < 200; ++i) batch.push_back(w.instances[i % w.instances.size()]);
    auto b = geoqa::testing::always_error_backend();
    RunConfig cfg;
    cfg.slu = SluMode::fewshot;
    const auto start = std::chrono::steady_clock::now();
    auto res = run_suite(batch, w.env([b](const QAInstance&) { return b; }), cfg);
    const auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    CHECK(secs < 60);
    for (const auto& t : res.transcripts) {
        CHECK_FALSE(t.answer);
        CHECK(t.step_count <= 25);
        CHECK(t.failure == "step_cap");
    }
    CHECK(res.report.overall.acc() == 0.0);
}

TEST_CASE("wrong first plan recovers through replanning") {
    auto& w = world();
    const auto& g = w.first_of_type(1);
    auto b = std::make_shared<ScriptedBackend>(make_oracle_backend(g));
    b->push(Purpose::plan, "STEP map_agent: compute the answer");
    RunConfig cfg;
    cfg.inject.slu = true;
    auto t = run_instance(g, w.env([b](const QAInstance&) { return b; }), cfg);
    REQUIRE(t.dispatches.size() >= 2);
    CHECK(t.dispatches[0].specialist == kMapAgent);
    CHECK(t.dispatches[0].status == AgentStatus::unable);
    CHECK(t.dispatches[1].specialist == kDbAgent);
    CHECK(t.plans.size() == 2);
    CHECK(accuracy(t.answer, g.answer));
}

TEST_CASE("rule finalizer") {
    EvidencePool ev;
    CHECK_FALSE(rule_finalize(ev));
    ev.sql_tables.push_back(Table{{"avg_price"}, {{Cell{std::int64_t{52000}}}}});
    auto a = rule_finalize(ev);
    REQUIRE(a);
    REQUIRE(std::holds_alternative<answer::Number>(*a));
    CHECK(std::get<answer::Number>(*a).value == 52000);
    ev.sql_tables.push_back(Table{{"name", "price"}, {{Cell{std::string("A")}, Cell{1.0}}, {Cell{std::string("B")}, Cell{2.0}}}});
    a = rule_finalize(ev);
    REQUIRE(a);
    CHECK(answer_equal(*a, answer::EntitySet{{"B", "A"}}));
    ev.derived = answer::Duration{450};
    CHECK(answer_equal(*rule_finalize(ev), answer::Duration{450}));
}

namespace {

// time_query answers keyed by origin latitude.
class FixedDurations : public Provider {
public:
    explicit FixedDurations(std::map<std::string, double> by_origin) : by_origin_(std::move(by_origin)) {}
    std::string name() const override { return "fixed"; }
    Table resolve(const ToolRequest& r) override {
        const auto it = by_origin_.find(r.params.at("origin"));
        if (it == by_origin_.end()) throw ToolError(ToolError::Code::provider_failure, "unknown origin");
        return Table{{"duration_s"}, {{Cell{it->second}}}};
    }

private:
    std::map<std::string, double> by_origin_;
};

AgentTask map_task() {
    AgentTask task;
    task.task_description = "which community is quickest to drive from";
    task.question = "Which of A, B or C is the quickest drive to the office?";
    task.context = {{"A", {22.50, 114.00}}, {"B", {22.51, 114.00}}, {"C", {22.52, 114.00}}};
    return task;
}

}  // namespace

TEST_CASE("map agent argmin over three observations") {
    auto task = map_task();
    std::map<std::string, double> d = {{format_point(task.context["A"]), 600},
                                       {format_point(task.context["B"]), 900},
                                       {format_point(task.context["C"]), 450}};
    ToolCache cache(std::make_shared<FixedDurations>(d));
    auto b = std::make_shared<ScriptedBackend>();
    std::string reply;
    for (const char* n : {"A", "B", "C"}) reply += std::string("CALL time_query origin=@") + n + "; destination=22.6,114.1; mode=driving\n";
    reply += "RULE argmin\n";
    b->push(Purpose::tool, reply);
    MapAgent agent(cache, b);
    EpisodeTranscript t;
    EpisodeLog log(t);
    auto r = agent.handle(task, log);
    REQUIRE(r.status == AgentStatus::success);
    REQUIRE(r.derived);
    CHECK(answer_equal(*r.derived, answer::EntitySet{{"C"}}));
    CHECK(r.tool_calls.size() == 3);
    CHECK(r.tool_calls[2].subject == "C");
}

TEST_CASE("map agent without coordinates is unable") {
    ToolCache cache(std::make_shared<FixedDurations>(std::map<std::string, double>{}));
    auto b = std::make_shared<ScriptedBackend>();
    b->push(Purpose::tool, "CALL time_query origin=@Nowhere; destination=22.6,114.1; mode=driving\n");
    MapAgent agent(cache, b);
    EpisodeTranscript t;
    EpisodeLog log(t);
    auto r = agent.handle(map_task(), log);
    CHECK(r.status == AgentStatus::unable);
    CHECK(r.error_report.find("Nowhere") != std::string::npos);
}

TEST_CASE("map agent gives up after the attempt cap on cache misses") {
    ToolCache cache;
    cache.freeze();
    auto b = std::make_shared<ScriptedBackend>();
    b->set_responder(Purpose::tool, [](const ChatRequest&) -> std::optional<std::string> {
        return "CALL time_query origin=@A; destination=22.6,114.1; mode=driving";
    });
    MapAgent agent(cache, b, MapAgentConfig{3});
    EpisodeTranscript t;
    EpisodeLog log(t);
    auto r = agent.handle(map_task(), log);
    CHECK(r.status == AgentStatus::error);
    CHECK(b->calls(Purpose::tool) == 3);
    CHECK(t.tool_calls.size() == 3);
    for (const auto& c : t.tool_calls) CHECK_FALSE(c.ok);
}

TEST_CASE("map reply grammar") {
    auto d = parse_map_reply("CALL rush_hour_query origin=1,2; destination=3,4; mode=driving\nCALL time_query origin=1,2; destination=3,4; mode=driving; bucket=offpeak_15\nRULE compare");
    REQUIRE(d);
    REQUIRE(d->calls.size() == 2);
    CHECK(d->calls[1].bucket == TimeBucket::offpeak_15);
    REQUIRE(d->rule);
    CHECK(d->rule->kind == RuleKind::compare);
    CHECK_FALSE(parse_map_reply("just prose"));
    CHECK_THROWS_AS(parse_map_reply("CALL teleport a=b"), std::invalid_argument);
    auto u = parse_map_reply("UNABLE: no origin given");
    REQUIRE(u);
    CHECK(*u->unable == "no origin given");
}

namespace {

std::string community_table() {
    for (const auto& c : world().store.list_captions()) {
        if (c.caption.rfind("Table for Communities in ", 0) == 0) return c.table_id;
    }
    throw std::runtime_error("no community table");
}

}  // namespace

TEST_CASE("db agent sql extraction and execution") {
    auto& w = world();
    AgentTask task;
    task.task_description = "list communities";
    task.question = "Which communities are there?";

    SUBCASE("no fenced block twice") {
        auto b = std::make_shared<ScriptedBackend>();
        b->set_responder(Purpose::caption, [](const ChatRequest&) -> std::optional<std::string> { return "CAPTION: Table for Communities"; });
        b->set_responder(Purpose::sql, [](const ChatRequest&) -> std::optional<std::string> { return "SELECT name FROM x"; });
        DbAgent agent(w.store, w.index, b, {});
        EpisodeTranscript t;
        EpisodeLog log(t);
        auto r = agent.handle(task, log);
        CHECK(r.status == AgentStatus::error);
        CHECK(b->calls(Purpose::sql) == 2);
        CHECK(t.sql_candidates.empty());
    }
    SUBCASE("writes are rejected") {
        auto b = std::make_shared<ScriptedBackend>();
        b->push(Purpose::caption, "CAPTION: Table for Communities");
        b->push(Purpose::sql, "```sql\nDELETE FROM " + community_table() + "\n```");
        DbAgent agent(w.store, w.index, b, {});
        EpisodeTranscript t;
        EpisodeLog log(t);
        auto r = agent.handle(task, log);
        CHECK(r.status == AgentStatus::error);
        REQUIRE(t.sql_candidates.size() == 1);
        CHECK_FALSE(t.sql_candidates[0].executed);
        CHECK(w.store.execute_sql("SELECT COUNT(*) FROM " + community_table()).ok());
    }
    SUBCASE("two communities give two coordinates") {
        auto b = std::make_shared<ScriptedBackend>();
        b->push(Purpose::caption, "CAPTION: Table for Communities");
        b->push(Purpose::sql, "Here it is.\n```sql\nSELECT name, latitude, longitude FROM " + community_table() +
                                  " ORDER BY name LIMIT 2\n```");
        DbAgent agent(w.store, w.index, b, {});
        EpisodeTranscript t;
        EpisodeLog log(t);
        auto r = agent.handle(task, log);
        REQUIRE(r.status == AgentStatus::success);
        CHECK(r.rows->rows.size() == 2);
        CHECK(r.coordinates.size() == 2);
        REQUIRE(t.sql_candidates.size() == 1);
        CHECK(t.sql_candidates[0].source == "generated");
    }
    SUBCASE("unable") {
        auto b = std::make_shared<ScriptedBackend>();
        b->push(Purpose::caption, "CAPTION: Table for Communities");
        b->push(Purpose::sql, "UNABLE: no such data");
        DbAgent agent(w.store, w.index, b, {});
        EpisodeTranscript t;
        EpisodeLog log(t);
        CHECK(agent.handle(task, log).status == AgentStatus::unable);
    }
    CHECK(extract_sql("```sql\nSELECT 1\n```") == std::optional<std::string>("SELECT 1"));
    CHECK(extract_sql("```\nSELECT 2\n```") == std::optional<std::string>("SELECT 2"));
    CHECK_FALSE(extract_sql("```python\nprint(1)\n```"));
}

TEST_CASE("fault in one stage is recovered by injecting that stage") {
    auto& w = world();
    struct Case {
        FaultStage stage;
        Injection inject;
    };
    for (const auto& c : {Case{FaultStage::slu, {true, false, false}}, Case{FaultStage::sql, {false, true, false}},
                          Case{FaultStage::tool, {false, false, true}}}) {
        CAPTURE(to_string(c.stage));
        std::vector<QAInstance> affected;
        for (const auto& g : w.instances) {
            if (stage_exercised(g, c.stage)) affected.push_back(g);
        }
        REQUIRE(affected.size() >= 10);
        auto env = w.env([stage = c.stage](const QAInstance& g) { return make_fault_backend(g, stage); });
        RunConfig cfg;
        auto broken = run_suite(affected, env, cfg);
        CHECK(broken.report.overall.acc() < 0.5);
        cfg.inject = c.inject;
        auto fixed = run_suite(affected, env, cfg);
        CHECK(fixed.report.overall.acc() == 1.0);
    }
}

TEST_CASE("ablation ladder has four rungs") {
    auto& w = world();
    std::vector<QAInstance> some(w.instances.begin(), w.instances.begin() + 30);
    auto res = run_ablation(some, w.env(oracle_factory()), RunConfig{});
    REQUIRE(res.size() == 4);
    CHECK(res[0].report.label == "none");
    CHECK(res[1].report.label == "slu");
    CHECK(res[2].report.label == "slu+sql");
    CHECK(res[3].report.label == "slu+sql+api");
    for (const auto& r : res) CHECK(r.report.overall.acc() == 1.0);
}
