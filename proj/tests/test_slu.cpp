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

#include <set>

#include "geoqa/rng.hpp"
#include "geoqa/slu.hpp"
#include "support.hpp"

using namespace geoqa;
using geoqa::testing::TempDir;

namespace {

struct World {
    TempDir dir{"slu"};
    GeoStore store;
    ToolCache cache;
    std::vector<Template> templates;
    std::vector<QAInstance> test_split;

    World()
        : store(geoqa::testing::synthetic_store(dir.path())),
          cache(std::make_shared<SyntheticProvider>(store.pois(), 7)),
          templates(load_templates(default_template_dir())) {
        GenerationConfig cfg;
        cfg.attempts_per_template = 100;
        test_split = stratified_split(generate_dataset(templates, store, cache, cfg).instances, {}).test;
    }
};

World& world() {
    static World w;
    return w;
}

// Textbook confusion tally, written independently of slu_metrics.
struct Tally {
    double ip = 0, ir = 0, sp = 0, sr = 0, acc = 0;
};

Tally brute_force(const std::vector<SluPrediction>& preds, const std::vector<SluPrediction>& golds) {
    double itp = 0, ipred = 0, igold = 0, stp = 0, spred = 0, sgold = 0, exact = 0;
    for (std::size_t i = 0; i < golds.size(); ++i) {
        std::set<std::string> pi(preds[i].intents.begin(), preds[i].intents.end());
        std::set<std::string> gi(golds[i].intents.begin(), golds[i].intents.end());
        for (const auto& x : pi) itp += gi.count(x);
        ipred += pi.size();
        igold += gi.size();
        exact += pi == gi ? 1 : 0;
        std::vector<bool> used(golds[i].slots.size(), false);
        for (const auto& p : preds[i].slots) {
            for (std::size_t g = 0; g < golds[i].slots.size(); ++g) {
                if (!used[g] && golds[i].slots[g].slot_type == p.slot_type && golds[i].slots[g].value == p.value) {
                    used[g] = true;
                    ++stp;
                    break;
                }
            }
        }
        spred += preds[i].slots.size();
        sgold += golds[i].slots.size();
    }
    Tally t;
    t.ip = ipred ? itp / ipred : 0;
    t.ir = igold ? itp / igold : 0;
    t.sp = spred ? stp / spred : 0;
    t.sr = sgold ? stp / sgold : 0;
    t.acc = golds.empty() ? 0 : exact / static_cast<double>(golds.size());
    return t;
}

SlotAnnotation slot(const std::string& type, const std::string& value) { return {type, value, 0, value.size()}; }

}  // namespace

TEST_CASE("gazetteer: single community hit is tagged community_name") {
    const auto g = Gazetteer::build(world().store);
    const auto& c = world().store.communities().front();
    const std::string q = "Tell me about " + c.name + ".";
    const auto hits = g.match(q);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].slot_type == "community_name");
    CHECK(hits[0].value == c.name);
    CHECK(q.substr(hits[0].start, hits[0].end - hits[0].start) == c.name);
}

TEST_CASE("no gazetteer or pattern hit -> empty slots and intent unknown") {
    LexiconSlu slu(Gazetteer::build(world().store), world().templates);
    const auto p = slu.predict("what is the weather like today?");
    CHECK(p.slots.empty());
    CHECK(p.intents == std::vector<std::string>{"unknown"});
}

TEST_CASE("gazetteer tie-break: longest match, then earliest; word boundaries respected") {
    Gazetteer g;
    g.add("district", "Golden");
    g.add("community_name", "Golden Garden");
    g.add("poi_label", "park");
    g.add("city", "Ab");
    g.add("city", "Cd");
    auto hits = g.match("Golden Garden near the parkway and a park");
    REQUIRE(hits.size() == 2);
    CHECK(hits[0].value == "Golden Garden");
    CHECK(hits[1].value == "park");
    CHECK(hits[1].start == 37);
    hits = g.match("AbCd Ab Cd");
    REQUIRE(hits.size() == 2);
    CHECK(hits[0].start == 5);
}

TEST_CASE("gazetteer dump/load round trip") {
    TempDir dir("gaz");
    const auto g = Gazetteer::build(world().store);
    g.save(dir / "g.tsv");
    const auto h = Gazetteer::load(dir / "g.tsv");
    CHECK(h.size() == g.size());
    CHECK(h.dump() == g.dump());
    CHECK_THROWS(Gazetteer::parse("no tab here\n"));
}

TEST_CASE("lexicon baseline on the generated test split: slot F1 and intent accuracy >= 0.95") {
    LexiconSlu slu(Gazetteer::build(world().store), world().templates);
    std::vector<SluPrediction> preds, golds;
    for (const auto& inst : world().test_split) {
        auto p = slu.predict(inst.question);
        for (const auto& s : p.slots) CHECK(inst.question.substr(s.start, s.end - s.start) == s.value);
        preds.push_back(std::move(p));
        golds.push_back(gold_prediction(inst));
    }
    REQUIRE(golds.size() >= 100);
    const auto m = slu_metrics(preds, golds);
    MESSAGE("slot F1 " << m.slot.f1 << ", intent accuracy " << m.intent_accuracy);
    CHECK(m.slot.f1 >= 0.95);
    CHECK(m.intent_accuracy >= 0.95);
}

TEST_CASE("few-shot: 26 examples cover all intents; echoed gold parses to gold; malformed -> empty") {
    const auto pool = default_fewshot_pool();
    CHECK(pool.size() == 26);
    std::set<std::string> intents;
    for (const auto& e : pool) intents.insert(e.intents.begin(), e.intents.end());
    CHECK(intents.size() == 16);

    const auto& inst = world().test_split.front();
    auto backend = std::make_shared<ScriptedBackend>();
    std::vector<std::pair<std::string, std::string>> gold;
    for (const auto& s : inst.slots) gold.emplace_back(s.slot_type, s.value);
    backend->push(Purpose::slu, "Thinking...\n" + format_slu_envelope(inst.intents, gold));
    backend->push(Purpose::slu, "I am not sure.");
    FewShotSlu slu(backend, pool);
    CHECK(slu.prompt().find(pool.back().question) != std::string::npos);
    const auto p = slu.predict(inst.question);
    CHECK(p.intents == inst.intents);
    CHECK(p.slots == inst.slots);
    const auto empty = slu.predict(inst.question);
    CHECK(empty.intents.empty());
    CHECK(empty.slots.empty());
    CHECK_THROWS_AS(slu.predict(inst.question), BackendError);
}

TEST_CASE("slu metrics: identity, empty predictions, half the slots") {
    std::vector<SluPrediction> golds = {{{"price_lookup"}, {slot("city", "Guangzhou")}},
                                        {{"commute_time"}, {slot("poi_name", "X Park")}}};
    auto m = slu_metrics(golds, golds);
    CHECK(m.slot.f1 == 1.0);
    CHECK(m.intent.f1 == 1.0);
    CHECK(m.intent_accuracy == 1.0);

    m = slu_metrics({{}, {}}, golds);
    CHECK(m.slot.precision == 0.0);
    CHECK(m.slot.recall == 0.0);
    CHECK(m.intent.precision == 0.0);

    auto half = golds;
    half[1].slots[0].value = "Y Park";
    m = slu_metrics(half, golds);
    CHECK(m.slot.recall == 0.5);
    CHECK(m.slot.precision == 0.5);
    CHECK_THROWS_AS(slu_metrics({{}}, golds), std::invalid_argument);
}

TEST_CASE("slu metrics equal a brute-force tally on random samples") {
    const std::vector<std::string> types = {"city", "district", "poi_name"};
    const std::vector<std::string> values = {"A", "B", "C", "D"};
    const std::vector<std::string> intents = {"i1", "i2", "i3"};
    Rng rng(42);
    for (int round = 0; round < 100; ++round) {
        std::vector<SluPrediction> preds, golds;
        const auto n = 1 + rng.index(100);
        auto random_pred = [&] {
            SluPrediction p;
            for (std::size_t k = rng.index(3); k > 0; --k) p.intents.push_back(rng.pick(intents));
            for (std::size_t k = rng.index(4); k > 0; --k) p.slots.push_back(slot(rng.pick(types), rng.pick(values)));
            return p;
        };
        for (std::size_t i = 0; i < n; ++i) {
            preds.push_back(random_pred());
            golds.push_back(random_pred());
        }
        const auto m = slu_metrics(preds, golds);
        const auto t = brute_force(preds, golds);
        CHECK(m.intent.precision == doctest::Approx(t.ip).epsilon(1e-12));
        CHECK(m.intent.recall == doctest::Approx(t.ir).epsilon(1e-12));
        CHECK(m.slot.precision == doctest::Approx(t.sp).epsilon(1e-12));
        CHECK(m.slot.recall == doctest::Approx(t.sr).epsilon(1e-12));
        CHECK(m.intent_accuracy == doctest::Approx(t.acc).epsilon(1e-12));
    }
}
