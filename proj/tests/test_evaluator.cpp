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

#include "geoqa/evaluator.hpp"
#include "metric_sets.hpp"

using namespace geoqa;

namespace {
bool close(double a, double b) { return std::abs(a - b) <= 1e-9; }
}  // namespace

TEST_CASE("forced F1 case") {
    const CanonicalAnswer gold = answer::EntitySet{{"A", "B", "C"}};
    const CanonicalAnswer pred = answer::EntitySet{{"A", "B", "D"}};
    CHECK(item_f1(pred, gold) == 2.0 / 3.0);
    CHECK_FALSE(accuracy(pred, gold));
    CHECK(accuracy(CanonicalAnswer{answer::EntitySet{{"C", "A", "B"}}}, gold));
    CHECK(item_f1(std::nullopt, gold) == 0.0);
    CHECK(item_f1(CanonicalAnswer{answer::EntitySet{}}, gold) == 0.0);
}

TEST_CASE("enumeration answer to a count question scores zero") {
    const CanonicalAnswer gold = answer::Number{3, "count"};
    const CanonicalAnswer pred = answer::EntitySet{{"A", "B", "C"}};
    CHECK_FALSE(accuracy(pred, gold));
    CHECK(item_f1(pred, gold) == 0.0);
}

TEST_CASE("row multisets ignore order but not multiplicity") {
    Table a{{"x"}, {{Cell{std::int64_t{1}}}, {Cell{std::int64_t{2}}}, {Cell{std::int64_t{2}}}}};
    Table b{{"y"}, {{Cell{std::int64_t{2}}}, {Cell{std::int64_t{1}}}, {Cell{std::int64_t{2}}}}};
    Table c{{"x"}, {{Cell{std::int64_t{1}}}, {Cell{std::int64_t{1}}}, {Cell{std::int64_t{2}}}}};
    CHECK(rows_equal_unordered(a, b));
    CHECK_FALSE(rows_equal_unordered(a, c));
}

TEST_CASE("metrics agree with a brute-force tally on 100 random sets") {
    Rng rng(2026);
    for (int set = 0; set < 100; ++set) {
        CAPTURE(set);
        const auto m = geoqa::testing::random_metric_set(rng, 20 + rng.index(60));
        const auto want = geoqa::testing::brute_tally(m);
        const auto got = evaluate(m.transcripts, m.golds);

        CHECK(got.overall.n == want.total);
        CHECK(close(got.overall.acc(), want.acc_all / static_cast<double>(want.total)));
        CHECK(close(got.overall.f1(), want.f1_all / static_cast<double>(want.total)));
        std::size_t per_type_sum = 0;
        for (const auto& [type, n] : want.n) {
            REQUIRE(got.per_type.count(type));
            const auto& c = got.per_type.at(type);
            CHECK(c.n == n);
            per_type_sum += c.n;
            CHECK(close(c.acc(), want.acc.at(type) / static_cast<double>(n)));
            CHECK(close(c.f1(), want.f1.at(type) / static_cast<double>(n)));
        }
        CHECK(per_type_sum == got.overall.n);

        const auto& tr = got.trace;
        CHECK(tr.sql_total == want.sql_total);
        CHECK(tr.sql_executable == want.sql_exec);
        CHECK(tr.sql_pass == want.sql_pass);
        CHECK(tr.api_total == want.api_total);
        CHECK(tr.api_match == want.api_match);
        CHECK(tr.plan_total == want.plan_total);
        CHECK(tr.plan_match == want.plan_match);
        CHECK(close(tr.ecr(), static_cast<double>(want.sql_exec) / static_cast<double>(want.sql_total)));
        CHECK(close(tr.pass_at_1(), static_cast<double>(want.sql_pass) / static_cast<double>(want.sql_total)));
        if (want.api_total) {
            CHECK(close(tr.api_label_accuracy(), static_cast<double>(want.api_match) / static_cast<double>(want.api_total)));
        }
        CHECK(close(tr.planning_accuracy(), static_cast<double>(want.plan_match) / static_cast<double>(want.plan_total)));
    }
}

TEST_CASE("misaligned inputs are rejected") {
    Rng rng(1);
    auto m = geoqa::testing::random_metric_set(rng, 5);
    m.transcripts.pop_back();
    CHECK_THROWS_AS(trace_metrics(m.transcripts, m.golds), std::invalid_argument);
    m = geoqa::testing::random_metric_set(rng, 5);
    std::swap(m.transcripts[0], m.transcripts[1]);
    CHECK_THROWS_AS(trace_metrics(m.transcripts, m.golds), std::invalid_argument);
}

TEST_CASE("report serialization") {
    Rng rng(3);
    const auto m = geoqa::testing::random_metric_set(rng, 30);
    auto r = evaluate(m.transcripts, m.golds, "probe");
    const auto j = r.to_json();
    CHECK(j["label"] == "probe");
    CHECK(j["overall"]["n"] == 30);
    CHECK(j["trace"].contains("pass_at_1"));
    const auto text = r.render();
    CHECK(text.find("Overall") != std::string::npos);
    CHECK(text.find("pass@1") != std::string::npos);
}
