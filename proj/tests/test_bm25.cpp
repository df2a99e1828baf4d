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

#include <algorithm>
#include <cmath>

#include "geoqa/bm25.hpp"
#include "geoqa/db_agent.hpp"
#include "geoqa/rng.hpp"
#include "support.hpp"

using namespace geoqa;

TEST_CASE("tokenizer") {
    CHECK(bm25_tokenize("Table for Communities, in Shenzhen!") ==
          std::vector<std::string>{"table", "for", "communities", "in", "shenzhen"});
    CHECK(bm25_tokenize("深圳小区 prices") == std::vector<std::string>{"深圳", "圳小", "小区", "prices"});
    CHECK(bm25_tokenize("市") == std::vector<std::string>{"市"});
    CHECK(bm25_tokenize("  ").empty());
}

TEST_CASE("toy corpus matches hand-computed scores") {
    // lengths 3, 4, 2; avgdl 3; both query terms have df 2 of N 3.
    Bm25Index idx({"community prices shenzhen", "community pois shenzhen shenzhen", "school hospital"});
    CHECK(idx.average_length() == 3.0);
    const double idf = std::log(1.0 + (3 - 2 + 0.5) / (2 + 0.5));
    CHECK(std::abs(idx.idf("community") - idf) < 1e-12);
    const auto s = idx.scores("community shenzhen");
    REQUIRE(s.size() == 3);
    // d1: tf 1, |d| = avgdl, so each term contributes exactly idf.
    CHECK(std::abs(s[0] - 2 * idf) < 1e-9);
    // d2: K = 1.2 * (0.25 + 0.75 * 4 / 3) = 1.5
    CHECK(std::abs(s[1] - idf * (2.2 / 2.5 + 2 * 2.2 / 3.5)) < 1e-9);
    CHECK(s[2] == 0.0);
    // repeated query terms count once
    CHECK(idx.scores("community community shenzhen") == s);
    const auto top = idx.top_k("community shenzhen", 2);
    REQUIRE(top.size() == 2);
    CHECK(top[0].index == 1);
    CHECK(top[1].index == 0);
}

TEST_CASE("zero-overlap queries rank by document text") {
    Bm25Index idx({"gamma ray", "alpha beta", "beta alpha"});
    for (double v : idx.scores("nothing matches")) CHECK(v == 0.0);
    const auto top = idx.top_k("nothing matches", 3);
    CHECK(top[0].index == 1);
    CHECK(top[1].index == 2);
    CHECK(top[2].index == 0);
}

TEST_CASE("scores are invariant to corpus order") {
    std::vector<std::string> docs = {"Table for Communities in Shenzhen", "Table for POIs in Shenzhen",
                                     "Table for Communities around POIs in Beijing", "Table for Rent in Beijing",
                                     "price per square meter"};
    Bm25Index a(docs);
    auto perm = docs;
    std::reverse(perm.begin(), perm.end());
    Bm25Index b(perm);
    const auto sa = a.scores("communities shenzhen price");
    const auto sb = b.scores("communities shenzhen price");
    for (std::size_t i = 0; i < docs.size(); ++i) CHECK(sa[i] == doctest::Approx(sb[docs.size() - 1 - i]).epsilon(1e-12));
}

TEST_CASE("self retrieval over store catalogs") {
    const std::vector<std::string> all = {"Guangzhou", "Shenzhen", "Beijing", "Shanghai",
                                          "Tianjin",   "Chengdu",  "Hangzhou", "Wuhan"};
    for (std::size_t cities : {2u, 5u, 8u}) {
        CAPTURE(cities);
        geoqa::testing::TempDir dir("bm25");
        FixtureSpec spec;
        spec.cities.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(cities));
        spec.communities_per_city = 30;
        spec.pois_per_city = 20;
        auto store = geoqa::testing::synthetic_store(dir.path(), spec);
        auto index = CaptionIndex::from_store(store);
        const auto& caps = index.captions();
        CHECK(caps.size() >= 8);
        CHECK(caps.size() <= 32);
        for (const auto& c : caps) {
            const auto hit = index.retrieve(c.caption, 1);
            REQUIRE(hit.size() == 1);
            CHECK(hit[0].first->table_id == c.table_id);
        }
    }
}
