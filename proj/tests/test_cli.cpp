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

#include <fstream>
#include <sstream>

#include "geoqa/cli.hpp"
#include "support.hpp"

using namespace geoqa;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result cli(const fs::path& wd, std::vector<std::string> args) {
    args.insert(args.begin(), {"-w", wd.string()});
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), {}};
}

void write(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

// Small workspace shared by the cases below.
struct Workspace {
    geoqa::testing::TempDir dir{"cli"};
    Workspace() {
        write(dir / "geoqa.json", R"({"fixture": {"communities_per_city": 80, "pois_per_city": 60},
                                     "attempts_per_template": 20, "parallelism": 2})");
        for (const auto& cmd : std::vector<std::vector<std::string>>{
                 {"ingest", "--synthetic"}, {"pairs"}, {"generate"}, {"cache-populate"}, {"split"}}) {
            auto args = cmd;
            args.insert(args.begin(), {"-c", (dir / "geoqa.json").string()});
            const auto r = cli(dir.path(), args);
            REQUIRE_MESSAGE(r.code == 0, cmd[0] << ": " << r.err);
        }
    }
    Result operator()(std::vector<std::string> args) {
        args.insert(args.begin(), {"-c", (dir / "geoqa.json").string()});
        return cli(dir.path(), args);
    }
};

Workspace& ws() {
    static Workspace w;
    return w;
}

}  // namespace

TEST_CASE("validate on a fresh dataset reports zero mismatches") {
    auto r = ws()({"validate"});
    CHECK(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["mismatches"] == 0);
    CHECK(j["instances"].get<std::size_t>() > 0);
}

TEST_CASE("validate flags a tampered dataset") {
    auto& w = ws();
    const auto good = slurp(w.dir / "dataset.jsonl");
    auto insts = read_dataset(w.dir / "dataset.jsonl");
    insts[0].answer = answer::Text{"tampered"};
    write_dataset(w.dir / "dataset.jsonl", insts);
    auto r = w({"validate"});
    write(w.dir / "dataset.jsonl", good);
    CHECK(r.code == 1);
    CHECK(nlohmann::json::parse(r.out)["mismatches"] == 1);
}

TEST_CASE("generate and cache-populate are byte-identical on rerun") {
    auto& w = ws();
    const auto dataset = slurp(w.dir / "dataset.jsonl");
    const auto cache = slurp(w.dir / "cache.jsonl");
    const auto split = slurp(w.dir / "splits" / "test.jsonl");
    REQUIRE(w({"generate"}).code == 0);
    REQUIRE(w({"cache-populate"}).code == 0);
    REQUIRE(w({"split"}).code == 0);
    CHECK(slurp(w.dir / "dataset.jsonl") == dataset);
    CHECK(slurp(w.dir / "cache.jsonl") == cache);
    CHECK(slurp(w.dir / "splits" / "test.jsonl") == split);
}

TEST_CASE("run without a backend is a configuration error") {
    auto r = ws()({"run", "-n", "nobackend"});
    CHECK(r.code == 2);
    CHECK(r.err.find("--oracle") != std::string::npos);
    CHECK_FALSE(fs::exists(ws().dir / "runs" / "nobackend"));
}

TEST_CASE("run directories are append-only") {
    auto& w = ws();
    REQUIRE(w({"run", "-n", "once", "--oracle", "--limit", "20"}).code == 0);
    CHECK(w({"run", "-n", "once", "--oracle", "--limit", "20"}).code == 2);
    CHECK(w({"run", "-n", "once", "--oracle", "--limit", "20", "--overwrite"}).code == 0);
    CHECK(fs::exists(w.dir / "runs" / "once" / "transcripts.jsonl"));
    CHECK(fs::exists(w.dir / "runs" / "once" / "report.txt"));
}

TEST_CASE("eval reproduces the run report") {
    auto& w = ws();
    REQUIRE(w({"run", "-n", "scored", "--oracle", "--slu", "lexicon", "--overwrite"}).code == 0);
    auto e = w({"eval", "-n", "scored"});
    REQUIRE(e.code == 0);
    auto run_report = nlohmann::json::parse(slurp(w.dir / "runs" / "scored" / "report.json"));
    auto eval_report = nlohmann::json::parse(slurp(w.dir / "runs" / "scored" / "eval.json"));
    CHECK(run_report == eval_report);
    CHECK(eval_report["overall"]["acc"] == 1.0);
}

TEST_CASE("ablate with the oracle backend writes four rungs, all exact") {
    auto& w = ws();
    auto r = w({"ablate", "-n", "ladder", "--oracle", "--overwrite"});
    REQUIRE(r.code == 0);
    const auto ladder = nlohmann::json::parse(slurp(w.dir / "runs" / "ladder" / "ladder.json"));
    REQUIRE(ladder.size() == 4);
    const std::vector<std::string> labels = {"none", "slu", "slu+sql", "slu+sql+api"};
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(ladder[i]["label"] == labels[i]);
        CHECK(ladder[i]["overall"]["acc"] == 1.0);
        CHECK(fs::exists(w.dir / "runs" / "ladder" / ("rung_" + labels[i]) / "transcripts.jsonl"));
    }
}

TEST_CASE("config errors exit with 2") {
    auto& w = ws();
    write(w.dir / "secret.json", R"({"backend": {"endpoint": "http://x", "model": "m", "api_key": "sk-123"}})");
    CHECK(cli(w.dir.path(), {"-c", (w.dir / "secret.json").string(), "validate"}).code == 2);
    write(w.dir / "typo.json", R"({"step_caps": 3})");
    CHECK(cli(w.dir.path(), {"-c", (w.dir / "typo.json").string(), "validate"}).code == 2);
    write(w.dir / "broken.json", "{not json");
    CHECK(cli(w.dir.path(), {"-c", (w.dir / "broken.json").string(), "validate"}).code == 2);
    CHECK(cli(w.dir.path(), {"frobnicate"}).code == 2);
    CHECK(cli(w.dir.path(), {"run"}).code == 2);
    geoqa::testing::TempDir empty("cli_empty");
    CHECK(cli(empty.path(), {"validate"}).code == 2);
}

TEST_CASE("unreachable backend is a backend failure") {
    auto& w = ws();
    write(w.dir / "down.json", R"({"backend": {"endpoint": "http://127.0.0.1:9/v1/chat/completions", "model": "m",
                                   "timeout_seconds": 1, "max_retries": 0}})");
    auto r = cli(w.dir.path(), {"-c", (w.dir / "down.json").string(), "run", "-n", "down", "--limit", "3"});
    CHECK(r.code == 3);
}

TEST_CASE("help exits cleanly") {
    auto r = cli(ws().dir.path(), {"--help"});
    CHECK(r.code == 0);
    CHECK(r.out.find("cache-populate") != std::string::npos);
}
