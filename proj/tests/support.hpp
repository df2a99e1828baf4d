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

#pragma once

#include <atomic>
#include <filesystem>
#include <string>
#include <unistd.h>

#include "geoqa/chat.hpp"
#include "geoqa/geo_store.hpp"

namespace geoqa::testing {

// Fresh scratch directory, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "t") {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("geoqa_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& p) const { return path_ / p; }

private:
    std::filesystem::path path_;
};

// Synthetic two-city store with proximity pairs, built under dir.
inline GeoStore synthetic_store(const std::filesystem::path& dir, const FixtureSpec& spec = {}) {
    write_synthetic_fixture(spec, dir / "fixture");
    StoreConfig config;
    config.cities = spec.cities;
    config.seed = spec.seed;
    auto store = GeoStore::ingest_fixture(config, dir / "fixture");
    store.build_proximity_pairs();
    return store;
}

// Well-formed plans, useless work: every SQL fails, every tool call is refused.
inline std::shared_ptr<ScriptedBackend> always_error_backend() {
    auto b = std::make_shared<ScriptedBackend>();
    auto plan = [](const ChatRequest&) -> std::optional<std::string> { return "STEP db_agent: fetch the rows"; };
    b->set_responder(Purpose::plan, plan);
    b->set_responder(Purpose::replan, plan);
    b->set_responder(Purpose::caption, [](const ChatRequest&) -> std::optional<std::string> { return "CAPTION: anything"; });
    b->set_responder(Purpose::sql, [](const ChatRequest&) -> std::optional<std::string> {
        return "```sql\nSELECT nothing FROM no_such_table\n```";
    });
    b->set_responder(Purpose::tool, [](const ChatRequest&) -> std::optional<std::string> { return "UNABLE: refused"; });
    b->set_responder(Purpose::sufficiency, [](const ChatRequest&) -> std::optional<std::string> { return "SUFFICIENT: no"; });
    b->set_responder(Purpose::finalize, [](const ChatRequest&) -> std::optional<std::string> { return "ANSWER unanswerable"; });
    b->set_responder(Purpose::slu, [](const ChatRequest&) -> std::optional<std::string> { return "INTENTS: unknown"; });
    return b;
}

}  // namespace geoqa::testing
