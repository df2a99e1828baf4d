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

// Database specialist: hypothetical caption -> BM25 caption retrieval ->
// few-shot SQL generation -> read-only execution with coordinate extraction.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "geoqa/agent.hpp"
#include "geoqa/bm25.hpp"
#include "geoqa/geo_store.hpp"

namespace geoqa {

struct DbExample {
    std::string question;
    std::vector<std::string> intents;
    std::vector<std::pair<std::string, std::string>> slots;
    std::string caption;
    std::string sql;
};

std::vector<DbExample> load_db_examples(const std::filesystem::path& path);
std::vector<DbExample> default_db_examples();

// Caption catalog of a store wrapped in a BM25 index.
class CaptionIndex {
public:
    explicit CaptionIndex(std::vector<TableCaption> captions, double k1 = 1.2, double b = 0.75);
    static CaptionIndex from_store(const GeoStore& store) { return CaptionIndex(store.list_captions()); }
    std::vector<std::pair<const TableCaption*, double>> retrieve(std::string_view summary, std::size_t k = 1) const;
    const std::vector<TableCaption>& captions() const { return captions_; }

private:
    std::vector<TableCaption> captions_;
    Bm25Index index_;
};

// First ```sql fenced block (a bare ``` fence is accepted as well).
std::optional<std::string> extract_sql(std::string_view reply);

struct DbAgentConfig {
    std::size_t top_k = 1;
};

class DbAgent : public Specialist {
public:
    DbAgent(const GeoStore& store, const CaptionIndex& index, std::shared_ptr<ChatBackend> backend,
            std::vector<DbExample> examples, DbAgentConfig config = {});
    std::string name() const override { return kDbAgent; }
    AgentResult handle(const AgentTask& task, EpisodeLog& log) override;

    std::string caption_summary(const AgentTask& task, EpisodeLog& log);
    // Empty when no statement could be extracted after one reprompt; unable
    // replies are reported through `unable`.
    std::optional<std::string> generate_sql(const AgentTask& task, const TableCaption& caption, EpisodeLog& log,
                                            std::string& unable);
    AgentResult execute_and_package(const std::string& statement) const;

private:
    nlohmann::json context(const AgentTask& task) const;

    const GeoStore& store_;
    const CaptionIndex& index_;
    std::shared_ptr<ChatBackend> backend_;
    std::vector<DbExample> examples_;
    DbAgentConfig config_;
    std::string caption_prompt_;
    std::string sql_prompt_;
};

}  // namespace geoqa
