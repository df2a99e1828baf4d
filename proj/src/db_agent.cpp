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

#include "geoqa/db_agent.hpp"

#include "geoqa/text.hpp"

namespace geoqa {

namespace {

std::string task_text(const AgentTask& t) {
    std::string out = "Question: " + t.question + "\nIntents: " + join(t.intents, ", ") + "\nSlots:\n";
    for (const auto& s : t.slots) out += "- " + s.slot_type + ": " + s.value + "\n";
    out += "Sub-task: " + t.task_description + "\n";
    return out;
}

std::string example_head(const DbExample& e) {
    std::string out = "Question: " + e.question + "\nIntents: " + join(e.intents, ", ") + "\nSlots:\n";
    for (const auto& [type, value] : e.slots) out += "- " + type + ": " + value + "\n";
    return out;
}

}  // namespace

std::vector<DbExample> load_db_examples(const std::filesystem::path& path) {
    std::vector<DbExample> out;
    for (const auto& line : split_lines(read_file(path))) {
        if (trim(line).empty()) continue;
        const auto j = nlohmann::json::parse(line);
        DbExample e;
        e.question = j.at("question").get<std::string>();
        e.intents = j.at("intents").get<std::vector<std::string>>();
        for (const auto& s : j.at("slots")) e.slots.emplace_back(s.at("type").get<std::string>(), s.at("value").get<std::string>());
        e.caption = j.at("caption").get<std::string>();
        e.sql = j.at("sql").get<std::string>();
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<DbExample> default_db_examples() { return load_db_examples(asset_dir() / "fewshot" / "db_examples_v1.jsonl"); }

CaptionIndex::CaptionIndex(std::vector<TableCaption> captions, double k1, double b)
    : captions_(std::move(captions)), index_([&] {
          std::vector<std::string> docs;
          for (const auto& c : captions_) docs.push_back(c.caption);
          return Bm25Index(std::move(docs), k1, b);
      }()) {}

std::vector<std::pair<const TableCaption*, double>> CaptionIndex::retrieve(std::string_view summary, std::size_t k) const {
    std::vector<std::pair<const TableCaption*, double>> out;
    for (const auto& h : index_.top_k(summary, k)) out.emplace_back(&captions_[h.index], h.score);
    return out;
}

std::optional<std::string> extract_sql(std::string_view reply) {
    const auto open = reply.find("```");
    if (open == std::string_view::npos) return std::nullopt;
    auto body_start = reply.find('\n', open);
    if (body_start == std::string_view::npos) return std::nullopt;
    const auto lang = to_lower(trim(reply.substr(open + 3, body_start - open - 3)));
    if (!lang.empty() && lang != "sql" && lang != "sqlite") return std::nullopt;
    const auto close = reply.find("```", body_start);
    if (close == std::string_view::npos) return std::nullopt;
    auto sql = trim(reply.substr(body_start + 1, close - body_start - 1));
    if (sql.empty()) return std::nullopt;
    return sql;
}

DbAgent::DbAgent(const GeoStore& store, const CaptionIndex& index, std::shared_ptr<ChatBackend> backend,
                 std::vector<DbExample> examples, DbAgentConfig config)
    : store_(store), index_(index), backend_(std::move(backend)), examples_(std::move(examples)), config_(config) {
    caption_prompt_ = load_asset("prompts/db_caption_v1.txt");
    sql_prompt_ = load_asset("prompts/db_sql_v1.txt");
    if (!examples_.empty()) {
        caption_prompt_ += "\n# Examples\n";
        sql_prompt_ += "\n# Examples\n";
        for (const auto& e : examples_) {
            caption_prompt_ += "\n" + example_head(e) + "CAPTION: " + e.caption + "\n";
            sql_prompt_ += "\n" + example_head(e) + "Table: " + e.caption + "\n```sql\n" + e.sql + "\n```\n";
        }
    }
}

nlohmann::json DbAgent::context(const AgentTask& task) const {
    auto j = to_json(task);
    return j;
}

std::string DbAgent::caption_summary(const AgentTask& task, EpisodeLog& log) {
    ChatRequest req;
    req.purpose = Purpose::caption;
    req.system = caption_prompt_;
    req.context = context(task);
    req.messages.push_back({"user", task_text(task)});
    const auto reply = log.complete(*backend_, req);
    for (const auto& line : split_lines(reply)) {
        const auto t = trim(line);
        if (starts_with(t, "CAPTION:")) return trim(t.substr(8));
    }
    return trim(reply);
}

std::optional<std::string> DbAgent::generate_sql(const AgentTask& task, const TableCaption& caption, EpisodeLog& log,
                                                 std::string& unable) {
    ChatRequest req;
    req.purpose = Purpose::sql;
    req.system = sql_prompt_;
    req.context = context(task);
    req.context["caption"] = caption.caption;
    req.context["table_id"] = caption.table_id;
    std::string schema = "Table " + caption.table_id + " (" + caption.caption + ")\nColumns:";
    for (const auto& c : caption.columns) schema += " " + c.name + " " + c.type + ",";
    schema.pop_back();
    std::string user = task_text(task) + "\n" + schema + "\n";
    if (!task.context.empty()) {
        user += "Known entities:";
        for (const auto& [name, _] : task.context) user += " " + name + ";";
        user += "\n";
    }
    req.messages.push_back({"user", user});
    for (int attempt = 0; attempt < 2; ++attempt) {
        const auto reply = log.complete(*backend_, req);
        for (const auto& line : split_lines(reply)) {
            if (starts_with(trim(line), "UNABLE:")) {
                unable = trim(trim(line).substr(7));
                return std::nullopt;
            }
        }
        if (auto sql = extract_sql(reply)) return sql;
        req.messages.push_back({"assistant", reply});
        req.messages.push_back({"user", "No SQL block found. Reply with exactly one ```sql fenced block holding one SELECT statement."});
    }
    return std::nullopt;
}

AgentResult DbAgent::execute_and_package(const std::string& statement) const {
    auto out = store_.execute_sql(statement);
    if (!out.ok()) return AgentResult::failure(AgentStatus::error, "SQL failed: " + out.error);
    AgentResult r;
    r.status = AgentStatus::success;
    r.coordinates = coordinate_map(*out.rows);
    r.rows = std::move(*out.rows);
    return r;
}

AgentResult DbAgent::handle(const AgentTask& task, EpisodeLog& log) {
    SqlCandidateRecord cand;
    if (task.injected_sql) {
        cand.statement = task.injected_sql->statement;
        cand.caption = task.injected_sql->caption;
        cand.source = "gt_injected";
    } else {
        const auto summary = caption_summary(task, log);
        const auto hits = index_.retrieve(summary, config_.top_k);
        if (hits.empty()) return AgentResult::failure(AgentStatus::error, "caption retrieval returned nothing");
        std::string unable;
        auto sql = generate_sql(task, *hits.front().first, log, unable);
        if (!sql) {
            if (!unable.empty()) return AgentResult::failure(AgentStatus::unable, unable);
            return AgentResult::failure(AgentStatus::error, "no SQL statement could be extracted");
        }
        cand.statement = *sql;
        cand.caption = hits.front().first->caption;
        cand.source = "generated";
    }
    auto r = execute_and_package(cand.statement);
    cand.executed = r.status == AgentStatus::success;
    cand.error = r.error_report;
    cand.rows = r.rows;
    log.sql_candidate(std::move(cand));
    return r;
}

}  // namespace geoqa
