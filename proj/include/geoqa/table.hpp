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

// Typed tabular results. SQL queries and the tool functions both return this
// shape so that agents consume database-like payloads uniformly.

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace geoqa {

using Cell = std::variant<std::monostate, std::int64_t, double, std::string>;
using Row = std::vector<Cell>;

struct Table {
    std::vector<std::string> columns;
    std::vector<Row> rows;

    std::optional<std::size_t> column_index(std::string_view name) const;
    bool operator==(const Table&) const = default;
};

bool is_numeric(const Cell& c);
double as_double(const Cell& c);  // throws std::invalid_argument for non-numeric
std::string cell_text(const Cell& c);

nlohmann::json to_json(const Cell& c);
Cell cell_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Table& t);
Table table_from_json(const nlohmann::json& j);

// Compact pipe-separated rendering used inside prompts.
std::string render_table(const Table& t, std::size_t max_rows = 50);

}  // namespace geoqa
