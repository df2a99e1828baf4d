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

#include "geoqa/table.hpp"

#include <sstream>
#include <stdexcept>

namespace geoqa {

std::optional<std::size_t> Table::column_index(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i] == name) return i;
    }
    return std::nullopt;
}

bool is_numeric(const Cell& c) {
    return std::holds_alternative<std::int64_t>(c) || std::holds_alternative<double>(c);
}

double as_double(const Cell& c) {
    if (auto* i = std::get_if<std::int64_t>(&c)) return static_cast<double>(*i);
    if (auto* d = std::get_if<double>(&c)) return *d;
    throw std::invalid_argument("cell is not numeric");
}

std::string cell_text(const Cell& c) {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) {
                return "NULL";
            } else if constexpr (std::is_same_v<T, std::string>) {
                return v;
            } else if constexpr (std::is_same_v<T, double>) {
                return nlohmann::json(v).dump();
            } else {
                return std::to_string(v);
            }
        },
        c);
}

nlohmann::json to_json(const Cell& c) {
    return std::visit(
        [](const auto& v) -> nlohmann::json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) {
                return nullptr;
            } else {
                return v;
            }
        },
        c);
}

Cell cell_from_json(const nlohmann::json& j) {
    if (j.is_null()) return std::monostate{};
    if (j.is_number_integer()) return j.get<std::int64_t>();
    if (j.is_number_float()) return j.get<double>();
    if (j.is_string()) return j.get<std::string>();
    throw std::invalid_argument("unsupported cell value: " + j.dump());
}

nlohmann::json to_json(const Table& t) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : t.rows) {
        nlohmann::json row = nlohmann::json::array();
        for (const auto& c : r) row.push_back(to_json(c));
        rows.push_back(std::move(row));
    }
    return {{"columns", t.columns}, {"rows", std::move(rows)}};
}

Table table_from_json(const nlohmann::json& j) {
    Table t;
    t.columns = j.at("columns").get<std::vector<std::string>>();
    for (const auto& row : j.at("rows")) {
        Row r;
        for (const auto& c : row) r.push_back(cell_from_json(c));
        if (r.size() != t.columns.size()) throw std::invalid_argument("row width mismatch");
        t.rows.push_back(std::move(r));
    }
    return t;
}

std::string render_table(const Table& t, std::size_t max_rows) {
    std::ostringstream out;
    for (std::size_t i = 0; i < t.columns.size(); ++i) {
        out << (i ? " | " : "") << t.columns[i];
    }
    out << '\n';
    std::size_t n = 0;
    for (const auto& r : t.rows) {
        if (n++ == max_rows) {
            out << "... (" << t.rows.size() - max_rows << " more rows)\n";
            break;
        }
        for (std::size_t i = 0; i < r.size(); ++i) out << (i ? " | " : "") << cell_text(r[i]);
        out << '\n';
    }
    return out.str();
}

}  // namespace geoqa
