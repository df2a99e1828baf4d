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

// Embedded relational store (SQLite dialect) holding four table families per
// city: communities, POIs, POI-community pairs and community-community pairs.
//
// Mutation happens only in ingest_fixture and build_proximity_pairs. Every
// query path is read-only; execute_sql rejects anything but a single SELECT
// (or WITH ... SELECT) statement.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "geoqa/domain.hpp"
#include "geoqa/table.hpp"

struct sqlite3;

namespace geoqa {

enum class TableFamily { community, poi, poi_community, community_community };

std::string_view to_string(TableFamily f);

struct ColumnDef {
    std::string name;
    std::string type;
};

struct TableCaption {
    std::string table_id;
    std::string caption;
    std::string city;
    TableFamily family = TableFamily::community;
    std::vector<ColumnDef> columns;
};

struct StoreConfig {
    std::vector<std::string> cities;
    double poi_pairing_radius = 3000.0;
    double community_pairing_radius = 1000.0;
    std::uint64_t seed = 7;
};

class IngestError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SqlOutcome {
    std::optional<Table> rows;
    std::string error;  // engine message when rows is empty

    bool ok() const { return rows.has_value(); }
};

struct PairCounts {
    std::size_t poi_community = 0;
    std::size_t community_community = 0;
};

// Lower-case ASCII slug used in table names ("Guangzhou" -> "guangzhou").
std::string city_slug(std::string_view city);
std::string table_name(std::string_view city, TableFamily family);
std::string caption_text(std::string_view city, TableFamily family);
const std::vector<ColumnDef>& family_columns(TableFamily family);

class GeoStore {
public:
    // Reads <dir>/<city_slug>/{communities,pois}.csv (and pair files when
    // present) into an in-memory database. Throws IngestError naming the
    // offending file, line and record id.
    static GeoStore ingest_fixture(const StoreConfig& config, const std::filesystem::path& fixture_dir);

    // Opens a store file written by save().
    static GeoStore open(const std::filesystem::path& path, bool read_only = true);

    GeoStore(GeoStore&&) noexcept;
    GeoStore& operator=(GeoStore&&) noexcept;
    ~GeoStore();

    void save(const std::filesystem::path& path) const;

    // Rebuilds both pair tables: (poi, community) within poi_pairing_radius and
    // (community, neighbor) within community_pairing_radius, both directions.
    PairCounts build_proximity_pairs();

    SqlOutcome execute_sql(std::string_view statement) const;

    // Deterministic order: city (lexicographic), then family.
    std::vector<TableCaption> list_captions() const;

    const StoreConfig& config() const { return config_; }
    const std::vector<Community>& communities() const { return communities_; }
    const std::vector<Poi>& pois() const { return pois_; }
    const std::vector<ProximityPair>& pairs() const { return pairs_; }

    const Community* find_community(std::string_view city, std::string_view name) const;
    const Poi* find_poi(std::string_view city, std::string_view name) const;

    // Exports all four families as CSV fixture files.
    void export_fixture(const std::filesystem::path& dir) const;

private:
    GeoStore();
    void create_schema();
    void exec_internal(const std::string& sql);
    void load_entities();
    void write_meta();
    void read_meta();

    struct DbDeleter {
        void operator()(sqlite3* db) const;
    };
    std::unique_ptr<sqlite3, DbDeleter> db_;
    std::unique_ptr<std::mutex> mu_;
    StoreConfig config_;
    bool read_only_ = false;
    std::vector<Community> communities_;
    std::vector<Poi> pois_;
    std::vector<ProximityPair> pairs_;
};

// Synthetic, city-clustered fixture data seeded from the config.
struct FixtureSpec {
    std::vector<std::string> cities = {"Guangzhou", "Shenzhen"};
    std::size_t communities_per_city = 200;
    std::size_t pois_per_city = 150;
    std::size_t districts_per_city = 5;
    std::uint64_t seed = 7;
};

void write_synthetic_fixture(const FixtureSpec& spec, const std::filesystem::path& dir);

// Minimal RFC 4180 CSV support for fixture files.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);
std::string to_csv(const std::vector<std::vector<std::string>>& rows);

}  // namespace geoqa
