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

#include "geoqa/geo_store.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <set>
#include <unordered_set>

#include "geoqa/text.hpp"

namespace geoqa {

namespace {

struct StmtDeleter {
    void operator()(sqlite3_stmt* s) const { sqlite3_finalize(s); }
};
using Stmt = std::unique_ptr<sqlite3_stmt, StmtDeleter>;

constexpr TableFamily kFamilies[] = {TableFamily::community, TableFamily::poi, TableFamily::poi_community,
                                     TableFamily::community_community};

Table read_rows(sqlite3_stmt* stmt, int& rc) {
    Table t;
    const int ncol = sqlite3_column_count(stmt);
    for (int i = 0; i < ncol; ++i) t.columns.emplace_back(sqlite3_column_name(stmt, i));
    while ((rc = sqlite3_step(stmt)) == SQLITE_ROW) {
        Row r;
        r.reserve(ncol);
        for (int i = 0; i < ncol; ++i) {
            switch (sqlite3_column_type(stmt, i)) {
                case SQLITE_INTEGER: r.emplace_back(static_cast<std::int64_t>(sqlite3_column_int64(stmt, i))); break;
                case SQLITE_FLOAT: r.emplace_back(sqlite3_column_double(stmt, i)); break;
                case SQLITE_NULL: r.emplace_back(std::monostate{}); break;
                default: {
                    const auto* p = reinterpret_cast<const char*>(sqlite3_column_text(stmt, i));
                    r.emplace_back(std::string(p ? p : "", static_cast<std::size_t>(sqlite3_column_bytes(stmt, i))));
                }
            }
        }
        t.rows.push_back(std::move(r));
    }
    return t;
}

bool first_keyword_is_query(std::string_view sql) {
    std::size_t i = 0;
    while (i < sql.size() && (std::isspace(static_cast<unsigned char>(sql[i])) || sql[i] == '(')) ++i;
    std::string word;
    while (i < sql.size() && std::isalpha(static_cast<unsigned char>(sql[i]))) word.push_back(sql[i++]);
    word = to_lower(word);
    return word == "select" || word == "with";
}

double parse_field(const std::string& text, const std::string& what, const std::string& where) {
    try {
        return parse_double(text);
    } catch (const std::exception&) {
        throw IngestError(where + ": " + what + " is not a number: '" + text + "'");
    }
}

std::string num_text(double v) { return format_number(v); }

// Meters per degree of latitude; latitude difference alone lower-bounds the
// great-circle distance.
constexpr double kMetersPerDegree = kEarthRadiusMeters * std::numbers::pi / 180.0;

}  // namespace

void GeoStore::DbDeleter::operator()(sqlite3* db) const { sqlite3_close(db); }

std::string_view to_string(TableFamily f) {
    switch (f) {
        case TableFamily::community: return "community";
        case TableFamily::poi: return "poi";
        case TableFamily::poi_community: return "poi_community";
        case TableFamily::community_community: return "community_community";
    }
    return "?";
}

std::string city_slug(std::string_view city) {
    std::string out;
    for (char c : city) {
        const auto u = static_cast<unsigned char>(c);
        if (std::isalnum(u)) {
            out.push_back(static_cast<char>(std::tolower(u)));
        } else if (!out.empty() && out.back() != '_') {
            out.push_back('_');
        }
    }
    while (!out.empty() && out.back() == '_') out.pop_back();
    if (out.empty()) out = "city" + std::to_string(fnv1a(city) % 100000);
    return out;
}

std::string table_name(std::string_view city, TableFamily family) {
    return std::string(to_string(family)) + "_" + city_slug(city);
}

std::string caption_text(std::string_view city, TableFamily family) {
    const std::string c(city);
    switch (family) {
        case TableFamily::community: return "Table for Communities in " + c;
        case TableFamily::poi: return "Table for POIs in " + c;
        case TableFamily::poi_community: return "Table for Communities around POIs in " + c;
        case TableFamily::community_community: return "Table for Neighboring Communities in " + c;
    }
    return c;
}

const std::vector<ColumnDef>& family_columns(TableFamily family) {
    static const std::vector<ColumnDef> community = {
        {"id", "TEXT"},        {"city", "TEXT"},          {"name", "TEXT"},          {"district", "TEXT"},
        {"address", "TEXT"},   {"latitude", "REAL"},      {"longitude", "REAL"},     {"greening_rate", "NUMERIC"},
        {"avg_price", "NUMERIC"}, {"property_type", "TEXT"}, {"sales_status", "TEXT"},
    };
    static const std::vector<ColumnDef> poi = {
        {"id", "TEXT"},    {"city", "TEXT"},     {"name", "TEXT"},      {"category", "TEXT"},
        {"label", "TEXT"}, {"latitude", "REAL"}, {"longitude", "REAL"},
    };
    static const std::vector<ColumnDef> poi_community = {
        {"poi_id", "TEXT"},         {"poi_name", "TEXT"},       {"poi_label", "TEXT"},
        {"community_id", "TEXT"},   {"community_name", "TEXT"}, {"straight_distance", "INTEGER"},
    };
    static const std::vector<ColumnDef> community_community = {
        {"community_id", "TEXT"}, {"community_name", "TEXT"},      {"neighbor_id", "TEXT"},
        {"neighbor_name", "TEXT"}, {"straight_distance", "INTEGER"},
    };
    switch (family) {
        case TableFamily::community: return community;
        case TableFamily::poi: return poi;
        case TableFamily::poi_community: return poi_community;
        case TableFamily::community_community: return community_community;
    }
    return community;
}

GeoStore::GeoStore() : mu_(std::make_unique<std::mutex>()) {}
GeoStore::GeoStore(GeoStore&&) noexcept = default;
GeoStore& GeoStore::operator=(GeoStore&&) noexcept = default;
GeoStore::~GeoStore() = default;

void GeoStore::exec_internal(const std::string& sql) {
    char* err = nullptr;
    if (sqlite3_exec(db_.get(), sql.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
        std::string msg = err ? err : "unknown sqlite error";
        sqlite3_free(err);
        throw std::runtime_error("sqlite: " + msg + " in: " + sql.substr(0, 200));
    }
}

void GeoStore::create_schema() {
    exec_internal("CREATE TABLE IF NOT EXISTS geoqa_meta (key TEXT PRIMARY KEY, value TEXT NOT NULL)");
    exec_internal(
        "CREATE TABLE IF NOT EXISTS caption_catalog (table_id TEXT PRIMARY KEY, caption TEXT NOT NULL UNIQUE, "
        "city TEXT NOT NULL, family TEXT NOT NULL)");
    for (const auto& city : config_.cities) {
        for (auto family : kFamilies) {
            std::string cols;
            for (const auto& c : family_columns(family)) {
                cols += (cols.empty() ? "" : ", ") + c.name + " " + c.type;
            }
            if (family == TableFamily::community || family == TableFamily::poi) {
                cols = replace_all(cols, "id TEXT, city", "id TEXT PRIMARY KEY, city");
            }
            const auto table = table_name(city, family);
            exec_internal("CREATE TABLE IF NOT EXISTS " + table + " (" + cols + ")");
            exec_internal("INSERT OR REPLACE INTO caption_catalog VALUES (" + sql_quote(table) + ", " +
                          sql_quote(caption_text(city, family)) + ", " + sql_quote(city) + ", " +
                          sql_quote(to_string(family)) + ")");
        }
    }
}

void GeoStore::write_meta() {
    nlohmann::json cities = config_.cities;
    const std::vector<std::pair<std::string, std::string>> kv = {
        {"cities", cities.dump()},
        {"poi_pairing_radius", num_text(config_.poi_pairing_radius)},
        {"community_pairing_radius", num_text(config_.community_pairing_radius)},
        {"seed", std::to_string(config_.seed)},
    };
    for (const auto& [k, v] : kv) {
        exec_internal("INSERT OR REPLACE INTO geoqa_meta VALUES (" + sql_quote(k) + ", " + sql_quote(v) + ")");
    }
}

void GeoStore::read_meta() {
    sqlite3_stmt* raw = nullptr;
    if (sqlite3_prepare_v2(db_.get(), "SELECT key, value FROM geoqa_meta", -1, &raw, nullptr) != SQLITE_OK) {
        throw std::runtime_error("not a geoqa store: " + std::string(sqlite3_errmsg(db_.get())));
    }
    Stmt stmt(raw);
    int rc = 0;
    const auto t = read_rows(stmt.get(), rc);
    for (const auto& r : t.rows) {
        const auto k = cell_text(r[0]);
        const auto v = cell_text(r[1]);
        if (k == "cities") config_.cities = nlohmann::json::parse(v).get<std::vector<std::string>>();
        if (k == "poi_pairing_radius") config_.poi_pairing_radius = parse_double(v);
        if (k == "community_pairing_radius") config_.community_pairing_radius = parse_double(v);
        if (k == "seed") config_.seed = std::stoull(v);
    }
}

void GeoStore::load_entities() {
    communities_.clear();
    pois_.clear();
    pairs_.clear();
    auto query = [&](const std::string& sql) {
        sqlite3_stmt* raw = nullptr;
        if (sqlite3_prepare_v2(db_.get(), sql.c_str(), -1, &raw, nullptr) != SQLITE_OK) {
            throw std::runtime_error("sqlite: " + std::string(sqlite3_errmsg(db_.get())));
        }
        Stmt stmt(raw);
        int rc = 0;
        return read_rows(stmt.get(), rc);
    };
    for (const auto& city : config_.cities) {
        for (const auto& r : query("SELECT * FROM " + table_name(city, TableFamily::community) + " ORDER BY id").rows) {
            Community c;
            c.id = cell_text(r[0]);
            c.city = cell_text(r[1]);
            c.name = cell_text(r[2]);
            c.district = cell_text(r[3]);
            c.address = cell_text(r[4]);
            c.location = {as_double(r[5]), as_double(r[6])};
            c.greening_rate = as_double(r[7]);
            c.avg_price = as_double(r[8]);
            c.property_type = cell_text(r[9]);
            c.sales_status = cell_text(r[10]);
            communities_.push_back(std::move(c));
        }
        for (const auto& r : query("SELECT * FROM " + table_name(city, TableFamily::poi) + " ORDER BY id").rows) {
            Poi p;
            p.id = cell_text(r[0]);
            p.city = cell_text(r[1]);
            p.name = cell_text(r[2]);
            p.category = cell_text(r[3]);
            p.label = cell_text(r[4]);
            p.location = {as_double(r[5]), as_double(r[6])};
            pois_.push_back(std::move(p));
        }
        for (const auto& r : query("SELECT poi_id, community_id, straight_distance FROM " +
                                   table_name(city, TableFamily::poi_community) + " ORDER BY poi_id, community_id")
                                 .rows) {
            pairs_.push_back({PairKind::poi_community, cell_text(r[0]), cell_text(r[1]), as_double(r[2])});
        }
        for (const auto& r : query("SELECT community_id, neighbor_id, straight_distance FROM " +
                                   table_name(city, TableFamily::community_community) +
                                   " ORDER BY community_id, neighbor_id")
                                 .rows) {
            pairs_.push_back({PairKind::community_community, cell_text(r[0]), cell_text(r[1]), as_double(r[2])});
        }
    }
}

GeoStore GeoStore::ingest_fixture(const StoreConfig& config, const std::filesystem::path& fixture_dir) {
    if (config.cities.empty()) throw IngestError("store config has no cities");
    if (!(config.poi_pairing_radius > 0) || !(config.community_pairing_radius > 0)) {
        throw IngestError("pairing radii must be > 0");
    }
    GeoStore store;
    store.config_ = config;
    sqlite3* raw = nullptr;
    if (sqlite3_open_v2(":memory:", &raw, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE, nullptr) != SQLITE_OK) {
        sqlite3_close(raw);
        throw std::runtime_error("cannot open in-memory database");
    }
    store.db_.reset(raw);
    store.create_schema();
    store.write_meta();

    std::unordered_set<std::string> ids;
    store.exec_internal("BEGIN");
    for (const auto& city : config.cities) {
        const auto dir = fixture_dir / city_slug(city);
        auto load = [&](const std::string& file, TableFamily family, auto&& validate) {
            const auto path = dir / file;
            if (!std::filesystem::exists(path)) {
                if (family == TableFamily::community || family == TableFamily::poi) {
                    throw IngestError("missing fixture file " + path.string());
                }
                return;
            }
            const auto rows = parse_csv(read_file(path));
            const auto& cols = family_columns(family);
            if (rows.empty()) throw IngestError(path.string() + ": missing header row");
            std::vector<std::string> expected;
            for (const auto& c : cols) expected.push_back(c.name);
            if (rows[0] != expected) {
                throw IngestError(path.string() + ": header must be " + join(expected, ","));
            }
            const std::string placeholders = [&] {
                std::string p;
                for (std::size_t i = 0; i < cols.size(); ++i) p += i ? ",?" : "?";
                return p;
            }();
            sqlite3_stmt* ins_raw = nullptr;
            const auto sql = "INSERT INTO " + table_name(city, family) + " VALUES (" + placeholders + ")";
            if (sqlite3_prepare_v2(store.db_.get(), sql.c_str(), -1, &ins_raw, nullptr) != SQLITE_OK) {
                throw std::runtime_error("sqlite: " + std::string(sqlite3_errmsg(store.db_.get())));
            }
            Stmt ins(ins_raw);
            for (std::size_t line = 1; line < rows.size(); ++line) {
                const auto& rec = rows[line];
                const std::string where = path.string() + " line " + std::to_string(line + 1) +
                                          (rec.empty() ? "" : " (id=" + rec[0] + ")");
                if (rec.size() != cols.size()) throw IngestError(where + ": expected " + std::to_string(cols.size()) + " fields");
                validate(rec, where);
                sqlite3_reset(ins.get());
                for (std::size_t i = 0; i < cols.size(); ++i) {
                    const int idx = static_cast<int>(i + 1);
                    if (cols[i].type == "TEXT") {
                        sqlite3_bind_text(ins.get(), idx, rec[i].c_str(), static_cast<int>(rec[i].size()), SQLITE_TRANSIENT);
                    } else {
                        const double v = parse_field(rec[i], cols[i].name, where);
                        if (cols[i].type == "INTEGER" || (cols[i].type == "NUMERIC" && v == std::floor(v))) {
                            sqlite3_bind_int64(ins.get(), idx, static_cast<sqlite3_int64>(std::llround(v)));
                        } else {
                            sqlite3_bind_double(ins.get(), idx, v);
                        }
                    }
                }
                if (sqlite3_step(ins.get()) != SQLITE_DONE) {
                    throw IngestError(where + ": " + sqlite3_errmsg(store.db_.get()));
                }
            }
        };

        auto check_point = [](const std::vector<std::string>& rec, std::size_t lat, const std::string& where) {
            const GeoPoint p{parse_field(rec[lat], "latitude", where), parse_field(rec[lat + 1], "longitude", where)};
            if (p.latitude < -90 || p.latitude > 90) throw IngestError(where + ": latitude " + rec[lat] + " out of range");
            if (p.longitude < -180 || p.longitude > 180) {
                throw IngestError(where + ": longitude " + rec[lat + 1] + " out of range");
            }
        };
        auto check_identity = [&](const std::vector<std::string>& rec, const std::string& where) {
            if (rec[0].empty()) throw IngestError(where + ": empty id");
            if (!ids.insert(rec[0]).second) throw IngestError(where + ": duplicate id " + rec[0]);
            if (rec[1] != city) throw IngestError(where + ": city '" + rec[1] + "' does not match '" + city + "'");
            if (rec[2].find('|') != std::string::npos) throw IngestError(where + ": name must not contain '|'");
        };

        load("communities.csv", TableFamily::community, [&](const auto& rec, const std::string& where) {
            check_identity(rec, where);
            check_point(rec, 5, where);
            const double green = parse_field(rec[7], "greening_rate", where);
            if (green < 0 || green > 100) throw IngestError(where + ": greening_rate " + rec[7] + " out of [0,100]");
            if (!(parse_field(rec[8], "avg_price", where) > 0)) throw IngestError(where + ": avg_price must be > 0");
            if (std::find(property_types().begin(), property_types().end(), rec[9]) == property_types().end()) {
                throw IngestError(where + ": unknown property_type '" + rec[9] + "'");
            }
            if (std::find(sales_statuses().begin(), sales_statuses().end(), rec[10]) == sales_statuses().end()) {
                throw IngestError(where + ": unknown sales_status '" + rec[10] + "'");
            }
        });
        load("pois.csv", TableFamily::poi, [&](const auto& rec, const std::string& where) {
            check_identity(rec, where);
            check_point(rec, 5, where);
            const auto category = category_of_label(rec[4]);
            if (!category) throw IngestError(where + ": unknown label '" + rec[4] + "'");
            if (*category != rec[3]) {
                throw IngestError(where + ": label '" + rec[4] + "' does not belong to category '" + rec[3] + "'");
            }
        });
        load("poi_community.csv", TableFamily::poi_community, [&](const auto& rec, const std::string& where) {
            if (parse_field(rec[5], "straight_distance", where) > config.poi_pairing_radius) {
                throw IngestError(where + ": pair distance exceeds the POI pairing radius");
            }
        });
        load("community_community.csv", TableFamily::community_community, [&](const auto& rec, const std::string& where) {
            if (parse_field(rec[4], "straight_distance", where) > config.community_pairing_radius) {
                throw IngestError(where + ": pair distance exceeds the community pairing radius");
            }
        });
    }
    store.exec_internal("COMMIT");
    store.load_entities();
    return store;
}

GeoStore GeoStore::open(const std::filesystem::path& path, bool read_only) {
    if (!std::filesystem::exists(path)) throw std::runtime_error("store file not found: " + path.string());
    GeoStore store;
    sqlite3* raw = nullptr;
    const int flags = read_only ? SQLITE_OPEN_READONLY : SQLITE_OPEN_READWRITE;
    if (sqlite3_open_v2(path.string().c_str(), &raw, flags, nullptr) != SQLITE_OK) {
        std::string msg = raw ? sqlite3_errmsg(raw) : "out of memory";
        sqlite3_close(raw);
        throw std::runtime_error("cannot open store " + path.string() + ": " + msg);
    }
    store.db_.reset(raw);
    store.read_only_ = read_only;
    store.read_meta();
    if (read_only) store.exec_internal("PRAGMA query_only = 1");
    store.load_entities();
    return store;
}

void GeoStore::save(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::remove(path);
    sqlite3* raw = nullptr;
    if (sqlite3_open_v2(path.string().c_str(), &raw, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE, nullptr) != SQLITE_OK) {
        sqlite3_close(raw);
        throw std::runtime_error("cannot create " + path.string());
    }
    std::unique_ptr<sqlite3, DbDeleter> dest(raw);
    std::lock_guard lock(*mu_);
    sqlite3_backup* backup = sqlite3_backup_init(dest.get(), "main", db_.get(), "main");
    if (!backup) throw std::runtime_error("backup failed: " + std::string(sqlite3_errmsg(dest.get())));
    sqlite3_backup_step(backup, -1);
    if (sqlite3_backup_finish(backup) != SQLITE_OK) {
        throw std::runtime_error("backup failed: " + std::string(sqlite3_errmsg(dest.get())));
    }
}

PairCounts GeoStore::build_proximity_pairs() {
    if (read_only_) throw std::runtime_error("store is read-only");
    PairCounts counts;
    std::lock_guard lock(*mu_);
    exec_internal("BEGIN");
    for (const auto& city : config_.cities) {
        const auto pc_table = table_name(city, TableFamily::poi_community);
        const auto cc_table = table_name(city, TableFamily::community_community);
        exec_internal("DELETE FROM " + pc_table);
        exec_internal("DELETE FROM " + cc_table);

        std::vector<const Community*> comms;
        for (const auto& c : communities_) {
            if (c.city == city) comms.push_back(&c);
        }
        std::sort(comms.begin(), comms.end(), [](auto* a, auto* b) {
            return a->location.latitude != b->location.latitude ? a->location.latitude < b->location.latitude
                                                                : a->id < b->id;
        });

        // Latitude-sorted sweep: only communities within the latitude band of
        // the radius can qualify.
        auto band = [&](const GeoPoint& p, double radius) {
            const double dlat = radius / kMetersPerDegree;
            auto lo = std::lower_bound(comms.begin(), comms.end(), p.latitude - dlat,
                                       [](const Community* c, double v) { return c->location.latitude < v; });
            auto hi = std::upper_bound(comms.begin(), comms.end(), p.latitude + dlat,
                                       [](double v, const Community* c) { return v < c->location.latitude; });
            return std::make_pair(lo, hi);
        };

        sqlite3_stmt* raw = nullptr;
        sqlite3_prepare_v2(db_.get(), ("INSERT INTO " + pc_table + " VALUES (?,?,?,?,?,?)").c_str(), -1, &raw, nullptr);
        Stmt ins_pc(raw);
        sqlite3_prepare_v2(db_.get(), ("INSERT INTO " + cc_table + " VALUES (?,?,?,?,?)").c_str(), -1, &raw, nullptr);
        Stmt ins_cc(raw);
        auto bind = [](sqlite3_stmt* s, int idx, const std::string& v) {
            sqlite3_bind_text(s, idx, v.c_str(), static_cast<int>(v.size()), SQLITE_TRANSIENT);
        };

        for (const auto& poi : pois_) {
            if (poi.city != city) continue;
            auto [lo, hi] = band(poi.location, config_.poi_pairing_radius);
            for (auto it = lo; it != hi; ++it) {
                const double d = haversine(poi.location, (*it)->location);
                if (d > config_.poi_pairing_radius) continue;
                sqlite3_reset(ins_pc.get());
                bind(ins_pc.get(), 1, poi.id);
                bind(ins_pc.get(), 2, poi.name);
                bind(ins_pc.get(), 3, poi.label);
                bind(ins_pc.get(), 4, (*it)->id);
                bind(ins_pc.get(), 5, (*it)->name);
                sqlite3_bind_int64(ins_pc.get(), 6, std::llround(d));
                sqlite3_step(ins_pc.get());
                ++counts.poi_community;
            }
        }
        for (const auto* c : comms) {
            auto [lo, hi] = band(c->location, config_.community_pairing_radius);
            for (auto it = lo; it != hi; ++it) {
                if (*it == c) continue;
                const double d = haversine(c->location, (*it)->location);
                if (d > config_.community_pairing_radius) continue;
                sqlite3_reset(ins_cc.get());
                bind(ins_cc.get(), 1, c->id);
                bind(ins_cc.get(), 2, c->name);
                bind(ins_cc.get(), 3, (*it)->id);
                bind(ins_cc.get(), 4, (*it)->name);
                sqlite3_bind_int64(ins_cc.get(), 5, std::llround(d));
                sqlite3_step(ins_cc.get());
                ++counts.community_community;
            }
        }
    }
    exec_internal("COMMIT");
    load_entities();
    return counts;
}

SqlOutcome GeoStore::execute_sql(std::string_view statement) const {
    SqlOutcome out;
    const std::string sql = trim(statement);
    if (sql.empty()) {
        out.error = "empty statement";
        return out;
    }
    if (!first_keyword_is_query(sql)) {
        out.error = "only SELECT statements are allowed";
        return out;
    }
    std::lock_guard lock(*mu_);
    sqlite3_stmt* raw = nullptr;
    const char* tail = nullptr;
    if (sqlite3_prepare_v2(db_.get(), sql.c_str(), static_cast<int>(sql.size()), &raw, &tail) != SQLITE_OK) {
        out.error = sqlite3_errmsg(db_.get());
        return out;
    }
    Stmt stmt(raw);
    if (!stmt) {
        out.error = "empty statement";
        return out;
    }
    if (tail) {
        for (const char* p = tail; *p; ++p) {
            if (!std::isspace(static_cast<unsigned char>(*p)) && *p != ';') {
                out.error = "multiple statements are not allowed";
                return out;
            }
        }
    }
    if (!sqlite3_stmt_readonly(stmt.get())) {
        out.error = "only read-only statements are allowed";
        return out;
    }
    int rc = 0;
    Table t = read_rows(stmt.get(), rc);
    if (rc != SQLITE_DONE) {
        out.error = sqlite3_errmsg(db_.get());
        return out;
    }
    out.rows = std::move(t);
    return out;
}

std::vector<TableCaption> GeoStore::list_captions() const {
    std::vector<std::string> cities = config_.cities;
    std::sort(cities.begin(), cities.end());
    std::vector<TableCaption> out;
    for (const auto& city : cities) {
        for (auto family : kFamilies) {
            out.push_back({table_name(city, family), caption_text(city, family), city, family, family_columns(family)});
        }
    }
    return out;
}

const Community* GeoStore::find_community(std::string_view city, std::string_view name) const {
    for (const auto& c : communities_) {
        if (c.city == city && c.name == name) return &c;
    }
    return nullptr;
}

const Poi* GeoStore::find_poi(std::string_view city, std::string_view name) const {
    for (const auto& p : pois_) {
        if (p.city == city && p.name == name) return &p;
    }
    return nullptr;
}

void GeoStore::export_fixture(const std::filesystem::path& dir) const {
    for (const auto& city : config_.cities) {
        const std::pair<TableFamily, const char*> files[] = {
            {TableFamily::community, "communities.csv"},
            {TableFamily::poi, "pois.csv"},
            {TableFamily::poi_community, "poi_community.csv"},
            {TableFamily::community_community, "community_community.csv"},
        };
        for (const auto& [family, file] : files) {
            auto out = execute_sql("SELECT * FROM " + table_name(city, family) + " ORDER BY 1, 4");
            if (!out.ok()) throw std::runtime_error(out.error);
            std::vector<std::vector<std::string>> rows;
            rows.push_back(out.rows->columns);
            for (const auto& r : out.rows->rows) {
                std::vector<std::string> rec;
                for (const auto& c : r) rec.push_back(cell_text(c));
                rows.push_back(std::move(rec));
            }
            write_file(dir / city_slug(city) / file, to_csv(rows));
        }
    }
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
            any = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
            any = true;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            if (any || !field.empty()) {
                row.push_back(std::move(field));
                rows.push_back(std::move(row));
            }
            row.clear();
            field.clear();
            any = false;
        } else {
            field.push_back(c);
            any = true;
        }
    }
    if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string to_csv(const std::vector<std::vector<std::string>>& rows) {
    std::string out;
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (i) out.push_back(',');
            const auto& f = r[i];
            if (f.find_first_of(",\"\n\r") != std::string::npos) {
                out += '"' + replace_all(f, "\"", "\"\"") + '"';
            } else {
                out += f;
            }
        }
        out.push_back('\n');
    }
    return out;
}

}  // namespace geoqa
