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

#include "geoqa/tool_cache.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <set>

#include "geoqa/text.hpp"

namespace geoqa {

std::string bucket_window(TimeBucket b) {
    switch (b) {
        case TimeBucket::midnight_00: return "weekday 00:00 UTC+8";
        case TimeBucket::offpeak_15: return "weekday 15:00 UTC+8";
        case TimeBucket::peak_08: return "weekday 08:00 UTC+8";
    }
    return "";
}

SyntheticProvider::SyntheticProvider(std::vector<Poi> pois, std::uint64_t seed) : pois_(std::move(pois)), seed_(seed) {}

std::string SyntheticProvider::name() const { return "synthetic-v1 seed=" + std::to_string(seed_); }

double SyntheticProvider::detour(std::string_view mode) {
    if (mode == "walking") return kWalkingDetour;
    if (mode == "cycling") return kCyclingDetour;
    if (mode == "driving") return kDrivingDetour;
    if (mode == "transit") return kTransitDetour;
    if (mode == "straight") return 1.0;
    throw ToolError(ToolError::Code::invalid_params, "unknown mode " + std::string(mode));
}

double SyntheticProvider::speed_kmh(std::string_view mode, TimeBucket bucket) {
    const bool peak = bucket == TimeBucket::peak_08;
    if (mode == "walking") return 5.0;
    if (mode == "cycling") return 15.0;
    if (mode == "driving") return peak ? 22.0 : 40.0;
    if (mode == "transit") return peak ? 24.0 : 28.0;
    throw ToolError(ToolError::Code::invalid_params, "unknown mode " + std::string(mode));
}

Table SyntheticProvider::resolve(const ToolRequest& request) {
    Table t;
    t.columns = result_columns(request.function);
    const auto& p = request.params;
    switch (request.function) {
        case ToolFunction::time_query:
        case ToolFunction::rush_hour_query: {
            const auto& mode = p.at("mode");
            const double straight = haversine(parse_point(p.at("origin")), parse_point(p.at("destination")));
            double seconds = straight * detour(mode) / (speed_kmh(mode, request.bucket) * 1000.0 / 3600.0);
            if (mode == "transit" && straight > 0) seconds += kTransitOverheadSeconds;
            t.rows.push_back({static_cast<std::int64_t>(std::llround(seconds))});
            break;
        }
        case ToolFunction::distance_query: {
            const double straight = haversine(parse_point(p.at("origin")), parse_point(p.at("destination")));
            t.rows.push_back({static_cast<std::int64_t>(std::llround(straight * detour(p.at("kind"))))});
            break;
        }
        case ToolFunction::surrounding_pois_query: {
            const auto center = parse_point(p.at("center"));
            const double radius = parse_double(p.at("radius"));
            const auto& label = p.at("label");
            std::vector<std::pair<double, const Poi*>> hits;
            for (const auto& poi : pois_) {
                if (poi.label != label) continue;
                const double d = haversine(center, poi.location);
                if (d <= radius) hits.emplace_back(d, &poi);
            }
            std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) {
                return a.first != b.first ? a.first < b.first : a.second->name < b.second->name;
            });
            for (const auto& [d, poi] : hits) {
                const auto loc = round_coordinates(poi->location);
                t.rows.push_back({poi->name, poi->label, loc.latitude, loc.longitude,
                                  static_cast<std::int64_t>(std::llround(d))});
            }
            break;
        }
    }
    return t;
}

ToolCache::ToolCache(std::shared_ptr<Provider> provider) : provider_(std::move(provider)) {}

std::optional<Table> ToolCache::lookup(const ToolRequest& request) const {
    std::shared_lock lock(mu_);
    auto it = entries_.find(request.key());
    if (it == entries_.end()) return std::nullopt;
    return it->second.payload;
}

Table ToolCache::call(const ToolRequest& request) {
    if (auto hit = lookup(request)) return *hit;
    if (frozen_ || !provider_) {
        throw ToolError(ToolError::Code::cache_miss_no_provider, "cache miss: " + request.key());
    }
    Table payload;
    try {
        payload = provider_->resolve(request);
    } catch (const ToolError& e) {
        if (e.code() == ToolError::Code::invalid_params) throw;
        throw ToolError(ToolError::Code::provider_failure, e.what());
    } catch (const std::exception& e) {
        throw ToolError(ToolError::Code::provider_failure, std::string("provider failure: ") + e.what());
    }
    if (payload.columns != result_columns(request.function)) {
        throw ToolError(ToolError::Code::provider_failure, "provider returned a payload with the wrong schema");
    }
    std::unique_lock lock(mu_);
    auto [it, inserted] = entries_.try_emplace(request.key(),
                                               CacheEntry{request, payload, {provider_->name(), bucket_window(request.bucket)}});
    return it->second.payload;
}

Table ToolCache::call(ToolFunction function, const ToolParams& params, std::optional<TimeBucket> bucket) {
    return call(normalize_request(function, params, bucket));
}

double ToolCache::time_query(const GeoPoint& origin, const GeoPoint& destination, std::string_view mode,
                             std::optional<TimeBucket> bucket) {
    const auto t = call(ToolFunction::time_query,
                        {{"origin", format_point(origin)}, {"destination", format_point(destination)}, {"mode", std::string(mode)}},
                        bucket);
    return as_double(t.rows.at(0).at(0));
}

double ToolCache::distance_query(const GeoPoint& origin, const GeoPoint& destination, std::string_view kind,
                                 std::optional<TimeBucket> bucket) {
    const auto t = call(ToolFunction::distance_query,
                        {{"origin", format_point(origin)}, {"destination", format_point(destination)}, {"kind", std::string(kind)}},
                        bucket);
    return as_double(t.rows.at(0).at(0));
}

Table ToolCache::surrounding_pois_query(const GeoPoint& center, double radius, std::string_view label,
                                        std::optional<TimeBucket> bucket) {
    return call(ToolFunction::surrounding_pois_query,
                {{"center", format_point(center)}, {"radius", format_number(radius)}, {"label", std::string(label)}}, bucket);
}

double ToolCache::rush_hour_query(const GeoPoint& origin, const GeoPoint& destination, std::string_view mode) {
    const auto t = call(ToolFunction::rush_hour_query,
                        {{"origin", format_point(origin)}, {"destination", format_point(destination)}, {"mode", std::string(mode)}});
    return as_double(t.rows.at(0).at(0));
}

std::size_t ToolCache::size() const {
    std::shared_lock lock(mu_);
    return entries_.size();
}

std::vector<CacheEntry> ToolCache::entries() const {
    std::shared_lock lock(mu_);
    std::vector<CacheEntry> out;
    out.reserve(entries_.size());
    for (const auto& [k, e] : entries_) out.push_back(e);
    return out;
}

std::string ToolCache::serialize() const {
    std::shared_lock lock(mu_);
    std::string out;
    for (const auto& [key, e] : entries_) {
        nlohmann::json j;
        j["key"] = key;
        j["request"] = to_json(e.request);
        j["payload"] = to_json(e.payload);
        j["provenance"] = {{"provider", e.provenance.provider_name}, {"recorded_at", e.provenance.recorded_at}};
        out += j.dump();
        out += '\n';
    }
    return out;
}

void ToolCache::save(const std::filesystem::path& path) const { write_file(path, serialize()); }

std::unique_ptr<ToolCache> ToolCache::load(const std::filesystem::path& path, std::shared_ptr<Provider> provider) {
    auto cache = std::make_unique<ToolCache>(std::move(provider));
    std::size_t lineno = 0;
    for (const auto& line : split_lines(read_file(path))) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            CacheEntry e;
            e.request = request_from_json(j.at("request"));
            e.payload = table_from_json(j.at("payload"));
            e.provenance = {j.at("provenance").at("provider").get<std::string>(),
                            j.at("provenance").at("recorded_at").get<std::string>()};
            const auto key = j.at("key").get<std::string>();
            if (key != e.request.key()) throw std::runtime_error("key does not match request");
            if (e.payload.columns != result_columns(e.request.function)) throw std::runtime_error("payload schema mismatch");
            if (!cache->entries_.emplace(key, std::move(e)).second) throw std::runtime_error("duplicate key " + key);
        } catch (const std::exception& ex) {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + ex.what());
        }
    }
    return cache;
}

PopulateReport ToolCache::populate(const std::vector<ToolRequest>& corpus) {
    PopulateReport report;
    report.requested = corpus.size();
    std::set<std::string> seen;
    for (const auto& r : corpus) {
        if (!seen.insert(r.key()).second) continue;
        ++report.unique;
        if (lookup(r)) continue;
        try {
            call(r);
            ++report.added;
        } catch (const ToolError& e) {
            report.failures.push_back(r.key() + ": " + e.what());
        }
    }
    report.entries = size();
    return report;
}

PopulateReport populate_cache(ToolCache& cache, const std::vector<ToolRequest>& corpus) { return cache.populate(corpus); }

}  // namespace geoqa
