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

// Record/replay cache for the four geospatial functions. Misses go to a
// pluggable provider while the cache is open; a frozen cache never calls out.

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "geoqa/domain.hpp"
#include "geoqa/table.hpp"
#include "geoqa/tool_request.hpp"

namespace geoqa {

struct Provenance {
    std::string provider_name;
    std::string recorded_at;
};

struct CacheEntry {
    ToolRequest request;
    Table payload;
    Provenance provenance;
};

class Provider {
public:
    virtual ~Provider() = default;
    virtual std::string name() const = 0;
    // Throws ToolError(provider_failure) or any std::exception on failure.
    virtual Table resolve(const ToolRequest& request) = 0;
};

// Deterministic stand-in for a live map service.
//   path:   walking/cycling = haversine x 1.3, driving/transit = haversine x 1.4
//   speed:  walking 5 km/h, cycling 15 km/h, driving 40 (peak 22) km/h,
//           transit 28 (peak 24) km/h plus 300 s boarding overhead
// Durations round to whole seconds, distances to whole meters.
class SyntheticProvider : public Provider {
public:
    explicit SyntheticProvider(std::vector<Poi> pois, std::uint64_t seed = 7);

    std::string name() const override;
    Table resolve(const ToolRequest& request) override;

    static constexpr double kWalkingDetour = 1.3;
    static constexpr double kCyclingDetour = 1.3;
    static constexpr double kDrivingDetour = 1.4;
    static constexpr double kTransitDetour = 1.4;
    static constexpr double kTransitOverheadSeconds = 300.0;

    // Speeds in km/h.
    static double speed_kmh(std::string_view mode, TimeBucket bucket);
    static double detour(std::string_view mode);

private:
    std::vector<Poi> pois_;
    std::uint64_t seed_;
};

struct PopulateReport {
    std::size_t requested = 0;  // corpus size including duplicates
    std::size_t unique = 0;
    std::size_t added = 0;      // newly resolved entries
    std::size_t entries = 0;    // cache size afterwards
    std::vector<std::string> failures;

    bool ok() const { return failures.empty(); }
};

class ToolCache {
public:
    ToolCache() = default;
    explicit ToolCache(std::shared_ptr<Provider> provider);

    ToolCache(const ToolCache&) = delete;
    ToolCache& operator=(const ToolCache&) = delete;

    // Hit: stored payload. Miss: provider (when present and not frozen), then
    // stored. Throws ToolError(cache_miss_no_provider | provider_failure).
    Table call(const ToolRequest& request);
    Table call(ToolFunction function, const ToolParams& params, std::optional<TimeBucket> bucket = std::nullopt);

    std::optional<Table> lookup(const ToolRequest& request) const;

    double time_query(const GeoPoint& origin, const GeoPoint& destination, std::string_view mode,
                      std::optional<TimeBucket> bucket = std::nullopt);
    double distance_query(const GeoPoint& origin, const GeoPoint& destination, std::string_view kind,
                          std::optional<TimeBucket> bucket = std::nullopt);
    Table surrounding_pois_query(const GeoPoint& center, double radius, std::string_view label,
                                 std::optional<TimeBucket> bucket = std::nullopt);
    double rush_hour_query(const GeoPoint& origin, const GeoPoint& destination, std::string_view mode);

    void freeze() { frozen_ = true; }
    bool frozen() const { return frozen_; }
    std::size_t size() const;
    std::vector<CacheEntry> entries() const;  // sorted by key

    // One JSON object per line, sorted by key; byte-identical for equal caches.
    std::string serialize() const;
    void save(const std::filesystem::path& path) const;
    static std::unique_ptr<ToolCache> load(const std::filesystem::path& path,
                                           std::shared_ptr<Provider> provider = nullptr);

    PopulateReport populate(const std::vector<ToolRequest>& corpus);

private:
    std::shared_ptr<Provider> provider_;
    bool frozen_ = false;
    mutable std::shared_mutex mu_;
    std::map<std::string, CacheEntry> entries_;
};

// Resolves every unique request of the corpus exactly once through the cache's
// provider. Failures are collected, not thrown.
PopulateReport populate_cache(ToolCache& cache, const std::vector<ToolRequest>& corpus);

// Nominal collection window of a bucket (UTC+8).
std::string bucket_window(TimeBucket b);

}  // namespace geoqa
