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

#include <string>

namespace geoqa {

inline constexpr double kEarthRadiusMeters = 6371000.0;

// WGS-84 degrees.
struct GeoPoint {
    double latitude = 0.0;
    double longitude = 0.0;

    bool valid() const;
    bool operator==(const GeoPoint&) const = default;
};

// Great-circle distance in meters on a sphere of radius kEarthRadiusMeters.
double haversine(const GeoPoint& a, const GeoPoint& b);

// Rounds both coordinates to 6 decimal places.
GeoPoint round_coordinates(const GeoPoint& p);

// "lat,lon" with exactly 6 decimals; the canonical coordinate text used in
// tool parameters and cache keys.
std::string format_point(const GeoPoint& p);

// Inverse of format_point; throws std::invalid_argument on malformed text or
// out-of-range coordinates.
GeoPoint parse_point(const std::string& text);

}  // namespace geoqa
