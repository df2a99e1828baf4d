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

#include "geoqa/geo.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

namespace geoqa {

namespace {

double to_radians(double degrees) { return degrees * std::numbers::pi / 180.0; }

double round6(double v) { return std::round(v * 1e6) / 1e6; }

}  // namespace

bool GeoPoint::valid() const {
    return std::isfinite(latitude) && std::isfinite(longitude) && latitude >= -90.0 &&
           latitude <= 90.0 && longitude >= -180.0 && longitude <= 180.0;
}

double haversine(const GeoPoint& a, const GeoPoint& b) {
    const double lat1 = to_radians(a.latitude);
    const double lat2 = to_radians(b.latitude);
    const double dlat = lat2 - lat1;
    const double dlon = to_radians(b.longitude - a.longitude);
    const double s_lat = std::sin(dlat / 2.0);
    const double s_lon = std::sin(dlon / 2.0);
    double h = s_lat * s_lat + std::cos(lat1) * std::cos(lat2) * s_lon * s_lon;
    if (h > 1.0) h = 1.0;
    return 2.0 * kEarthRadiusMeters * std::asin(std::sqrt(h));
}

GeoPoint round_coordinates(const GeoPoint& p) {
    return GeoPoint{round6(p.latitude), round6(p.longitude)};
}

std::string format_point(const GeoPoint& p) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f,%.6f", round6(p.latitude), round6(p.longitude));
    return buf;
}

GeoPoint parse_point(const std::string& text) {
    const auto comma = text.find(',');
    if (comma == std::string::npos) throw std::invalid_argument("malformed point: " + text);
    GeoPoint p;
    try {
        std::size_t used = 0;
        p.latitude = std::stod(text.substr(0, comma), &used);
        p.longitude = std::stod(text.substr(comma + 1), &used);
    } catch (const std::exception&) {
        throw std::invalid_argument("malformed point: " + text);
    }
    if (!p.valid()) throw std::invalid_argument("point out of range: " + text);
    return round_coordinates(p);
}

}  // namespace geoqa
