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

// Synthetic, city-clustered fixture writer.

#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <set>

#include "geoqa/geo_store.hpp"
#include "geoqa/rng.hpp"
#include "geoqa/text.hpp"

namespace geoqa {

namespace {

struct CityProfile {
    GeoPoint center;
    double base_price;
};

CityProfile profile_for(const std::string& city) {
    static const std::map<std::string, CityProfile> known = {
        {"Guangzhou", {{23.1291, 113.2644}, 42000}}, {"Shenzhen", {{22.5431, 114.0579}, 65000}},
        {"Beijing", {{39.9042, 116.4074}, 70000}},   {"Shanghai", {{31.2304, 121.4737}, 68000}},
        {"Tianjin", {{39.3434, 117.3616}, 28000}},   {"Chengdu", {{30.5728, 104.0668}, 22000}},
        {"Hangzhou", {{30.2741, 120.1551}, 40000}},  {"Wuhan", {{30.5928, 114.3055}, 20000}},
    };
    if (auto it = known.find(city); it != known.end()) return it->second;
    const auto h = fnv1a(city);
    return {{20.0 + static_cast<double>(h % 2000) / 100.0, 100.0 + static_cast<double>((h >> 16) % 2000) / 100.0},
            30000};
}

const std::vector<std::string> kDistrictStems = {"Riverside", "Hillcrest", "Harbor", "Old Town", "Lakeview",
                                                 "Northgate", "Eastwood", "Westfield", "Southbank", "Central"};
const std::vector<std::string> kAdjectives = {"Golden", "Silver", "Jade",    "Emerald", "Royal",   "Sunny",  "Maple",
                                              "Cedar",  "Pearl",  "Crystal", "Harmony", "Bamboo",  "Lotus",  "Orchid",
                                              "Phoenix", "Dragon", "Willow", "Coral",   "Azure",   "Ivory",  "Amber",
                                              "Noble",  "Grand",  "Tranquil", "Auspicious"};
const std::vector<std::string> kNouns = {"Garden",  "Court",   "Residence", "Manor",  "Heights", "Terrace",
                                         "Mansion", "Estate",  "Place",     "Square", "Towers",  "Bay",
                                         "Palace",  "Cove",    "Ridge",     "Harbour", "Green",  "Meadow",
                                         "Crest",   "Plaza",   "Lodge",     "Pavilion", "Commons", "Retreat"};
const std::vector<std::string> kPlacePrefixes = {
    "Zhongshan", "Binjiang", "Huacheng", "Xinhua",  "Dongfeng", "Jiefang", "Renmin",  "Yuexiu",  "Baiyun",
    "Haizhu",    "Nanhu",    "Xihu",     "Qingshan", "Longgang", "Futian", "Luohu",   "Shekou",  "Xili",
    "Meilin",    "Lianhua",  "Hongling", "Bagua",   "Taoyuan", "Wenjin",  "Zhuzilin", "Chegongmiao", "Dameisha",
    "Huanggang", "Yantian",  "Buji",     "Minzhi",  "Longhua", "Guanlan", "Songgang", "Shajing", "Fuyong",
    "Xixiang",   "Gushu",    "Pinghu",   "Henggang"};
const std::vector<std::string> kStreets = {"Jiefang", "Renmin", "Zhongshan", "Huanshi", "Dongfeng", "Binhai",
                                           "Shennan", "Beijing", "Xinhua", "Huangpu"};

std::string title_case(const std::string& s) {
    std::string out = s;
    bool start = true;
    for (auto& c : out) {
        if (start && std::isalpha(static_cast<unsigned char>(c))) c = static_cast<char>(std::toupper(c));
        start = c == ' ';
    }
    return out;
}

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

GeoPoint offset(const GeoPoint& origin, double north_m, double east_m) {
    const double dlat = north_m / (kEarthRadiusMeters * std::numbers::pi / 180.0);
    const double dlon = east_m / (kEarthRadiusMeters * std::numbers::pi / 180.0 * std::cos(origin.latitude * std::numbers::pi / 180.0));
    return round_coordinates({origin.latitude + dlat, origin.longitude + dlon});
}

}  // namespace

void write_synthetic_fixture(const FixtureSpec& spec, const std::filesystem::path& dir) {
    if (spec.districts_per_city == 0 || spec.districts_per_city > kDistrictStems.size()) {
        throw std::invalid_argument("districts_per_city must be in [1, " + std::to_string(kDistrictStems.size()) + "]");
    }
    if (spec.communities_per_city > kAdjectives.size() * kNouns.size()) {
        throw std::invalid_argument("communities_per_city exceeds the name pool");
    }
    std::vector<std::string> labels;
    for (const auto& [category, ls] : poi_taxonomy()) labels.insert(labels.end(), ls.begin(), ls.end());
    if (spec.pois_per_city > kPlacePrefixes.size() * labels.size()) {
        throw std::invalid_argument("pois_per_city exceeds the name pool");
    }

    for (const auto& city : spec.cities) {
        Rng rng(fnv1a(city, spec.seed));
        const auto profile = profile_for(city);
        const auto slug = city_slug(city);

        std::vector<std::string> districts;
        std::vector<GeoPoint> district_centers;
        std::vector<std::string> stems = kDistrictStems;
        rng.shuffle(stems);
        for (std::size_t d = 0; d < spec.districts_per_city; ++d) {
            districts.push_back(stems[d] + " District");
            const double angle = 2.0 * std::numbers::pi * (static_cast<double>(d) + rng.uniform(0, 0.5)) /
                                 static_cast<double>(spec.districts_per_city);
            const double radius = d == 0 ? 0.0 : rng.uniform(4000, 9000);
            district_centers.push_back(offset(profile.center, radius * std::cos(angle), radius * std::sin(angle)));
        }

        std::vector<std::vector<std::string>> comm_rows = {
            {"id", "city", "name", "district", "address", "latitude", "longitude", "greening_rate", "avg_price",
             "property_type", "sales_status"}};
        std::set<std::string> used;
        for (std::size_t i = 0; i < spec.communities_per_city; ++i) {
            std::string name;
            do {
                name = rng.pick(kAdjectives) + " " + rng.pick(kNouns);
            } while (!used.insert(name).second);
            const std::size_t d = rng.index(districts.size());
            const auto p = offset(district_centers[d], rng.normal() * 1500.0, rng.normal() * 1500.0);
            const double green = std::round(rng.uniform(15.0, 50.0) * 10.0) / 10.0;
            const double price = std::round(profile.base_price * std::exp(0.25 * rng.normal()) / 100.0) * 100.0;
            const std::string address = std::to_string(1 + rng.index(300)) + " " + rng.pick(kStreets) + " Road, " + districts[d];
            char id[32];
            std::snprintf(id, sizeof id, "%s-c%04zu", slug.c_str(), i + 1);
            comm_rows.push_back({id, city, name, districts[d], address, fixed(p.latitude, 6), fixed(p.longitude, 6),
                                 format_number(green), format_number(price), rng.pick(property_types()),
                                 rng.pick(sales_statuses())});
        }

        std::vector<std::vector<std::string>> poi_rows = {
            {"id", "city", "name", "category", "label", "latitude", "longitude"}};
        used.clear();
        for (std::size_t i = 0; i < spec.pois_per_city; ++i) {
            std::string label;
            std::string name;
            do {
                label = rng.pick(labels);
                name = rng.pick(kPlacePrefixes) + " " + title_case(label);
            } while (!used.insert(name).second);
            const std::size_t d = rng.index(districts.size());
            const auto p = offset(district_centers[d], rng.normal() * 2000.0, rng.normal() * 2000.0);
            char id[32];
            std::snprintf(id, sizeof id, "%s-p%04zu", slug.c_str(), i + 1);
            poi_rows.push_back({id, city, name, *category_of_label(label), label, fixed(p.latitude, 6),
                                fixed(p.longitude, 6)});
        }

        write_file(dir / slug / "communities.csv", to_csv(comm_rows));
        write_file(dir / slug / "pois.csv", to_csv(poi_rows));
    }
}

}  // namespace geoqa
