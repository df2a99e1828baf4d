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

#include "geoqa/answer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>

#include "geoqa/text.hpp"

namespace geoqa {

using namespace answer;

namespace {

double round6(double v) { return std::round(v * 1e6) / 1e6; }

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::vector<std::string> sorted_items(const EntitySet& s) {
    std::vector<std::string> out;
    out.reserve(s.items.size());
    for (const auto& i : s.items) out.push_back(normalize_text(i));
    std::sort(out.begin(), out.end());
    return out;
}

std::pair<double, std::string> normalized_number(const Number& n) {
    auto [unit, factor] = canonical_unit(n.unit);
    return {round6(n.value * factor), unit};
}

}  // namespace

std::string normalize_text(std::string_view s) {
    std::string out;
    bool pending_space = false;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(c);
    }
    return out;
}

std::pair<std::string, double> canonical_unit(std::string_view unit) {
    static const std::map<std::string, std::pair<std::string, double>, std::less<>> table = {
        {"", {"", 1.0}},
        {"count", {"count", 1.0}},
        {"percent", {"percent", 1.0}},
        {"%", {"percent", 1.0}},
        {"yuan_per_sqm", {"yuan_per_sqm", 1.0}},
        {"yuan/sqm", {"yuan_per_sqm", 1.0}},
        {"cny_per_sqm", {"yuan_per_sqm", 1.0}},
        {"m", {"m", 1.0}},
        {"meters", {"m", 1.0}},
        {"km", {"m", 1000.0}},
        {"s", {"s", 1.0}},
        {"seconds", {"s", 1.0}},
        {"min", {"s", 60.0}},
        {"minutes", {"s", 60.0}},
        {"h", {"s", 3600.0}},
        {"hours", {"s", 3600.0}},
    };
    std::string key = to_lower(normalize_text(unit));
    if (auto it = table.find(key); it != table.end()) return it->second;
    return {key, 1.0};
}

bool answer_valid(const CanonicalAnswer& a) {
    return std::visit(overloaded{
                          [](const EntitySet& s) { return !s.items.empty(); },
                          [](const Number& n) { return std::isfinite(n.value); },
                          [](const Duration& d) { return std::isfinite(d.seconds) && d.seconds >= 0; },
                          [](const Distance& d) { return std::isfinite(d.meters) && d.meters >= 0; },
                          [](const Boolean&) { return true; },
                          [](const Text&) { return true; },
                      },
                      a);
}

bool answer_equal(const CanonicalAnswer& pred, const CanonicalAnswer& gold) {
    if (pred.index() != gold.index()) return false;
    return std::visit(
        overloaded{
            [&](const EntitySet& p) { return sorted_items(p) == sorted_items(std::get<EntitySet>(gold)); },
            [&](const Number& p) { return normalized_number(p) == normalized_number(std::get<Number>(gold)); },
            [&](const Duration& p) { return round6(p.seconds) == round6(std::get<Duration>(gold).seconds); },
            [&](const Distance& p) { return round6(p.meters) == round6(std::get<Distance>(gold).meters); },
            [&](const Boolean& p) { return p.value == std::get<Boolean>(gold).value; },
            [&](const Text& p) { return normalize_text(p.value) == normalize_text(std::get<Text>(gold).value); },
        },
        pred);
}

std::vector<std::string> answer_items(const CanonicalAnswer& a) {
    return std::visit(overloaded{
                          [](const EntitySet& s) {
                              std::vector<std::string> out;
                              for (const auto& i : s.items) out.push_back("entity:" + normalize_text(i));
                              return out;
                          },
                          [](const Number& n) {
                              auto [v, unit] = normalized_number(n);
                              return std::vector<std::string>{"number:" + format_number(v) + ":" + unit};
                          },
                          [](const Duration& d) {
                              return std::vector<std::string>{"duration:" + format_number(round6(d.seconds))};
                          },
                          [](const Distance& d) {
                              return std::vector<std::string>{"distance:" + format_number(round6(d.meters))};
                          },
                          [](const Boolean& b) {
                              return std::vector<std::string>{b.value ? "boolean:true" : "boolean:false"};
                          },
                          [](const Text& t) { return std::vector<std::string>{"text:" + normalize_text(t.value)}; },
                      },
                      a);
}

std::string_view answer_kind(const CanonicalAnswer& a) {
    static constexpr std::string_view names[] = {"entity_set", "number", "duration",
                                                 "distance",   "boolean", "text"};
    return names[a.index()];
}

nlohmann::json to_json(const CanonicalAnswer& a) {
    nlohmann::json j = {{"kind", answer_kind(a)}};
    std::visit(overloaded{
                   [&](const EntitySet& s) { j["items"] = s.items; },
                   [&](const Number& n) {
                       j["value"] = n.value;
                       j["unit"] = n.unit;
                   },
                   [&](const Duration& d) { j["seconds"] = d.seconds; },
                   [&](const Distance& d) { j["meters"] = d.meters; },
                   [&](const Boolean& b) { j["value"] = b.value; },
                   [&](const Text& t) { j["value"] = t.value; },
               },
               a);
    return j;
}

CanonicalAnswer answer_from_json(const nlohmann::json& j) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "entity_set") return EntitySet{j.at("items").get<std::vector<std::string>>()};
    if (kind == "number") return Number{j.at("value").get<double>(), j.at("unit").get<std::string>()};
    if (kind == "duration") return Duration{j.at("seconds").get<double>()};
    if (kind == "distance") return Distance{j.at("meters").get<double>()};
    if (kind == "boolean") return Boolean{j.at("value").get<bool>()};
    if (kind == "text") return Text{j.at("value").get<std::string>()};
    throw std::invalid_argument("unknown answer kind: " + kind);
}

std::string format_answer_envelope(const std::optional<CanonicalAnswer>& a) {
    if (!a) return "ANSWER unanswerable";
    std::string body = std::visit(overloaded{
                                      [](const EntitySet& s) {
                                          std::string out;
                                          for (std::size_t i = 0; i < s.items.size(); ++i) {
                                              out += (i ? " | " : "") + s.items[i];
                                          }
                                          return out;
                                      },
                                      [](const Number& n) {
                                          return format_number(n.value) + (n.unit.empty() ? "" : " " + n.unit);
                                      },
                                      [](const Duration& d) { return format_number(d.seconds); },
                                      [](const Distance& d) { return format_number(d.meters); },
                                      [](const Boolean& b) { return std::string(b.value ? "true" : "false"); },
                                      [](const Text& t) { return t.value; },
                                  },
                                  *a);
    return "ANSWER " + std::string(answer_kind(*a)) + ": " + body;
}

ParsedAnswer parse_answer_envelope(std::string_view text) {
    ParsedAnswer out;
    std::optional<std::string> line;
    for (const auto& l : split_lines(text)) {
        auto t = trim(l);
        if (starts_with(t, "ANSWER")) line = std::string(t);
    }
    if (!line) return out;
    std::string rest = trim(line->substr(6));
    if (rest == "unanswerable") {
        out.status = ParsedAnswer::Status::unanswerable;
        return out;
    }
    const auto colon = rest.find(':');
    if (colon == std::string::npos) return out;
    const std::string kind = trim(rest.substr(0, colon));
    const std::string body = trim(rest.substr(colon + 1));
    try {
        if (kind == "entity_set") {
            EntitySet s;
            for (const auto& part : split(body, '|')) {
                auto item = normalize_text(part);
                if (!item.empty()) s.items.push_back(item);
            }
            if (s.items.empty()) return out;
            out.answer = s;
        } else if (kind == "number") {
            const auto space = body.find(' ');
            Number n;
            n.value = parse_double(body.substr(0, space));
            if (space != std::string::npos) n.unit = trim(body.substr(space + 1));
            out.answer = n;
        } else if (kind == "duration") {
            out.answer = Duration{parse_double(body)};
        } else if (kind == "distance") {
            out.answer = Distance{parse_double(body)};
        } else if (kind == "boolean") {
            const auto v = to_lower(body);
            if (v != "true" && v != "false") return out;
            out.answer = Boolean{v == "true"};
        } else if (kind == "text") {
            out.answer = Text{body};
        } else {
            return out;
        }
    } catch (const std::exception&) {
        return out;
    }
    if (!answer_valid(*out.answer)) {
        out.answer.reset();
        return out;
    }
    out.status = ParsedAnswer::Status::ok;
    return out;
}

}  // namespace geoqa
