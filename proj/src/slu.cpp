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

#include "geoqa/slu.hpp"

#include <algorithm>
#include <regex>
#include <set>

#include "geoqa/text.hpp"

namespace geoqa {

namespace {

bool word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

bool at_boundary(std::string_view text, std::size_t start, std::size_t end) {
    return (start == 0 || !word_char(text[start - 1])) && (end >= text.size() || !word_char(text[end]));
}

std::vector<std::string> words_of(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (word_char(c)) {
            cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::vector<std::string> sorted_unique(std::vector<std::string> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::vector<std::string> inter;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(inter));
    const auto uni = a.size() + b.size() - inter.size();
    return uni == 0 ? 0.0 : static_cast<double>(inter.size()) / static_cast<double>(uni);
}

// Longest first, then earliest; keeps non-overlapping spans, returned in text order.
std::vector<SlotAnnotation> resolve_overlaps(std::vector<SlotAnnotation> cands) {
    std::sort(cands.begin(), cands.end(), [](const SlotAnnotation& a, const SlotAnnotation& b) {
        const auto la = a.end - a.start, lb = b.end - b.start;
        if (la != lb) return la > lb;
        if (a.start != b.start) return a.start < b.start;
        return a.slot_type < b.slot_type;
    });
    std::vector<SlotAnnotation> kept;
    for (auto& c : cands) {
        const bool clash = std::any_of(kept.begin(), kept.end(),
                                       [&](const SlotAnnotation& k) { return c.start < k.end && k.start < c.end; });
        if (!clash) kept.push_back(std::move(c));
    }
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
    return kept;
}

struct UnitPattern {
    std::regex re;
    std::string slot_type;
};

const std::vector<UnitPattern>& unit_patterns() {
    static const std::vector<UnitPattern> p = {
        {std::regex(R"((\d+) yuan\b)"), "price"},
        {std::regex(R"((\d+) meters\b)"), "radius"},
        {std::regex(R"((\d+) minutes\b)"), "duration_limit"},
        {std::regex(R"(\bthe ([1-3]) nearest\b)"), "count_x"},
        {std::regex(R"(\b(straight|walking|driving) distance\b)"), "distance_kind"},
        {std::regex(R"(\bby (walking|cycling|driving|transit)\b)"), "travel_mode"},
    };
    return p;
}

}  // namespace

nlohmann::json to_json(const SluPrediction& p) {
    nlohmann::json slots = nlohmann::json::array();
    for (const auto& s : p.slots) slots.push_back(to_json(s));
    return {{"intents", p.intents}, {"slots", slots}};
}

SluPrediction gold_prediction(const QAInstance& inst) { return {inst.intents, inst.slots}; }

Gazetteer Gazetteer::build(const GeoStore& store) {
    Gazetteer g;
    for (const auto& c : store.config().cities) g.add("city", c);
    for (const auto& c : store.communities()) {
        g.add("community_name", c.name);
        g.add("district", c.district);
    }
    for (const auto& p : store.pois()) {
        g.add("poi_name", p.name);
        g.add("poi_label", p.label);
    }
    for (const auto& s : sales_statuses()) g.add("sales_status", s);
    return g;
}

void Gazetteer::add(const std::string& slot_type, const std::string& value) {
    if (value.empty() || slot_type.empty()) throw std::invalid_argument("gazetteer entries need a type and a value");
    std::pair<std::string, std::string> e{value, slot_type};
    auto it = std::lower_bound(entries_.begin(), entries_.end(), e);
    if (it == entries_.end() || *it != e) entries_.insert(it, std::move(e));
}

std::string Gazetteer::dump() const {
    std::vector<std::string> lines;
    for (const auto& [value, type] : entries_) lines.push_back(type + "\t" + value);
    std::sort(lines.begin(), lines.end());
    std::string out = "# geoqa gazetteer v1: slot_type<TAB>value\n";
    for (const auto& l : lines) out += l + "\n";
    return out;
}

void Gazetteer::save(const std::filesystem::path& path) const { write_file(path, dump()); }

Gazetteer Gazetteer::parse(std::string_view text) {
    Gazetteer g;
    std::size_t n = 0;
    for (const auto& line : split_lines(text)) {
        ++n;
        if (trim(line).empty() || starts_with(line, "#")) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw std::invalid_argument("gazetteer line " + std::to_string(n) + " has no tab");
        g.add(line.substr(0, tab), line.substr(tab + 1));
    }
    return g;
}

Gazetteer Gazetteer::load(const std::filesystem::path& path) { return parse(read_file(path)); }

std::vector<SlotAnnotation> Gazetteer::match(std::string_view text) const {
    std::vector<SlotAnnotation> cands;
    for (const auto& [value, type] : entries_) {
        std::size_t pos = 0;
        while ((pos = text.find(value, pos)) != std::string_view::npos) {
            if (at_boundary(text, pos, pos + value.size())) cands.push_back({type, value, pos, pos + value.size()});
            ++pos;
        }
    }
    return resolve_overlaps(std::move(cands));
}

LexiconSlu::LexiconSlu(Gazetteer gazetteer, const std::vector<Template>& templates) : gazetteer_(std::move(gazetteer)) {
    for (const auto& t : templates) {
        std::map<std::string, std::string> slot_of;
        for (const auto& p : t.placeholders) slot_of[p.name] = p.slot;
        Signature sig;
        std::string fixed;
        std::size_t i = 0;
        while (i < t.question.size()) {
            const auto open = t.question.find('{', i);
            fixed += t.question.substr(i, open == std::string::npos ? std::string::npos : open - i);
            if (open == std::string::npos) break;
            const auto close = t.question.find('}', open);
            const auto name = t.question.substr(open + 1, close - open - 1);
            if (auto it = slot_of.find(name); it != slot_of.end() && !it->second.empty()) sig.slot_types.push_back(it->second);
            fixed += ' ';
            i = close + 1;
        }
        std::sort(sig.slot_types.begin(), sig.slot_types.end());
        sig.words = sorted_unique(words_of(fixed));
        sig.intents = t.intents;
        signatures_.push_back(std::move(sig));
    }
}

SluPrediction LexiconSlu::predict(const std::string& question) {
    auto cands = gazetteer_.match(question);
    for (const auto& up : unit_patterns()) {
        for (auto it = std::sregex_iterator(question.begin(), question.end(), up.re); it != std::sregex_iterator(); ++it) {
            const auto& m = (*it)[1];
            const auto start = static_cast<std::size_t>(m.first - question.begin());
            cands.push_back({up.slot_type, m.str(), start, start + static_cast<std::size_t>(m.length())});
        }
    }
    SluPrediction out;
    out.slots = resolve_overlaps(std::move(cands));
    if (out.slots.empty()) {
        out.intents = {"unknown"};
        return out;
    }

    std::vector<std::string> types;
    std::string rest = question;
    for (const auto& s : out.slots) {
        types.push_back(s.slot_type);
        std::fill(rest.begin() + static_cast<std::ptrdiff_t>(s.start), rest.begin() + static_cast<std::ptrdiff_t>(s.end), ' ');
    }
    std::sort(types.begin(), types.end());
    const auto words = sorted_unique(words_of(rest));
    double best = -1;
    for (const auto& sig : signatures_) {
        const double score = (sig.slot_types == types ? 10.0 : 0.0) + jaccard(words, sig.words);
        if (score > best) {
            best = score;
            out.intents = sig.intents;
        }
    }
    if (out.intents.empty()) out.intents = {"unknown"};
    return out;
}

std::vector<FewShotExample> load_fewshot_pool(const std::filesystem::path& path) {
    std::vector<FewShotExample> out;
    for (const auto& line : split_lines(read_file(path))) {
        if (trim(line).empty()) continue;
        const auto j = nlohmann::json::parse(line);
        FewShotExample e;
        e.question = j.at("question").get<std::string>();
        e.intents = j.at("intents").get<std::vector<std::string>>();
        for (const auto& s : j.at("slots")) e.slots.emplace_back(s.at("type").get<std::string>(), s.at("value").get<std::string>());
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<FewShotExample> default_fewshot_pool() { return load_fewshot_pool(asset_dir() / "fewshot" / "slu_pool_v1.jsonl"); }

std::string format_slu_envelope(const std::vector<std::string>& intents,
                                const std::vector<std::pair<std::string, std::string>>& slots) {
    std::string out = "INTENTS: " + join(intents, ", ") + "\n";
    for (const auto& [type, value] : slots) out += "SLOT " + type + ": " + value + "\n";
    return out;
}

std::optional<SluPrediction> parse_slu_envelope(std::string_view reply, const std::string& question) {
    SluPrediction p;
    bool seen = false;
    std::vector<std::pair<std::string, std::string>> raw;
    for (const auto& line : split_lines(reply)) {
        const auto t = trim(line);
        if (starts_with(t, "INTENTS:")) {
            seen = true;
            p.intents.clear();
            for (const auto& i : split(t.substr(8), ',')) {
                if (!trim(i).empty()) p.intents.push_back(trim(i));
            }
        } else if (starts_with(t, "SLOT ")) {
            const auto colon = t.find(':');
            if (colon == std::string::npos) continue;
            raw.emplace_back(trim(t.substr(5, colon - 5)), trim(t.substr(colon + 1)));
        }
    }
    if (!seen) return std::nullopt;
    for (const auto& [type, value] : raw) {
        if (type.empty() || value.empty()) continue;
        std::size_t pos = 0, found = std::string::npos;
        while ((pos = question.find(value, pos)) != std::string::npos) {
            const auto end = pos + value.size();
            const bool clash = std::any_of(p.slots.begin(), p.slots.end(),
                                           [&](const SlotAnnotation& s) { return pos < s.end && s.start < end; });
            if (!clash) {
                found = pos;
                break;
            }
            ++pos;
        }
        if (found == std::string::npos) {
            log_warning("slot value '" + value + "' not found in question; dropped");
            continue;
        }
        p.slots.push_back({type, value, found, found + value.size()});
    }
    std::sort(p.slots.begin(), p.slots.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
    return p;
}

FewShotSlu::FewShotSlu(std::shared_ptr<ChatBackend> backend, std::vector<FewShotExample> pool)
    : backend_(std::move(backend)) {
    if (!backend_) throw std::invalid_argument("few-shot SLU needs a chat backend");
    system_ = load_asset("prompts/slu_v1.txt");
    system_ += "\n# Examples\n";
    for (const auto& e : pool) {
        system_ += "\nQuestion: " + e.question + "\n" + format_slu_envelope(e.intents, e.slots);
    }
}

SluPrediction FewShotSlu::predict(const std::string& question) {
    ChatRequest req;
    req.purpose = Purpose::slu;
    req.system = system_;
    req.messages.push_back({"user", "Question: " + question});
    req.context = {{"question", question}};
    const auto reply = backend_->complete(req);
    if (auto p = parse_slu_envelope(reply, question)) return *p;
    log_warning("unparseable SLU reply; empty prediction used");
    return {};
}

Prf prf(std::size_t tp, std::size_t predicted, std::size_t gold) {
    Prf r;
    r.precision = predicted ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
    r.recall = gold ? static_cast<double>(tp) / static_cast<double>(gold) : 0.0;
    r.f1 = r.precision + r.recall > 0 ? 2 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
    return r;
}

nlohmann::json SluMetrics::to_json() const {
    auto j = [](const Prf& p) { return nlohmann::json{{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}}; };
    return {{"intent", j(intent)}, {"intent_accuracy", intent_accuracy}, {"slot", j(slot)}, {"instances", instances}};
}

SluMetrics slu_metrics(const std::vector<SluPrediction>& predictions, const std::vector<SluPrediction>& golds) {
    if (predictions.size() != golds.size()) {
        throw std::invalid_argument("slu_metrics: " + std::to_string(predictions.size()) + " predictions vs " +
                                    std::to_string(golds.size()) + " golds");
    }
    std::size_t itp = 0, ipred = 0, igold = 0, stp = 0, spred = 0, sgold = 0, exact = 0;
    for (std::size_t i = 0; i < golds.size(); ++i) {
        const auto pi = sorted_unique(predictions[i].intents);
        const auto gi = sorted_unique(golds[i].intents);
        std::vector<std::string> inter;
        std::set_intersection(pi.begin(), pi.end(), gi.begin(), gi.end(), std::back_inserter(inter));
        itp += inter.size();
        ipred += pi.size();
        igold += gi.size();
        exact += pi == gi;

        std::multiset<std::pair<std::string, std::string>> gs;
        for (const auto& s : golds[i].slots) gs.emplace(s.slot_type, s.value);
        sgold += gs.size();
        spred += predictions[i].slots.size();
        for (const auto& s : predictions[i].slots) {
            if (auto it = gs.find({s.slot_type, s.value}); it != gs.end()) {
                ++stp;
                gs.erase(it);
            }
        }
    }
    SluMetrics m;
    m.instances = golds.size();
    m.intent = prf(itp, ipred, igold);
    m.slot = prf(stp, spred, sgold);
    m.intent_accuracy = golds.empty() ? 0.0 : static_cast<double>(exact) / static_cast<double>(golds.size());
    return m;
}

}  // namespace geoqa
