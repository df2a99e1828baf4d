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

// Intent detection and slot filling: a deterministic gazetteer/lexicon
// baseline, a few-shot strategy over a chat backend, and value-level metrics.

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "geoqa/chat.hpp"
#include "geoqa/domain.hpp"
#include "geoqa/geo_store.hpp"
#include "geoqa/qa_generator.hpp"

namespace geoqa {

struct SluPrediction {
    std::vector<std::string> intents;
    std::vector<SlotAnnotation> slots;
};

nlohmann::json to_json(const SluPrediction& p);
SluPrediction gold_prediction(const QAInstance& inst);

// Surface form -> slot type. Dump format: one "slot_type<TAB>value" per line,
// sorted; '#' lines are comments.
class Gazetteer {
public:
    static Gazetteer build(const GeoStore& store);
    static Gazetteer load(const std::filesystem::path& path);
    static Gazetteer parse(std::string_view text);
    std::string dump() const;
    void save(const std::filesystem::path& path) const;

    void add(const std::string& slot_type, const std::string& value);
    std::size_t size() const { return entries_.size(); }

    // Case-sensitive, word-boundary matches; longest wins, then earliest.
    std::vector<SlotAnnotation> match(std::string_view text) const;

private:
    std::vector<std::pair<std::string, std::string>> entries_;  // (value, type), sorted
};

class SluStrategy {
public:
    virtual ~SluStrategy() = default;
    virtual std::string name() const = 0;
    virtual SluPrediction predict(const std::string& question) = 0;
};

// Gazetteer spans plus unit patterns (yuan, meters, minutes, "the N nearest",
// distance kind, "by <mode>"); intent from the closest template signature.
class LexiconSlu : public SluStrategy {
public:
    LexiconSlu(Gazetteer gazetteer, const std::vector<Template>& templates);
    std::string name() const override { return "lexicon"; }
    SluPrediction predict(const std::string& question) override;

private:
    struct Signature {
        std::vector<std::string> slot_types;  // sorted multiset
        std::vector<std::string> words;       // sorted set of fixed words
        std::vector<std::string> intents;
    };
    Gazetteer gazetteer_;
    std::vector<Signature> signatures_;
};

struct FewShotExample {
    std::string question;
    std::vector<std::string> intents;
    std::vector<std::pair<std::string, std::string>> slots;  // (type, value)
};

std::vector<FewShotExample> load_fewshot_pool(const std::filesystem::path& path);
std::vector<FewShotExample> default_fewshot_pool();

// "INTENTS: a, b" and "SLOT type: value" lines; reasoning before them is
// ignored. Values are located in the question left to right.
std::string format_slu_envelope(const std::vector<std::string>& intents,
                                const std::vector<std::pair<std::string, std::string>>& slots);
std::optional<SluPrediction> parse_slu_envelope(std::string_view reply, const std::string& question);

class FewShotSlu : public SluStrategy {
public:
    FewShotSlu(std::shared_ptr<ChatBackend> backend, std::vector<FewShotExample> pool);
    std::string name() const override { return "fewshot"; }
    // Throws BackendError; unparseable replies give an empty prediction.
    SluPrediction predict(const std::string& question) override;
    std::string prompt() const { return system_; }

private:
    std::shared_ptr<ChatBackend> backend_;
    std::string system_;
};

struct Prf {
    double precision = 0, recall = 0, f1 = 0;
};

struct SluMetrics {
    Prf intent;               // micro over intent labels
    double intent_accuracy = 0;  // exact intent-set match
    Prf slot;                 // micro over (type, value) multisets
    std::size_t instances = 0;
    nlohmann::json to_json() const;
};

Prf prf(std::size_t tp, std::size_t predicted, std::size_t gold);
// Throws std::invalid_argument on length mismatch.
SluMetrics slu_metrics(const std::vector<SluPrediction>& predictions, const std::vector<SluPrediction>& golds);

}  // namespace geoqa
