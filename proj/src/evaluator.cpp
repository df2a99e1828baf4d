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

#include "geoqa/evaluator.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <thread>

#include "geoqa/text.hpp"

namespace geoqa {

double item_f1(const CanonicalAnswer& pred, const CanonicalAnswer& gold) {
    auto p = answer_items(pred);
    auto g = answer_items(gold);
    if (p.empty() || g.empty()) return 0.0;
    std::sort(p.begin(), p.end());
    std::sort(g.begin(), g.end());
    std::vector<std::string> common;
    std::set_intersection(p.begin(), p.end(), g.begin(), g.end(), std::back_inserter(common));
    if (common.empty()) return 0.0;
    const double precision = static_cast<double>(common.size()) / static_cast<double>(p.size());
    const double recall = static_cast<double>(common.size()) / static_cast<double>(g.size());
    return 2 * precision * recall / (precision + recall);
}

double item_f1(const std::optional<CanonicalAnswer>& pred, const CanonicalAnswer& gold) {
    return pred ? item_f1(*pred, gold) : 0.0;
}

bool accuracy(const std::optional<CanonicalAnswer>& pred, const CanonicalAnswer& gold) {
    return pred && answer_equal(*pred, gold);
}

bool rows_equal_unordered(const Table& a, const Table& b) {
    if (a.rows.size() != b.rows.size()) return false;
    auto key = [](const Table& t) {
        std::vector<std::string> k;
        for (const auto& r : t.rows) {
            nlohmann::json j = nlohmann::json::array();
            for (const auto& c : r) j.push_back(to_json(c));
            k.push_back(j.dump());
        }
        std::sort(k.begin(), k.end());
        return k;
    };
    return key(a) == key(b);
}

namespace {

double ratio(std::size_t num, std::size_t den) { return den ? static_cast<double>(num) / static_cast<double>(den) : 0.0; }

std::string failure_key(const EpisodeTranscript& t, const QAInstance& gold) {
    if (!t.answer) {
        const auto colon = t.failure.find(':');
        return t.failure.empty() ? "unanswerable" : t.failure.substr(0, colon);
    }
    return answer_equal(*t.answer, gold.answer) ? "" : "wrong_answer";
}

}  // namespace

double TraceMetrics::ecr() const { return ratio(sql_executable, sql_total); }
double TraceMetrics::pass_at_1() const { return ratio(sql_pass, sql_total); }
double TraceMetrics::api_label_accuracy() const { return ratio(api_match, api_total); }
double TraceMetrics::planning_accuracy() const { return ratio(plan_match, plan_total); }

nlohmann::json TraceMetrics::to_json() const {
    return {{"ecr", ecr()},
            {"pass_at_1", pass_at_1()},
            {"api_label_accuracy", api_label_accuracy()},
            {"planning_accuracy", planning_accuracy()},
            {"counts",
             {{"sql_total", sql_total},
              {"sql_executable", sql_executable},
              {"sql_pass", sql_pass},
              {"api_total", api_total},
              {"api_match", api_match},
              {"plan_total", plan_total},
              {"plan_match", plan_match}}}};
}

TraceMetrics trace_metrics(const std::vector<EpisodeTranscript>& transcripts, const std::vector<QAInstance>& golds) {
    if (transcripts.size() != golds.size()) throw std::invalid_argument("trace_metrics: transcript/gold count mismatch");
    TraceMetrics m;
    for (std::size_t i = 0; i < golds.size(); ++i) {
        const auto& t = transcripts[i];
        const auto& g = golds[i];
        if (t.instance_id != g.id) throw std::invalid_argument("trace_metrics: " + t.instance_id + " aligned with " + g.id);
        if (!g.sql_trace.empty()) {
            ++m.sql_total;
            if (!t.sql_candidates.empty()) {
                const auto& c = t.sql_candidates.front();
                if (c.executed) {
                    ++m.sql_executable;
                    if (c.rows && rows_equal_unordered(*c.rows, g.sql_trace.front().expected_result)) ++m.sql_pass;
                }
            }
        }
        if (!g.tool_trace.empty()) {
            ++m.api_total;
            const DispatchRecord* last = nullptr;
            for (const auto& d : t.dispatches) {
                if (d.specialist == kMapAgent && d.status == AgentStatus::success) last = &d;
            }
            if (last && last->tool_requests.size() == g.tool_trace.size()) {
                bool same = true;
                for (std::size_t k = 0; k < g.tool_trace.size(); ++k) {
                    same = same && last->tool_requests[k].key() == g.tool_trace[k].request().key();
                }
                m.api_match += same ? 1 : 0;
            }
        }
        ++m.plan_total;
        m.plan_match += t.dispatched_route() == g.agent_route ? 1 : 0;
    }
    return m;
}

nlohmann::json EvalReport::to_json() const {
    auto cell = [](const ScoreCell& c) { return nlohmann::json{{"n", c.n}, {"acc", c.acc()}, {"f1", c.f1()}}; };
    nlohmann::json j;
    j["label"] = label;
    j["episodes"] = episodes;
    j["per_type"] = nlohmann::json::object();
    for (const auto& [type, c] : per_type) j["per_type"]["type_" + std::to_string(type)] = cell(c);
    j["overall"] = cell(overall);
    j["trace"] = trace.to_json();
    j["slu"] = slu ? slu->to_json() : nlohmann::json(nullptr);
    j["failures"] = failures;
    return j;
}

std::string EvalReport::render() const {
    std::string out;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-12s %8s %8s %8s\n", label.empty() ? "run" : label.c_str(), "N", "Acc", "F1");
    out += buf;
    for (const auto& [type, c] : per_type) {
        std::snprintf(buf, sizeof buf, "Type %-7d %8zu %8.4f %8.4f\n", type, c.n, c.acc(), c.f1());
        out += buf;
    }
    std::snprintf(buf, sizeof buf, "%-12s %8zu %8.4f %8.4f\n", "Overall", overall.n, overall.acc(), overall.f1());
    out += buf;
    std::snprintf(buf, sizeof buf, "ECR %.4f  pass@1 %.4f  API label %.4f  planning %.4f\n", trace.ecr(),
                  trace.pass_at_1(), trace.api_label_accuracy(), trace.planning_accuracy());
    out += buf;
    if (slu) {
        std::snprintf(buf, sizeof buf, "SLU intent F1 %.4f  intent acc %.4f  slot F1 %.4f\n", slu->intent.f1,
                      slu->intent_accuracy, slu->slot.f1);
        out += buf;
    }
    if (!failures.empty()) {
        std::vector<std::string> parts;
        for (const auto& [k, n] : failures) parts.push_back(k + "=" + std::to_string(n));
        out += "failures: " + join(parts, ", ") + "\n";
    }
    return out;
}

EvalReport evaluate(const std::vector<EpisodeTranscript>& transcripts, const std::vector<QAInstance>& golds,
                    const std::string& label) {
    EvalReport r;
    r.label = label;
    r.trace = trace_metrics(transcripts, golds);
    r.episodes = golds.size();
    std::vector<SluPrediction> preds, gold_slu;
    for (std::size_t i = 0; i < golds.size(); ++i) {
        const double acc = accuracy(transcripts[i].answer, golds[i].answer) ? 1.0 : 0.0;
        const double f1 = item_f1(transcripts[i].answer, golds[i].answer);
        for (auto* c : {&r.per_type[golds[i].question_type], &r.overall}) {
            ++c->n;
            c->acc_sum += acc;
            c->f1_sum += f1;
        }
        if (auto k = failure_key(transcripts[i], golds[i]); !k.empty()) ++r.failures[k];
        preds.push_back(transcripts[i].slu);
        gold_slu.push_back(gold_prediction(golds[i]));
    }
    if (!golds.empty()) r.slu = slu_metrics(preds, gold_slu);
    return r;
}

std::optional<SluMode> parse_slu_mode(std::string_view s) {
    if (s == "lexicon") return SluMode::lexicon;
    if (s == "fewshot") return SluMode::fewshot;
    return std::nullopt;
}

EpisodeTranscript run_instance(const QAInstance& gold, const RunEnvironment& env, const RunConfig& config) {
    auto backend = env.backend(gold);
    SluPrediction slu;
    if (config.inject.slu) {
        slu = gold_prediction(gold);
    } else if (config.slu == SluMode::lexicon) {
        if (!env.lexicon) throw std::invalid_argument("lexicon SLU selected without a gazetteer");
        slu = env.lexicon->predict(gold.question);
    } else {
        try {
            slu = FewShotSlu(backend, env.fewshot_pool).predict(gold.question);
        } catch (const BackendError& e) {
            EpisodeTranscript t;
            t.instance_id = gold.id;
            t.failure = std::string("backend_error: ") + e.what();
            return t;
        }
    }
    DbAgent db(*env.store, *env.index, backend, env.db_examples);
    MapAgent map(*env.cache, backend, MapAgentConfig{config.attempt_cap});
    SupervisorConfig sc;
    sc.step_cap = config.step_cap;
    sc.inject = config.inject;
    sc.gold = &gold;
    Supervisor sup(backend, {{kDbAgent, &db}, {kMapAgent, &map}}, sc);
    return sup.run_episode(gold.id, gold.question, slu);
}

SuiteResult run_suite(const std::vector<QAInstance>& instances, const RunEnvironment& env, const RunConfig& config) {
    if (!env.store || !env.cache || !env.index || !env.backend) throw std::invalid_argument("run environment incomplete");
    SuiteResult out;
    out.transcripts.resize(instances.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < instances.size(); i = next++) {
            try {
                out.transcripts[i] = run_instance(instances[i], env, config);
            } catch (const std::exception& e) {
                out.transcripts[i].instance_id = instances[i].id;
                out.transcripts[i].failure = std::string("runner_error: ") + e.what();
            }
        }
    };
    const auto n = std::max<std::size_t>(1, std::min(config.parallelism, instances.size()));
    std::vector<std::thread> threads;
    for (std::size_t k = 1; k < n; ++k) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();
    out.report = evaluate(out.transcripts, instances, config.label.empty() ? config.inject.label() : config.label);
    return out;
}

std::vector<Injection> ablation_ladder() {
    return {{false, false, false}, {true, false, false}, {true, true, false}, {true, true, true}};
}

std::vector<SuiteResult> run_ablation(const std::vector<QAInstance>& instances, const RunEnvironment& env,
                                      const RunConfig& config) {
    std::vector<SuiteResult> out;
    for (const auto& inj : ablation_ladder()) {
        auto c = config;
        c.inject = inj;
        c.label = inj.label();
        out.push_back(run_suite(instances, env, c));
    }
    return out;
}

}  // namespace geoqa
