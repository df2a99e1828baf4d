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

// Randomized prediction sets and a brute-force tally of every metric,
// computed without the evaluator.

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "geoqa/agent.hpp"
#include "geoqa/rng.hpp"

namespace geoqa::testing {

struct MetricSet {
    std::vector<QAInstance> golds;
    std::vector<EpisodeTranscript> transcripts;
};

inline std::vector<std::string> letters(Rng& rng) {
    std::vector<std::string> pool = {"Alder", "Birch", "Cedar", "Dogwood", "Elm", "Fir"};
    rng.shuffle(pool);
    pool.resize(1 + rng.index(4));
    return pool;
}

inline ToolStep random_tool_step(Rng& rng) {
    ToolStep s;
    s.function = ToolFunction::time_query;
    s.params = {{"origin", format_point({22.5 + rng.uniform() * 0.1, 114.0 + rng.uniform() * 0.1})},
                {"destination", format_point({22.6, 114.1})},
                {"mode", rng.index(2) ? "driving" : "walking"}};
    return s;
}

inline MetricSet random_metric_set(Rng& rng, std::size_t n) {
    MetricSet m;
    for (std::size_t i = 0; i < n; ++i) {
        QAInstance g;
        g.id = "m" + std::to_string(i);
        g.question_type = 1 + static_cast<int>(rng.index(3));
        EpisodeTranscript t;
        t.instance_id = g.id;

        // answers
        if (rng.index(2)) {
            g.answer = answer::EntitySet{letters(rng)};
        } else {
            g.answer = answer::Number{static_cast<double>(rng.index(5)), "count"};
        }
        switch (rng.index(5)) {
            case 0: break;  // unanswerable
            case 1: t.answer = g.answer; break;
            case 2: t.answer = answer::EntitySet{letters(rng)}; break;
            case 3: t.answer = answer::Number{static_cast<double>(rng.index(5)), "count"}; break;
            default: {
                if (auto* e = std::get_if<answer::EntitySet>(&g.answer)) {
                    auto items = e->items;
                    rng.shuffle(items);
                    t.answer = answer::EntitySet{items};
                } else {
                    t.answer = g.answer;
                }
            }
        }

        // sql
        SqlStep step;
        step.expected_result.columns = {"name"};
        const auto rows = 1 + rng.index(4);
        for (std::size_t r = 0; r < rows; ++r) step.expected_result.rows.push_back({Cell{std::int64_t(rng.index(6))}});
        g.sql_trace.push_back(step);
        const auto sql_kind = rng.index(4);
        if (sql_kind > 0) {
            SqlCandidateRecord c;
            c.executed = sql_kind > 1;
            if (c.executed) {
                Table got = step.expected_result;
                if (sql_kind == 2) {
                    rng.shuffle(got.rows);
                } else {
                    got.rows[rng.index(got.rows.size())][0] = Cell{std::int64_t(rng.index(6))};
                }
                c.rows = got;
            }
            t.sql_candidates.push_back(c);
            if (rng.index(3) == 0) t.sql_candidates.push_back(SqlCandidateRecord{"", "generated", "", true, "", step.expected_result});
        }

        // tools and routing
        g.agent_route = {kDbAgent};
        if (g.question_type > 1) {
            g.agent_route.push_back(kMapAgent);
            const auto k = 1 + rng.index(3);
            for (std::size_t s = 0; s < k; ++s) g.tool_trace.push_back(random_tool_step(rng));
        }
        const auto dispatches = rng.index(4);
        for (std::size_t d = 0; d < dispatches; ++d) {
            DispatchRecord rec;
            rec.specialist = rng.index(2) ? kDbAgent : kMapAgent;
            rec.status = rng.index(3) ? AgentStatus::success : AgentStatus::error;
            if (rec.specialist == kMapAgent && rec.status == AgentStatus::success) {
                if (!g.tool_trace.empty() && rng.index(2)) {
                    for (const auto& s : g.tool_trace) rec.tool_requests.push_back(s.request());
                    if (rng.index(3) == 0) rec.tool_requests.pop_back();
                } else {
                    rec.tool_requests.push_back(random_tool_step(rng).request());
                }
            }
            t.dispatches.push_back(rec);
        }
        if (rng.index(3) == 0) {
            t.dispatches.clear();
            for (const auto& s : g.agent_route) {
                DispatchRecord rec;
                rec.specialist = s;
                rec.status = AgentStatus::success;
                if (s == kMapAgent) {
                    for (const auto& ts : g.tool_trace) rec.tool_requests.push_back(ts.request());
                }
                t.dispatches.push_back(rec);
            }
        }
        m.golds.push_back(std::move(g));
        m.transcripts.push_back(std::move(t));
    }
    return m;
}

struct BruteTally {
    std::map<int, std::size_t> n;
    std::map<int, double> acc, f1;
    std::size_t total = 0;
    double acc_all = 0, f1_all = 0;
    std::size_t sql_total = 0, sql_exec = 0, sql_pass = 0;
    std::size_t api_total = 0, api_match = 0;
    std::size_t plan_total = 0, plan_match = 0;
};

inline bool brute_equal(const CanonicalAnswer& p, const CanonicalAnswer& g) {
    if (p.index() != g.index()) return false;
    if (auto* ge = std::get_if<answer::EntitySet>(&g)) {
        auto a = std::get<answer::EntitySet>(p).items;
        auto b = ge->items;
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        return a == b;
    }
    const auto& gn = std::get<answer::Number>(g);
    const auto& pn = std::get<answer::Number>(p);
    return gn.value == pn.value && gn.unit == pn.unit;
}

inline double brute_f1(const std::optional<CanonicalAnswer>& p, const CanonicalAnswer& g) {
    if (!p) return 0.0;
    if (p->index() != g.index()) return 0.0;
    if (auto* ge = std::get_if<answer::EntitySet>(&g)) {
        const auto& pi = std::get<answer::EntitySet>(*p).items;
        std::set<std::string> gs(ge->items.begin(), ge->items.end());
        double tp = 0;
        for (const auto& x : pi) tp += gs.count(x);
        if (tp == 0) return 0.0;
        const double prec = tp / static_cast<double>(pi.size()), rec = tp / static_cast<double>(ge->items.size());
        return 2 * prec * rec / (prec + rec);
    }
    return brute_equal(*p, g) ? 1.0 : 0.0;
}

inline BruteTally brute_tally(const MetricSet& m) {
    BruteTally b;
    for (std::size_t i = 0; i < m.golds.size(); ++i) {
        const auto& g = m.golds[i];
        const auto& t = m.transcripts[i];
        const double a = t.answer && brute_equal(*t.answer, g.answer) ? 1.0 : 0.0;
        const double f = brute_f1(t.answer, g.answer);
        ++b.n[g.question_type];
        b.acc[g.question_type] += a;
        b.f1[g.question_type] += f;
        ++b.total;
        b.acc_all += a;
        b.f1_all += f;

        ++b.sql_total;
        if (!t.sql_candidates.empty() && t.sql_candidates[0].executed) {
            ++b.sql_exec;
            std::multiset<std::int64_t> want, got;
            for (const auto& r : g.sql_trace[0].expected_result.rows) want.insert(std::get<std::int64_t>(r[0]));
            for (const auto& r : t.sql_candidates[0].rows->rows) got.insert(std::get<std::int64_t>(r[0]));
            if (want == got) ++b.sql_pass;
        }

        if (!g.tool_trace.empty()) {
            ++b.api_total;
            std::vector<ToolRequest> last;
            for (const auto& d : t.dispatches) {
                if (d.specialist == kMapAgent && d.status == AgentStatus::success) last = d.tool_requests;
            }
            std::vector<ToolRequest> want;
            for (const auto& s : g.tool_trace) want.push_back(s.request());
            if (!last.empty() && last == want) ++b.api_match;
        }

        ++b.plan_total;
        std::vector<std::string> route;
        for (const auto& d : t.dispatches) route.push_back(d.specialist);
        if (route == g.agent_route) ++b.plan_match;
    }
    return b;
}

}  // namespace geoqa::testing
