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

// Map specialist: tool selection from a CALL/RULE envelope, parameter filling
// from context coordinates, replay against the cache and synthesis.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "geoqa/agent.hpp"
#include "geoqa/tool_cache.hpp"

namespace geoqa {

// One CALL line. Parameter values starting with '@' name a context entity.
struct ToolCallSpec {
    ToolFunction function = ToolFunction::time_query;
    std::map<std::string, std::string> params;
    std::optional<TimeBucket> bucket;
};

struct MapDecision {
    std::vector<ToolCallSpec> calls;
    std::optional<AnswerRule> rule;
    std::optional<std::string> unable;
};

//   CALL time_query origin=@A; destination=@B; mode=driving[; bucket=offpeak_15]
//   RULE argmin
//   UNABLE: reason
// Throws std::invalid_argument on unknown functions or malformed CALL lines;
// nullopt when the reply has neither CALL nor UNABLE lines.
std::optional<MapDecision> parse_map_reply(std::string_view reply);
std::string format_call(const ToolCallSpec& call);

struct MapAgentConfig {
    std::size_t attempt_cap = 3;
};

class MapAgent : public Specialist {
public:
    MapAgent(ToolCache& cache, std::shared_ptr<ChatBackend> backend, MapAgentConfig config = {});
    std::string name() const override { return kMapAgent; }
    AgentResult handle(const AgentTask& task, EpisodeLog& log) override;

    // Executes resolved requests and applies the rule; error result when a
    // call fails or the rule cannot be applied.
    AgentResult invoke_and_synthesize(const std::vector<std::pair<ToolRequest, std::string>>& calls,
                                      const AnswerRule& rule, EpisodeLog& log);

private:
    ToolCache& cache_;
    std::shared_ptr<ChatBackend> backend_;
    MapAgentConfig config_;
    std::string prompt_;
};

}  // namespace geoqa
