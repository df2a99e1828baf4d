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

// Deterministic backends built from one gold instance.
//
// The oracle answers every purpose from the gold trace, grounded on the slots
// the episode actually predicted: gold slot values in SQL literals, tool
// parameters, entity references and rule limits are replaced by the predicted
// value of the same slot type and occurrence ("" when missing). With gold SLU
// the replies are the gold trace verbatim.

#include <memory>
#include <string>

#include "geoqa/chat.hpp"
#include "geoqa/domain.hpp"

namespace geoqa {

std::shared_ptr<ChatBackend> make_oracle_backend(const QAInstance& gold);

// Oracle everywhere except one corrupted stage:
//   slu   drops the first slot whose value the gold trace depends on
//   sql   emits a statement over a table that does not exist
//   tool  swaps travel modes / distance kinds and halves radii
enum class FaultStage { slu, sql, tool };
std::string_view to_string(FaultStage s);
std::shared_ptr<ChatBackend> make_fault_backend(const QAInstance& gold, FaultStage stage);

// True when the stage's gold output is consumed by the episode (SQL always,
// tools only with a non-empty tool trace, SLU when a slot feeds the trace).
bool stage_exercised(const QAInstance& gold, FaultStage stage);

}  // namespace geoqa
