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

// Operator commands: ingest, pairs, cache-populate, generate, validate,
// split, run, eval, ablate.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "geoqa/chat.hpp"

namespace geoqa {

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitConfig = 2, kExitBackend = 3 };

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CliPaths {
    std::filesystem::path fixtures, store, templates, cache, dataset, splits, runs;
};

struct CliConfig {
    CliPaths paths;
    HttpBackendConfig backend;  // endpoint empty = not configured
    std::vector<std::string> cities = {"Guangzhou", "Shenzhen"};
    std::size_t communities_per_city = 200;
    std::size_t pois_per_city = 150;
    std::uint64_t fixture_seed = 7;
    std::uint64_t generation_seed = 7;
    std::uint64_t split_seed = 7;
    std::size_t attempts_per_template = 100;
    std::size_t step_cap = 25;
    std::size_t parallelism = 4;

    static CliConfig defaults(const std::filesystem::path& workdir);
    // Relative paths inside the file resolve against workdir. Unknown keys and
    // anything that looks like a credential are rejected with ConfigError.
    static CliConfig from_json(const nlohmann::json& j, const std::filesystem::path& workdir);
    nlohmann::json to_json() const;
};

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace geoqa
