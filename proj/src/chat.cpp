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

#include <httplib.h>

#include "geoqa/chat.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include "geoqa/text.hpp"

namespace geoqa {

std::string_view to_string(Purpose p) {
    switch (p) {
        case Purpose::plan: return "plan";
        case Purpose::replan: return "replan";
        case Purpose::sufficiency: return "sufficiency";
        case Purpose::finalize: return "finalize";
        case Purpose::caption: return "caption";
        case Purpose::sql: return "sql";
        case Purpose::tool: return "tool";
        case Purpose::slu: return "slu";
        case Purpose::paraphrase: return "paraphrase";
    }
    return "?";
}

void ScriptedBackend::push(Purpose p, std::string response) {
    std::lock_guard lock(mu_);
    queues_[p].push_back(std::move(response));
}

void ScriptedBackend::set_responder(Purpose p, std::function<std::optional<std::string>(const ChatRequest&)> fn) {
    std::lock_guard lock(mu_);
    responders_[p] = std::move(fn);
}

std::string ScriptedBackend::complete(const ChatRequest& request) {
    std::function<std::optional<std::string>(const ChatRequest&)> responder;
    {
        std::lock_guard lock(mu_);
        ++calls_[request.purpose];
        if (auto it = responders_.find(request.purpose); it != responders_.end()) responder = it->second;
    }
    if (responder) {
        if (auto r = responder(request)) return *r;
    }
    {
        std::lock_guard lock(mu_);
        auto& q = queues_[request.purpose];
        if (!q.empty()) {
            auto r = std::move(q.front());
            q.pop_front();
            return r;
        }
    }
    if (fallback_) return fallback_->complete(request);
    throw BackendError("scripted backend has no response for purpose " + std::string(to_string(request.purpose)));
}

std::size_t ScriptedBackend::calls(Purpose p) const {
    std::lock_guard lock(mu_);
    auto it = calls_.find(p);
    return it == calls_.end() ? 0 : it->second;
}

HttpChatBackend::HttpChatBackend(HttpBackendConfig config) : config_(std::move(config)) {
    if (config_.endpoint.empty()) throw std::invalid_argument("HTTP backend needs an endpoint URL");
    if (config_.model.empty()) throw std::invalid_argument("HTTP backend needs a model name");
    if (!config_.api_key_env.empty()) {
        const char* key = std::getenv(config_.api_key_env.c_str());
        if (!key || !*key) throw std::invalid_argument("environment variable " + config_.api_key_env + " is not set");
        api_key_ = key;
    }
    const auto scheme_end = config_.endpoint.find("://");
    if (scheme_end == std::string::npos) throw std::invalid_argument("endpoint must be an http(s) URL");
    const auto path_start = config_.endpoint.find('/', scheme_end + 3);
    scheme_host_port_ = config_.endpoint.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/v1/chat/completions" : config_.endpoint.substr(path_start);
}

nlohmann::json HttpChatBackend::request_body(const ChatRequest& request) const {
    nlohmann::json messages = nlohmann::json::array();
    if (!request.system.empty()) messages.push_back({{"role", "system"}, {"content", request.system}});
    for (const auto& m : request.messages) messages.push_back({{"role", m.role}, {"content", m.content}});
    return {{"model", config_.model}, {"messages", std::move(messages)}, {"temperature", config_.temperature}};
}

std::string HttpChatBackend::complete(const ChatRequest& request) {
    httplib::Client client(scheme_host_port_);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
    const auto body = request_body(request).dump();

    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(200 * attempt));
        auto res = client.Post(path_, headers, body, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) throw BackendError("HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 300));
        try {
            const auto j = nlohmann::json::parse(res->body);
            return j.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const std::exception& e) {
            throw BackendError(std::string("malformed completion response: ") + e.what());
        }
    }
    throw BackendError("chat backend unreachable after retries: " + last_error);
}

std::filesystem::path asset_dir() {
    if (const char* env = std::getenv("GEOQA_ASSET_DIR"); env && *env) return env;
    return GEOQA_ASSET_DIR;
}

std::string load_asset(const std::string& relative) { return read_file(asset_dir() / relative); }

}  // namespace geoqa
