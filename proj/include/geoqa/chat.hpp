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

// Chat-completion backend abstraction shared by the supervisor, the
// specialists, the few-shot SLU strategy and the paraphrase hook.

#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace geoqa {

// What a completion is for. Real backends only see the prompt text; the
// oracle and scripted backends dispatch on this tag and on the structured
// context.
enum class Purpose { plan, replan, sufficiency, finalize, caption, sql, tool, slu, paraphrase };

std::string_view to_string(Purpose p);

struct ChatMessage {
    std::string role;  // "user" | "assistant"
    std::string content;
};

struct ChatRequest {
    Purpose purpose = Purpose::plan;
    std::string system;
    std::vector<ChatMessage> messages;
    nlohmann::json context = nlohmann::json::object();
};

class BackendError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual std::string name() const = 0;
    // Throws BackendError when the backend cannot produce a completion.
    virtual std::string complete(const ChatRequest& request) = 0;
};

// Replays queued responses per purpose; when a queue runs dry it delegates to
// the fallback (or throws BackendError without one).
class ScriptedBackend : public ChatBackend {
public:
    explicit ScriptedBackend(std::shared_ptr<ChatBackend> fallback = nullptr) : fallback_(std::move(fallback)) {}

    void push(Purpose p, std::string response);
    // Responder consulted before queues; returning nullopt falls through.
    void set_responder(Purpose p, std::function<std::optional<std::string>(const ChatRequest&)> fn);

    std::string name() const override { return "scripted"; }
    std::string complete(const ChatRequest& request) override;

    std::size_t calls(Purpose p) const;

private:
    std::shared_ptr<ChatBackend> fallback_;
    mutable std::mutex mu_;
    std::map<Purpose, std::deque<std::string>> queues_;
    std::map<Purpose, std::function<std::optional<std::string>(const ChatRequest&)>> responders_;
    std::map<Purpose, std::size_t> calls_;
};

// OpenAI-style /v1/chat/completions client. The API key is read from the
// named environment variable at construction; it is never accepted directly.
struct HttpBackendConfig {
    std::string endpoint;  // e.g. http://127.0.0.1:8000/v1/chat/completions
    std::string model;
    std::string api_key_env;  // empty: no Authorization header
    double temperature = 0.0;
    int timeout_seconds = 60;
    int max_retries = 2;
};

class HttpChatBackend : public ChatBackend {
public:
    explicit HttpChatBackend(HttpBackendConfig config);

    std::string name() const override { return "http:" + config_.model; }
    std::string complete(const ChatRequest& request) override;

    // The JSON body sent for a request; exposed for tests.
    nlohmann::json request_body(const ChatRequest& request) const;

private:
    HttpBackendConfig config_;
    std::string api_key_;
    std::string scheme_host_port_;
    std::string path_;
};

// Loads a versioned text asset (prompts, few-shot files) from the asset
// directory, or from GEOQA_ASSET_DIR in the environment when set.
std::filesystem::path asset_dir();
std::string load_asset(const std::string& relative);

}  // namespace geoqa
