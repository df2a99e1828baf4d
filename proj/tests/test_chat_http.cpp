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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "geoqa/chat.hpp"

using namespace geoqa;

namespace {

struct LocalServer {
    httplib::Server server;
    int port = 0;
    std::thread thread;
    std::atomic<int> hits{0};
    std::string last_auth;
    nlohmann::json last_body;
    int fail_first = 0;

    LocalServer() {
        server.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            const int n = hits++;
            last_auth = req.get_header_value("Authorization");
            last_body = nlohmann::json::parse(req.body);
            if (n < fail_first) {
                res.status = 503;
                return;
            }
            nlohmann::json out = {{"choices", {{{"message", {{"role", "assistant"}, {"content", "STEP db_agent: go"}}}}}}};
            res.set_content(out.dump(), "application/json");
        });
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~LocalServer() {
        server.stop();
        thread.join();
    }
    HttpBackendConfig config() const {
        HttpBackendConfig c;
        c.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
        c.model = "local-test";
        c.timeout_seconds = 5;
        c.max_retries = 2;
        return c;
    }
};

ChatRequest sample() {
    ChatRequest r;
    r.purpose = Purpose::plan;
    r.system = "You plan.";
    r.messages.push_back({"user", "Question?"});
    return r;
}

}  // namespace

TEST_CASE("openai-compatible round trip") {
    LocalServer s;
    ::setenv("GEOQA_TEST_KEY", "sk-local", 1);
    auto c = s.config();
    c.api_key_env = "GEOQA_TEST_KEY";
    HttpChatBackend b(c);
    CHECK(b.complete(sample()) == "STEP db_agent: go");
    CHECK(s.last_auth == "Bearer sk-local");
    CHECK(s.last_body["model"] == "local-test");
    REQUIRE(s.last_body["messages"].size() == 2);
    CHECK(s.last_body["messages"][0]["role"] == "system");
    CHECK(s.last_body["messages"][1]["content"] == "Question?");
}

TEST_CASE("transient errors are retried") {
    LocalServer s;
    s.fail_first = 2;
    HttpChatBackend b(s.config());
    CHECK(b.complete(sample()) == "STEP db_agent: go");
    CHECK(s.hits == 3);
    CHECK(s.last_auth.empty());
}

TEST_CASE("persistent errors surface as BackendError") {
    LocalServer s;
    s.fail_first = 100;
    HttpChatBackend b(s.config());
    CHECK_THROWS_AS(b.complete(sample()), BackendError);
    CHECK(s.hits == 3);
}

TEST_CASE("missing key variable is a configuration error") {
    ::unsetenv("GEOQA_TEST_MISSING");
    HttpBackendConfig c;
    c.endpoint = "http://127.0.0.1:1/x";
    c.model = "m";
    c.api_key_env = "GEOQA_TEST_MISSING";
    CHECK_THROWS_AS(HttpChatBackend{c}, std::invalid_argument);
}
