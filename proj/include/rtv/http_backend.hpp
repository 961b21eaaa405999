#pragma once

#include <chrono>
#include <cstdlib>
#include <memory>
#include <string>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "rtv/backend.hpp"

namespace rtv {

// Live chat-completion endpoint: one stateless request per call, shared
// rate limiter, bounded retries on transport failures. Provider quirks are
// confined to the request/reply adapter.
struct HttpBackendConfig {
    std::string endpoint_url;          // scheme://host[:port][/path-prefix]
    std::string provider = "openai";   // "openai" | "anthropic"
    std::string model;
    double temperature = 0.3;
    std::string api_key_env;           // credential read from this env var
    double rate_limit_seconds = 10.0;
    int max_retries = 3;
    double retry_backoff_seconds = 1.0;
    double timeout_seconds = 120.0;
    int max_tokens = 4096;
};

class HttpBackend : public TranslatorBackend {
  public:
    HttpBackend(HttpBackendConfig config, std::shared_ptr<RateLimiter> limiter)
        : config_(std::move(config)), limiter_(std::move(limiter)) {
        split_url(config_.endpoint_url, base_, path_prefix_);
        if (!config_.api_key_env.empty()) {
            const char* key = std::getenv(config_.api_key_env.c_str());
            api_key_ = key ? key : "";
        }
        if (config_.provider != "openai" && config_.provider != "anthropic") {
            throw ConfigError("unknown provider '" + config_.provider + "'");
        }
    }

    std::string name() const override { return "live:" + config_.provider; }

  private:
    std::string do_complete(const std::string& prompt) override {
        std::string body = strip_marker(prompt);
        nlohmann::json request;
        std::string path;
        httplib::Headers headers;
        if (config_.provider == "anthropic") {
            path = path_prefix_ + "/v1/messages";
            request = {{"model", config_.model},
                       {"max_tokens", config_.max_tokens},
                       {"temperature", config_.temperature},
                       {"messages", {{{"role", "user"}, {"content", body}}}}};
            headers.emplace("x-api-key", api_key_);
            headers.emplace("anthropic-version", "2023-06-01");
        } else {
            path = path_prefix_ + "/v1/chat/completions";
            request = {{"model", config_.model},
                       {"temperature", config_.temperature},
                       {"messages", {{{"role", "user"}, {"content", body}}}}};
            headers.emplace("Authorization", "Bearer " + api_key_);
        }

        std::string last_error;
        for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
            if (attempt > 0) {
                std::this_thread::sleep_for(std::chrono::milliseconds(
                    static_cast<long long>(config_.retry_backoff_seconds * 1000.0 * attempt)));
            }
            if (limiter_) limiter_->acquire();
            httplib::Client client(base_);
            client.set_connection_timeout(static_cast<time_t>(config_.timeout_seconds), 0);
            client.set_read_timeout(static_cast<time_t>(config_.timeout_seconds), 0);
            auto res = client.Post(path, headers, request.dump(), "application/json");
            if (!res) {
                last_error = httplib::to_string(res.error());
                continue;
            }
            if (res->status == 401 || res->status == 403) {
                throw BackendError("auth-failure: HTTP " + std::to_string(res->status) +
                                   " from " + base_);
            }
            if (res->status >= 500 || res->status == 429) {
                last_error = "HTTP " + std::to_string(res->status);
                continue;
            }
            if (res->status != 200) {
                throw BackendError("malformed-response: HTTP " + std::to_string(res->status) +
                                   ": " + res->body.substr(0, 200));
            }
            return extract_text(res->body);
        }
        throw BackendError("transport-failure after " + std::to_string(config_.max_retries) +
                           " retries: " + last_error);
    }

    std::string extract_text(const std::string& body) const {
        try {
            nlohmann::json reply = nlohmann::json::parse(body);
            if (config_.provider == "anthropic") {
                return reply.at("content").at(0).at("text").get<std::string>();
            }
            return reply.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw BackendError(std::string("malformed-response: ") + e.what() + ": " +
                               body.substr(0, 200));
        }
    }

    static void split_url(const std::string& url, std::string& base, std::string& prefix) {
        size_t scheme = url.find("://");
        if (scheme == std::string::npos) {
            throw ConfigError("endpoint_url must include a scheme: " + url);
        }
        size_t path = url.find('/', scheme + 3);
        if (path == std::string::npos) {
            base = url;
            prefix = "";
        } else {
            base = url.substr(0, path);
            prefix = url.substr(path);
            while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
        }
    }

    HttpBackendConfig config_;
    std::shared_ptr<RateLimiter> limiter_;
    std::string base_;
    std::string path_prefix_;
    std::string api_key_;
};

}  // namespace rtv
