// Copyright Contributors to the Splatforge Project
// SPDX-License-Identifier: Apache-2.0
//
// HTTP(S) transport for chat-completion services. HTTPS needs CPPHTTPLIB_OPENSSL_SUPPORT.
//
#pragma once

#include <cstdlib>
#include <regex>
#include <string>

// Eigen first: httplib pulls in <resolv.h>, whose `_res` macro breaks Eigen's product kernels.
#include "splatforge/annotation/client.hpp"

#include <httplib.h>

namespace splatforge {

class HttpBackend : public ChatBackend {
  public:
    /// Reads the bearer token from the environment variable named by config.credential_env;
    /// an unset or empty variable sends no Authorization header.
    explicit HttpBackend(const AnnotationClientConfig& config) {
        static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)");
        std::smatch m;
        if (!std::regex_match(config.endpoint, m, url)) throw ConfigError("annotation.endpoint: not an http(s) URL");
        base_ = m[1].str();
        path_ = m[2].matched ? m[2].str() : "/";
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
        if (base_.rfind("https://", 0) == 0) throw ConfigError("annotation.endpoint: https needs a build with OpenSSL");
#endif
        if (!config.credential_env.empty())
            if (const char* key = std::getenv(config.credential_env.c_str()); key && *key) token_ = key;
    }

    std::string complete(const ChatRequest& request, double timeout_s) override {
        httplib::Client cli(base_);
        const auto sec = static_cast<time_t>(timeout_s);
        const auto usec = static_cast<time_t>((timeout_s - static_cast<double>(sec)) * 1e6);
        cli.set_connection_timeout(sec, usec);
        cli.set_read_timeout(sec, usec);
        cli.set_write_timeout(sec, usec);
        httplib::Headers headers;
        if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);
        const auto res = cli.Post(path_, headers, request_body(request).dump(), "application/json");
        if (!res) throw TransportError("request to " + base_ + path_ + " failed: " + httplib::to_string(res.error()));
        if (res->status != 200) {
            const bool retryable = res->status == 408 || res->status == 429 || res->status >= 500;
            throw TransportError("HTTP " + std::to_string(res->status) + " from " + base_ + path_, retryable);
        }
        nlohmann::json body;
        try {
            body = nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception& e) {
            throw ReplyParseError("body", std::string("service response is not JSON: ") + e.what());
        }
        const auto* content = &body;
        for (const char* key : {"choices", "0", "message", "content"}) {
            if (content->is_array() && std::string(key) == "0" && !content->empty()) {
                content = &(*content)[0];
            } else if (content->is_object() && content->contains(key)) {
                content = &(*content)[key];
            } else {
                throw ReplyParseError("choices", "service response has no choices[0].message.content");
            }
        }
        if (!content->is_string()) throw ReplyParseError("choices", "message content is not a string");
        return content->get<std::string>();
    }

  private:
    std::string base_;
    std::string path_;
    std::string token_;
};

}  // namespace splatforge
