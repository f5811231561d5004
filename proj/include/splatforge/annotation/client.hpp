// Copyright Contributors to the Splatforge Project
// SPDX-License-Identifier: Apache-2.0
//
// Chat-completion requests, the retrying/throttling client, and the fixture-driven mock backend.
// The HTTP transport lives in http_backend.hpp so that only callers who need the network pull
// in the HTTP library.
//
#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <boost/archive/iterators/base64_from_binary.hpp>
#include <boost/archive/iterators/transform_width.hpp>
#include <nlohmann/json.hpp>

#include "splatforge/annotation/prompts.hpp"
#include "splatforge/annotation/views.hpp"
#include "splatforge/core/image_io.hpp"
#include "splatforge/core/json_fields.hpp"
#include "splatforge/core/log.hpp"

namespace splatforge {

/// The service could not be reached or answered with a failure status.
class TransportError : public Error {
  public:
    TransportError(const std::string& what, bool retryable = true, int attempts = 0)
        : Error(what), retryable_(retryable), attempts_(attempts) {}
    bool retryable() const noexcept { return retryable_; }
    int attempts() const noexcept { return attempts_; }

  private:
    bool retryable_;
    int attempts_;
};

/// The reply text is not a JSON object of the expected shape.
class ReplyParseError : public ParseError {
  public:
    ReplyParseError(const std::string& field, const std::string& what) : ParseError("reply", field, what) {}
};

struct AnnotationClientConfig {
    std::string endpoint = "http://127.0.0.1:8000/v1/chat/completions";
    std::string credential_env = "SPLATFORGE_ANNOTATION_KEY";  // name of the variable, never the secret
    std::string model = "vision-chat";
    int max_retries = 2;
    double timeout_s = 60.0;
    int max_in_flight = 4;
    double backoff_initial_s = 1.0;
    double backoff_max_s = 30.0;

    void validate() const {
        if (endpoint.empty()) throw ConfigError("annotation.endpoint: must not be empty");
        if (max_retries < 0) throw ConfigError("annotation.max_retries: must be >= 0");
        if (!(timeout_s > 0)) throw ConfigError("annotation.timeout_s: must be > 0");
        if (max_in_flight < 1) throw ConfigError("annotation.max_in_flight: must be >= 1");
        if (!(backoff_initial_s >= 0) || !(backoff_max_s >= backoff_initial_s))
            throw ConfigError("annotation.backoff: need 0 <= backoff_initial_s <= backoff_max_s");
    }
};

inline void to_json(nlohmann::json& j, const AnnotationClientConfig& c) {
    j = {{"endpoint", c.endpoint},           {"credential_env", c.credential_env},
         {"model", c.model},                 {"max_retries", c.max_retries},
         {"timeout_s", c.timeout_s},         {"max_in_flight", c.max_in_flight},
         {"backoff_initial_s", c.backoff_initial_s}, {"backoff_max_s", c.backoff_max_s}};
}

inline AnnotationClientConfig annotation_client_config_from_json(const nlohmann::json& j,
                                                                 const std::string& path = "annotation") {
    AnnotationClientConfig c;
    JsonFields f(j, path);
    f.get("endpoint", c.endpoint);
    f.get("credential_env", c.credential_env);
    f.get("model", c.model);
    f.get("max_retries", c.max_retries);
    f.get("timeout_s", c.timeout_s);
    f.get("max_in_flight", c.max_in_flight);
    f.get("backoff_initial_s", c.backoff_initial_s);
    f.get("backoff_max_s", c.backoff_max_s);
    f.finish();
    c.validate();
    return c;
}

/// Delay before retry k (0-based): min(initial · 2^k, max). Non-decreasing in k.
inline double backoff_delay(const AnnotationClientConfig& c, int k) {
    return std::min(c.backoff_max_s, c.backoff_initial_s * std::pow(2.0, k));
}

inline std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
    using namespace boost::archive::iterators;
    using It = base64_from_binary<transform_width<std::vector<std::uint8_t>::const_iterator, 6, 8>>;
    std::string out(It(bytes.begin()), It(bytes.end()));
    out.append((3 - bytes.size() % 3) % 3, '=');
    return out;
}

struct ChatRequest {
    std::string template_id;
    int template_version = 0;
    std::string model;
    std::string system;
    std::string user;
    std::vector<std::vector<std::uint8_t>> images_png;
};

inline ChatRequest make_chat_request(const PromptTemplate& t, const std::map<std::string, std::string>& vars,
                                     const std::array<OrthoView, 4>& views, const std::string& model) {
    ChatRequest r;
    r.template_id = t.id;
    r.template_version = t.version;
    r.model = model;
    r.system = render_prompt(t.system, vars);
    r.user = render_prompt(t.user, vars);
    for (const auto& v : views) r.images_png.push_back(encode_png(to_8bit(v.image)));
    return r;
}

/// Chat-completion request body. With include_images = false the base64 payloads are replaced
/// by a fixed marker so the body can be compared against golden files.
inline nlohmann::json request_body(const ChatRequest& r, bool include_images = true) {
    nlohmann::json content = nlohmann::json::array();
    content.push_back({{"type", "text"}, {"text", r.user}});
    for (const auto& png : r.images_png) {
        const std::string url = "data:image/png;base64," + (include_images ? base64_encode(png) : std::string("<omitted>"));
        content.push_back({{"type", "image_url"}, {"image_url", {{"url", url}}}});
    }
    return {{"model", r.model},
            {"temperature", 0},
            {"response_format", {{"type", "json_object"}}},
            {"messages",
             {{{"role", "system"}, {"content", r.system}}, {{"role", "user"}, {"content", content}}}}};
}

/// Produces the assistant's reply text for one request. Throws TransportError on failure.
class ChatBackend {
  public:
    virtual ~ChatBackend() = default;
    virtual std::string complete(const ChatRequest& request, double timeout_s) = 0;
};

/// Deterministic backend driven by fixtures [{template, match, reply}]: the first entry whose
/// template equals the request's template id and whose `match` occurs in the rendered user
/// prompt answers. `reply` may be an object (sent as compact JSON) or a raw string (sent
/// verbatim, for malformed-reply tests). An entry with "error": "<message>" instead of a reply
/// simulates a transport failure.
class MockBackend : public ChatBackend {
  public:
    struct Fixture {
        std::string template_id;
        std::string match;
        std::string reply;
        std::string error;
    };

    explicit MockBackend(std::vector<Fixture> fixtures) : fixtures_(std::move(fixtures)) {}
    MockBackend(MockBackend&& o) noexcept : fixtures_(std::move(o.fixtures_)), calls_(o.calls_.load()) {}

    static MockBackend from_json(const nlohmann::json& j, const std::string& source = "fixtures") {
        if (!j.is_array()) throw ParseError(source, "", "fixture file must be a JSON array");
        std::vector<Fixture> fx;
        for (std::size_t i = 0; i < j.size(); ++i) {
            const auto& e = j[i];
            const std::string at = "[" + std::to_string(i) + "]";
            if (!e.is_object() || !e.contains("template") || !e["template"].is_string())
                throw ParseError(source, at + ".template", "missing template id");
            Fixture f;
            f.template_id = e["template"].get<std::string>();
            if (e.contains("match")) {
                if (!e["match"].is_string()) throw ParseError(source, at + ".match", "must be a string");
                f.match = e["match"].get<std::string>();
            }
            if (e.contains("error")) {
                f.error = e["error"].is_string() ? e["error"].get<std::string>() : e["error"].dump();
            } else if (e.contains("reply")) {
                f.reply = e["reply"].is_string() ? e["reply"].get<std::string>() : e["reply"].dump();
            } else {
                throw ParseError(source, at + ".reply", "entry needs a reply or an error");
            }
            for (const auto& [k, v] : e.items())
                if (k != "template" && k != "match" && k != "reply" && k != "error")
                    throw ParseError(source, at + "." + k, "unknown fixture key");
            fx.push_back(std::move(f));
        }
        return MockBackend(std::move(fx));
    }

    static MockBackend from_file(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open fixture file " + path.string());
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string(), "", e.what());
        }
        return from_json(j, path.string());
    }

    std::string complete(const ChatRequest& request, double) override {
        calls_.fetch_add(1, std::memory_order_relaxed);
        for (const auto& f : fixtures_) {
            if (f.template_id != request.template_id || request.user.find(f.match) == std::string::npos) continue;
            if (!f.error.empty()) throw TransportError("mock transport failure: " + f.error);
            return f.reply;
        }
        throw TransportError("no mock fixture for template '" + request.template_id + "'", false);
    }

    std::size_t calls() const { return calls_.load(); }

  private:
    std::vector<Fixture> fixtures_;
    std::atomic<std::size_t> calls_{0};
};

/// Thread-safe front end: bounds concurrent requests by max_in_flight and retries retryable
/// transport failures up to max_retries times with exponential backoff.
class AnnotationClient {
  public:
    using Sleeper = std::function<void(double seconds)>;

    AnnotationClient(AnnotationClientConfig config, std::shared_ptr<ChatBackend> backend, Sleeper sleeper = {})
        : config_(std::move(config)), backend_(std::move(backend)), sleeper_(std::move(sleeper)) {
        config_.validate();
        if (!backend_) throw ConfigError("annotation: no backend");
        if (!sleeper_)
            sleeper_ = [](double s) { std::this_thread::sleep_for(std::chrono::duration<double>(s)); };
    }

    const AnnotationClientConfig& config() const { return config_; }

    std::string complete(const ChatRequest& request) {
        Slot slot(*this);
        for (int attempt = 0;; ++attempt) {
            try {
                return backend_->complete(request, config_.timeout_s);
            } catch (const TransportError& e) {
                const int attempts = attempt + 1;
                if (!e.retryable() || attempt >= config_.max_retries)
                    throw TransportError(std::string(e.what()) + " (after " + std::to_string(attempts) + " attempt" +
                                             (attempts == 1 ? "" : "s") + ")",
                                         e.retryable(), attempts);
                const double delay = backoff_delay(config_, attempt);
                log::warn("annotation request failed, retrying",
                          {{"template", request.template_id}, {"attempt", attempts}, {"delay_s", delay}, {"error", e.what()}});
                sleeper_(delay);
            }
        }
    }

  private:
    struct Slot {
        AnnotationClient& c;
        explicit Slot(AnnotationClient& client) : c(client) {
            std::unique_lock lock(c.mutex_);
            c.cv_.wait(lock, [&] { return c.in_flight_ < c.config_.max_in_flight; });
            ++c.in_flight_;
        }
        ~Slot() {
            {
                std::lock_guard lock(c.mutex_);
                --c.in_flight_;
            }
            c.cv_.notify_one();
        }
    };

    AnnotationClientConfig config_;
    std::shared_ptr<ChatBackend> backend_;
    Sleeper sleeper_;
    std::mutex mutex_;
    std::condition_variable cv_;
    int in_flight_ = 0;
};

}  // namespace splatforge
