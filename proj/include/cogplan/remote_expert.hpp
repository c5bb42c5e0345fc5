#pragma once

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "cogplan/errors.hpp"
#include "cogplan/expert.hpp"
#include "cogplan/text.hpp"

namespace cogplan {

struct RemoteExpertConfig {
    std::string base_url;  // scheme://host[:port]
    std::string api_key;
    std::string model;
    std::string path = "/v1/chat/completions";
    int timeout_seconds = 120;
};

inline std::string env_or(const char* name, const std::string& fallback = "") {
    const char* v = std::getenv(name);
    return v ? std::string(v) : fallback;
}

// COGPLAN_EXPERT_URL / COGPLAN_EXPERT_KEY / COGPLAN_EXPERT_MODEL
inline RemoteExpertConfig remote_expert_config_from_env() {
    RemoteExpertConfig cfg;
    cfg.base_url = env_or("COGPLAN_EXPERT_URL");
    cfg.api_key = env_or("COGPLAN_EXPERT_KEY");
    cfg.model = env_or("COGPLAN_EXPERT_MODEL");
    return cfg;
}

namespace detail {

inline std::string read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw TransportError("cannot read image file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string guess_image_mime(const std::string& path) {
    auto ends_with = [&](const char* suffix) {
        std::string s = to_lower(path);
        std::string suf(suffix);
        return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
    };
    if (ends_with(".jpg") || ends_with(".jpeg")) return "image/jpeg";
    if (ends_with(".gif")) return "image/gif";
    if (ends_with(".webp")) return "image/webp";
    return "image/png";
}

// Per the chat-completion contract: remote URLs pass through, local files
// and inline payloads become data URLs.
inline nlohmann::json image_content_part(const ImageRef& image) {
    std::string url;
    switch (image.media_kind) {
    case MediaKind::Url:
        url = image.locator;
        break;
    case MediaKind::Path:
        url = "data:" + guess_image_mime(image.locator) + ";base64," +
              base64_encode(read_file_bytes(image.locator));
        break;
    case MediaKind::InlineBytes:
        url = "data:image/png;base64," + base64_encode(image.locator);
        break;
    }
    return {{"type", "image_url"}, {"image_url", {{"url", url}}}};
}

} // namespace detail

// Chat-completion client for any OpenAI-compatible endpoint. One complete()
// call is one POST; retries belong to the calling operation.
class RemoteExpert : public ExpertBackend {
public:
    explicit RemoteExpert(RemoteExpertConfig config) : config_(std::move(config)) {
        if (config_.base_url.empty()) {
            throw ConfigError("expert: COGPLAN_EXPERT_URL is not configured");
        }
        if (config_.model.empty()) {
            throw ConfigError("expert: COGPLAN_EXPERT_MODEL is not configured");
        }
    }

    ExpertResponse complete(const ExpertRequest& request) override {
        nlohmann::json content = nlohmann::json::array();
        content.push_back({{"type", "text"}, {"text", request.user_text}});
        for (const auto& image : request.images) {
            content.push_back(detail::image_content_part(image));
        }
        nlohmann::json messages = nlohmann::json::array();
        if (!request.system_prompt.empty()) {
            messages.push_back({{"role", "system"}, {"content", request.system_prompt}});
        }
        messages.push_back({{"role", "user"}, {"content", content}});
        nlohmann::json body = {{"model", config_.model},
                               {"messages", messages},
                               {"max_tokens", request.max_output_tokens}};

        httplib::Client client(config_.base_url);
        client.set_connection_timeout(config_.timeout_seconds);
        client.set_read_timeout(config_.timeout_seconds);
        httplib::Headers headers;
        if (!config_.api_key.empty()) {
            headers.emplace("Authorization", "Bearer " + config_.api_key);
        }

        auto start = std::chrono::steady_clock::now();
        httplib::Result res = client.Post(config_.path, headers, body.dump(), "application/json");
        auto elapsed = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - start)
                           .count();

        if (!res) {
            throw TransportError("expert: request to " + config_.base_url +
                                 " failed: " + httplib::to_string(res.error()));
        }
        if (res->status != 200) {
            throw TransportError("expert: HTTP " + std::to_string(res->status) + ": " + res->body);
        }
        try {
            nlohmann::json j = nlohmann::json::parse(res->body);
            ExpertResponse out;
            out.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
            if (j.contains("usage")) {
                out.prompt_tokens = j["usage"].value("prompt_tokens", 0LL);
                out.completion_tokens = j["usage"].value("completion_tokens", 0LL);
            }
            out.latency_ms = elapsed;
            return out;
        } catch (const nlohmann::json::exception& e) {
            throw TransportError("expert: malformed completion response: " + std::string(e.what()));
        }
    }

private:
    RemoteExpertConfig config_;
};

} // namespace cogplan
