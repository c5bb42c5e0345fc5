#pragma once

#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "cogplan/cache.hpp"
#include "cogplan/errors.hpp"
#include "cogplan/remote_expert.hpp"
#include "cogplan/retrieval.hpp"

namespace cogplan {

struct RemoteSearchConfig {
    std::string base_url; // scheme://host[:port]
    std::string api_key;
    std::string path = "/search";
    int timeout_seconds = 60;
};

// COGPLAN_SEARCH_URL / COGPLAN_SEARCH_KEY
inline RemoteSearchConfig remote_search_config_from_env() {
    RemoteSearchConfig cfg;
    cfg.base_url = env_or("COGPLAN_SEARCH_URL");
    cfg.api_key = env_or("COGPLAN_SEARCH_KEY");
    return cfg;
}

// HTTP search client. Wire format (see README): POST {path} with
//   {"mode":"text"|"image", "query":..., "count":N, "image":locator?}
// answered by {"hits":[{source_id,title,body,image?,caption?,score}]}.
class RemoteSearchBackend : public SearchBackend {
public:
    explicit RemoteSearchBackend(RemoteSearchConfig config) : config_(std::move(config)) {
        if (config_.base_url.empty()) {
            throw ConfigError("search: COGPLAN_SEARCH_URL is not configured");
        }
    }

    std::vector<RawHit> text_search(const std::string& query, int k) override {
        nlohmann::json body{{"mode", "text"}, {"query", query}, {"count", k}};
        return post(body);
    }

    std::vector<RawHit> image_search(const ImageRef& image, const std::string& query,
                                     int max_results) override {
        nlohmann::json body{{"mode", "image"},
                            {"query", query},
                            {"count", max_results},
                            {"image", image.locator}};
        return post(body);
    }

private:
    std::vector<RawHit> post(const nlohmann::json& body) {
        httplib::Client client(config_.base_url);
        client.set_connection_timeout(config_.timeout_seconds);
        client.set_read_timeout(config_.timeout_seconds);
        httplib::Headers headers;
        if (!config_.api_key.empty()) {
            headers.emplace("Authorization", "Bearer " + config_.api_key);
        }
        httplib::Result res = client.Post(config_.path, headers, body.dump(), "application/json");
        if (!res) {
            throw RetrievalError("search: request to " + config_.base_url +
                                 " failed: " + httplib::to_string(res.error()));
        }
        if (res->status != 200) {
            throw RetrievalError("search: HTTP " + std::to_string(res->status) + ": " + res->body);
        }
        try {
            nlohmann::json j = nlohmann::json::parse(res->body);
            std::vector<RawHit> hits;
            for (const auto& h : j.at("hits")) hits.push_back(raw_hit_from_json(h));
            return hits;
        } catch (const nlohmann::json::exception& e) {
            throw RetrievalError("search: malformed response: " + std::string(e.what()));
        }
    }

    RemoteSearchConfig config_;
};

} // namespace cogplan
