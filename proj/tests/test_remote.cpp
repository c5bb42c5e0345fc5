// Remote backends are exercised against in-process HTTP servers on the
// loopback interface; nothing here touches the network.

#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <thread>

#include <httplib.h>

#include "helpers.hpp"

using namespace cogplan;

namespace {

// Minimal in-process server; picks a free port on 127.0.0.1.
class TestServer {
public:
    explicit TestServer(std::function<void(httplib::Server&)> setup) {
        setup(server_);
        port_ = server_.bind_to_any_port("127.0.0.1");
        REQUIRE(port_ > 0);
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~TestServer() {
        server_.stop();
        thread_.join();
    }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

} // namespace

TEST_CASE("remote expert speaks the chat-completion contract", "[remote]") {
    nlohmann::json seen_body;
    std::string seen_auth;
    TestServer server([&](httplib::Server& s) {
        s.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
            seen_body = nlohmann::json::parse(req.body);
            auto it = req.headers.find("Authorization");
            if (it != req.headers.end()) seen_auth = it->second;
            nlohmann::json out = {
                {"choices", {{{"message", {{"role", "assistant"}, {"content", "Action: NO_SEARCH"}}}}}},
                {"usage", {{"prompt_tokens", 10}, {"completion_tokens", 3}}}};
            res.set_content(out.dump(), "application/json");
        });
    });

    RemoteExpertConfig cfg;
    cfg.base_url = server.url();
    cfg.api_key = "secret-key";
    cfg.model = "test-model";
    RemoteExpert expert(cfg);

    ExpertRequest req;
    req.system_prompt = "system text";
    req.user_text = "user question";
    req.images.push_back(
        ImageRef{testutil::demo_asset("astro_bot_screenshot.png"), MediaKind::Path});
    req.images.push_back(ImageRef{"https://img.example/x.png", MediaKind::Url});
    req.max_output_tokens = 77;
    req.role = ExpertRole::SelectAction;

    ExpertResponse resp = expert.complete(req);
    CHECK(resp.text == "Action: NO_SEARCH");
    CHECK(resp.prompt_tokens == 10);
    CHECK(resp.completion_tokens == 3);
    CHECK(resp.latency_ms >= 0.0);

    CHECK(seen_auth == "Bearer secret-key");
    CHECK(seen_body.at("model") == "test-model");
    CHECK(seen_body.at("max_tokens") == 77);
    REQUIRE(seen_body.at("messages").size() == 2);
    CHECK(seen_body["messages"][0]["role"] == "system");
    const auto& content = seen_body["messages"][1]["content"];
    REQUIRE(content.size() == 3); // text + two images
    CHECK(content[0]["type"] == "text");
    CHECK(content[1]["type"] == "image_url");
    std::string data_url = content[1]["image_url"]["url"].get<std::string>();
    CHECK(data_url.rfind("data:image/png;base64,", 0) == 0);
    CHECK(content[2]["image_url"]["url"] == "https://img.example/x.png");
}

TEST_CASE("remote expert surfaces HTTP and transport failures", "[remote]") {
    TestServer server([&](httplib::Server& s) {
        s.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
            res.status = 500;
            res.set_content("boom", "text/plain");
        });
    });
    RemoteExpertConfig cfg;
    cfg.base_url = server.url();
    cfg.model = "m";
    RemoteExpert expert(cfg);
    ExpertRequest req;
    req.user_text = "hi";
    CHECK_THROWS_AS(expert.complete(req), TransportError);

    RemoteExpertConfig dead;
    dead.base_url = "http://127.0.0.1:1"; // nothing listens there
    dead.model = "m";
    dead.timeout_seconds = 2;
    RemoteExpert unreachable(dead);
    CHECK_THROWS_AS(unreachable.complete(req), TransportError);

    RemoteExpertConfig missing;
    CHECK_THROWS_AS(RemoteExpert{missing}, ConfigError);
}

TEST_CASE("remote expert rejects malformed completion payloads", "[remote]") {
    TestServer server([&](httplib::Server& s) {
        s.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
            res.set_content("{\"unexpected\": true}", "application/json");
        });
    });
    RemoteExpertConfig cfg;
    cfg.base_url = server.url();
    cfg.model = "m";
    RemoteExpert expert(cfg);
    ExpertRequest req;
    req.user_text = "hi";
    CHECK_THROWS_AS(expert.complete(req), TransportError);
}

TEST_CASE("remote search client round-trips hits", "[remote]") {
    TestServer server([&](httplib::Server& s) {
        s.Post("/search", [&](const httplib::Request& req, httplib::Response& res) {
            nlohmann::json body = nlohmann::json::parse(req.body);
            nlohmann::json hits = nlohmann::json::array();
            if (body.at("mode") == "text") {
                hits.push_back({{"source_id", "u1"},
                                {"title", "t"},
                                {"body", "text body for " + body.at("query").get<std::string>()},
                                {"score", 2.0}});
            } else {
                hits.push_back({{"source_id", "i1"},
                                {"title", "c"},
                                {"body", ""},
                                {"caption", "caption one"},
                                {"image", {{"locator", "https://img.example/1.png"},
                                           {"media_kind", "url"}}},
                                {"score", 1.0}});
            }
            res.set_content(nlohmann::json{{"hits", hits}}.dump(), "application/json");
        });
    });

    RemoteSearchConfig cfg;
    cfg.base_url = server.url();
    RemoteSearchBackend search(cfg);

    auto text_hits = search.text_search("eiffel height", 5);
    REQUIRE(text_hits.size() == 1);
    CHECK(text_hits[0].source_id == "u1");
    CHECK(text_hits[0].body == "text body for eiffel height");

    auto image_hits =
        search.image_search(ImageRef{"https://img.example/q.png", MediaKind::Url}, "tower", 6);
    REQUIRE(image_hits.size() == 1);
    CHECK(image_hits[0].caption == "caption one");
    REQUIRE(image_hits[0].image.has_value());
    CHECK(image_hits[0].image->media_kind == MediaKind::Url);

    RemoteSearchConfig dead;
    dead.base_url = "http://127.0.0.1:1";
    dead.timeout_seconds = 2;
    RemoteSearchBackend unreachable(dead);
    CHECK_THROWS_AS(unreachable.text_search("q", 5), RetrievalError);
}
