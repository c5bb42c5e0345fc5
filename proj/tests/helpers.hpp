#pragma once

// Shared test scaffolding: fixture paths, a temp-dir guard, and
// instrumented backends.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include "cogplan/cogplan.hpp"

namespace testutil {

inline std::string repo_dir() { return COGPLAN_REPO_DIR; }
inline std::string demo_dataset() { return repo_dir() + "/demo/dataset.jsonl"; }
inline std::string demo_corpus() { return repo_dir() + "/demo/corpus"; }
inline std::string demo_script(const std::string& name) {
    return repo_dir() + "/demo/scripts/" + name;
}
inline std::string demo_asset(const std::string& name) {
    return repo_dir() + "/demo/assets/" + name;
}

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("cogplan_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::string str() const { return path_.string(); }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

// Counts calls into an inner search backend; used to observe cache behavior.
class CountingSearchBackend : public cogplan::SearchBackend {
public:
    explicit CountingSearchBackend(std::shared_ptr<cogplan::SearchBackend> inner)
        : inner_(std::move(inner)) {}

    std::vector<cogplan::RawHit> text_search(const std::string& query, int k) override {
        {
            std::lock_guard<std::mutex> lock(mu_);
            ++text_calls_;
            queries_.push_back(query);
        }
        return inner_->text_search(query, k);
    }
    std::vector<cogplan::RawHit> image_search(const cogplan::ImageRef& image,
                                              const std::string& query, int max_results) override {
        {
            std::lock_guard<std::mutex> lock(mu_);
            ++image_calls_;
            queries_.push_back(query);
        }
        return inner_->image_search(image, query, max_results);
    }

    int text_calls() const { return text_calls_; }
    int image_calls() const { return image_calls_; }
    std::vector<std::string> queries() const {
        std::lock_guard<std::mutex> lock(mu_);
        return queries_;
    }

private:
    std::shared_ptr<cogplan::SearchBackend> inner_;
    mutable std::mutex mu_;
    std::atomic<int> text_calls_{0};
    std::atomic<int> image_calls_{0};
    std::vector<std::string> queries_;
};

// Search backend driven by plain functions; default behavior throws.
class FnSearchBackend : public cogplan::SearchBackend {
public:
    std::function<std::vector<cogplan::RawHit>(const std::string&, int)> on_text;
    std::function<std::vector<cogplan::RawHit>(const cogplan::ImageRef&, const std::string&, int)>
        on_image;

    std::vector<cogplan::RawHit> text_search(const std::string& query, int k) override {
        if (!on_text) throw cogplan::RetrievalError("no text_search handler");
        return on_text(query, k);
    }
    std::vector<cogplan::RawHit> image_search(const cogplan::ImageRef& image,
                                              const std::string& query, int max_results) override {
        if (!on_image) throw cogplan::RetrievalError("no image_search handler");
        return on_image(image, query, max_results);
    }
};

// Expert backend driven by a function of the request.
class FnExpert : public cogplan::ExpertBackend {
public:
    explicit FnExpert(std::function<std::string(const cogplan::ExpertRequest&)> fn)
        : fn_(std::move(fn)) {}

    cogplan::ExpertResponse complete(const cogplan::ExpertRequest& request) override {
        cogplan::ExpertResponse resp;
        resp.text = fn_(request);
        resp.prompt_tokens = static_cast<long long>(cogplan::ws_token_count(request.user_text));
        resp.completion_tokens = static_cast<long long>(cogplan::ws_token_count(resp.text));
        return resp;
    }

private:
    std::function<std::string(const cogplan::ExpertRequest&)> fn_;
};

// Records every request passing through to an inner expert.
class RecordingExpert : public cogplan::ExpertBackend {
public:
    explicit RecordingExpert(std::shared_ptr<cogplan::ExpertBackend> inner)
        : inner_(std::move(inner)) {}

    cogplan::ExpertResponse complete(const cogplan::ExpertRequest& request) override {
        {
            std::lock_guard<std::mutex> lock(mu_);
            requests_.push_back(request);
        }
        return inner_->complete(request);
    }

    std::vector<cogplan::ExpertRequest> requests() const {
        std::lock_guard<std::mutex> lock(mu_);
        return requests_;
    }
    std::vector<cogplan::ExpertRequest> requests_with_role(cogplan::ExpertRole role) const {
        std::vector<cogplan::ExpertRequest> out;
        for (const auto& r : requests()) {
            if (r.role == role) out.push_back(r);
        }
        return out;
    }

private:
    std::shared_ptr<cogplan::ExpertBackend> inner_;
    mutable std::mutex mu_;
    std::vector<cogplan::ExpertRequest> requests_;
};

inline cogplan::RawHit text_hit(const std::string& id, const std::string& body,
                                double score = 1.0) {
    cogplan::RawHit hit;
    hit.source_id = id;
    hit.title = id;
    hit.body = body;
    hit.score = score;
    return hit;
}

inline cogplan::RawHit image_hit(const std::string& id, const std::string& caption,
                                 double score = 1.0) {
    cogplan::RawHit hit;
    hit.source_id = id;
    hit.title = caption;
    hit.caption = caption;
    hit.image = cogplan::ImageRef{"http://img.example/" + id, cogplan::MediaKind::Url};
    hit.score = score;
    return hit;
}

inline cogplan::RetrievedDoc make_doc(cogplan::DocKind kind, const std::string& source_id,
                                      const std::string& content, int iteration,
                                      const std::string& query = "q") {
    cogplan::RetrievedDoc doc;
    doc.kind = kind;
    doc.content = content;
    doc.source_id = source_id;
    doc.iteration = iteration;
    doc.query = query;
    doc.token_count = static_cast<int>(cogplan::ws_token_count(content));
    if (kind == cogplan::DocKind::Image) {
        doc.image = cogplan::ImageRef{"http://img.example/" + source_id, cogplan::MediaKind::Url};
    }
    return doc;
}

// A words-only random string from a tiny vocabulary, for property tests.
inline std::string random_words(std::mt19937& rng, int min_len, int max_len) {
    static const char* vocab[] = {"alpha", "bravo", "charlie", "delta", "echo",  "foxtrot",
                                  "golf",  "hotel", "india",   "julia", "kilo",  "lima",
                                  "mike",  "nov",   "oscar",   "papa",  "quebec"};
    std::uniform_int_distribution<int> len(min_len, max_len);
    std::uniform_int_distribution<size_t> pick(0, std::size(vocab) - 1);
    int n = len(rng);
    std::string out;
    for (int i = 0; i < n; ++i) {
        if (i) out += ' ';
        out += vocab[pick(rng)];
    }
    return out;
}

} // namespace testutil
