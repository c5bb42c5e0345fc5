#pragma once

#include <condition_variable>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <list>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "cogplan/retrieval.hpp"
#include "cogplan/text.hpp"
#include "cogplan/trace_io.hpp"

namespace cogplan {

inline nlohmann::json to_json(const RawHit& hit) {
    nlohmann::json j{{"source_id", hit.source_id},
                     {"title", hit.title},
                     {"body", hit.body},
                     {"score", hit.score}};
    if (hit.image) j["image"] = to_json(*hit.image);
    if (hit.caption) j["caption"] = *hit.caption;
    return j;
}

inline RawHit raw_hit_from_json(const nlohmann::json& j) {
    RawHit hit;
    hit.source_id = j.at("source_id").get<std::string>();
    hit.title = j.at("title").get<std::string>();
    hit.body = j.at("body").get<std::string>();
    hit.score = j.at("score").get<double>();
    if (j.contains("image")) hit.image = image_from_json(j.at("image"));
    if (j.contains("caption")) hit.caption = j.at("caption").get<std::string>();
    return hit;
}

struct CacheConfig {
    size_t capacity = 256;   // in-memory entries (LRU eviction)
    std::string disk_dir;    // empty -> memory only
    std::function<void(const std::string&)> log; // cache I/O problems
};

// Caching wrapper around a SearchBackend. Key = (mode, normalized query,
// image locator, count); normalization is lowercase + trim + whitespace
// collapse. Concurrent misses on one key perform a single inner call; the
// others wait for its result. Disk entries are content-addressed JSON files;
// any disk I/O failure degrades to pass-through.
class CachedSearchBackend : public SearchBackend {
public:
    CachedSearchBackend(std::shared_ptr<SearchBackend> inner, CacheConfig config = {})
        : inner_(std::move(inner)), config_(std::move(config)) {
        if (!config_.disk_dir.empty()) {
            std::error_code ec;
            std::filesystem::create_directories(config_.disk_dir, ec);
            if (ec) {
                log("cache: cannot create '" + config_.disk_dir + "', running pass-through");
                config_.disk_dir.clear();
            }
        }
    }

    std::vector<RawHit> text_search(const std::string& query, int k) override {
        std::string key = make_key("text", query, "", k);
        return lookup(key, [&] { return inner_->text_search(query, k); });
    }

    std::vector<RawHit> image_search(const ImageRef& image, const std::string& query,
                                     int max_results) override {
        std::string key = make_key("image", query, image.locator, max_results);
        return lookup(key, [&] { return inner_->image_search(image, query, max_results); });
    }

    static std::string make_key(const std::string& mode, const std::string& query,
                                const std::string& image_locator, int count) {
        return mode + '\x1f' + normalize_key_text(query) + '\x1f' + image_locator + '\x1f' +
               std::to_string(count);
    }

private:
    struct InFlight {
        std::condition_variable cv;
        bool done = false;
        std::vector<RawHit> hits;
        std::exception_ptr error;
    };

    template <typename Produce>
    std::vector<RawHit> lookup(const std::string& key, Produce produce) {
        std::unique_lock<std::mutex> lock(mu_);
        if (auto hit = lru_get(key)) return *hit;

        auto it = in_flight_.find(key);
        if (it != in_flight_.end()) {
            std::shared_ptr<InFlight> flight = it->second;
            flight->cv.wait(lock, [&] { return flight->done; });
            if (flight->error) std::rethrow_exception(flight->error);
            return flight->hits;
        }

        auto flight = std::make_shared<InFlight>();
        in_flight_[key] = flight;
        lock.unlock();

        std::vector<RawHit> hits;
        std::exception_ptr error;
        try {
            bool from_disk = disk_read(key, hits);
            if (!from_disk) {
                hits = produce();
                disk_write(key, hits);
            }
        } catch (...) {
            error = std::current_exception();
        }

        lock.lock();
        if (!error) lru_put(key, hits);
        flight->hits = hits;
        flight->error = error;
        flight->done = true;
        in_flight_.erase(key);
        flight->cv.notify_all();
        lock.unlock();

        if (error) std::rethrow_exception(error);
        return hits;
    }

    // ---- in-memory LRU (callers hold mu_) ----

    std::optional<std::vector<RawHit>> lru_get(const std::string& key) {
        auto it = entries_.find(key);
        if (it == entries_.end()) return std::nullopt;
        order_.splice(order_.begin(), order_, it->second.pos);
        return it->second.hits;
    }

    void lru_put(const std::string& key, const std::vector<RawHit>& hits) {
        auto it = entries_.find(key);
        if (it != entries_.end()) {
            it->second.hits = hits;
            order_.splice(order_.begin(), order_, it->second.pos);
            return;
        }
        order_.push_front(key);
        entries_[key] = Entry{order_.begin(), hits};
        if (entries_.size() > config_.capacity) {
            entries_.erase(order_.back());
            order_.pop_back();
        }
    }

    // ---- optional disk layer ----

    std::string disk_path(const std::string& key) const {
        return (std::filesystem::path(config_.disk_dir) / (hex64(fnv1a64(key)) + ".json"))
            .string();
    }

    bool disk_read(const std::string& key, std::vector<RawHit>& hits) {
        if (config_.disk_dir.empty()) return false;
        std::ifstream in(disk_path(key), std::ios::binary);
        if (!in) return false;
        try {
            nlohmann::json j = nlohmann::json::parse(in);
            if (j.value("key", "") != key) return false; // digest collision
            hits.clear();
            for (const auto& h : j.at("hits")) hits.push_back(raw_hit_from_json(h));
            return true;
        } catch (const std::exception& e) {
            log(std::string("cache: unreadable entry, ignoring: ") + e.what());
            return false;
        }
    }

    void disk_write(const std::string& key, const std::vector<RawHit>& hits) {
        if (config_.disk_dir.empty()) return;
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& h : hits) arr.push_back(to_json(h));
        nlohmann::json j{{"key", key}, {"hits", arr}};
        std::string path = disk_path(key);
        std::ofstream out(path, std::ios::binary);
        if (!out) {
            log("cache: cannot write '" + path + "'");
            return;
        }
        out << j.dump();
    }

    void log(const std::string& msg) const {
        if (config_.log) config_.log(msg);
        else std::cerr << msg << '\n';
    }

    struct Entry {
        std::list<std::string>::iterator pos;
        std::vector<RawHit> hits;
    };

    std::shared_ptr<SearchBackend> inner_;
    CacheConfig config_;
    std::mutex mu_;
    std::list<std::string> order_; // front = most recently used
    std::unordered_map<std::string, Entry> entries_;
    std::unordered_map<std::string, std::shared_ptr<InFlight>> in_flight_;
};

inline std::shared_ptr<SearchBackend> cached(std::shared_ptr<SearchBackend> backend,
                                             CacheConfig config = {}) {
    return std::make_shared<CachedSearchBackend>(std::move(backend), std::move(config));
}

} // namespace cogplan
