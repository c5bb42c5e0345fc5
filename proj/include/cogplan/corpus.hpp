#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cogplan/errors.hpp"
#include "cogplan/retrieval.hpp"
#include "cogplan/text.hpp"

namespace cogplan {

// Tokens used for ranking: lowercase alphanumeric runs; bytes >= 0x80 count
// as word bytes so non-ASCII text stays matchable.
inline std::vector<std::string> match_tokens(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        bool word = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || static_cast<unsigned char>(c) >= 0x80;
        if (word) {
            cur += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

struct CorpusDoc {
    std::string doc_id;
    std::string title;
    std::string body;
    std::vector<std::string> tags;
};

struct CorpusImage {
    std::string img_id;
    std::string file; // resolved path
    std::string caption;
    std::vector<std::string> tags;
};

// File-backed document/image collection described by a corpus.json manifest:
//   {docs:[{id,title,file,tags[]}], images:[{id,file,caption,tags[]}]}
// Paths are relative to the manifest directory. Validated eagerly at load.
class LocalCorpus {
public:
    static LocalCorpus load(const std::string& dir) {
        namespace fs = std::filesystem;
        fs::path root(dir);
        fs::path manifest = fs::is_directory(root) ? root / "corpus.json" : root;
        std::ifstream in(manifest, std::ios::binary);
        if (!in) throw ValidationError("corpus: cannot open manifest '" + manifest.string() + "'");
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError("corpus: " + std::string(e.what()));
        }
        fs::path base = manifest.parent_path();

        LocalCorpus corpus;
        std::set<std::string> ids;
        for (const auto& d : j.value("docs", nlohmann::json::array())) {
            CorpusDoc doc;
            doc.doc_id = d.at("id").get<std::string>();
            if (!ids.insert("d:" + doc.doc_id).second) {
                throw ValidationError("corpus: duplicate doc id '" + doc.doc_id + "'");
            }
            doc.title = d.at("title").get<std::string>();
            if (d.contains("tags")) doc.tags = d.at("tags").get<std::vector<std::string>>();
            if (d.contains("body")) {
                doc.body = d.at("body").get<std::string>();
            } else {
                fs::path file = base / d.at("file").get<std::string>();
                std::ifstream body(file, std::ios::binary);
                if (!body) {
                    throw ValidationError("corpus: doc '" + doc.doc_id + "' file missing: " +
                                          file.string());
                }
                std::ostringstream ss;
                ss << body.rdbuf();
                doc.body = ss.str();
            }
            corpus.docs_.push_back(std::move(doc));
        }
        for (const auto& im : j.value("images", nlohmann::json::array())) {
            CorpusImage image;
            image.img_id = im.at("id").get<std::string>();
            if (!ids.insert("i:" + image.img_id).second) {
                throw ValidationError("corpus: duplicate image id '" + image.img_id + "'");
            }
            fs::path file = base / im.at("file").get<std::string>();
            if (!fs::is_regular_file(file)) {
                throw ValidationError("corpus: image '" + image.img_id + "' file missing: " +
                                      file.string());
            }
            image.file = file.string();
            image.caption = im.at("caption").get<std::string>();
            if (im.contains("tags")) image.tags = im.at("tags").get<std::vector<std::string>>();
            corpus.images_.push_back(std::move(image));
        }
        std::sort(corpus.docs_.begin(), corpus.docs_.end(),
                  [](const CorpusDoc& a, const CorpusDoc& b) { return a.doc_id < b.doc_id; });
        std::sort(corpus.images_.begin(), corpus.images_.end(),
                  [](const CorpusImage& a, const CorpusImage& b) { return a.img_id < b.img_id; });
        return corpus;
    }

    static LocalCorpus from_docs(std::vector<CorpusDoc> docs, std::vector<CorpusImage> images = {}) {
        LocalCorpus corpus;
        corpus.docs_ = std::move(docs);
        corpus.images_ = std::move(images);
        std::sort(corpus.docs_.begin(), corpus.docs_.end(),
                  [](const CorpusDoc& a, const CorpusDoc& b) { return a.doc_id < b.doc_id; });
        std::sort(corpus.images_.begin(), corpus.images_.end(),
                  [](const CorpusImage& a, const CorpusImage& b) { return a.img_id < b.img_id; });
        std::set<std::string> ids;
        for (const auto& d : corpus.docs_) {
            if (!ids.insert("d:" + d.doc_id).second) {
                throw ValidationError("corpus: duplicate doc id '" + d.doc_id + "'");
            }
        }
        for (const auto& im : corpus.images_) {
            if (!ids.insert("i:" + im.img_id).second) {
                throw ValidationError("corpus: duplicate image id '" + im.img_id + "'");
            }
        }
        return corpus;
    }

    const std::vector<CorpusDoc>& docs() const { return docs_; }
    const std::vector<CorpusImage>& images() const { return images_; }

private:
    std::vector<CorpusDoc> docs_;
    std::vector<CorpusImage> images_;
};

// Deterministic stand-in for web relevance ranking. Per unique query token:
// +2 when it appears in the title, +1 for the body, +1 for the tags. Docs
// scoring zero are dropped; ties break by lexicographic doc id.
inline std::vector<std::string> simulator_rank(const LocalCorpus& corpus,
                                               const std::string& query) {
    std::vector<std::string> qtoks = match_tokens(query);
    std::set<std::string> unique_q(qtoks.begin(), qtoks.end());

    struct Scored {
        int score;
        const CorpusDoc* doc;
    };
    std::vector<Scored> scored;
    for (const auto& doc : corpus.docs()) {
        std::vector<std::string> title = match_tokens(doc.title);
        std::vector<std::string> body = match_tokens(doc.body);
        std::set<std::string> title_set(title.begin(), title.end());
        std::set<std::string> body_set(body.begin(), body.end());
        std::set<std::string> tag_set;
        for (const auto& t : doc.tags) {
            for (auto& tok : match_tokens(t)) tag_set.insert(std::move(tok));
        }
        int score = 0;
        for (const auto& q : unique_q) {
            if (title_set.count(q)) score += 2;
            if (body_set.count(q)) score += 1;
            if (tag_set.count(q)) score += 1;
        }
        if (score > 0) scored.push_back({score, &doc});
    }
    std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.doc->doc_id < b.doc->doc_id;
    });
    std::vector<std::string> ids;
    ids.reserve(scored.size());
    for (const auto& s : scored) ids.push_back(s.doc->doc_id);
    return ids;
}

// Serves a LocalCorpus through the SearchBackend contract. Image matching
// folds the query image's filename stem into the query tokens as the
// stand-in for visual similarity; captions weigh x2 over tags.
class SimulatorBackend : public SearchBackend {
public:
    explicit SimulatorBackend(LocalCorpus corpus) : corpus_(std::move(corpus)) {}

    std::vector<RawHit> text_search(const std::string& query, int k) override {
        std::vector<std::string> ranked = simulator_rank(corpus_, query);
        if (ranked.size() > static_cast<size_t>(k)) ranked.resize(static_cast<size_t>(k));
        std::vector<RawHit> hits;
        hits.reserve(ranked.size());
        double score = static_cast<double>(ranked.size());
        for (const auto& id : ranked) {
            const CorpusDoc* doc = find_doc(id);
            RawHit hit;
            hit.source_id = doc->doc_id;
            hit.title = doc->title;
            hit.body = doc->body;
            hit.score = score--;
            hits.push_back(std::move(hit));
        }
        return hits;
    }

    std::vector<RawHit> image_search(const ImageRef& image, const std::string& query,
                                     int max_results) override {
        std::set<std::string> unique_q;
        for (auto& t : match_tokens(query)) unique_q.insert(std::move(t));
        for (auto& t : match_tokens(locator_stem(image.locator))) unique_q.insert(std::move(t));

        struct Scored {
            int score;
            const CorpusImage* image;
        };
        std::vector<Scored> scored;
        for (const auto& im : corpus_.images()) {
            std::vector<std::string> cap = match_tokens(im.caption);
            std::set<std::string> cap_set(cap.begin(), cap.end());
            std::set<std::string> tag_set;
            for (const auto& t : im.tags) {
                for (auto& tok : match_tokens(t)) tag_set.insert(std::move(tok));
            }
            int score = 0;
            for (const auto& q : unique_q) {
                if (cap_set.count(q)) score += 2;
                if (tag_set.count(q)) score += 1;
            }
            if (score > 0) scored.push_back({score, &im});
        }
        std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
            if (a.score != b.score) return a.score > b.score;
            return a.image->img_id < b.image->img_id;
        });
        if (scored.size() > static_cast<size_t>(max_results)) {
            scored.resize(static_cast<size_t>(max_results));
        }
        std::vector<RawHit> hits;
        hits.reserve(scored.size());
        for (const auto& s : scored) {
            RawHit hit;
            hit.source_id = s.image->img_id;
            hit.title = s.image->caption;
            hit.caption = s.image->caption;
            hit.image = ImageRef{s.image->file, MediaKind::Path};
            hit.score = static_cast<double>(s.score);
            hits.push_back(std::move(hit));
        }
        return hits;
    }

private:
    const CorpusDoc* find_doc(const std::string& id) const {
        auto it = std::lower_bound(corpus_.docs().begin(), corpus_.docs().end(), id,
                                   [](const CorpusDoc& d, const std::string& key) {
                                       return d.doc_id < key;
                                   });
        return &*it;
    }

    static std::string locator_stem(const std::string& locator) {
        std::filesystem::path p(locator);
        return p.stem().string();
    }

    LocalCorpus corpus_;
};

} // namespace cogplan
