#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cogplan/core.hpp"
#include "cogplan/errors.hpp"
#include "cogplan/text.hpp"

namespace cogplan {

constexpr int kDefaultTextTopK = 5;
constexpr int kDefaultTextTokenCap = 800;
constexpr int kDefaultImageMin = 3;
constexpr int kDefaultImageMax = 6;

// One raw search result before preprocessing. Image hits carry a caption.
struct RawHit {
    std::string source_id;
    std::string title;
    std::string body;
    std::optional<ImageRef> image;
    std::optional<std::string> caption;
    double score = 0.0;

    bool operator==(const RawHit&) const = default;
};

// Search service contract. Implementations return at most the requested
// count, ordered by their own relevance score, and must tolerate concurrent
// calls (the planner fans out per sub-query).
class SearchBackend {
public:
    virtual ~SearchBackend() = default;
    virtual std::vector<RawHit> text_search(const std::string& query, int k) = 0;
    virtual std::vector<RawHit> image_search(const ImageRef& image, const std::string& query,
                                             int max_results) = 0;
};

namespace detail {
// '<' opens a tag only when followed by a letter, '/' or '!'; a bare '<'
// stays literal text.
inline bool is_tag_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '/' || c == '!';
}
} // namespace detail

// Strips markup tags, collapses whitespace runs to single spaces, preserves
// visible text order. Pure and idempotent.
inline std::string preprocess_content(std::string_view raw) {
    std::string visible;
    visible.reserve(raw.size());
    size_t i = 0;
    while (i < raw.size()) {
        char c = raw[i];
        if (c == '<' && i + 1 < raw.size() && detail::is_tag_start(raw[i + 1])) {
            size_t close = raw.find('>', i + 1);
            if (close == std::string_view::npos) {
                i = raw.size(); // unterminated tag swallows the rest
            } else {
                visible += ' '; // tags separate words
                i = close + 1;
            }
            continue;
        }
        visible += c;
        ++i;
    }
    return collapse_ws(visible);
}

// Optional cleanup applied to each image hit before it becomes evidence
// (stand-in for site-specific screenshot post-processing). Default: none.
using ImagePostProcessHook = std::function<void(RawHit&)>;

// Top-k text retrieval with preprocessing and the per-result token cap.
// Transport problems surface as RetrievalError; zero matches are not an error.
inline std::vector<RetrievedDoc> text_retrieve(SearchBackend& backend, const std::string& query,
                                               int iteration, int top_k = kDefaultTextTopK,
                                               int token_cap = kDefaultTextTokenCap) {
    if (trim(query).empty()) throw ValidationError("query: empty text query");
    std::vector<RawHit> hits;
    try {
        hits = backend.text_search(query, top_k);
    } catch (const RetrievalError&) {
        throw;
    } catch (const Error& e) {
        throw RetrievalError(std::string("text_search: ") + e.what());
    }
    if (hits.size() > static_cast<size_t>(top_k)) hits.resize(static_cast<size_t>(top_k));

    std::vector<RetrievedDoc> docs;
    docs.reserve(hits.size());
    for (const auto& hit : hits) {
        RetrievedDoc doc;
        doc.kind = DocKind::Text;
        doc.content = truncate_ws_tokens(preprocess_content(hit.body), static_cast<size_t>(token_cap));
        doc.source_id = hit.source_id;
        doc.iteration = iteration;
        doc.query = query;
        doc.token_count = static_cast<int>(ws_token_count(doc.content));
        docs.push_back(std::move(doc));
    }
    return docs;
}

struct ImageRetrieval {
    std::vector<RetrievedDoc> docs;
    bool below_minimum = false; // backend had fewer than image_min candidates
};

// Image retrieval bounded to [image_min, image_max] candidates; when the
// backend has fewer than image_min it returns what exists and flags it.
// Captions become the doc content.
inline ImageRetrieval image_retrieve(SearchBackend& backend, const ImageRef& image,
                                     const std::string& query, int iteration,
                                     int image_min = kDefaultImageMin,
                                     int image_max = kDefaultImageMax,
                                     const ImagePostProcessHook& hook = {}) {
    std::vector<RawHit> hits;
    try {
        hits = backend.image_search(image, query, image_max);
    } catch (const RetrievalError&) {
        throw;
    } catch (const Error& e) {
        throw RetrievalError(std::string("image_search: ") + e.what());
    }
    if (hits.size() > static_cast<size_t>(image_max)) hits.resize(static_cast<size_t>(image_max));

    ImageRetrieval out;
    out.below_minimum = hits.size() < static_cast<size_t>(image_min);
    out.docs.reserve(hits.size());
    for (auto& hit : hits) {
        if (hook) hook(hit);
        RetrievedDoc doc;
        doc.kind = DocKind::Image;
        doc.content = collapse_ws(hit.caption.value_or(""));
        doc.image = hit.image;
        if (!doc.image) doc.image = ImageRef{hit.source_id, MediaKind::Url};
        doc.source_id = hit.source_id;
        doc.iteration = iteration;
        doc.query = query;
        doc.token_count = static_cast<int>(ws_token_count(doc.content));
        out.docs.push_back(std::move(doc));
    }
    return out;
}

} // namespace cogplan
