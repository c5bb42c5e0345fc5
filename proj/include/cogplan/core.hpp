#pragma once

#include <algorithm>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "cogplan/errors.hpp"
#include "cogplan/text.hpp"

namespace cogplan {

constexpr int kDefaultMaxIterations = 3; // planning rounds before the hard stop
constexpr int kMaxSubQueries = 5;        // fan-out cap per iteration

enum class MediaKind { Path, Url, InlineBytes };

// Opaque handle to the visual component of a query or a retrieved image.
// For InlineBytes the locator holds the raw payload itself.
struct ImageRef {
    std::string locator;
    MediaKind media_kind = MediaKind::Path;

    bool operator==(const ImageRef&) const = default;
};

inline ImageRef image_from_locator(const std::string& locator) {
    if (locator.rfind("http://", 0) == 0 || locator.rfind("https://", 0) == 0) {
        return ImageRef{locator, MediaKind::Url};
    }
    return ImageRef{locator, MediaKind::Path};
}

// Eager readability check. Paths must exist as regular readable files;
// URLs are checked syntactically only (resolving them is the backend's job).
inline void validate_image(const ImageRef& image, const std::string& field = "image") {
    if (image.locator.empty()) {
        throw ValidationError(field + ": empty locator");
    }
    switch (image.media_kind) {
    case MediaKind::Path: {
        std::error_code ec;
        if (!std::filesystem::is_regular_file(image.locator, ec)) {
            throw ValidationError(field + ": unreadable image '" + image.locator + "'");
        }
        break;
    }
    case MediaKind::Url:
        if (image.locator.rfind("http://", 0) != 0 && image.locator.rfind("https://", 0) != 0) {
            throw ValidationError(field + ": not a http(s) url '" + image.locator + "'");
        }
        break;
    case MediaKind::InlineBytes:
        break; // non-empty payload already checked above
    }
}

struct MultimodalQuery {
    std::string id;
    std::string text;
    std::optional<ImageRef> image;

    bool operator==(const MultimodalQuery&) const = default;
};

inline void validate_query(const MultimodalQuery& query) {
    if (trim(query.text).empty()) {
        throw ValidationError("text: empty text");
    }
    if (query.image) validate_image(*query.image);
}

enum class RetrievalAction { TextSearch, ImageSearch, NoSearch };

inline const char* to_string(RetrievalAction a) {
    switch (a) {
    case RetrievalAction::TextSearch: return "TEXT_SEARCH";
    case RetrievalAction::ImageSearch: return "IMAGE_SEARCH";
    case RetrievalAction::NoSearch: return "NO_SEARCH";
    }
    return "NO_SEARCH";
}

inline RetrievalAction action_from_string(const std::string& s) {
    if (s == "TEXT_SEARCH") return RetrievalAction::TextSearch;
    if (s == "IMAGE_SEARCH") return RetrievalAction::ImageSearch;
    if (s == "NO_SEARCH") return RetrievalAction::NoSearch;
    throw ValidationError("action: unknown label '" + s + "'");
}

// Ordered set of sub-queries produced by one reformulation round.
// 1..kMaxSubQueries entries, each non-empty after trimming, no exact duplicates.
struct QuerySet {
    std::vector<std::string> queries;

    bool operator==(const QuerySet&) const = default;
};

// Drops empties and exact duplicates (first occurrence wins), clamps to the
// fan-out cap. Used by fallback paths that must not throw.
inline std::vector<std::string> sanitize_queries(const std::vector<std::string>& raw) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& q : raw) {
        std::string t = trim(q);
        if (t.empty()) continue;
        if (!seen.insert(t).second) continue;
        out.push_back(std::move(t));
        if (out.size() == static_cast<size_t>(kMaxSubQueries)) break;
    }
    return out;
}

inline QuerySet make_query_set(std::vector<std::string> queries) {
    if (queries.empty()) throw ValidationError("queries: empty query set");
    if (queries.size() > static_cast<size_t>(kMaxSubQueries)) {
        throw ValidationError("queries: more than " + std::to_string(kMaxSubQueries) +
                              " sub-queries");
    }
    std::set<std::string> seen;
    for (auto& q : queries) {
        q = trim(q);
        if (q.empty()) throw ValidationError("queries: empty sub-query");
        if (!seen.insert(q).second) throw ValidationError("queries: duplicate sub-query '" + q + "'");
    }
    return QuerySet{std::move(queries)};
}

enum class DocKind { Text, Image };

inline const char* to_string(DocKind k) { return k == DocKind::Text ? "text" : "image"; }

// One evidence unit. For images the content field holds the caption.
struct RetrievedDoc {
    DocKind kind = DocKind::Text;
    std::string content;
    std::optional<ImageRef> image; // present iff kind == Image
    std::string source_id;
    int iteration = 0;      // planning round that fetched it
    std::string query;      // the sub-query that retrieved it
    int token_count = 0;    // whitespace tokens of content

    bool operator==(const RetrievedDoc&) const = default;
};

struct PlanDecision {
    RetrievalAction action = RetrievalAction::NoSearch;
    QuerySet query_set;

    bool operator==(const PlanDecision&) const = default;
};

// Immutable snapshot of one planning run. Operations below return fresh
// values; nothing mutates a state in place.
struct PlanState {
    int iteration = 0;
    QuerySet current_queries;
    std::vector<RetrievedDoc> evidence; // accumulated across all rounds so far
    std::vector<PlanDecision> history;
    MultimodalQuery origin;

    bool operator==(const PlanState&) const = default;
};

inline PlanState init_state(const MultimodalQuery& query) {
    validate_query(query);
    PlanState s;
    s.iteration = 0;
    s.current_queries = QuerySet{{query.text}};
    s.origin = query;
    return s;
}

inline bool is_terminal(const PlanState& state, int t_max = kDefaultMaxIterations) {
    if (!state.history.empty() && state.history.back().action == RetrievalAction::NoSearch) {
        return true;
    }
    return state.iteration >= t_max;
}

// Advances the state by one decision. Evidence is deduplicated by
// (kind, source_id) with the earliest occurrence kept, so iteration
// attribution stays stable under re-retrieval.
inline PlanState apply_decision(const PlanState& state, const PlanDecision& decision,
                                const std::vector<RetrievedDoc>& retrieved,
                                int t_max = kDefaultMaxIterations) {
    if (decision.action == RetrievalAction::NoSearch && !retrieved.empty()) {
        throw ContractError("apply_decision: retrieved docs with NO_SEARCH");
    }
    if (state.iteration >= t_max) {
        throw CapError("apply_decision: iteration cap " + std::to_string(t_max) + " reached");
    }
    PlanState next = state;
    next.iteration = state.iteration + 1;
    next.current_queries = decision.query_set;
    next.history.push_back(decision);

    std::set<std::pair<DocKind, std::string>> seen;
    for (const auto& doc : state.evidence) {
        seen.emplace(doc.kind, doc.source_id);
    }
    for (const auto& doc : retrieved) {
        if (seen.emplace(doc.kind, doc.source_id).second) {
            next.evidence.push_back(doc);
        }
    }
    return next;
}

enum class Termination { NoSearchStop, IterationCap };

inline const char* to_string(Termination t) {
    return t == Termination::NoSearchStop ? "no-search" : "iteration-cap";
}

inline Termination termination_from_string(const std::string& s) {
    if (s == "no-search") return Termination::NoSearchStop;
    if (s == "iteration-cap") return Termination::IterationCap;
    throw ValidationError("terminated_by: unknown value '" + s + "'");
}

struct TraceStep {
    PlanDecision decision;
    std::vector<RetrievedDoc> retrieved;
    long long expert_tokens = 0;
    double expert_latency_ms = 0.0;

    bool operator==(const TraceStep&) const = default;
};

// Full record of one pipeline run over one sample: every decision, every
// retrieved doc, planning-expert accounting, and the final answer.
struct PlanTrace {
    std::string sample_id;
    std::vector<TraceStep> steps;
    std::string final_answer;
    Termination terminated_by = Termination::NoSearchStop;
    std::vector<std::string> flags; // degradations and fallbacks, in order
    bool failed = false;

    bool operator==(const PlanTrace&) const = default;

    long long total_expert_tokens() const {
        long long n = 0;
        for (const auto& s : steps) n += s.expert_tokens;
        return n;
    }
    double total_expert_latency_ms() const {
        double n = 0.0;
        for (const auto& s : steps) n += s.expert_latency_ms;
        return n;
    }
};

} // namespace cogplan
