#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cogplan/core.hpp"
#include "cogplan/errors.hpp"
#include "cogplan/prompts.hpp"
#include "cogplan/text.hpp"

namespace cogplan {

constexpr int kDefaultEvidenceBudget = 4000; // tokens of digest fed into prompts
constexpr int kMaxRequestImages = 8;

// Which planning sub-task a request belongs to. Lets deterministic backends
// key their behavior on (iteration, role) instead of call order, so the
// parallel paradigm's concurrent calls cannot reorder their answers.
enum class ExpertRole { Reformulate, SelectAction, Generate, Judge };

inline const char* to_string(ExpertRole r) {
    switch (r) {
    case ExpertRole::Reformulate: return "reformulate";
    case ExpertRole::SelectAction: return "select_action";
    case ExpertRole::Generate: return "generate";
    case ExpertRole::Judge: return "judge";
    }
    return "judge";
}

struct ExpertRequest {
    std::string system_prompt;
    std::string user_text;
    std::vector<ImageRef> images;
    int max_output_tokens = 1024;
    ExpertRole role = ExpertRole::Judge;
    int iteration = 0;
};

struct ExpertResponse {
    std::string text;
    long long prompt_tokens = 0;
    long long completion_tokens = 0;
    double latency_ms = 0.0;

    long long total_tokens() const { return prompt_tokens + completion_tokens; }
};

// Multimodal chat inference contract. Implementations must tolerate
// concurrent complete() calls; deterministic ones must return identical
// output for identical input.
class ExpertBackend {
public:
    virtual ~ExpertBackend() = default;
    virtual ExpertResponse complete(const ExpertRequest& request) = 0;
};

inline const char kExpertSystemPrompt[] =
    "You are the planning expert of a multimodal retrieval pipeline.";

// ---------------------------------------------------------------------------
// Structured-output parsing
// ---------------------------------------------------------------------------

namespace detail {

// Lowercases and maps '_'/'-' to spaces without changing length, so match
// positions stay aligned with the original string.
inline std::string fold_separators(std::string_view raw) {
    std::string out(raw);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        else if (c == '_' || c == '-') c = ' ';
    }
    return out;
}

inline bool is_word_byte(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

inline size_t find_label(const std::string& folded, const std::string& pattern) {
    size_t pos = 0;
    while ((pos = folded.find(pattern, pos)) != std::string::npos) {
        bool left_ok = pos == 0 || !is_word_byte(folded[pos - 1]);
        size_t end = pos + pattern.size();
        bool right_ok = end >= folded.size() || !is_word_byte(folded[end]);
        if (left_ok && right_ok) return pos;
        ++pos;
    }
    return std::string::npos;
}

} // namespace detail

// Accepts the case-insensitive labels TEXT_SEARCH / IMAGE_SEARCH / NO_SEARCH
// (separator may be '_', '-', space, or absent; NON_SEARCH is an alias),
// optionally wrapped in a key-value line such as "Action: text_search".
// Surrounding prose is ignored; the earliest label wins.
inline RetrievalAction parse_action_output(std::string_view raw) {
    const std::string folded = detail::fold_separators(raw);
    struct Candidate {
        const char* pattern;
        RetrievalAction action;
    };
    static const Candidate candidates[] = {
        {"text search", RetrievalAction::TextSearch},
        {"textsearch", RetrievalAction::TextSearch},
        {"image search", RetrievalAction::ImageSearch},
        {"imagesearch", RetrievalAction::ImageSearch},
        {"no search", RetrievalAction::NoSearch},
        {"nosearch", RetrievalAction::NoSearch},
        {"non search", RetrievalAction::NoSearch},
        {"nonsearch", RetrievalAction::NoSearch},
    };
    size_t best = std::string::npos;
    RetrievalAction best_action = RetrievalAction::NoSearch;
    for (const auto& c : candidates) {
        size_t pos = detail::find_label(folded, c.pattern);
        if (pos != std::string::npos && pos < best) {
            best = pos;
            best_action = c.action;
        }
    }
    if (best == std::string::npos) {
        throw ParseError("action: no recognizable label in expert output");
    }
    return best_action;
}

// Extracts an ordered list of strings from numbered ("1. q" / "2) q") or
// bulleted ("- q" / "* q") lines; ``` fences and prose lines are ignored.
inline std::vector<std::string> parse_query_set_output(std::string_view raw) {
    std::vector<std::string> items;
    size_t start = 0;
    while (start <= raw.size()) {
        size_t end = raw.find('\n', start);
        std::string_view line =
            raw.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
        start = end == std::string_view::npos ? raw.size() + 1 : end + 1;

        std::string t = trim(line);
        if (t.empty() || t.rfind("```", 0) == 0) continue;

        size_t i = 0;
        bool is_item = false;
        if (t[0] == '-' || t[0] == '*') {
            i = 1;
            is_item = true;
        } else if (t[0] >= '0' && t[0] <= '9') {
            while (i < t.size() && t[i] >= '0' && t[i] <= '9') ++i;
            if (i < t.size() && (t[i] == '.' || t[i] == ')' || t[i] == ':')) {
                ++i;
                is_item = true;
            }
        }
        if (!is_item) continue;
        std::string item = trim(std::string_view(t).substr(i));
        if (!item.empty()) items.push_back(std::move(item));
    }
    if (items.empty()) {
        throw ParseError("query-set: no list items in expert output");
    }
    return items;
}

inline std::string parse_answer_output(std::string_view raw) {
    std::string t = trim(raw);
    if (t.empty()) throw ParseError("answer: empty expert output");
    return t;
}

// ---------------------------------------------------------------------------
// Evidence digest
// ---------------------------------------------------------------------------

// Renders accumulated evidence as "[source_id] content" blocks, newest
// iteration first, packing whole blocks until the next one would overflow
// the token budget. Blocks are never split.
inline std::string render_evidence_digest(const std::vector<RetrievedDoc>& evidence,
                                          int budget_tokens) {
    if (evidence.empty() || budget_tokens <= 0) return "";
    std::vector<const RetrievedDoc*> order;
    order.reserve(evidence.size());
    for (const auto& d : evidence) order.push_back(&d);
    std::stable_sort(order.begin(), order.end(),
                     [](const RetrievedDoc* a, const RetrievedDoc* b) {
                         return a->iteration > b->iteration;
                     });

    std::string out;
    size_t used = 0;
    for (const RetrievedDoc* doc : order) {
        std::string block = "[" + doc->source_id + "]";
        if (doc->kind == DocKind::Image) block += " (image)";
        if (!doc->content.empty()) block += " " + doc->content;
        size_t cost = ws_token_count(block);
        if (used + cost > static_cast<size_t>(budget_tokens)) break;
        if (!out.empty()) out += '\n';
        out += block;
        used += cost;
    }
    return out;
}

inline std::string format_numbered(const std::vector<std::string>& items) {
    std::string out;
    for (size_t i = 0; i < items.size(); ++i) {
        out += std::to_string(i + 1) + ". " + items[i];
        if (i + 1 < items.size()) out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Expert operations
// ---------------------------------------------------------------------------

// An image search is executable when the query carries an image or some
// retrieved image can stand in for it.
inline bool has_searchable_image(const PlanState& state) {
    if (state.origin.image) return true;
    for (const auto& doc : state.evidence) {
        if (doc.kind == DocKind::Image && doc.image) return true;
    }
    return false;
}

// The origin image when present, otherwise the most recently retrieved image.
inline std::optional<ImageRef> search_image_for(const PlanState& state) {
    if (state.origin.image) return state.origin.image;
    for (auto it = state.evidence.rbegin(); it != state.evidence.rend(); ++it) {
        if (it->kind == DocKind::Image && it->image) return it->image;
    }
    return std::nullopt;
}

struct ReformulateOutcome {
    QuerySet queries;
    bool degraded = false; // parse fallback engaged; queries are the input set
    long long expert_tokens = 0;
    double latency_ms = 0.0;
};

struct ActionOutcome {
    RetrievalAction action = RetrievalAction::NoSearch;
    bool degraded = false;
    std::vector<std::string> flags;
    long long expert_tokens = 0;
    double latency_ms = 0.0;
};

namespace detail {

inline ExpertRequest base_request(const PlanState& state, ExpertRole role) {
    ExpertRequest req;
    req.system_prompt = kExpertSystemPrompt;
    req.role = role;
    req.iteration = state.iteration;
    if (state.origin.image) req.images.push_back(*state.origin.image);
    return req;
}

} // namespace detail

// Refines/decomposes the current query set given the evidence gathered so
// far. Unparseable output is retried once, then the unchanged input set is
// returned with the degraded flag set.
inline ReformulateOutcome reformulate(ExpertBackend& backend, const PlanState& state,
                                      const PromptLibrary& prompts = builtin_prompts(),
                                      int evidence_budget = kDefaultEvidenceBudget) {
    ExpertRequest req = detail::base_request(state, ExpertRole::Reformulate);
    req.user_text = PromptLibrary::render(
        prompts.reformulate_template(),
        {{"question", state.origin.text},
         {"queries", format_numbered(state.current_queries.queries)},
         {"evidence", render_evidence_digest(state.evidence, evidence_budget)},
         {"n_max", std::to_string(kMaxSubQueries)}});

    ReformulateOutcome out;
    for (int attempt = 0; attempt < 2; ++attempt) {
        ExpertResponse resp = backend.complete(req);
        out.expert_tokens += resp.total_tokens();
        out.latency_ms += resp.latency_ms;
        try {
            std::vector<std::string> queries = sanitize_queries(parse_query_set_output(resp.text));
            if (queries.empty()) throw ParseError("query-set: only empty items");
            out.queries = make_query_set(std::move(queries));
            return out;
        } catch (const ParseError&) {
            // retry once, then fall back below
        }
    }
    out.queries = state.current_queries;
    out.degraded = true;
    return out;
}

// Picks one retrieval action for this iteration. The prompt offers
// IMAGE_SEARCH only when an image is actually available; if the backend
// answers IMAGE_SEARCH anyway without one, the action is coerced to
// TEXT_SEARCH. Unparseable output after the retry degrades to NO_SEARCH,
// which terminates the plan conservatively.
inline ActionOutcome select_action(ExpertBackend& backend, const PlanState& state,
                                   const QuerySet& queries,
                                   const PromptLibrary& prompts = builtin_prompts(),
                                   int evidence_budget = kDefaultEvidenceBudget) {
    const bool image_available = has_searchable_image(state);
    std::string actions = "- TEXT_SEARCH: a web/text lookup would add missing facts.\n";
    if (image_available) {
        actions += "- IMAGE_SEARCH: identifying or matching the image would add missing facts.\n";
    }
    actions += "- NO_SEARCH: the evidence already suffices to answer.";

    ExpertRequest req = detail::base_request(state, ExpertRole::SelectAction);
    req.user_text = PromptLibrary::render(
        prompts.select_action_template(),
        {{"question", state.origin.text},
         {"queries", format_numbered(queries.queries)},
         {"evidence", render_evidence_digest(state.evidence, evidence_budget)},
         {"actions", actions}});

    ActionOutcome out;
    for (int attempt = 0; attempt < 2; ++attempt) {
        ExpertResponse resp = backend.complete(req);
        out.expert_tokens += resp.total_tokens();
        out.latency_ms += resp.latency_ms;
        try {
            RetrievalAction action = parse_action_output(resp.text);
            if (action == RetrievalAction::ImageSearch && !image_available) {
                action = RetrievalAction::TextSearch;
                out.degraded = true;
                out.flags.push_back("action-coerced-text");
            }
            out.action = action;
            return out;
        } catch (const ParseError&) {
        }
    }
    out.action = RetrievalAction::NoSearch;
    out.degraded = true;
    out.flags.push_back("action-fallback-no-search");
    return out;
}

} // namespace cogplan
