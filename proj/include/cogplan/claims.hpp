#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "cogplan/errors.hpp"
#include "cogplan/expert.hpp"
#include "cogplan/prompts.hpp"
#include "cogplan/text.hpp"

namespace cogplan {

// One atomic assertion extracted from an answer. Normalized: lowercased,
// trimmed, terminal punctuation stripped.
struct Claim {
    std::string text;

    bool operator==(const Claim&) const = default;
};

inline Claim normalize_claim(std::string_view raw) {
    std::string t = to_lower(trim(raw));
    while (!t.empty()) {
        char c = t.back();
        if (c == '.' || c == '!' || c == '?' || c == ';' || c == ':' || c == ',') {
            t.pop_back();
        } else {
            break;
        }
    }
    return Claim{trim(t)};
}

class ClaimExtractor {
public:
    virtual ~ClaimExtractor() = default;
    virtual std::vector<Claim> extract(const std::string& answer) = 0;
};

// Deterministic extractor: sentences split at . ! ? followed by whitespace
// (or end of text), then normalized; empties dropped.
class RuleBasedClaimExtractor : public ClaimExtractor {
public:
    std::vector<Claim> extract(const std::string& answer) override {
        std::vector<Claim> claims;
        std::string cur;
        for (size_t i = 0; i < answer.size(); ++i) {
            char c = answer[i];
            cur += c;
            bool terminal = c == '.' || c == '!' || c == '?';
            bool boundary = terminal && (i + 1 >= answer.size() || is_space_byte(answer[i + 1]));
            if (boundary) {
                Claim claim = normalize_claim(cur);
                if (!claim.text.empty()) claims.push_back(std::move(claim));
                cur.clear();
            }
        }
        Claim tail = normalize_claim(cur);
        if (!tail.text.empty()) claims.push_back(std::move(tail));
        return claims;
    }
};

// Prompted extraction through any expert backend; parses the numbered list
// the prompt requests.
class ExpertClaimExtractor : public ClaimExtractor {
public:
    explicit ExpertClaimExtractor(std::shared_ptr<ExpertBackend> backend,
                                  const PromptLibrary* prompts = nullptr)
        : backend_(std::move(backend)), prompts_(prompts) {}

    std::vector<Claim> extract(const std::string& answer) override {
        const PromptLibrary& lib = prompts_ ? *prompts_ : builtin_prompts();
        ExpertRequest req;
        req.role = ExpertRole::Judge;
        req.system_prompt = "You extract factual claims from answers.";
        req.user_text = PromptLibrary::render(lib.claim_extract_template(), {{"answer", answer}});
        try {
            ExpertResponse resp = backend_->complete(req);
            std::vector<Claim> claims;
            for (const auto& item : parse_query_set_output(resp.text)) {
                Claim claim = normalize_claim(item);
                if (!claim.text.empty()) claims.push_back(std::move(claim));
            }
            return claims;
        } catch (const Error& e) {
            throw MetricError(std::string("claim extraction: ") + e.what());
        }
    }

private:
    std::shared_ptr<ExpertBackend> backend_;
    const PromptLibrary* prompts_;
};

class ClaimMatcher {
public:
    virtual ~ClaimMatcher() = default;
    virtual bool matches(const Claim& pred, const Claim& gold) = 0;
};

// Test/default matcher: normalized string equality.
class ExactClaimMatcher : public ClaimMatcher {
public:
    bool matches(const Claim& pred, const Claim& gold) override { return pred.text == gold.text; }
};

// Production matcher: asks an expert backend whether two claims state the
// same fact; expects YES / NO.
class ExpertClaimMatcher : public ClaimMatcher {
public:
    explicit ExpertClaimMatcher(std::shared_ptr<ExpertBackend> backend,
                                const PromptLibrary* prompts = nullptr)
        : backend_(std::move(backend)), prompts_(prompts) {}

    bool matches(const Claim& pred, const Claim& gold) override {
        const PromptLibrary& lib = prompts_ ? *prompts_ : builtin_prompts();
        ExpertRequest req;
        req.role = ExpertRole::Judge;
        req.system_prompt = "You judge whether two claims state the same fact.";
        req.user_text = PromptLibrary::render(lib.claim_match_template(),
                                              {{"pred", pred.text}, {"gold", gold.text}});
        req.max_output_tokens = 8;
        try {
            ExpertResponse resp = backend_->complete(req);
            std::string t = to_lower(trim(resp.text));
            if (t.rfind("yes", 0) == 0) return true;
            if (t.rfind("no", 0) == 0) return false;
            throw ParseError("claim match: expected YES or NO, got '" + resp.text + "'");
        } catch (const Error& e) {
            throw MetricError(std::string("claim match: ") + e.what());
        }
    }

private:
    std::shared_ptr<ExpertBackend> backend_;
    const PromptLibrary* prompts_;
};

// Claim-level precision and recall: a prediction claim is correct when it
// matches some gold claim; a gold claim is covered when some prediction
// claim matches it. Degenerate sets: both empty -> (1,1); empty prediction
// -> (0,0); empty gold with predictions -> (0,0).
inline std::pair<double, double> claim_precision_recall(const std::vector<Claim>& pred_claims,
                                                        const std::vector<Claim>& gold_claims,
                                                        ClaimMatcher& matcher) {
    if (pred_claims.empty() && gold_claims.empty()) return {1.0, 1.0};
    if (pred_claims.empty() || gold_claims.empty()) return {0.0, 0.0};

    size_t matched_pred = 0;
    std::vector<bool> gold_covered(gold_claims.size(), false);
    for (const auto& p : pred_claims) {
        bool any = false;
        for (size_t i = 0; i < gold_claims.size(); ++i) {
            if (matcher.matches(p, gold_claims[i])) {
                any = true;
                gold_covered[i] = true;
            }
        }
        if (any) ++matched_pred;
    }
    size_t matched_gold = 0;
    for (bool covered : gold_covered) {
        if (covered) ++matched_gold;
    }
    double precision = static_cast<double>(matched_pred) / static_cast<double>(pred_claims.size());
    double recall = static_cast<double>(matched_gold) / static_cast<double>(gold_claims.size());
    return {precision, recall};
}

} // namespace cogplan
