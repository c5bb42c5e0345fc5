#pragma once

#include <string>
#include <vector>

#include "cogplan/core.hpp"
#include "cogplan/errors.hpp"
#include "cogplan/expert.hpp"
#include "cogplan/prompts.hpp"

namespace cogplan {

inline const char kExpertSystemPromptGenerate[] =
    "You are the answer generator of a multimodal retrieval pipeline.";

// Builds the generation prompt from exactly three inputs (the original query
// with its image, the final reformulated queries, and the evidence digest)
// and returns the backend's answer verbatim, trimmed. Intermediate query
// sets never reach this prompt.
inline std::string generate_answer(ExpertBackend& backend, const MultimodalQuery& origin,
                                   const QuerySet& final_queries,
                                   const std::vector<RetrievedDoc>& evidence, int budget,
                                   const PromptLibrary& prompts = builtin_prompts()) {
    validate_query(origin);

    std::string evidence_section;
    if (!evidence.empty()) {
        evidence_section = "Evidence:\n" + render_evidence_digest(evidence, budget) + "\n";
    }

    ExpertRequest req;
    req.system_prompt = kExpertSystemPromptGenerate;
    req.role = ExpertRole::Generate;
    req.user_text = PromptLibrary::render(prompts.generate_template(),
                                          {{"question", origin.text},
                                           {"final_queries", format_numbered(final_queries.queries)},
                                           {"evidence_section", evidence_section}});
    if (origin.image) req.images.push_back(*origin.image);
    req.max_output_tokens = 2048;

    std::string last_error;
    for (int attempt = 0; attempt < 2; ++attempt) {
        try {
            ExpertResponse resp = backend.complete(req);
            return parse_answer_output(resp.text);
        } catch (const TransportError& e) {
            last_error = e.what();
        } catch (const ParseError& e) {
            last_error = e.what();
        }
    }
    throw GenerationError("generate: " + last_error);
}

} // namespace cogplan
