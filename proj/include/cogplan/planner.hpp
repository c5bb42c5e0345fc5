#pragma once

#include <future>
#include <memory>
#include <string>
#include <vector>

#include "cogplan/core.hpp"
#include "cogplan/errors.hpp"
#include "cogplan/expert.hpp"
#include "cogplan/generation.hpp"
#include "cogplan/prompts.hpp"
#include "cogplan/retrieval.hpp"

namespace cogplan {

enum class Paradigm { Parallel, Sequential };

inline const char* to_string(Paradigm p) {
    return p == Paradigm::Parallel ? "parallel" : "sequential";
}

inline Paradigm paradigm_from_string(const std::string& s) {
    if (s == "parallel") return Paradigm::Parallel;
    if (s == "sequential") return Paradigm::Sequential;
    throw ValidationError("paradigm: unknown value '" + s + "'");
}

struct PlannerConfig {
    Paradigm paradigm = Paradigm::Sequential;
    int t_max = kDefaultMaxIterations;
    int text_top_k = kDefaultTextTopK;
    int text_token_cap = kDefaultTextTokenCap;
    int image_min = kDefaultImageMin;
    int image_max = kDefaultImageMax;
    int evidence_budget = kDefaultEvidenceBudget;
};

inline void validate_config(const PlannerConfig& cfg) {
    if (cfg.t_max <= 0) throw ValidationError("t_max: must be positive");
    if (cfg.text_top_k <= 0) throw ValidationError("text_top_k: must be positive");
    if (cfg.text_token_cap <= 0) throw ValidationError("text_token_cap: must be positive");
    if (cfg.image_min <= 0) throw ValidationError("image_min: must be positive");
    if (cfg.image_max <= 0) throw ValidationError("image_max: must be positive");
    if (cfg.image_min > cfg.image_max) throw ValidationError("image_min: exceeds image_max");
    if (cfg.evidence_budget <= 0) throw ValidationError("evidence_budget: must be positive");
}

struct PlannerBackends {
    std::shared_ptr<ExpertBackend> expert;    // planning expert
    std::shared_ptr<ExpertBackend> generator; // may differ from the expert
    std::shared_ptr<SearchBackend> search;
    const PromptLibrary* prompts = nullptr;   // null -> built-in templates
};

struct StepOutcome {
    PlanDecision decision;
    long long expert_tokens = 0;
    double expert_latency_ms = 0.0;
    std::vector<std::string> flags;
};

// One planning round, parallel paradigm: reformulation and action selection
// run as two concurrent inference calls, both conditioned on the predecessor
// query set. Step latency is the slower of the two.
inline StepOutcome plan_step_parallel(ExpertBackend& expert, const PlanState& state,
                                      const PlannerConfig& config,
                                      const PromptLibrary& prompts = builtin_prompts()) {
    auto reform_future = std::async(std::launch::async, [&] {
        return reformulate(expert, state, prompts, config.evidence_budget);
    });
    auto action_future = std::async(std::launch::async, [&] {
        return select_action(expert, state, state.current_queries, prompts,
                             config.evidence_budget);
    });
    ReformulateOutcome reform = reform_future.get();
    ActionOutcome action = action_future.get();

    StepOutcome out;
    out.decision = PlanDecision{action.action, reform.queries};
    out.expert_tokens = reform.expert_tokens + action.expert_tokens;
    out.expert_latency_ms = std::max(reform.latency_ms, action.latency_ms);
    if (reform.degraded) out.flags.push_back("reformulate-fallback-identity");
    out.flags.insert(out.flags.end(), action.flags.begin(), action.flags.end());
    return out;
}

// One planning round, sequential paradigm: reformulate first, then select
// the action conditioned on the reformulated queries. Step latency is the
// sum of the two calls.
inline StepOutcome plan_step_sequential(ExpertBackend& expert, const PlanState& state,
                                        const PlannerConfig& config,
                                        const PromptLibrary& prompts = builtin_prompts()) {
    ReformulateOutcome reform = reformulate(expert, state, prompts, config.evidence_budget);
    ActionOutcome action =
        select_action(expert, state, reform.queries, prompts, config.evidence_budget);

    StepOutcome out;
    out.decision = PlanDecision{action.action, reform.queries};
    out.expert_tokens = reform.expert_tokens + action.expert_tokens;
    out.expert_latency_ms = reform.latency_ms + action.latency_ms;
    if (reform.degraded) out.flags.push_back("reformulate-fallback-identity");
    out.flags.insert(out.flags.end(), action.flags.begin(), action.flags.end());
    return out;
}

namespace detail {

// Fan-out: the step's single action applied to every sub-query. A failed
// sub-query contributes zero docs and a flag rather than aborting the step.
inline std::vector<RetrievedDoc> execute_retrieval(SearchBackend* search, const PlanState& state,
                                                   const PlanDecision& decision,
                                                   const PlannerConfig& config,
                                                   std::vector<std::string>& flags) {
    std::vector<RetrievedDoc> docs;
    if (decision.action == RetrievalAction::NoSearch) return docs;
    if (!search) {
        flags.push_back("retrieval-skipped-no-backend");
        return docs;
    }
    const int iteration = state.iteration + 1;
    if (decision.action == RetrievalAction::TextSearch) {
        for (const auto& q : decision.query_set.queries) {
            try {
                auto batch =
                    text_retrieve(*search, q, iteration, config.text_top_k, config.text_token_cap);
                docs.insert(docs.end(), batch.begin(), batch.end());
            } catch (const Error& e) {
                flags.push_back("retrieval-failed: " + q);
                (void)e;
            }
        }
        return docs;
    }
    // ImageSearch; the coercion closure guarantees an image exists.
    std::optional<ImageRef> image = search_image_for(state);
    if (!image) {
        flags.push_back("retrieval-skipped-no-image");
        return docs;
    }
    for (const auto& q : decision.query_set.queries) {
        try {
            ImageRetrieval r = image_retrieve(*search, *image, q, iteration, config.image_min,
                                              config.image_max);
            if (r.below_minimum) flags.push_back("image-below-minimum: " + q);
            docs.insert(docs.end(), r.docs.begin(), r.docs.end());
        } catch (const Error& e) {
            flags.push_back("retrieval-failed: " + q);
            (void)e;
        }
    }
    return docs;
}

} // namespace detail

inline Termination terminated_by(const PlanTrace& trace) {
    if (!trace.steps.empty() &&
        trace.steps.back().decision.action == RetrievalAction::NoSearch) {
        return Termination::NoSearchStop;
    }
    return Termination::IterationCap;
}

// The full iterative loop: plan steps until the expert stops searching or
// the iteration cap is hit, then synthesize the answer. Expert transport
// failures end the run early with a partial trace flagged failed.
inline PlanTrace run_plan(const MultimodalQuery& query, const PlannerConfig& config,
                          const PlannerBackends& backends) {
    validate_config(config);
    if (!backends.expert) throw ConfigError("planner: expert backend is required");
    if (!backends.generator) throw ConfigError("planner: generator backend is required");
    const PromptLibrary& prompts = backends.prompts ? *backends.prompts : builtin_prompts();

    PlanTrace trace;
    trace.sample_id = query.id;

    PlanState state = init_state(query);
    try {
        while (!is_terminal(state, config.t_max)) {
            StepOutcome step = config.paradigm == Paradigm::Parallel
                                   ? plan_step_parallel(*backends.expert, state, config, prompts)
                                   : plan_step_sequential(*backends.expert, state, config, prompts);
            std::vector<std::string> flags = step.flags;
            std::vector<RetrievedDoc> docs = detail::execute_retrieval(
                backends.search.get(), state, step.decision, config, flags);
            state = apply_decision(state, step.decision, docs, config.t_max);
            trace.steps.push_back(
                TraceStep{step.decision, std::move(docs), step.expert_tokens,
                          step.expert_latency_ms});
            trace.flags.insert(trace.flags.end(), flags.begin(), flags.end());
        }
    } catch (const TransportError& e) {
        trace.failed = true;
        trace.flags.push_back(std::string("expert-failed: ") + e.what());
        trace.terminated_by = terminated_by(trace);
        return trace;
    }
    trace.terminated_by = terminated_by(trace);

    try {
        trace.final_answer = generate_answer(*backends.generator, query, state.current_queries,
                                             state.evidence, config.evidence_budget, prompts);
    } catch (const Error& e) {
        trace.failed = true;
        trace.flags.push_back(std::string("generation-failed: ") + e.what());
    }
    return trace;
}

} // namespace cogplan
