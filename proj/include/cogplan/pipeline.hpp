#pragma once

#include <string>
#include <vector>

#include "cogplan/core.hpp"
#include "cogplan/dataset.hpp"
#include "cogplan/errors.hpp"
#include "cogplan/generation.hpp"
#include "cogplan/planner.hpp"
#include "cogplan/retrieval.hpp"

namespace cogplan {

enum class PipelineMode { Origin, FixedText, FixedImage, CogPlannerParallel, CogPlannerSequential };

inline const char* to_string(PipelineMode m) {
    switch (m) {
    case PipelineMode::Origin: return "origin";
    case PipelineMode::FixedText: return "fixed-text";
    case PipelineMode::FixedImage: return "fixed-image";
    case PipelineMode::CogPlannerParallel: return "cogplanner-parallel";
    case PipelineMode::CogPlannerSequential: return "cogplanner-sequential";
    }
    return "origin";
}

inline PipelineMode pipeline_mode_from_string(const std::string& s) {
    if (s == "origin") return PipelineMode::Origin;
    if (s == "fixed-text") return PipelineMode::FixedText;
    if (s == "fixed-image") return PipelineMode::FixedImage;
    if (s == "cogplanner-parallel") return PipelineMode::CogPlannerParallel;
    if (s == "cogplanner-sequential") return PipelineMode::CogPlannerSequential;
    throw ValidationError("mode: unknown value '" + s + "'");
}

namespace detail {

// Direct generation from the original query only.
inline PlanTrace origin_trace(const MultimodalQuery& query, const PlannerConfig& config,
                              const PlannerBackends& backends) {
    const PromptLibrary& prompts = backends.prompts ? *backends.prompts : builtin_prompts();
    PlanTrace trace;
    trace.sample_id = query.id;
    trace.terminated_by = Termination::NoSearchStop;
    try {
        trace.final_answer = generate_answer(*backends.generator, query, QuerySet{{query.text}},
                                             {}, config.evidence_budget, prompts);
    } catch (const Error& e) {
        trace.failed = true;
        trace.flags.push_back(std::string("generation-failed: ") + e.what());
    }
    return trace;
}

// Single-turn single-modality retrieval, then generation.
inline PlanTrace fixed_trace(const MultimodalQuery& query, const PlannerConfig& config,
                             const PlannerBackends& backends, RetrievalAction action) {
    const PromptLibrary& prompts = backends.prompts ? *backends.prompts : builtin_prompts();
    if (action == RetrievalAction::ImageSearch && !query.image) {
        // imageless sample: fall back to direct generation, flagged
        PlanTrace trace = origin_trace(query, config, backends);
        trace.flags.insert(trace.flags.begin(), "fixed-image-fallback-origin");
        return trace;
    }
    if (!backends.search) throw ConfigError("pipeline: fixed retrieval needs a search backend");

    PlanTrace trace;
    trace.sample_id = query.id;
    trace.terminated_by = Termination::NoSearchStop;

    PlanDecision decision{action, QuerySet{{query.text}}};
    std::vector<RetrievedDoc> docs;
    try {
        if (action == RetrievalAction::TextSearch) {
            docs = text_retrieve(*backends.search, query.text, 1, config.text_top_k,
                                 config.text_token_cap);
        } else {
            ImageRetrieval r = image_retrieve(*backends.search, *query.image, query.text, 1,
                                              config.image_min, config.image_max);
            if (r.below_minimum) trace.flags.push_back("image-below-minimum: " + query.text);
            docs = r.docs;
        }
    } catch (const Error& e) {
        trace.flags.push_back(std::string("retrieval-failed: ") + e.what());
    }
    trace.steps.push_back(TraceStep{decision, docs, 0, 0.0});

    try {
        trace.final_answer = generate_answer(*backends.generator, query, QuerySet{{query.text}},
                                             docs, config.evidence_budget, prompts);
    } catch (const Error& e) {
        trace.failed = true;
        trace.flags.push_back(std::string("generation-failed: ") + e.what());
    }
    return trace;
}

} // namespace detail

// Runs one sample through the selected pipeline. All modes emit the same
// trace shape, so evaluation downstream never branches on the mode.
inline PlanTrace run_pipeline_sample(const MultimodalQuery& query, PipelineMode mode,
                                     PlannerConfig config, const PlannerBackends& backends) {
    if (!backends.generator) throw ConfigError("pipeline: generator backend is required");
    switch (mode) {
    case PipelineMode::Origin:
        return detail::origin_trace(query, config, backends);
    case PipelineMode::FixedText:
        return detail::fixed_trace(query, config, backends, RetrievalAction::TextSearch);
    case PipelineMode::FixedImage:
        return detail::fixed_trace(query, config, backends, RetrievalAction::ImageSearch);
    case PipelineMode::CogPlannerParallel:
        config.paradigm = Paradigm::Parallel;
        return run_plan(query, config, backends);
    case PipelineMode::CogPlannerSequential:
        config.paradigm = Paradigm::Sequential;
        return run_plan(query, config, backends);
    }
    throw ValidationError("mode: unknown pipeline mode");
}

// Whole-dataset run. Per-sample failures are recorded in their traces and
// the run continues.
inline std::vector<PlanTrace> run_pipeline(const std::vector<BenchSample>& samples,
                                           PipelineMode mode, const PlannerConfig& config,
                                           const PlannerBackends& backends) {
    std::vector<PlanTrace> traces;
    traces.reserve(samples.size());
    for (const auto& sample : samples) {
        try {
            traces.push_back(run_pipeline_sample(sample.query, mode, config, backends));
        } catch (const Error& e) {
            PlanTrace trace;
            trace.sample_id = sample.id;
            trace.failed = true;
            trace.flags.push_back(std::string("pipeline-failed: ") + e.what());
            traces.push_back(std::move(trace));
        }
    }
    return traces;
}

} // namespace cogplan
