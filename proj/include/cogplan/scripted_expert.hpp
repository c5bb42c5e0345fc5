#pragma once

#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "cogplan/core.hpp"
#include "cogplan/errors.hpp"
#include "cogplan/expert.hpp"
#include "cogplan/text.hpp"

namespace cogplan {

// Fixed decision script for one planning chain: per-iteration reformulations
// and actions, plus the final answer.
struct ExpertScript {
    struct Step {
        int iteration = 0;
        std::vector<std::string> reformulation; // empty -> reformulation left to fallback
        std::string action;                     // TEXT_SEARCH / IMAGE_SEARCH / NO_SEARCH, "" -> fallback
    };
    std::vector<Step> steps;
    std::string answer;
};

inline ExpertScript script_from_json(const nlohmann::json& j) {
    ExpertScript script;
    if (j.contains("steps")) {
        for (const auto& s : j.at("steps")) {
            ExpertScript::Step step;
            step.iteration = s.at("iteration").get<int>();
            if (s.contains("reformulation")) {
                step.reformulation = s.at("reformulation").get<std::vector<std::string>>();
            }
            if (s.contains("action")) step.action = s.at("action").get<std::string>();
            script.steps.push_back(std::move(step));
        }
    }
    script.answer = j.value("answer", "");
    return script;
}

inline nlohmann::json script_to_json(const ExpertScript& script) {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& s : script.steps) {
        steps.push_back({{"iteration", s.iteration},
                         {"reformulation", s.reformulation},
                         {"action", s.action}});
    }
    return {{"steps", steps}, {"answer", script.answer}};
}

inline ExpertScript load_script(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("expert-script: cannot open '" + path + "'");
    try {
        return script_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("expert-script: " + std::string(e.what()));
    }
}

// Replays a fixed decision script keyed by (iteration, role), so concurrent
// calls always get the answer meant for them. Responses use the structured
// output grammar; iterations the script does not cover yield empty output,
// which routes callers into their documented fallbacks. Latency is reported
// as zero to keep whole runs byte-reproducible.
class ScriptedExpert : public ExpertBackend {
public:
    explicit ScriptedExpert(ExpertScript script) : script_(std::move(script)) {}

    ExpertResponse complete(const ExpertRequest& request) override {
        std::string text;
        switch (request.role) {
        case ExpertRole::Reformulate: {
            const ExpertScript::Step* step = find_step(request.iteration);
            if (step && !step->reformulation.empty()) text = format_numbered(step->reformulation);
            break;
        }
        case ExpertRole::SelectAction: {
            const ExpertScript::Step* step = find_step(request.iteration);
            if (step && !step->action.empty()) text = "Action: " + step->action;
            break;
        }
        case ExpertRole::Generate:
            text = script_.answer;
            break;
        case ExpertRole::Judge:
            break; // scripted expert does not judge; callers see a parse error
        }
        ExpertResponse resp;
        resp.text = text;
        resp.prompt_tokens = static_cast<long long>(
            ws_token_count(request.system_prompt) + ws_token_count(request.user_text));
        resp.completion_tokens = static_cast<long long>(ws_token_count(text));
        resp.latency_ms = 0.0;
        return resp;
    }

    const ExpertScript& script() const { return script_; }

private:
    const ExpertScript::Step* find_step(int iteration) const {
        for (const auto& s : script_.steps) {
            if (s.iteration == iteration) return &s;
        }
        return nullptr;
    }

    ExpertScript script_;
};

// Returns the request text verbatim. Handy for metric plumbing tests where
// the output must be a deterministic function of the input.
class EchoExpert : public ExpertBackend {
public:
    ExpertResponse complete(const ExpertRequest& request) override {
        ExpertResponse resp;
        resp.text = request.user_text;
        resp.prompt_tokens = static_cast<long long>(
            ws_token_count(request.system_prompt) + ws_token_count(request.user_text));
        resp.completion_tokens = static_cast<long long>(ws_token_count(request.user_text));
        resp.latency_ms = 0.0;
        return resp;
    }
};

// Rebuilds the script a recorded chain corresponds to. Running the planner
// again with this script reproduces the trace.
inline ExpertScript script_from_trace(const PlanTrace& trace) {
    ExpertScript script;
    for (size_t i = 0; i < trace.steps.size(); ++i) {
        ExpertScript::Step step;
        step.iteration = static_cast<int>(i);
        step.reformulation = trace.steps[i].decision.query_set.queries;
        step.action = to_string(trace.steps[i].decision.action);
        script.steps.push_back(std::move(step));
    }
    script.answer = trace.final_answer;
    return script;
}

} // namespace cogplan
