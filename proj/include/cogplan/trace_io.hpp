#pragma once

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cogplan/core.hpp"
#include "cogplan/errors.hpp"

namespace cogplan {

using json = nlohmann::json;

inline json to_json(const ImageRef& image) {
    const char* kind = image.media_kind == MediaKind::Path    ? "path"
                       : image.media_kind == MediaKind::Url   ? "url"
                                                              : "inline-bytes";
    return json{{"locator", image.locator}, {"media_kind", kind}};
}

inline ImageRef image_from_json(const json& j) {
    ImageRef image;
    image.locator = j.at("locator").get<std::string>();
    std::string kind = j.value("media_kind", "path");
    if (kind == "path") image.media_kind = MediaKind::Path;
    else if (kind == "url") image.media_kind = MediaKind::Url;
    else if (kind == "inline-bytes") image.media_kind = MediaKind::InlineBytes;
    else throw ValidationError("media_kind: unknown value '" + kind + "'");
    return image;
}

inline json to_json(const RetrievedDoc& doc) {
    json j{{"kind", to_string(doc.kind)},
           {"source_id", doc.source_id},
           {"content", doc.content},
           {"iteration", doc.iteration},
           {"query", doc.query},
           {"token_count", doc.token_count}};
    if (doc.image) j["image"] = to_json(*doc.image);
    return j;
}

inline RetrievedDoc doc_from_json(const json& j) {
    RetrievedDoc doc;
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "text") doc.kind = DocKind::Text;
    else if (kind == "image") doc.kind = DocKind::Image;
    else throw ValidationError("kind: unknown value '" + kind + "'");
    doc.source_id = j.at("source_id").get<std::string>();
    doc.content = j.at("content").get<std::string>();
    doc.iteration = j.at("iteration").get<int>();
    doc.query = j.at("query").get<std::string>();
    doc.token_count = j.at("token_count").get<int>();
    if (j.contains("image")) doc.image = image_from_json(j.at("image"));
    return doc;
}

inline json to_json(const TraceStep& step) {
    json retrieved = json::array();
    for (const auto& doc : step.retrieved) retrieved.push_back(to_json(doc));
    json queries = json::array();
    for (const auto& q : step.decision.query_set.queries) queries.push_back(q);
    return json{{"action", to_string(step.decision.action)},
                {"queries", queries},
                {"retrieved", retrieved},
                {"expert_tokens", step.expert_tokens},
                {"expert_latency_ms", step.expert_latency_ms}};
}

inline TraceStep step_from_json(const json& j) {
    TraceStep step;
    step.decision.action = action_from_string(j.at("action").get<std::string>());
    step.decision.query_set.queries = j.at("queries").get<std::vector<std::string>>();
    for (const auto& d : j.at("retrieved")) step.retrieved.push_back(doc_from_json(d));
    step.expert_tokens = j.at("expert_tokens").get<long long>();
    step.expert_latency_ms = j.at("expert_latency_ms").get<double>();
    return step;
}

inline json to_json(const PlanTrace& trace) {
    json steps = json::array();
    for (const auto& s : trace.steps) steps.push_back(to_json(s));
    json flags = json::array();
    for (const auto& f : trace.flags) flags.push_back(f);
    return json{{"sample_id", trace.sample_id},
                {"steps", steps},
                {"final_answer", trace.final_answer},
                {"terminated_by", to_string(trace.terminated_by)},
                {"flags", flags},
                {"failed", trace.failed}};
}

inline PlanTrace trace_from_json(const json& j) {
    PlanTrace trace;
    trace.sample_id = j.at("sample_id").get<std::string>();
    for (const auto& s : j.at("steps")) trace.steps.push_back(step_from_json(s));
    trace.final_answer = j.at("final_answer").get<std::string>();
    trace.terminated_by = termination_from_string(j.at("terminated_by").get<std::string>());
    if (j.contains("flags")) trace.flags = j.at("flags").get<std::vector<std::string>>();
    if (j.contains("failed")) trace.failed = j.at("failed").get<bool>();
    return trace;
}

// One trace per line.
inline std::string trace_to_jsonl_line(const PlanTrace& trace) {
    return to_json(trace).dump();
}

inline void write_traces(std::ostream& out, const std::vector<PlanTrace>& traces) {
    for (const auto& t : traces) out << trace_to_jsonl_line(t) << '\n';
}

inline void write_traces_file(const std::string& path, const std::vector<PlanTrace>& traces) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("out: cannot open '" + path + "' for writing");
    write_traces(out, traces);
}

inline std::vector<PlanTrace> read_traces(std::istream& in) {
    std::vector<PlanTrace> traces;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            traces.push_back(trace_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw ValidationError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return traces;
}

inline std::vector<PlanTrace> read_traces_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("traces: cannot open '" + path + "'");
    return read_traces(in);
}

} // namespace cogplan
