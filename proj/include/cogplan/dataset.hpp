#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "cogplan/core.hpp"
#include "cogplan/errors.hpp"
#include "cogplan/text.hpp"

namespace cogplan {

enum class AnswerType { OpenEnded, CloseEnded };

inline const char* to_string(AnswerType t) {
    return t == AnswerType::OpenEnded ? "open-ended" : "close-ended";
}

inline AnswerType answer_type_from_string(const std::string& s) {
    if (s == "open-ended") return AnswerType::OpenEnded;
    if (s == "close-ended") return AnswerType::CloseEnded;
    throw ValidationError("answer_type: unknown value '" + s + "'");
}

// Optional recorded reference chain for a sample: per-step actions,
// reformulated queries, and retrieved doc ids.
struct GoldenTrace {
    std::vector<std::string> actions;
    std::vector<std::vector<std::string>> queries;
    std::vector<std::vector<std::string>> doc_refs;
};

struct BenchSample {
    std::string id;
    MultimodalQuery query;
    int hop_count = 1;
    AnswerType answer_type = AnswerType::CloseEnded;
    std::string domain;
    std::string golden_answer;
    std::optional<GoldenTrace> golden_trace;
};

inline std::string hop_bucket(int hop_count) {
    if (hop_count <= 1) return "1-hop";
    if (hop_count == 2) return "2-hop";
    return ">2-hop";
}

namespace detail {

inline BenchSample sample_from_json(const nlohmann::json& j, size_t lineno,
                                    const std::filesystem::path& root) {
    auto fail = [&](const std::string& field) -> ValidationError {
        return ValidationError("line " + std::to_string(lineno) + ": " + field);
    };
    BenchSample sample;
    if (!j.contains("id") || !j.at("id").is_string() || j.at("id").get<std::string>().empty()) {
        throw fail("id");
    }
    sample.id = j.at("id").get<std::string>();

    if (!j.contains("query") || !j.at("query").is_object()) throw fail("query");
    const auto& q = j.at("query");
    if (!q.contains("text") || !q.at("text").is_string() ||
        trim(q.at("text").get<std::string>()).empty()) {
        throw fail("query.text");
    }
    sample.query.id = sample.id;
    sample.query.text = q.at("text").get<std::string>();
    if (q.contains("image") && !q.at("image").is_null()) {
        std::string locator = q.at("image").get<std::string>();
        ImageRef image = image_from_locator(locator);
        if (image.media_kind == MediaKind::Path) {
            image.locator = (root / locator).lexically_normal().string();
        }
        try {
            validate_image(image, "query.image");
        } catch (const ValidationError& e) {
            throw ValidationError("line " + std::to_string(lineno) + ": " + e.what());
        }
        sample.query.image = image;
    }

    if (!j.contains("hop_count") || !j.at("hop_count").is_number_integer() ||
        j.at("hop_count").get<int>() < 1) {
        throw fail("hop_count");
    }
    sample.hop_count = j.at("hop_count").get<int>();

    if (!j.contains("answer_type") || !j.at("answer_type").is_string()) throw fail("answer_type");
    try {
        sample.answer_type = answer_type_from_string(j.at("answer_type").get<std::string>());
    } catch (const ValidationError&) {
        throw fail("answer_type");
    }

    if (!j.contains("domain") || !j.at("domain").is_string()) throw fail("domain");
    sample.domain = j.at("domain").get<std::string>();

    if (!j.contains("golden_answer") || !j.at("golden_answer").is_string() ||
        trim(j.at("golden_answer").get<std::string>()).empty()) {
        throw fail("golden_answer");
    }
    sample.golden_answer = j.at("golden_answer").get<std::string>();

    if (j.contains("golden_trace") && !j.at("golden_trace").is_null()) {
        const auto& g = j.at("golden_trace");
        GoldenTrace trace;
        if (g.contains("actions")) trace.actions = g.at("actions").get<std::vector<std::string>>();
        if (g.contains("queries")) {
            trace.queries = g.at("queries").get<std::vector<std::vector<std::string>>>();
        }
        if (g.contains("doc_refs")) {
            trace.doc_refs = g.at("doc_refs").get<std::vector<std::vector<std::string>>>();
        }
        if (!trace.actions.empty() && !trace.queries.empty() &&
            trace.actions.size() != trace.queries.size()) {
            throw fail("golden_trace");
        }
        sample.golden_trace = std::move(trace);
    }
    return sample;
}

} // namespace detail

// Parses a JSONL dataset, validating every sample eagerly. Image locators
// resolve relative to the dataset file's directory. Errors name the line
// and field; duplicate ids are rejected.
inline std::vector<BenchSample> load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("dataset: cannot open '" + path + "'");
    std::filesystem::path root = std::filesystem::path(path).parent_path();

    std::vector<BenchSample> samples;
    std::set<std::string> ids;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError("line " + std::to_string(lineno) + ": " + e.what());
        }
        BenchSample sample = detail::sample_from_json(j, lineno, root);
        if (!ids.insert(sample.id).second) {
            throw ValidationError("line " + std::to_string(lineno) + ": duplicate id '" +
                                  sample.id + "'");
        }
        samples.push_back(std::move(sample));
    }
    return samples;
}

struct DatasetStats {
    size_t n_queries = 0;
    size_t n_domains = 0;
    double mean_query_len = 0.0;  // whitespace tokens
    double mean_answer_len = 0.0; // whitespace tokens
    size_t n_images = 0;
    std::map<std::string, double> hop_histogram;    // {"1-hop","2-hop",">2-hop"} -> fraction
    std::map<std::string, double> answer_type_frac; // {"open-ended","close-ended"} -> fraction
};

inline DatasetStats dataset_stats(const std::vector<BenchSample>& samples) {
    if (samples.empty()) throw ValidationError("dataset: empty sample list");
    DatasetStats stats;
    stats.n_queries = samples.size();
    std::set<std::string> domains;
    size_t query_tokens = 0;
    size_t answer_tokens = 0;
    std::map<std::string, size_t> hops{{"1-hop", 0}, {"2-hop", 0}, {">2-hop", 0}};
    std::map<std::string, size_t> types{{"open-ended", 0}, {"close-ended", 0}};
    for (const auto& s : samples) {
        domains.insert(s.domain);
        query_tokens += ws_token_count(s.query.text);
        answer_tokens += ws_token_count(s.golden_answer);
        if (s.query.image) ++stats.n_images;
        ++hops[hop_bucket(s.hop_count)];
        ++types[to_string(s.answer_type)];
    }
    stats.n_domains = domains.size();
    const double n = static_cast<double>(samples.size());
    stats.mean_query_len = static_cast<double>(query_tokens) / n;
    stats.mean_answer_len = static_cast<double>(answer_tokens) / n;
    for (const auto& [bucket, count] : hops) {
        stats.hop_histogram[bucket] = static_cast<double>(count) / n;
    }
    for (const auto& [type, count] : types) {
        stats.answer_type_frac[type] = static_cast<double>(count) / n;
    }
    return stats;
}

inline nlohmann::json to_json(const DatasetStats& stats) {
    return {{"n_queries", stats.n_queries},
            {"n_domains", stats.n_domains},
            {"mean_query_len", stats.mean_query_len},
            {"mean_answer_len", stats.mean_answer_len},
            {"n_images", stats.n_images},
            {"hop_histogram", stats.hop_histogram},
            {"answer_type_fractions", stats.answer_type_frac}};
}

} // namespace cogplan
