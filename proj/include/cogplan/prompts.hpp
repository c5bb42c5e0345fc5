#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

#include "cogplan/errors.hpp"

namespace cogplan {

// Built-in prompt templates, version v1. A directory of *.txt files with the
// same names can override any of them at runtime (see PromptLibrary::load_dir),
// so deployments can iterate on prompt wording without rebuilding.
namespace prompts_v1 {

inline constexpr std::string_view kVersion = "v1";

inline constexpr std::string_view kReformulate =
    "You refine search queries for a question-answering system.\n"
    "Rewrite the current queries so they are clear, self-contained and easy to search.\n"
    "If the question needs several distinct facts, decompose it into at most {n_max}\n"
    "atomic sub-queries, each asking for exactly one fact. Use names found in the\n"
    "evidence to resolve references like \"this image\" or \"the game shown\".\n"
    "Reply with a numbered list only, one query per line, no commentary.\n"
    "\n"
    "Original question: {question}\n"
    "Current queries:\n{queries}\n"
    "Evidence gathered so far:\n{evidence}\n";

inline constexpr std::string_view kSelectAction =
    "You decide whether a question-answering system should retrieve more\n"
    "information before answering. Pick exactly one action from this list:\n"
    "{actions}\n"
    "Reply with a single line: Action: <LABEL>\n"
    "\n"
    "Original question: {question}\n"
    "Queries under consideration:\n{queries}\n"
    "Evidence gathered so far:\n{evidence}\n";

inline constexpr std::string_view kGenerate =
    "Answer the user's question. Ground every factual statement in the evidence\n"
    "below when evidence is present; otherwise answer from your own knowledge.\n"
    "Be direct and complete. Reply with the answer only.\n"
    "\n"
    "Question: {question}\n"
    "Refined queries:\n{final_queries}\n"
    "{evidence_section}";

inline constexpr std::string_view kClaimExtract =
    "Break the following answer into its atomic factual claims.\n"
    "Reply with a numbered list only, one short declarative claim per line.\n"
    "\n"
    "Answer: {answer}\n";

inline constexpr std::string_view kClaimMatch =
    "Does the candidate claim state the same fact as the reference claim?\n"
    "Reply with exactly YES or NO.\n"
    "\n"
    "Candidate: {pred}\n"
    "Reference: {gold}\n";

} // namespace prompts_v1

class PromptLibrary {
public:
    PromptLibrary()
        : version_(prompts_v1::kVersion),
          reformulate_(prompts_v1::kReformulate),
          select_action_(prompts_v1::kSelectAction),
          generate_(prompts_v1::kGenerate),
          claim_extract_(prompts_v1::kClaimExtract),
          claim_match_(prompts_v1::kClaimMatch) {}

    // Overrides templates from <dir>/<name>.txt for the names it finds:
    // reformulate, select_action, generate, claim_extract, claim_match.
    // An optional VERSION file replaces the version tag.
    void load_dir(const std::string& dir) {
        namespace fs = std::filesystem;
        if (!fs::is_directory(dir)) {
            throw ConfigError("prompts: not a directory '" + dir + "'");
        }
        auto read_if_present = [&](const char* name, std::string& slot) {
            fs::path p = fs::path(dir) / (std::string(name) + ".txt");
            if (!fs::exists(p)) return;
            std::ifstream in(p, std::ios::binary);
            if (!in) throw ConfigError("prompts: cannot read '" + p.string() + "'");
            std::ostringstream ss;
            ss << in.rdbuf();
            slot = ss.str();
        };
        read_if_present("reformulate", reformulate_);
        read_if_present("select_action", select_action_);
        read_if_present("generate", generate_);
        read_if_present("claim_extract", claim_extract_);
        read_if_present("claim_match", claim_match_);
        std::filesystem::path vp = std::filesystem::path(dir) / "VERSION";
        if (fs::exists(vp)) {
            std::ifstream in(vp);
            std::string v;
            std::getline(in, v);
            if (!v.empty()) version_ = v;
        }
    }

    const std::string& version() const { return version_; }
    const std::string& reformulate_template() const { return reformulate_; }
    const std::string& select_action_template() const { return select_action_; }
    const std::string& generate_template() const { return generate_; }
    const std::string& claim_extract_template() const { return claim_extract_; }
    const std::string& claim_match_template() const { return claim_match_; }

    static std::string render(std::string_view tpl,
                              const std::map<std::string, std::string>& values) {
        std::string out(tpl);
        for (const auto& [key, value] : values) {
            std::string needle = "{" + key + "}";
            size_t pos = 0;
            while ((pos = out.find(needle, pos)) != std::string::npos) {
                out.replace(pos, needle.size(), value);
                pos += value.size();
            }
        }
        return out;
    }

private:
    std::string version_;
    std::string reformulate_;
    std::string select_action_;
    std::string generate_;
    std::string claim_extract_;
    std::string claim_match_;
};

inline const PromptLibrary& builtin_prompts() {
    static const PromptLibrary lib;
    return lib;
}

} // namespace cogplan
