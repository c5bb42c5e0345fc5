#pragma once

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cogplan/cache.hpp"
#include "cogplan/corpus.hpp"
#include "cogplan/dataset.hpp"
#include "cogplan/errors.hpp"
#include "cogplan/pipeline.hpp"
#include "cogplan/planner.hpp"
#include "cogplan/remote_expert.hpp"
#include "cogplan/remote_search.hpp"
#include "cogplan/report.hpp"
#include "cogplan/scripted_expert.hpp"
#include "cogplan/trace_io.hpp"

namespace cogplan {

namespace cli {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitBackend = 2;

// Values shared by subcommands. Precedence: flags > config file > env.
struct Settings {
    std::string config_file;
    std::string prompts_dir;
    std::string expert_url, expert_key, expert_model;
    std::string search_url, search_key;
};

inline void apply_config_file(Settings& s) {
    if (s.config_file.empty()) return;
    std::ifstream in(s.config_file, std::ios::binary);
    if (!in) throw ConfigError("config: cannot open '" + s.config_file + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config: " + std::string(e.what()));
    }
    auto take = [&](const char* key, std::string& slot) {
        if (slot.empty() && j.contains(key)) slot = j.at(key).get<std::string>();
    };
    take("prompts_dir", s.prompts_dir);
    take("expert_url", s.expert_url);
    take("expert_key", s.expert_key);
    take("expert_model", s.expert_model);
    take("search_url", s.search_url);
    take("search_key", s.search_key);
}

inline void apply_env(Settings& s) {
    if (s.expert_url.empty()) s.expert_url = env_or("COGPLAN_EXPERT_URL");
    if (s.expert_key.empty()) s.expert_key = env_or("COGPLAN_EXPERT_KEY");
    if (s.expert_model.empty()) s.expert_model = env_or("COGPLAN_EXPERT_MODEL");
    if (s.search_url.empty()) s.search_url = env_or("COGPLAN_SEARCH_URL");
    if (s.search_key.empty()) s.search_key = env_or("COGPLAN_SEARCH_KEY");
}

inline std::shared_ptr<ExpertBackend> make_expert(const std::string& script_path,
                                                  const std::string& kind, const Settings& s) {
    if (!script_path.empty()) {
        return std::make_shared<ScriptedExpert>(load_script(script_path));
    }
    if (kind == "echo") return std::make_shared<EchoExpert>();
    if (kind == "remote" || kind.empty()) {
        if (s.expert_url.empty()) return nullptr;
        RemoteExpertConfig cfg;
        cfg.base_url = s.expert_url;
        cfg.api_key = s.expert_key;
        cfg.model = s.expert_model;
        return std::make_shared<RemoteExpert>(cfg);
    }
    throw ValidationError("expert: unknown backend kind '" + kind + "'");
}

struct PlanArgs {
    std::string dataset;
    std::string query_text;
    std::string image;
    std::string sample_id = "adhoc";
    std::string mode = "cogplanner-sequential";
    std::string paradigm;
    PlannerConfig config;
    std::string expert_script;
    std::string expert_kind;
    std::string generator_script;
    std::string generator_kind;
    std::string corpus_dir;
    std::string cache_dir;
    size_t cache_capacity = 256;
    bool use_cache = false;
    std::string out = "-";
};

inline int run_plan_command(PlanArgs& args, Settings& settings) {
    apply_config_file(settings);
    apply_env(settings);

    PipelineMode mode = pipeline_mode_from_string(args.mode);
    if (!args.paradigm.empty()) {
        Paradigm p = paradigm_from_string(args.paradigm);
        mode = p == Paradigm::Parallel ? PipelineMode::CogPlannerParallel
                                       : PipelineMode::CogPlannerSequential;
    }
    validate_config(args.config);

    PromptLibrary prompts;
    if (!settings.prompts_dir.empty()) prompts.load_dir(settings.prompts_dir);

    PlannerBackends backends;
    backends.prompts = &prompts;
    backends.expert = make_expert(args.expert_script, args.expert_kind, settings);
    backends.generator = args.generator_script.empty() && args.generator_kind.empty()
                             ? backends.expert
                             : make_expert(args.generator_script, args.generator_kind, settings);
    if (!backends.generator) {
        throw ConfigError("plan: no generator backend; pass --expert-script/--expert or set "
                          "COGPLAN_EXPERT_URL");
    }
    bool needs_expert =
        mode == PipelineMode::CogPlannerParallel || mode == PipelineMode::CogPlannerSequential;
    if (needs_expert && !backends.expert) {
        throw ConfigError("plan: no planning expert; pass --expert-script/--expert or set "
                          "COGPLAN_EXPERT_URL");
    }

    if (!args.corpus_dir.empty()) {
        backends.search = std::make_shared<SimulatorBackend>(LocalCorpus::load(args.corpus_dir));
    } else if (!settings.search_url.empty()) {
        RemoteSearchConfig cfg;
        cfg.base_url = settings.search_url;
        cfg.api_key = settings.search_key;
        backends.search = std::make_shared<RemoteSearchBackend>(cfg);
    }
    if ((mode == PipelineMode::FixedText || mode == PipelineMode::FixedImage) &&
        !backends.search) {
        throw ConfigError("plan: fixed retrieval modes need --corpus or COGPLAN_SEARCH_URL");
    }
    if (backends.search && (args.use_cache || !args.cache_dir.empty())) {
        CacheConfig cache_cfg;
        cache_cfg.capacity = args.cache_capacity;
        cache_cfg.disk_dir = args.cache_dir;
        backends.search = cached(backends.search, cache_cfg);
    }

    std::vector<PlanTrace> traces;
    bool single = args.dataset.empty();
    if (single) {
        if (trim(args.query_text).empty()) {
            throw ValidationError("plan: provide --dataset or --query");
        }
        MultimodalQuery query;
        query.id = args.sample_id;
        query.text = args.query_text;
        if (!args.image.empty()) {
            query.image = image_from_locator(args.image);
            validate_image(*query.image);
        }
        traces.push_back(run_pipeline_sample(query, mode, args.config, backends));
    } else {
        std::vector<BenchSample> samples = load_dataset(args.dataset);
        traces = run_pipeline(samples, mode, args.config, backends);
    }

    if (args.out == "-") {
        write_traces(std::cout, traces);
    } else {
        write_traces_file(args.out, traces);
    }
    if (single && traces.size() == 1 && traces[0].failed) return kExitBackend;
    return kExitOk;
}

struct EvalArgs {
    std::string traces;
    std::string dataset;
    std::string out;
    std::string matcher = "exact";  // exact | expert
    std::string claims = "rule";    // rule | expert
    std::string title = "report";
};

inline int run_eval_command(EvalArgs& args, Settings& settings) {
    apply_config_file(settings);
    apply_env(settings);

    std::vector<PlanTrace> traces = read_traces_file(args.traces);
    std::vector<BenchSample> samples = load_dataset(args.dataset);

    std::set<std::string> known;
    for (const auto& s : samples) known.insert(s.id);
    std::vector<std::string> missing;
    for (const auto& t : traces) {
        if (!known.count(t.sample_id)) missing.push_back(t.sample_id);
    }
    if (!missing.empty()) {
        std::string joined;
        for (const auto& id : missing) joined += (joined.empty() ? "" : ", ") + id;
        throw ValidationError("eval: sample ids not in dataset: " + joined);
    }

    PromptLibrary prompts;
    if (!settings.prompts_dir.empty()) prompts.load_dir(settings.prompts_dir);

    std::shared_ptr<ExpertBackend> judge;
    std::unique_ptr<ClaimExtractor> extractor;
    std::unique_ptr<ClaimMatcher> matcher;
    if (args.claims == "expert" || args.matcher == "expert") {
        judge = make_expert("", "remote", settings);
        if (!judge) throw ConfigError("eval: expert-backed judging needs COGPLAN_EXPERT_URL");
    }
    if (args.claims == "expert") {
        extractor = std::make_unique<ExpertClaimExtractor>(judge, &prompts);
    } else if (args.claims != "rule") {
        throw ValidationError("claims: unknown extractor '" + args.claims + "'");
    }
    if (args.matcher == "expert") {
        matcher = std::make_unique<ExpertClaimMatcher>(judge, &prompts);
    } else if (args.matcher != "exact") {
        throw ValidationError("matcher: unknown matcher '" + args.matcher + "'");
    }

    ReportOptions options;
    options.extractor = extractor.get();
    options.matcher = matcher.get();
    MetricReport report = build_report(traces, samples, options);

    std::cout << render_report_table(report, args.title);
    if (!args.out.empty()) {
        std::ofstream out(args.out, std::ios::binary);
        if (!out) throw ValidationError("out: cannot open '" + args.out + "' for writing");
        out << to_json(report).dump(2) << '\n';
    }
    return kExitOk;
}

inline int run_stats_command(const std::string& dataset_path, bool as_json) {
    std::vector<BenchSample> samples = load_dataset(dataset_path);
    DatasetStats stats = dataset_stats(samples);
    if (as_json) {
        std::cout << to_json(stats).dump(2) << '\n';
        return kExitOk;
    }
    std::cout << "queries:         " << stats.n_queries << "\n"
              << "domains:         " << stats.n_domains << "\n"
              << "mean query len:  " << stats.mean_query_len << "\n"
              << "mean answer len: " << stats.mean_answer_len << "\n"
              << "images:          " << stats.n_images << "\n";
    std::cout << "hops:           ";
    for (const auto& [bucket, frac] : stats.hop_histogram) {
        std::cout << " " << bucket << " " << detail::fixed3(frac);
    }
    std::cout << "\nanswer types:   ";
    for (const auto& [type, frac] : stats.answer_type_frac) {
        std::cout << " " << type << " " << detail::fixed3(frac);
    }
    std::cout << "\n";
    return kExitOk;
}

inline int run_compare_command(const std::vector<std::string>& files,
                               const std::vector<std::string>& names) {
    if (files.empty()) throw ValidationError("compare: no report files given");
    std::vector<std::pair<std::string, nlohmann::json>> reports;
    for (size_t i = 0; i < files.size(); ++i) {
        std::ifstream in(files[i], std::ios::binary);
        if (!in) throw ValidationError("compare: cannot open '" + files[i] + "'");
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError("compare: " + files[i] + ": " + e.what());
        }
        std::string name = i < names.size() ? names[i] : files[i];
        reports.emplace_back(name, std::move(j));
    }
    std::cout << render_comparison_table(reports);
    return kExitOk;
}

} // namespace cli

// Entry point behind the cogplan binary. Exit codes: 0 success,
// 1 validation/usage error, 2 backend failure.
inline int cli_entry(int argc, const char* const* argv) {
    CLI::App app{"agentic multimodal retrieval planning and evaluation"};
    app.require_subcommand(1);

    cli::Settings settings;
    app.add_option("--config", settings.config_file, "JSON config file");
    app.add_option("--prompts", settings.prompts_dir, "prompt template directory");

    cli::PlanArgs plan;
    CLI::App* plan_cmd = app.add_subcommand("plan", "run a pipeline over a query or dataset");
    plan_cmd->add_option("--dataset", plan.dataset, "dataset JSONL");
    plan_cmd->add_option("--query", plan.query_text, "single query text");
    plan_cmd->add_option("--image", plan.image, "image path/url for --query");
    plan_cmd->add_option("--id", plan.sample_id, "sample id for --query");
    plan_cmd->add_option("--mode", plan.mode,
                         "origin | fixed-text | fixed-image | cogplanner-parallel | "
                         "cogplanner-sequential");
    plan_cmd->add_option("--paradigm", plan.paradigm, "parallel | sequential (forces cogplanner)");
    plan_cmd->add_option("--t-max", plan.config.t_max, "iteration cap");
    plan_cmd->add_option("--top-k", plan.config.text_top_k, "text results per sub-query");
    plan_cmd->add_option("--token-cap", plan.config.text_token_cap, "tokens per text result");
    plan_cmd->add_option("--image-min", plan.config.image_min, "min image candidates");
    plan_cmd->add_option("--image-max", plan.config.image_max, "max image candidates");
    plan_cmd->add_option("--evidence-budget", plan.config.evidence_budget,
                         "evidence digest token budget");
    plan_cmd->add_option("--expert-script", plan.expert_script, "scripted expert JSON");
    plan_cmd->add_option("--expert", plan.expert_kind, "echo | remote");
    plan_cmd->add_option("--generator-script", plan.generator_script, "scripted generator JSON");
    plan_cmd->add_option("--generator", plan.generator_kind, "echo | remote");
    plan_cmd->add_option("--corpus", plan.corpus_dir, "local corpus directory (simulator)");
    plan_cmd->add_option("--cache-dir", plan.cache_dir, "on-disk retrieval cache directory");
    plan_cmd->add_option("--cache-capacity", plan.cache_capacity, "in-memory cache entries");
    plan_cmd->add_flag("--cache", plan.use_cache, "enable in-memory retrieval cache");
    plan_cmd->add_option("--out", plan.out, "trace JSONL output ('-' = stdout)");

    cli::EvalArgs eval;
    CLI::App* eval_cmd = app.add_subcommand("eval", "score traces against a dataset");
    eval_cmd->add_option("--traces", eval.traces, "trace JSONL")->required();
    eval_cmd->add_option("--dataset", eval.dataset, "dataset JSONL")->required();
    eval_cmd->add_option("--out", eval.out, "report JSON output");
    eval_cmd->add_option("--matcher", eval.matcher, "exact | expert");
    eval_cmd->add_option("--claims", eval.claims, "rule | expert");
    eval_cmd->add_option("--title", eval.title, "table title");

    std::string stats_dataset;
    bool stats_json = false;
    CLI::App* stats_cmd = app.add_subcommand("stats", "dataset statistics");
    stats_cmd->add_option("--dataset", stats_dataset, "dataset JSONL")->required();
    stats_cmd->add_flag("--json", stats_json, "emit JSON");

    std::vector<std::string> compare_files;
    std::vector<std::string> compare_names;
    CLI::App* compare_cmd = app.add_subcommand("compare", "side-by-side report table");
    compare_cmd->add_option("reports", compare_files, "report JSON files");
    compare_cmd->add_option("--names", compare_names, "row labels");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? cli::kExitOk : cli::kExitValidation;
    }

    try {
        if (plan_cmd->parsed()) return cli::run_plan_command(plan, settings);
        if (eval_cmd->parsed()) return cli::run_eval_command(eval, settings);
        if (stats_cmd->parsed()) return cli::run_stats_command(stats_dataset, stats_json);
        if (compare_cmd->parsed()) return cli::run_compare_command(compare_files, compare_names);
    } catch (const TransportError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return cli::kExitBackend;
    } catch (const RetrievalError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return cli::kExitBackend;
    } catch (const GenerationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return cli::kExitBackend;
    } catch (const MetricError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return cli::kExitBackend;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return cli::kExitValidation;
    }
    return cli::kExitOk;
}

} // namespace cogplan
