#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "helpers.hpp"

using namespace cogplan;

namespace {

MultimodalQuery fig1_query() {
    return MultimodalQuery{
        "s01",
        "How many copies did the game in this image sell compared with Black Myth Wukong?",
        ImageRef{testutil::demo_asset("astro_bot_screenshot.png"), MediaKind::Path}};
}

PlannerBackends scripted_backends(const std::string& script_name,
                                  std::shared_ptr<SearchBackend> search = nullptr) {
    PlannerBackends b;
    auto expert = std::make_shared<ScriptedExpert>(load_script(testutil::demo_script(script_name)));
    b.expert = expert;
    b.generator = expert;
    b.search = search ? std::move(search)
                      : std::make_shared<SimulatorBackend>(LocalCorpus::load(testutil::demo_corpus()));
    return b;
}

// Reformulates to a marker query so the two paradigms are distinguishable.
std::shared_ptr<testutil::FnExpert> marker_expert(const std::string& marker,
                                                  const std::string& action_if_marker,
                                                  const std::string& action_otherwise) {
    return std::make_shared<testutil::FnExpert>([=](const ExpertRequest& req) -> std::string {
        switch (req.role) {
        case ExpertRole::Reformulate: return "1. " + marker;
        case ExpertRole::SelectAction:
            return req.user_text.find(marker) != std::string::npos ? "Action: " + action_if_marker
                                                                   : "Action: " + action_otherwise;
        case ExpertRole::Generate: return "generated answer";
        default: return "";
        }
    });
}

} // namespace

TEST_CASE("parallel step conditions both calls on the predecessor queries", "[planner]") {
    auto inner = marker_expert("REFORMED_MARKER", "NO_SEARCH", "TEXT_SEARCH");
    auto recorder = std::make_shared<testutil::RecordingExpert>(inner);
    PlanState state = init_state(MultimodalQuery{"s", "original question", std::nullopt});

    StepOutcome step = plan_step_parallel(*recorder, state, PlannerConfig{});

    auto action_reqs = recorder->requests_with_role(ExpertRole::SelectAction);
    REQUIRE(action_reqs.size() == 1);
    CHECK(action_reqs[0].user_text.find("original question") != std::string::npos);
    CHECK(action_reqs[0].user_text.find("REFORMED_MARKER") == std::string::npos);
    // the reformulation still lands in the decision
    CHECK(step.decision.query_set.queries == std::vector<std::string>{"REFORMED_MARKER"});
    // and the action selector, having seen the un-reformed set, searched
    CHECK(step.decision.action == RetrievalAction::TextSearch);
}

TEST_CASE("sequential step feeds the reformulated queries to the action selector", "[planner]") {
    auto inner = marker_expert("REFORMED_MARKER", "NO_SEARCH", "TEXT_SEARCH");
    auto recorder = std::make_shared<testutil::RecordingExpert>(inner);
    PlanState state = init_state(MultimodalQuery{"s", "original question", std::nullopt});

    StepOutcome step = plan_step_sequential(*recorder, state, PlannerConfig{});

    auto action_reqs = recorder->requests_with_role(ExpertRole::SelectAction);
    REQUIRE(action_reqs.size() == 1);
    CHECK(action_reqs[0].user_text.find("REFORMED_MARKER") != std::string::npos);
    CHECK(step.decision.action == RetrievalAction::NoSearch);
}

TEST_CASE("sequential fig1 step decomposes then searches text", "[planner]") {
    PlannerBackends b = scripted_backends("fig1.json");
    PlanState s0 = init_state(fig1_query());
    PlanDecision d0{RetrievalAction::ImageSearch,
                    QuerySet{{"What game is shown in this screenshot?"}}};
    PlanState s1 = apply_decision(
        s0, d0, {testutil::make_doc(DocKind::Image, "img_astro", "Astro Bot screenshot", 1)});

    StepOutcome step = plan_step_sequential(*b.expert, s1, PlannerConfig{});
    CHECK(step.decision.action == RetrievalAction::TextSearch);
    CHECK(step.decision.query_set.queries.size() == 2);
}

TEST_CASE("reformulation fallback then scripted no-search", "[planner]") {
    // expert with no reformulation entries: identity fallback, then NO_SEARCH
    auto expert = std::make_shared<testutil::FnExpert>([](const ExpertRequest& req) {
        return req.role == ExpertRole::SelectAction ? std::string("Action: NO_SEARCH")
                                                    : std::string();
    });
    PlanState state = init_state(MultimodalQuery{"s", "keep these queries", std::nullopt});
    StepOutcome step = plan_step_sequential(*expert, state, PlannerConfig{});
    CHECK(step.decision.action == RetrievalAction::NoSearch);
    CHECK(step.decision.query_set == state.current_queries);
    CHECK_FALSE(step.flags.empty()); // degradation recorded
}

TEST_CASE("run_plan: immediate no-search means one step, no retrieval", "[planner]") {
    PlannerBackends b = scripted_backends("no_search.json");
    PlanTrace trace = run_plan(MultimodalQuery{"q", "any question", std::nullopt},
                               PlannerConfig{}, b);
    REQUIRE(trace.steps.size() == 1);
    CHECK(trace.steps[0].decision.action == RetrievalAction::NoSearch);
    CHECK(trace.steps[0].retrieved.empty());
    CHECK(trace.terminated_by == Termination::NoSearchStop);
    CHECK(trace.final_answer == "Answered directly from model knowledge without retrieval.");
    CHECK_FALSE(trace.failed);
}

TEST_CASE("run_plan: fig1 chain retrieves at steps 1-2 and stops itself", "[planner]") {
    PlannerBackends b = scripted_backends("fig1.json");
    PlannerConfig cfg;
    cfg.paradigm = Paradigm::Sequential;
    PlanTrace trace = run_plan(fig1_query(), cfg, b);

    REQUIRE(trace.steps.size() == 3);
    CHECK(trace.steps[0].decision.action == RetrievalAction::ImageSearch);
    CHECK_FALSE(trace.steps[0].retrieved.empty());
    CHECK(trace.steps[1].decision.action == RetrievalAction::TextSearch);
    CHECK(trace.steps[1].decision.query_set.queries.size() == 2);
    CHECK_FALSE(trace.steps[1].retrieved.empty());
    CHECK(trace.steps[2].decision.action == RetrievalAction::NoSearch);
    CHECK(trace.steps[2].retrieved.empty());
    CHECK(trace.terminated_by == Termination::NoSearchStop);
    for (const auto& step : trace.steps) CHECK(step.expert_tokens > 0);
}

TEST_CASE("run_plan: always-search hits the iteration cap", "[planner]") {
    PlannerBackends b = scripted_backends("always_text.json");
    PlanTrace trace = run_plan(MultimodalQuery{"q", "any question", std::nullopt},
                               PlannerConfig{}, b);
    CHECK(trace.steps.size() == 3);
    CHECK(trace.terminated_by == Termination::IterationCap);
    CHECK_FALSE(trace.final_answer.empty()); // generation still runs at the cap
}

TEST_CASE("run_plan terminates within t_max for random scripts", "[planner][property]") {
    std::mt19937 rng(271828);
    std::uniform_int_distribution<int> action_pick(0, 2);
    std::uniform_int_distribution<int> n_queries(1, 5);
    const char* actions[] = {"TEXT_SEARCH", "IMAGE_SEARCH", "NO_SEARCH"};

    auto search = std::make_shared<SimulatorBackend>(LocalCorpus::load(testutil::demo_corpus()));
    for (int run = 0; run < 100; ++run) {
        ExpertScript script;
        for (int t = 0; t < 3; ++t) {
            ExpertScript::Step step;
            step.iteration = t;
            int nq = n_queries(rng);
            for (int i = 0; i < nq; ++i) {
                step.reformulation.push_back("query " + std::to_string(run) + " " +
                                             std::to_string(t) + " " + std::to_string(i));
            }
            step.action = actions[action_pick(rng)];
            script.steps.push_back(std::move(step));
        }
        script.answer = "scripted answer";

        PlannerBackends b;
        auto expert = std::make_shared<ScriptedExpert>(script);
        b.expert = expert;
        b.generator = expert;
        b.search = search;

        PlannerConfig cfg;
        cfg.paradigm = run % 2 == 0 ? Paradigm::Parallel : Paradigm::Sequential;
        MultimodalQuery q{"rq", "seed question",
                          ImageRef{testutil::demo_asset("zelda_screenshot.png"), MediaKind::Path}};
        PlanTrace trace = run_plan(q, cfg, b);

        REQUIRE(trace.steps.size() <= 3);
        REQUIRE(!trace.steps.empty());
        if (trace.terminated_by == Termination::NoSearchStop) {
            CHECK(trace.steps.back().decision.action == RetrievalAction::NoSearch);
        } else {
            CHECK(trace.steps.size() == 3);
            CHECK(trace.steps.back().decision.action != RetrievalAction::NoSearch);
        }
        // fan-out bound per step
        for (const auto& step : trace.steps) {
            size_t nq = step.decision.query_set.queries.size();
            size_t cap = step.decision.action == RetrievalAction::TextSearch ? nq * 5 : nq * 6;
            CHECK(step.retrieved.size() <= cap);
        }
    }
}

TEST_CASE("paradigms differ exactly when the action depends on reformulation", "[planner]") {
    PlannerConfig cfg;
    auto search = std::make_shared<SimulatorBackend>(LocalCorpus::load(testutil::demo_corpus()));

    // action selector answers NO_SEARCH only once it sees the reformulated set
    auto parallel_expert = marker_expert("astro bot sales", "NO_SEARCH", "TEXT_SEARCH");
    PlannerBackends pb{parallel_expert, parallel_expert, search, nullptr};
    cfg.paradigm = Paradigm::Parallel;
    PlanTrace parallel_trace =
        run_plan(MultimodalQuery{"q", "plain question", std::nullopt}, cfg, pb);

    auto sequential_expert = marker_expert("astro bot sales", "NO_SEARCH", "TEXT_SEARCH");
    PlannerBackends sb{sequential_expert, sequential_expert, search, nullptr};
    cfg.paradigm = Paradigm::Sequential;
    PlanTrace sequential_trace =
        run_plan(MultimodalQuery{"q", "plain question", std::nullopt}, cfg, sb);

    // sequential sees the marker at t=0 and stops immediately
    CHECK(sequential_trace.steps.size() == 1);
    CHECK(sequential_trace.steps[0].decision.action == RetrievalAction::NoSearch);
    // parallel's selector saw only the original text at t=0, so it searched;
    // at t=1 the current queries carry the marker and it stops
    REQUIRE(parallel_trace.steps.size() == 2);
    CHECK(parallel_trace.steps[0].decision.action == RetrievalAction::TextSearch);
    CHECK(parallel_trace.steps[1].decision.action == RetrievalAction::NoSearch);
}

TEST_CASE("identity reformulation makes the paradigms agree", "[planner]") {
    auto make_identity = [] {
        return std::make_shared<testutil::FnExpert>([](const ExpertRequest& req) -> std::string {
            switch (req.role) {
            case ExpertRole::Reformulate: {
                // echo back the "Current queries" list verbatim
                auto items = parse_query_set_output(req.user_text);
                return format_numbered(items);
            }
            case ExpertRole::SelectAction:
                return req.iteration == 0 ? "Action: TEXT_SEARCH" : "Action: NO_SEARCH";
            case ExpertRole::Generate: return "same answer";
            default: return "";
            }
        });
    };
    auto search = std::make_shared<SimulatorBackend>(LocalCorpus::load(testutil::demo_corpus()));
    MultimodalQuery q{"q", "astro bot sales", std::nullopt};

    PlannerConfig cfg;
    cfg.paradigm = Paradigm::Parallel;
    auto e1 = make_identity();
    PlanTrace parallel_trace = run_plan(q, cfg, PlannerBackends{e1, e1, search, nullptr});
    cfg.paradigm = Paradigm::Sequential;
    auto e2 = make_identity();
    PlanTrace sequential_trace = run_plan(q, cfg, PlannerBackends{e2, e2, search, nullptr});

    CHECK(trace_to_jsonl_line(parallel_trace) == trace_to_jsonl_line(sequential_trace));
}

TEST_CASE("a trace-derived script reproduces the trace", "[planner][property]") {
    std::mt19937 rng(5050);
    std::uniform_int_distribution<int> action_pick(0, 2);
    const char* actions[] = {"TEXT_SEARCH", "IMAGE_SEARCH", "NO_SEARCH"};
    auto search = std::make_shared<SimulatorBackend>(LocalCorpus::load(testutil::demo_corpus()));

    for (int run = 0; run < 20; ++run) {
        ExpertScript script;
        for (int t = 0; t < 3; ++t) {
            ExpertScript::Step step;
            step.iteration = t;
            step.reformulation = {"astro sales " + std::to_string(run) + " " + std::to_string(t),
                                  "wukong sales " + std::to_string(t)};
            step.action = actions[action_pick(rng)];
            script.steps.push_back(std::move(step));
        }
        script.answer = "answer " + std::to_string(run);

        auto expert = std::make_shared<ScriptedExpert>(script);
        PlannerBackends b{expert, expert, search, nullptr};
        MultimodalQuery q{"rq", "does astro outsell wukong?",
                          ImageRef{testutil::demo_asset("astro_bot_screenshot.png"),
                                   MediaKind::Path}};
        PlanTrace first = run_plan(q, PlannerConfig{}, b);

        auto replay = std::make_shared<ScriptedExpert>(script_from_trace(first));
        PlannerBackends rb{replay, replay, search, nullptr};
        PlanTrace second = run_plan(q, PlannerConfig{}, rb);

        CHECK(trace_to_jsonl_line(first) == trace_to_jsonl_line(second));
    }
}

TEST_CASE("failed sub-query retrieval flags the trace but keeps going", "[planner]") {
    auto flaky = std::make_shared<testutil::FnSearchBackend>();
    flaky->on_text = [](const std::string& query, int) -> std::vector<RawHit> {
        if (query == "bad query") throw RetrievalError("backend exploded");
        return {testutil::text_hit("d1", "good content")};
    };

    ExpertScript script;
    script.steps.push_back({0, {"good query", "bad query"}, "TEXT_SEARCH"});
    script.steps.push_back({1, {"good query", "bad query"}, "NO_SEARCH"});
    script.answer = "done";
    auto expert = std::make_shared<ScriptedExpert>(script);
    PlannerBackends b{expert, expert, flaky, nullptr};

    PlanTrace trace = run_plan(MultimodalQuery{"q", "question", std::nullopt}, PlannerConfig{}, b);
    CHECK_FALSE(trace.failed);
    REQUIRE(trace.steps.size() == 2);
    CHECK(trace.steps[0].retrieved.size() == 1); // the good sub-query's doc
    bool flagged = false;
    for (const auto& f : trace.flags) flagged |= f.find("retrieval-failed") != std::string::npos;
    CHECK(flagged);
}

TEST_CASE("expert transport failure yields a partial failed trace", "[planner]") {
    class DeadExpert : public ExpertBackend {
    public:
        ExpertResponse complete(const ExpertRequest&) override {
            throw TransportError("endpoint unreachable");
        }
    };
    auto dead = std::make_shared<DeadExpert>();
    PlannerBackends b{dead, dead, nullptr, nullptr};
    PlanTrace trace = run_plan(MultimodalQuery{"q", "question", std::nullopt}, PlannerConfig{}, b);
    CHECK(trace.failed);
    CHECK(trace.steps.empty());
    CHECK(trace.final_answer.empty());
}

TEST_CASE("planner config is validated", "[planner]") {
    auto expert = std::make_shared<EchoExpert>();
    PlannerConfig bad;
    bad.image_min = 7; // exceeds image_max
    CHECK_THROWS_AS(run_plan(MultimodalQuery{"q", "x", std::nullopt}, bad,
                             PlannerBackends{expert, expert, nullptr, nullptr}),
                    ValidationError);
    PlannerConfig zero;
    zero.t_max = 0;
    CHECK_THROWS_AS(run_plan(MultimodalQuery{"q", "x", std::nullopt}, zero,
                             PlannerBackends{expert, expert, nullptr, nullptr}),
                    ValidationError);
}
