#pragma once

#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cogplan/claims.hpp"
#include "cogplan/core.hpp"
#include "cogplan/dataset.hpp"
#include "cogplan/errors.hpp"
#include "cogplan/metrics.hpp"

namespace cogplan {

struct SampleMetrics {
    std::string sample_id;
    double precision = 0.0;
    double recall = 0.0;
    double token_f1 = 0.0;
    std::string hop_bucket;
    std::string answer_type;
};

struct BucketAggregate {
    double precision = 0.0;
    double recall = 0.0;
    double token_f1 = 0.0;
    size_t n = 0;
};

struct ActionDistribution {
    double no = 0.0;
    double text = 0.0;
    double image = 0.0;
};

struct Efficiency {
    double mean_expert_tokens = 0.0;
    double mean_latency_ms = 0.0;
};

struct MetricReport {
    std::vector<SampleMetrics> per_sample;
    BucketAggregate overall;
    std::map<std::string, BucketAggregate> buckets; // 1-hop / 2-hop / >2-hop
    ActionDistribution action_distribution;         // over all trace steps
    Efficiency efficiency;                          // per-trace totals, averaged
    size_t excluded = 0; // traces without a usable dataset entry or metric
};

struct ReportOptions {
    ClaimExtractor* extractor = nullptr; // null -> rule-based
    ClaimMatcher* matcher = nullptr;     // null -> exact normalized match
};

// Scores every trace against its golden answer, aggregates means per hop
// bucket and overall, and derives the action distribution and efficiency
// figures from the traces themselves. Traces whose sample is missing (or
// whose judge errors out) are excluded and counted.
inline MetricReport build_report(const std::vector<PlanTrace>& traces,
                                 const std::vector<BenchSample>& samples,
                                 const ReportOptions& options = {}) {
    std::map<std::string, const BenchSample*> by_id;
    for (const auto& s : samples) by_id[s.id] = &s;

    RuleBasedClaimExtractor default_extractor;
    ExactClaimMatcher default_matcher;
    ClaimExtractor& extractor = options.extractor ? *options.extractor : default_extractor;
    ClaimMatcher& matcher = options.matcher ? *options.matcher : default_matcher;

    MetricReport report;
    report.buckets["1-hop"] = {};
    report.buckets["2-hop"] = {};
    report.buckets[">2-hop"] = {};

    size_t steps_no = 0, steps_text = 0, steps_image = 0;
    double token_sum = 0.0, latency_sum = 0.0;
    size_t n_traces = 0;

    for (const auto& trace : traces) {
        for (const auto& step : trace.steps) {
            switch (step.decision.action) {
            case RetrievalAction::NoSearch: ++steps_no; break;
            case RetrievalAction::TextSearch: ++steps_text; break;
            case RetrievalAction::ImageSearch: ++steps_image; break;
            }
        }
        token_sum += static_cast<double>(trace.total_expert_tokens());
        latency_sum += trace.total_expert_latency_ms();
        ++n_traces;

        auto it = by_id.find(trace.sample_id);
        if (it == by_id.end() || trim(it->second->golden_answer).empty()) {
            ++report.excluded;
            continue;
        }
        const BenchSample& sample = *it->second;

        SampleMetrics m;
        m.sample_id = trace.sample_id;
        m.hop_bucket = hop_bucket(sample.hop_count);
        m.answer_type = to_string(sample.answer_type);
        m.token_f1 = token_f1(trace.final_answer, sample.golden_answer);
        try {
            std::vector<Claim> pred = extractor.extract(trace.final_answer);
            std::vector<Claim> gold = extractor.extract(sample.golden_answer);
            auto [p, r] = claim_precision_recall(pred, gold, matcher);
            m.precision = p;
            m.recall = r;
        } catch (const MetricError&) {
            ++report.excluded;
            continue;
        }
        report.per_sample.push_back(std::move(m));
    }

    for (const auto& m : report.per_sample) {
        auto add = [&](BucketAggregate& agg) {
            agg.precision += m.precision;
            agg.recall += m.recall;
            agg.token_f1 += m.token_f1;
            ++agg.n;
        };
        add(report.overall);
        add(report.buckets[m.hop_bucket]);
    }
    auto finalize = [](BucketAggregate& agg) {
        if (agg.n == 0) return;
        agg.precision /= static_cast<double>(agg.n);
        agg.recall /= static_cast<double>(agg.n);
        agg.token_f1 /= static_cast<double>(agg.n);
    };
    finalize(report.overall);
    for (auto& [name, agg] : report.buckets) finalize(agg);

    size_t total_steps = steps_no + steps_text + steps_image;
    if (total_steps > 0) {
        report.action_distribution.no =
            static_cast<double>(steps_no) / static_cast<double>(total_steps);
        report.action_distribution.text =
            static_cast<double>(steps_text) / static_cast<double>(total_steps);
        report.action_distribution.image =
            static_cast<double>(steps_image) / static_cast<double>(total_steps);
    }
    if (n_traces > 0) {
        report.efficiency.mean_expert_tokens = token_sum / static_cast<double>(n_traces);
        report.efficiency.mean_latency_ms = latency_sum / static_cast<double>(n_traces);
    }
    return report;
}

inline nlohmann::json to_json(const MetricReport& report) {
    auto agg = [](const BucketAggregate& a) {
        return nlohmann::json{
            {"precision", a.precision}, {"recall", a.recall}, {"token_f1", a.token_f1}};
    };
    nlohmann::json buckets;
    for (const auto& [name, a] : report.buckets) buckets[name] = agg(a);
    return {{"overall", agg(report.overall)},
            {"buckets", buckets},
            {"action_distribution",
             {{"no", report.action_distribution.no},
              {"text", report.action_distribution.text},
              {"image", report.action_distribution.image}}},
            {"efficiency",
             {{"mean_expert_tokens", report.efficiency.mean_expert_tokens},
              {"mean_latency_ms", report.efficiency.mean_latency_ms}}},
            {"excluded", report.excluded}};
}

namespace detail {

inline std::string fixed3(double v) {
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(3) << v;
    return ss.str();
}

inline std::string pad(const std::string& s, size_t width) {
    if (s.size() >= width) return s;
    return s + std::string(width - s.size(), ' ');
}

} // namespace detail

// Aligned text rendering of one report: per-bucket and overall P/R/F1,
// then the action mix and efficiency lines.
inline std::string render_report_table(const MetricReport& report,
                                       const std::string& title = "report") {
    using detail::fixed3;
    using detail::pad;
    static const char* order[] = {"1-hop", "2-hop", ">2-hop"};
    std::ostringstream out;
    out << title << "\n";
    out << pad("bucket", 10) << pad("n", 6) << pad("precision", 11) << pad("recall", 11)
        << "token_f1\n";
    for (const char* name : order) {
        const BucketAggregate& a = report.buckets.at(name);
        out << pad(name, 10) << pad(std::to_string(a.n), 6) << pad(fixed3(a.precision), 11)
            << pad(fixed3(a.recall), 11) << fixed3(a.token_f1) << "\n";
    }
    out << pad("overall", 10) << pad(std::to_string(report.overall.n), 6)
        << pad(fixed3(report.overall.precision), 11) << pad(fixed3(report.overall.recall), 11)
        << fixed3(report.overall.token_f1) << "\n";
    out << "actions: no " << fixed3(report.action_distribution.no) << ", text "
        << fixed3(report.action_distribution.text) << ", image "
        << fixed3(report.action_distribution.image) << "\n";
    out << "efficiency: mean_expert_tokens " << fixed3(report.efficiency.mean_expert_tokens)
        << ", mean_latency_ms " << fixed3(report.efficiency.mean_latency_ms) << "\n";
    out << "excluded: " << report.excluded << "\n";
    return out.str();
}

// Side-by-side comparison of several named report JSONs, one row per report:
// P/R/F1 per hop bucket plus overall. Rows can come from this tool or be
// imported from external systems, as long as they carry the report schema.
inline std::string render_comparison_table(
    const std::vector<std::pair<std::string, nlohmann::json>>& reports) {
    using detail::fixed3;
    using detail::pad;
    static const char* buckets[] = {"1-hop", "2-hop", ">2-hop"};
    std::ostringstream out;
    size_t name_w = 8;
    for (const auto& [name, _] : reports) name_w = std::max(name_w, name.size() + 2);
    out << pad("run", name_w);
    for (const char* b : buckets) {
        out << pad(std::string(b) + " P", 9) << pad(std::string(b) + " R", 9)
            << pad(std::string(b) + " F1", 10);
    }
    out << pad("P", 8) << pad("R", 8) << "F1\n";
    for (const auto& [name, j] : reports) {
        out << pad(name, name_w);
        for (const char* b : buckets) {
            const auto& a = j.at("buckets").at(b);
            out << pad(fixed3(a.at("precision").get<double>()), 9)
                << pad(fixed3(a.at("recall").get<double>()), 9)
                << pad(fixed3(a.at("token_f1").get<double>()), 10);
        }
        const auto& o = j.at("overall");
        out << pad(fixed3(o.at("precision").get<double>()), 8)
            << pad(fixed3(o.at("recall").get<double>()), 8)
            << fixed3(o.at("token_f1").get<double>()) << "\n";
    }
    return out.str();
}

} // namespace cogplan
