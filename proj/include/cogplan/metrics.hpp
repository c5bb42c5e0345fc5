#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "cogplan/text.hpp"

namespace cogplan {

// Metric tokenizer: lowercase, split at whitespace and punctuation
// boundaries, drop empties. A token is a maximal alphanumeric run; bytes
// >= 0x80 count as word bytes so non-ASCII text tokenizes sanely.
inline std::vector<std::string> metric_tokens(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        bool word = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || static_cast<unsigned char>(c) >= 0x80;
        if (word) {
            cur += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

// Token-level F1: multiset overlap O between prediction and gold tokens,
// P = |O|/|pred|, R = |O|/|gold|, F1 = 2PR/(P+R).
// Conventions: both empty -> 1, exactly one empty -> 0, P+R == 0 -> 0.
inline double token_f1(std::string_view prediction, std::string_view gold) {
    std::vector<std::string> p = metric_tokens(prediction);
    std::vector<std::string> g = metric_tokens(gold);
    if (p.empty() && g.empty()) return 1.0;
    if (p.empty() || g.empty()) return 0.0;

    std::map<std::string, int> gold_counts;
    for (const auto& t : g) ++gold_counts[t];
    size_t overlap = 0;
    for (const auto& t : p) {
        auto it = gold_counts.find(t);
        if (it != gold_counts.end() && it->second > 0) {
            --it->second;
            ++overlap;
        }
    }
    double precision = static_cast<double>(overlap) / static_cast<double>(p.size());
    double recall = static_cast<double>(overlap) / static_cast<double>(g.size());
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

namespace detail {

using Ngram = std::vector<std::string>;

inline std::map<Ngram, int> ngram_counts(const std::vector<std::string>& tokens, size_t n) {
    std::map<Ngram, int> counts;
    if (tokens.size() < n) return counts;
    for (size_t i = 0; i + n <= tokens.size(); ++i) {
        ++counts[Ngram(tokens.begin() + static_cast<long>(i),
                       tokens.begin() + static_cast<long>(i + n))];
    }
    return counts;
}

} // namespace detail

// BLEU on a single prediction against one or more references: modified
// n-gram precision for n = 1..4 (capped at the prediction length), geometric
// mean with add-one smoothing on zero-count orders, times the brevity
// penalty exp(1 - r/c) when the prediction is shorter than the effective
// reference length r (closest length to c; ties prefer the shorter).
inline double bleu(std::string_view prediction, const std::vector<std::string>& references) {
    std::vector<std::string> pred = metric_tokens(prediction);
    if (pred.empty() || references.empty()) return 0.0;

    std::vector<std::vector<std::string>> refs;
    refs.reserve(references.size());
    for (const auto& r : references) refs.push_back(metric_tokens(r));

    const size_t c = pred.size();
    size_t r_eff = refs[0].size();
    for (const auto& ref : refs) {
        size_t len = ref.size();
        size_t best_diff = r_eff > c ? r_eff - c : c - r_eff;
        size_t diff = len > c ? len - c : c - len;
        if (diff < best_diff || (diff == best_diff && len < r_eff)) r_eff = len;
    }

    const size_t max_n = std::min<size_t>(4, c);
    double log_sum = 0.0;
    for (size_t n = 1; n <= max_n; ++n) {
        std::map<detail::Ngram, int> pred_counts = detail::ngram_counts(pred, n);
        long long total = static_cast<long long>(c - n + 1);
        long long matched = 0;
        for (const auto& [gram, count] : pred_counts) {
            int clip = 0;
            for (const auto& ref : refs) {
                auto ref_counts = detail::ngram_counts(ref, n);
                auto it = ref_counts.find(gram);
                if (it != ref_counts.end()) clip = std::max(clip, it->second);
            }
            matched += std::min(count, clip);
        }
        double p_n = matched > 0
                         ? static_cast<double>(matched) / static_cast<double>(total)
                         : static_cast<double>(matched + 1) / static_cast<double>(total + 1);
        log_sum += std::log(p_n);
    }
    double geo_mean = std::exp(log_sum / static_cast<double>(max_n));
    double bp = c < r_eff ? std::exp(1.0 - static_cast<double>(r_eff) / static_cast<double>(c))
                          : 1.0;
    return bp * geo_mean;
}

// ROUGE-L F-measure with beta = 1: longest common subsequence over tokens,
// P = LCS/|pred|, R = LCS/|ref|, score = 2PR/(P+R). Empty conventions as
// token_f1.
inline double rouge_l(std::string_view prediction, std::string_view reference) {
    std::vector<std::string> p = metric_tokens(prediction);
    std::vector<std::string> r = metric_tokens(reference);
    if (p.empty() && r.empty()) return 1.0;
    if (p.empty() || r.empty()) return 0.0;

    // one-row DP over the reference
    std::vector<size_t> prev(r.size() + 1, 0), cur(r.size() + 1, 0);
    for (size_t i = 1; i <= p.size(); ++i) {
        for (size_t j = 1; j <= r.size(); ++j) {
            cur[j] = p[i - 1] == r[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
        std::fill(cur.begin(), cur.end(), 0);
    }
    size_t lcs = prev[r.size()];
    double precision = static_cast<double>(lcs) / static_cast<double>(p.size());
    double recall = static_cast<double>(lcs) / static_cast<double>(r.size());
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

} // namespace cogplan
