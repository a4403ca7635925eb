#include "kegcn/metrics.hpp"

#include "kegcn/errors.hpp"

#include <algorithm>
#include <cmath>

namespace kegcn {

std::size_t rank_of_truth(std::span<const std::pair<std::uint32_t, double>> distances,
                          std::uint32_t truth) {
    const auto it = std::find_if(distances.begin(), distances.end(),
                                 [&](const auto& c) { return c.first == truth; });
    if (it == distances.end()) throw ContractError("true candidate is not in the candidate list");
    const double d = it->second;
    std::size_t rank = 1;
    for (const auto& [id, dist] : distances)
        if (dist < d || (dist == d && id < truth)) ++rank;
    return rank;
}

std::size_t rank_of_truth(std::span<const double> distances, std::size_t truth) {
    if (truth >= distances.size()) throw ContractError("true candidate is not in the candidate list");
    const double d = distances[truth];
    std::size_t rank = 1;
    for (std::size_t c = 0; c < distances.size(); ++c)
        if (distances[c] < d || (distances[c] == d && c < truth)) ++rank;
    return rank;
}

double mrr(std::span<const std::size_t> ranks) {
    if (ranks.empty()) throw ContractError("mrr of an empty rank list");
    double acc = 0.0;
    for (std::size_t r : ranks) {
        if (r == 0) throw ContractError("ranks start at 1");
        acc += 1.0 / static_cast<double>(r);
    }
    return acc / static_cast<double>(ranks.size());
}

double hits_at_k(std::span<const std::size_t> ranks, std::size_t k) {
    if (ranks.empty()) throw ContractError("hits@k of an empty rank list");
    const auto hits = std::count_if(ranks.begin(), ranks.end(), [&](std::size_t r) { return r <= k; });
    return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

RankingMetrics ranking_metrics(std::span<const std::size_t> ranks) {
    return {mrr(ranks), hits_at_k(ranks, 1), hits_at_k(ranks, 10)};
}

RankingMetrics average(const RankingMetrics& a, const RankingMetrics& b) {
    return {(a.mrr + b.mrr) / 2.0, (a.hits1 + b.hits1) / 2.0, (a.hits10 + b.hits10) / 2.0};
}

std::uint32_t argmax(std::span<const double> scores) {
    if (scores.empty()) throw ContractError("argmax of an empty row");
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
        if (scores[i] > scores[best]) best = i;
    return static_cast<std::uint32_t>(best);
}

std::vector<std::uint32_t> top_k(std::span<const double> scores, std::size_t k) {
    std::vector<std::uint32_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<std::uint32_t>(i);
    k = std::min(k, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](std::uint32_t a, std::uint32_t b) {
                          return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
                      });
    order.resize(k);
    return order;
}

double accuracy(std::span<const std::uint32_t> predicted, std::span<const std::uint32_t> truth) {
    if (predicted.size() != truth.size()) throw DimensionError("prediction and label counts differ");
    if (truth.empty()) throw ContractError("accuracy over an empty test set");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i] ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

namespace {

bool contains(std::span<const std::uint32_t> set, std::uint32_t x) {
    return std::find(set.begin(), set.end(), x) != set.end();
}

void check_k(std::span<const double> scores, std::size_t k) {
    if (k == 0) throw ContractError("k must be at least 1");
    if (k > scores.size()) throw ContractError("k exceeds the number of classes");
}

} // namespace

double precision_at_k(std::span<const double> scores, std::span<const std::uint32_t> truth,
                      std::size_t k) {
    check_k(scores, k);
    if (truth.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::uint32_t c : top_k(scores, k)) hits += contains(truth, c) ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(k);
}

double ndcg_at_k(std::span<const double> scores, std::span<const std::uint32_t> truth, std::size_t k) {
    check_k(scores, k);
    if (truth.empty()) return 0.0;
    const std::vector<std::uint32_t> top = top_k(scores, k);
    double dcg = 0.0;
    for (std::size_t i = 0; i < top.size(); ++i)
        if (contains(truth, top[i])) dcg += 1.0 / std::log2(static_cast<double>(i + 2));
    double ideal = 0.0;
    const std::size_t relevant = std::min(truth.size(), k);
    for (std::size_t i = 0; i < relevant; ++i) ideal += 1.0 / std::log2(static_cast<double>(i + 2));
    return dcg / ideal;
}

MeanStd mean_std(std::span<const double> values) {
    if (values.empty()) return {};
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    return {mean, std::sqrt(var / static_cast<double>(values.size()))};
}

} // namespace kegcn
