#pragma once

// Ranking and classification metrics. Every tie is broken by ascending id so
// results never depend on evaluation order.

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace kegcn {

/// 1-based rank of `truth` when candidates are sorted by ascending distance,
/// equal distances ordered by ascending candidate id. Throws ContractError
/// when truth is not among the candidates.
std::size_t rank_of_truth(std::span<const std::pair<std::uint32_t, double>> distances,
                          std::uint32_t truth);
/// Same, where the candidate id is the position in `distances`.
std::size_t rank_of_truth(std::span<const double> distances, std::size_t truth);

double mrr(std::span<const std::size_t> ranks);
double hits_at_k(std::span<const std::size_t> ranks, std::size_t k);

struct RankingMetrics {
    double mrr = 0.0;
    double hits1 = 0.0;
    double hits10 = 0.0;
};

RankingMetrics ranking_metrics(std::span<const std::size_t> ranks);
/// Mean of the two alignment directions.
RankingMetrics average(const RankingMetrics& a, const RankingMetrics& b);

/// Index of the largest score, lowest index on ties.
std::uint32_t argmax(std::span<const double> scores);
/// Indices of the k highest scores, best first, lowest index on ties.
std::vector<std::uint32_t> top_k(std::span<const double> scores, std::size_t k);

/// Fraction of positions where predicted == truth. Throws ContractError when empty.
double accuracy(std::span<const std::uint32_t> predicted, std::span<const std::uint32_t> truth);

/// |top-k ∩ truth| / k. An empty truth set scores 0.
double precision_at_k(std::span<const double> scores, std::span<const std::uint32_t> truth,
                      std::size_t k);
/// Binary-gain NDCG with 1 / log2(1 + position) discount. An empty truth set scores 0.
double ndcg_at_k(std::span<const double> scores, std::span<const std::uint32_t> truth, std::size_t k);

struct MeanStd {
    double mean = 0.0;
    double std = 0.0; // population standard deviation
};

MeanStd mean_std(std::span<const double> values);

} // namespace kegcn
