#include "kegcn/errors.hpp"
#include "kegcn/metrics.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace kegcn {
namespace {

using Pairs = std::vector<std::pair<std::uint32_t, double>>;
using Ranks = std::vector<std::size_t>;
using Ids = std::vector<std::uint32_t>;
using Scores = std::vector<double>;

TEST(RankOfTruth, Examples) {
    EXPECT_EQ(rank_of_truth(Pairs{{0, 0.5}, {1, 0.1}, {2, 0.9}}, 1), 1u);
    EXPECT_EQ(rank_of_truth(Pairs{{0, 1.0}, {1, 1.0}}, 1), 2u);
    EXPECT_EQ(rank_of_truth(Pairs{{0, 1.0}, {1, 1.0}}, 0), 1u);
    EXPECT_EQ(rank_of_truth(Pairs{{7, 3.0}, {3, 1.0}, {5, 2.0}}, 5), 2u);
    EXPECT_EQ(rank_of_truth(Scores{3.0, 1.0, 2.0}, 2), 2u);
    EXPECT_THROW(rank_of_truth(Pairs{{0, 1.0}}, 4), ContractError);
}

TEST(RankOfTruth, InputOrderDoesNotMatter) {
    EXPECT_EQ(rank_of_truth(Pairs{{2, 1.0}, {0, 1.0}, {1, 1.0}}, 2), 3u);
    EXPECT_EQ(rank_of_truth(Pairs{{1, 1.0}, {2, 1.0}, {0, 1.0}}, 2), 3u);
}

TEST(RankingMetrics, Examples) {
    EXPECT_DOUBLE_EQ(mrr(Ranks{1, 1, 1}), 1.0);
    EXPECT_DOUBLE_EQ(hits_at_k(Ranks{1, 1, 1}, 10), 1.0);
    EXPECT_NEAR(mrr(Ranks{1, 2, 4}), 0.58333333333, 1e-10);
    EXPECT_DOUBLE_EQ(hits_at_k(Ranks{1, 3, 1, 10}, 1), 0.5);
    EXPECT_DOUBLE_EQ(hits_at_k(Ranks{1, 3, 1, 10}, 10), 1.0);
    EXPECT_DOUBLE_EQ(hits_at_k(Ranks{1, 3, 1, 11}, 10), 0.75);
    EXPECT_THROW(mrr(Ranks{}), ContractError);
    EXPECT_THROW(mrr(Ranks{0}), ContractError);
}

TEST(RankingMetrics, AverageOfDirections) {
    const RankingMetrics a = ranking_metrics(Ranks{1, 2});
    const RankingMetrics b = ranking_metrics(Ranks{1, 1});
    const RankingMetrics m = average(a, b);
    EXPECT_DOUBLE_EQ(m.mrr, (0.75 + 1.0) / 2);
    EXPECT_DOUBLE_EQ(m.hits1, 0.75);
    EXPECT_DOUBLE_EQ(m.hits10, 1.0);
}

TEST(Accuracy, Examples) {
    EXPECT_DOUBLE_EQ(accuracy(Ids{0, 1, 2}, Ids{0, 1, 2}), 1.0);
    EXPECT_DOUBLE_EQ(accuracy(Ids{0, 1, 2, 2}, Ids{0, 1, 0, 1}), 0.5);
    EXPECT_THROW(accuracy(Ids{}, Ids{}), ContractError);
    EXPECT_THROW(accuracy(Ids{0}, Ids{0, 1}), DimensionError);
}

TEST(TopK, TiesGoToLowestIndex) {
    EXPECT_EQ(argmax(Scores{1, 3, 3}), 1u);
    EXPECT_EQ(top_k(Scores{0.5, 2, 0.5, 2}, 3), (Ids{1, 3, 0}));
}

TEST(PrecisionAtK, Examples) {
    const Scores s = {0.9, 0.1, 0.8, 0.3, 0.2};
    EXPECT_DOUBLE_EQ(precision_at_k(s, Ids{0, 2, 4}, 2), 1.0);
    EXPECT_DOUBLE_EQ(precision_at_k(s, Ids{1}, 1), 0.0);
    EXPECT_DOUBLE_EQ(precision_at_k(s, Ids{0, 1}, 5), 0.4);
    EXPECT_THROW(precision_at_k(s, Ids{0}, 0), ContractError);
    EXPECT_THROW(precision_at_k(s, Ids{0}, 6), ContractError);
}

TEST(NdcgAtK, HandCase) {
    // top-5 = [a, x, b, y, z], truth {a, b}
    const Scores s = {5, 4, 3, 2, 1};
    const double want = (1.0 + 1.0 / std::log2(4.0)) / (1.0 + 1.0 / std::log2(3.0));
    EXPECT_NEAR(ndcg_at_k(s, Ids{0, 2}, 5), want, 1e-15);
    EXPECT_NEAR(ndcg_at_k(s, Ids{0, 2}, 5), 0.91972, 1e-4);
    EXPECT_DOUBLE_EQ(ndcg_at_k(s, Ids{0, 1}, 5), 1.0);
    EXPECT_DOUBLE_EQ(ndcg_at_k(s, Ids{}, 5), 0.0);
}

TEST(MeanStd, Population) {
    const MeanStd m = mean_std(Scores{1, 2, 3, 4});
    EXPECT_DOUBLE_EQ(m.mean, 2.5);
    EXPECT_DOUBLE_EQ(m.std, std::sqrt(1.25));
    EXPECT_DOUBLE_EQ(mean_std(Scores{7}).std, 0.0);
}

} // namespace
} // namespace kegcn
