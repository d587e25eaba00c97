#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace inboxaudit::stats {

enum class MomentConvention {
    Population, // g1, g2 (biased moment ratios)
    Sample,     // G1, G2 (adjusted Fisher–Pearson; pandas/Excel convention)
};

struct Descriptive {
    std::size_t n = 0;
    double mean = 0.0;
    double median = 0.0;
    double skewness = 0.0;
    double excess_kurtosis = 0.0;
    MomentConvention convention = MomentConvention::Sample;
};

/// Mean, median, skewness and excess kurtosis. Needs n >= 2 (n >= 3 for
/// sample skewness, n >= 4 for sample kurtosis).
Descriptive descriptive(std::span<const double> values,
                        MomentConvention convention = MomentConvention::Sample);

double mean(std::span<const double> values);
double median(std::vector<double> values);

struct ParetoEntry {
    std::string name;
    double value = 0.0;
    double share = 0.0;
    double cumulative = 0.0;
};

class ParetoTable {
public:
    explicit ParetoTable(std::vector<ParetoEntry> entries, double total)
        : entries_(std::move(entries)), total_(total) {}

    const std::vector<ParetoEntry>& entries() const noexcept { return entries_; }
    double total() const noexcept { return total_; }

    /// Cumulative share of the k largest entries (k clamped to size).
    double top_k_share(std::size_t k) const noexcept;

private:
    std::vector<ParetoEntry> entries_;
    double total_;
};

/// Descending sort by value (ties by name ascending) with shares.
ParetoTable pareto(std::vector<std::pair<std::string, double>> values);

struct TestResult {
    double statistic = 0.0;
    double df1 = 0.0;
    double df2 = 0.0; // 0 when the test has a single df
    double p_value = 1.0;
    std::vector<std::string> warnings;
};

struct ContingencyTable {
    std::vector<std::string> row_labels;
    std::vector<std::string> col_labels;
    std::vector<std::vector<std::int64_t>> counts;
};

/// Pearson χ² test of independence without continuity correction.
/// Rows or columns with a zero marginal are dropped (and reported).
TestResult chi_squared_independence(const ContingencyTable& table);

TestResult one_way_anova(const std::vector<std::vector<double>>& groups);

/// Kruskal–Wallis H with tie correction; p from χ²(g − 1).
TestResult kruskal_wallis(const std::vector<std::vector<double>>& groups);

struct Correlation {
    double r = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
};

Correlation pearson(std::span<const double> x, std::span<const double> y);

/// Pearson on average ranks; same t-approximation for p.
Correlation spearman(std::span<const double> x, std::span<const double> y);

/// Average ranks (1-based), ties share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

} // namespace inboxaudit::stats
