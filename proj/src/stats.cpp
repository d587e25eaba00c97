#include "inboxaudit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "inboxaudit/error.hpp"
#include "inboxaudit/special.hpp"

namespace inboxaudit::stats {

double mean(std::span<const double> values) {
    if (values.empty()) fail(ErrorKind::InsufficientData, "mean of empty list");
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double median(std::vector<double> values) {
    if (values.empty()) fail(ErrorKind::InsufficientData, "median of empty list");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

Descriptive descriptive(std::span<const double> values, MomentConvention convention) {
    const std::size_t n = values.size();
    if (n < 2) fail(ErrorKind::InsufficientData, "descriptive: mean/median need n >= 2");
    const bool sample = convention == MomentConvention::Sample;
    if (sample && n < 3) fail(ErrorKind::InsufficientData, "descriptive: skewness needs n >= 3");
    if (sample && n < 4) fail(ErrorKind::InsufficientData, "descriptive: kurtosis needs n >= 4");

    Descriptive d;
    d.n = n;
    d.convention = convention;
    d.mean = mean(values);
    d.median = median({values.begin(), values.end()});

    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : values) {
        const double dev = v - d.mean;
        const double sq = dev * dev;
        m2 += sq;
        m3 += sq * dev;
        m4 += sq * sq;
    }
    const double nn = static_cast<double>(n);
    m2 /= nn;
    m3 /= nn;
    m4 /= nn;
    if (m2 == 0.0) {
        d.skewness = 0.0;
        d.excess_kurtosis = 0.0;
        return d;
    }
    const double g1 = m3 / std::pow(m2, 1.5);
    const double g2 = m4 / (m2 * m2) - 3.0;
    if (!sample) {
        d.skewness = g1;
        d.excess_kurtosis = g2;
    } else {
        d.skewness = g1 * std::sqrt(nn * (nn - 1.0)) / (nn - 2.0);
        d.excess_kurtosis = ((nn + 1.0) * g2 + 6.0) * (nn - 1.0) / ((nn - 2.0) * (nn - 3.0));
    }
    return d;
}

double ParetoTable::top_k_share(std::size_t k) const noexcept {
    if (entries_.empty() || k == 0) return 0.0;
    return entries_[std::min(k, entries_.size()) - 1].cumulative;
}

ParetoTable pareto(std::vector<std::pair<std::string, double>> values) {
    double total = 0.0;
    for (const auto& [name, v] : values) {
        if (v < 0.0) fail(ErrorKind::Range, "pareto: negative value for " + name);
        total += v;
    }
    if (!(total > 0.0)) fail(ErrorKind::InsufficientData, "pareto: all values are zero");

    std::sort(values.begin(), values.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    std::vector<ParetoEntry> entries;
    entries.reserve(values.size());
    double running = 0.0;
    for (auto& [name, v] : values) {
        running += v;
        entries.push_back({std::move(name), v, v / total, running / total});
    }
    return ParetoTable(std::move(entries), total);
}

TestResult chi_squared_independence(const ContingencyTable& table) {
    const std::size_t rows = table.counts.size();
    if (rows == 0) fail(ErrorKind::InsufficientData, "chi2: empty table");
    const std::size_t cols = table.counts.front().size();
    for (const auto& row : table.counts) {
        if (row.size() != cols) fail(ErrorKind::Shape, "chi2: ragged contingency table");
        for (auto c : row)
            if (c < 0) fail(ErrorKind::Range, "chi2: negative count");
    }

    TestResult result;
    auto label = [](const std::vector<std::string>& labels, std::size_t i) {
        return i < labels.size() ? labels[i] : std::to_string(i);
    };

    std::vector<double> row_sum(rows, 0.0), col_sum(cols, 0.0);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) {
            row_sum[i] += static_cast<double>(table.counts[i][j]);
            col_sum[j] += static_cast<double>(table.counts[i][j]);
        }
    std::vector<std::size_t> keep_rows, keep_cols;
    for (std::size_t i = 0; i < rows; ++i) {
        if (row_sum[i] > 0.0) keep_rows.push_back(i);
        else result.warnings.push_back("dropped zero-marginal row " + label(table.row_labels, i));
    }
    for (std::size_t j = 0; j < cols; ++j) {
        if (col_sum[j] > 0.0) keep_cols.push_back(j);
        else result.warnings.push_back("dropped zero-marginal column " + label(table.col_labels, j));
    }
    if (keep_rows.size() < 2 || keep_cols.size() < 2)
        fail(ErrorKind::InsufficientData, "chi2: need at least 2 rows and 2 columns with nonzero marginals");

    double total = 0.0;
    for (auto i : keep_rows) total += row_sum[i];

    double statistic = 0.0;
    for (auto i : keep_rows)
        for (auto j : keep_cols) {
            const double expected = row_sum[i] * col_sum[j] / total;
            const double diff = static_cast<double>(table.counts[i][j]) - expected;
            statistic += diff * diff / expected;
        }
    result.statistic = statistic;
    result.df1 = static_cast<double>((keep_rows.size() - 1) * (keep_cols.size() - 1));
    result.p_value = special::chi2_sf(statistic, result.df1);
    return result;
}

TestResult one_way_anova(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2) fail(ErrorKind::InsufficientData, "anova: need at least 2 groups");
    std::size_t n = 0;
    double grand = 0.0;
    for (const auto& g : groups) {
        if (g.empty()) fail(ErrorKind::InsufficientData, "anova: empty group");
        n += g.size();
        grand += std::accumulate(g.begin(), g.end(), 0.0);
    }
    const std::size_t k = groups.size();
    if (n <= k) fail(ErrorKind::InsufficientData, "anova: need more observations than groups");
    grand /= static_cast<double>(n);

    double ss_between = 0.0, ss_within = 0.0;
    for (const auto& g : groups) {
        const double m = mean(g);
        ss_between += static_cast<double>(g.size()) * (m - grand) * (m - grand);
        for (double v : g) ss_within += (v - m) * (v - m);
    }

    TestResult result;
    result.df1 = static_cast<double>(k - 1);
    result.df2 = static_cast<double>(n - k);
    // Round-off guard: sums of squares this small relative to the data are zero.
    const double scale = std::max(1.0, grand * grand) * static_cast<double>(n);
    if (ss_between <= scale * 1e-24) ss_between = 0.0;
    if (ss_within <= scale * 1e-24) ss_within = 0.0;

    if (ss_within == 0.0) {
        if (ss_between == 0.0) {
            result.statistic = 0.0;
            result.p_value = 1.0;
        } else {
            result.statistic = std::numeric_limits<double>::infinity();
            result.p_value = 0.0;
            result.warnings.push_back("zero within-group variance");
        }
        return result;
    }
    result.statistic = (ss_between / result.df1) / (ss_within / result.df2);
    result.p_value = special::f_sf(result.statistic, result.df1, result.df2);
    return result;
}

std::vector<double> average_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
        i = j + 1;
    }
    return ranks;
}

TestResult kruskal_wallis(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2) fail(ErrorKind::InsufficientData, "kruskal_wallis: need at least 2 groups");
    std::vector<double> pooled;
    for (const auto& g : groups) {
        if (g.empty()) fail(ErrorKind::InsufficientData, "kruskal_wallis: empty group");
        pooled.insert(pooled.end(), g.begin(), g.end());
    }
    const std::size_t n = pooled.size();
    if (n < 5) fail(ErrorKind::InsufficientData, "kruskal_wallis: need n >= 5");

    TestResult result;
    result.df1 = static_cast<double>(groups.size() - 1);

    const auto ranks = average_ranks(pooled);

    // Tie correction factor 1 − Σ(t³ − t)/(n³ − n).
    std::vector<double> sorted = pooled;
    std::sort(sorted.begin(), sorted.end());
    double tie_sum = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && sorted[j] == sorted[i]) ++j;
        const double t = static_cast<double>(j - i);
        tie_sum += t * t * t - t;
        i = j;
    }
    const double nn = static_cast<double>(n);
    const double correction = 1.0 - tie_sum / (nn * nn * nn - nn);
    if (correction <= 0.0) {
        result.statistic = 0.0;
        result.p_value = 1.0;
        result.warnings.push_back("all observations identical");
        return result;
    }

    double h = 0.0;
    std::size_t offset = 0;
    for (const auto& g : groups) {
        double rank_sum = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) rank_sum += ranks[offset + i];
        offset += g.size();
        h += rank_sum * rank_sum / static_cast<double>(g.size());
    }
    h = 12.0 / (nn * (nn + 1.0)) * h - 3.0 * (nn + 1.0);
    h /= correction;
    result.statistic = std::max(0.0, h);
    result.p_value = special::chi2_sf(result.statistic, result.df1);
    return result;
}

Correlation pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) fail(ErrorKind::Shape, "pearson: length mismatch");
    const std::size_t n = x.size();
    if (n < 3) fail(ErrorKind::InsufficientData, "correlation needs n >= 3");
    const double mx = mean(x), my = mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) fail(ErrorKind::Undefined, "correlation undefined for zero variance");

    Correlation c;
    c.n = n;
    c.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    const double df = static_cast<double>(n - 2);
    if (std::fabs(c.r) >= 1.0) {
        c.p_value = 0.0;
    } else {
        const double t = c.r * std::sqrt(df / (1.0 - c.r * c.r));
        c.p_value = special::t_two_sided(t, df);
    }
    return c;
}

Correlation spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) fail(ErrorKind::Shape, "spearman: length mismatch");
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    return pearson(rx, ry);
}

} // namespace inboxaudit::stats
