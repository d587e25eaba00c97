#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "inboxaudit/corpus.hpp"

namespace inboxaudit::temporal {

/// Emails per calendar day (audit timezone), zero-filled.
struct DailySeries {
    std::vector<double> values;
    CivilDate day0;
};

/// Scope nullopt = whole corpus, else one service name. Records without a
/// receipt time are skipped. Throws InsufficientData for an empty scope.
DailySeries build_daily_series(const corpus::CorpusStore& store, const std::optional<std::string>& scope = std::nullopt);

struct SpectrumPeak {
    double frequency = 0.0; // cycles per day
    double magnitude = 0.0;
    double period_days = 0.0;
};

struct SpectrumBin {
    std::size_t k = 0;
    double frequency = 0.0;
    double magnitude = 0.0;
    double period_days = 0.0;
    bool is_peak = false;
};

struct Spectrum {
    std::vector<SpectrumBin> bins; // k = 1 .. N/2
    double threshold = 0.0;        // mean + multiplier·std of bin magnitudes
    std::vector<SpectrumPeak> peaks; // magnitude descending
};

inline constexpr std::size_t kMinSpectrumLength = 16;

/// DFT of the mean-removed series; a peak is a bin above mean +
/// multiplier·stddev (population) of the non-DC magnitudes.
Spectrum spectrum(const std::vector<double>& values, double multiplier = 2.0, bool parallel = true);
std::vector<SpectrumPeak> spectrum_peaks(const DailySeries& series, double multiplier = 2.0);

struct Decomposition {
    std::vector<double> observed;
    std::vector<double> trend;    // NaN where the centered window is undefined
    std::vector<double> seasonal;
    std::vector<double> residual; // NaN where trend is NaN
    std::vector<double> seasonal_profile; // one value per phase, zero mean
    int period = 7;
    double seasonal_variance_share = 0.0; // over interior points
};

/// Classical additive decomposition with a centered moving-average trend
/// (2×period weights for even periods).
Decomposition decompose_additive(const std::vector<double>& values, int period = 7);

using HourDayMatrix = std::array<std::array<std::int64_t, 24>, 7>; // [dow][hour], 0 = Monday

HourDayMatrix hour_day_matrix(const corpus::CorpusStore& store, const std::optional<std::string>& scope = std::nullopt);

} // namespace inboxaudit::temporal
