#include "inboxaudit/temporal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "inboxaudit/error.hpp"
#include "inboxaudit/kernels.hpp"

namespace inboxaudit::temporal {

namespace {

template <typename F>
void for_scope(const corpus::CorpusStore& store, const std::optional<std::string>& scope, F&& f) {
    if (!scope) {
        for (const auto& r : store.records()) f(r);
        return;
    }
    for (const auto* r : store.service_records(*scope)) f(*r);
}

double population_variance(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size());
}

} // namespace

DailySeries build_daily_series(const corpus::CorpusStore& store, const std::optional<std::string>& scope) {
    std::vector<std::int64_t> days;
    for_scope(store, scope, [&](const EmailRecord& r) {
        if (r.received_local) days.push_back(days_from_civil(r.received_local->date));
    });
    if (days.empty()) fail(ErrorKind::InsufficientData, "no dated emails in scope " + scope.value_or("ALL"));
    const auto [lo, hi] = std::minmax_element(days.begin(), days.end());
    DailySeries s;
    s.day0 = civil_from_days(*lo);
    s.values.assign(static_cast<std::size_t>(*hi - *lo + 1), 0.0);
    for (auto d : days) s.values[static_cast<std::size_t>(d - *lo)] += 1.0;
    return s;
}

Spectrum spectrum(const std::vector<double>& values, double multiplier, bool parallel) {
    const std::size_t n = values.size();
    if (n < kMinSpectrumLength)
        fail(ErrorKind::InsufficientData, "spectrum needs at least 16 points, got " + std::to_string(n));
    const double m = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
    std::vector<double> centered(n);
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        centered[i] = values[i] - m;
        scale = std::max(scale, std::abs(values[i]));
    }
    const auto X = parallel ? kernels::omp::dft(centered) : kernels::serial::dft(centered);

    Spectrum out;
    for (std::size_t k = 1; k <= n / 2; ++k) {
        const double f = static_cast<double>(k) / static_cast<double>(n);
        out.bins.push_back({k, f, std::abs(X[k]), 1.0 / f, false});
    }
    double mean_mag = 0.0, max_mag = 0.0;
    for (const auto& b : out.bins) {
        mean_mag += b.magnitude;
        max_mag = std::max(max_mag, b.magnitude);
    }
    mean_mag /= static_cast<double>(out.bins.size());
    double var = 0.0;
    for (const auto& b : out.bins) var += (b.magnitude - mean_mag) * (b.magnitude - mean_mag);
    out.threshold = mean_mag + multiplier * std::sqrt(var / static_cast<double>(out.bins.size()));

    // A flat series leaves only rounding noise in the spectrum.
    if (max_mag <= 1e-9 * std::max(scale, 1.0) * static_cast<double>(n)) return out;
    for (auto& b : out.bins) {
        if (b.magnitude > out.threshold) {
            b.is_peak = true;
            out.peaks.push_back({b.frequency, b.magnitude, b.period_days});
        }
    }
    std::stable_sort(out.peaks.begin(), out.peaks.end(),
                     [](const SpectrumPeak& a, const SpectrumPeak& b) { return a.magnitude > b.magnitude; });
    return out;
}

std::vector<SpectrumPeak> spectrum_peaks(const DailySeries& series, double multiplier) {
    return spectrum(series.values, multiplier).peaks;
}

Decomposition decompose_additive(const std::vector<double>& values, int period) {
    if (period < 2) fail(ErrorKind::Range, "decomposition period must be >= 2");
    const std::size_t n = values.size();
    const auto p = static_cast<std::size_t>(period);
    if (n < 2 * p)
        fail(ErrorKind::InsufficientData, "decomposition needs at least 2 periods (" + std::to_string(2 * p) +
                                              " points), got " + std::to_string(n));
    const double nan = std::numeric_limits<double>::quiet_NaN();
    Decomposition d;
    d.period = period;
    d.observed = values;
    d.trend.assign(n, nan);

    std::vector<double> w;
    if (p % 2 == 1) {
        w.assign(p, 1.0 / static_cast<double>(p));
    } else {
        w.assign(p + 1, 1.0 / static_cast<double>(p));
        w.front() = w.back() = 0.5 / static_cast<double>(p);
    }
    const std::size_t half = w.size() / 2;
    for (std::size_t i = half; i + half < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < w.size(); ++j) s += w[j] * values[i - half + j];
        d.trend[i] = s;
    }

    d.seasonal_profile.assign(p, 0.0);
    std::vector<std::size_t> counts(p, 0);
    for (std::size_t i = 0; i < n; ++i) {
        if (std::isnan(d.trend[i])) continue;
        d.seasonal_profile[i % p] += values[i] - d.trend[i];
        ++counts[i % p];
    }
    for (std::size_t k = 0; k < p; ++k) d.seasonal_profile[k] /= static_cast<double>(counts[k]);
    const double centre = std::accumulate(d.seasonal_profile.begin(), d.seasonal_profile.end(), 0.0) / static_cast<double>(p);
    for (auto& s : d.seasonal_profile) s -= centre;

    d.seasonal.resize(n);
    d.residual.assign(n, nan);
    std::vector<double> interior_obs, interior_seasonal;
    for (std::size_t i = 0; i < n; ++i) {
        d.seasonal[i] = d.seasonal_profile[i % p];
        if (std::isnan(d.trend[i])) continue;
        d.residual[i] = values[i] - d.trend[i] - d.seasonal[i];
        interior_obs.push_back(values[i]);
        interior_seasonal.push_back(d.seasonal[i]);
    }
    const double var_obs = population_variance(interior_obs);
    d.seasonal_variance_share = var_obs > 0.0 ? std::min(1.0, population_variance(interior_seasonal) / var_obs) : 0.0;
    return d;
}

HourDayMatrix hour_day_matrix(const corpus::CorpusStore& store, const std::optional<std::string>& scope) {
    HourDayMatrix m{};
    for_scope(store, scope, [&](const EmailRecord& r) {
        if (!r.received_local) return;
        ++m[static_cast<std::size_t>(r.received_local->weekday)][static_cast<std::size_t>(r.received_local->hour)];
    });
    return m;
}

} // namespace inboxaudit::temporal
