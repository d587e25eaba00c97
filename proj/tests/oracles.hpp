#pragma once

// Brute-force reference implementations for the statistics suites. They
// follow the textbook definitions in long double and share no code with
// the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace oracle {

using ld = long double;

inline ld chi2_stat(const std::vector<std::vector<std::int64_t>>& t) {
    const std::size_t r = t.size(), c = t[0].size();
    std::vector<ld> rs(r, 0), cs(c, 0);
    ld n = 0;
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) {
            rs[i] += t[i][j];
            cs[j] += t[i][j];
            n += t[i][j];
        }
    ld x = 0;
    for (std::size_t i = 0; i < r; ++i) {
        if (rs[i] == 0) continue;
        for (std::size_t j = 0; j < c; ++j) {
            if (cs[j] == 0) continue;
            const ld e = rs[i] * cs[j] / n;
            x += (t[i][j] - e) * (t[i][j] - e) / e;
        }
    }
    return x;
}

inline ld anova_f(const std::vector<std::vector<double>>& g) {
    ld n = 0, grand = 0;
    for (const auto& v : g)
        for (double x : v) {
            grand += x;
            n += 1;
        }
    grand /= n;
    ld ssb = 0, ssw = 0;
    for (const auto& v : g) {
        ld m = 0;
        for (double x : v) m += x;
        m /= static_cast<ld>(v.size());
        ssb += static_cast<ld>(v.size()) * (m - grand) * (m - grand);
        for (double x : v) ssw += (x - m) * (x - m);
    }
    const ld k = static_cast<ld>(g.size());
    return (ssb / (k - 1)) / (ssw / (n - k));
}

// Rank of x among all values: #less + (#equal + 1) / 2.
inline ld brute_rank(const std::vector<double>& all, double x) {
    ld less = 0, eq = 0;
    for (double y : all) {
        if (y < x) less += 1;
        else if (y == x) eq += 1;
    }
    return less + (eq + 1) / 2;
}

inline ld kruskal_h(const std::vector<std::vector<double>>& g) {
    std::vector<double> all;
    for (const auto& v : g) all.insert(all.end(), v.begin(), v.end());
    const ld n = static_cast<ld>(all.size());
    ld h = 0;
    for (const auto& v : g) {
        ld r = 0;
        for (double x : v) r += brute_rank(all, x);
        h += r * r / static_cast<ld>(v.size());
    }
    h = 12 / (n * (n + 1)) * h - 3 * (n + 1);
    std::map<double, ld> ties;
    for (double x : all) ties[x] += 1;
    ld t = 0;
    for (const auto& [value, count] : ties) t += count * count * count - count;
    const ld corr = 1 - t / (n * n * n - n);
    return corr == 0 ? 0 : h / corr;
}

inline ld pearson_r(const std::vector<double>& x, const std::vector<double>& y) {
    const ld n = static_cast<ld>(x.size());
    ld mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    ld sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

inline std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<double> out;
    for (double x : v) out.push_back(static_cast<double>(brute_rank(v, x)));
    return out;
}

inline ld spearman_r(const std::vector<double>& x, const std::vector<double>& y) {
    return pearson_r(ranks(x), ranks(y));
}

inline ld kappa(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::set<std::string> labels(a.begin(), a.end());
    labels.insert(b.begin(), b.end());
    const ld n = static_cast<ld>(a.size());
    ld po = 0, pe = 0;
    for (const auto& l : labels) {
        ld ca = 0, cb = 0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            ca += a[i] == l;
            cb += b[i] == l;
            po += (a[i] == l && b[i] == l);
        }
        pe += (ca / n) * (cb / n);
    }
    po /= n;
    if (pe == 1) return 1;
    return (po - pe) / (1 - pe);
}

// P(a, x) by the power series x^a e^-x / Γ(a+1) Σ x^n / (a+1)...(a+n).
inline ld gamma_p_series(ld a, ld x) {
    ld term = 1 / a, sum = term;
    for (int n = 1; n < 100000; ++n) {
        term *= x / (a + n);
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * 1e-21L) break;
    }
    return sum * std::exp(a * std::log(x) - x - std::lgamma(a));
}

// I_x(a, b) from the hypergeometric series, reflected for x > 0.5.
inline ld beta_inc_series(ld a, ld b, ld x) {
    if (x > 0.5L) return 1 - beta_inc_series(b, a, 1 - x);
    ld term = 1, sum = 1;
    for (int n = 0; n < 100000; ++n) {
        term *= (a + b + n) / (a + 1 + n) * x;
        sum += term;
        if (std::fabs(term) < sum * 1e-21L) break;
    }
    const ld lbeta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
    return std::exp(a * std::log(x) + b * std::log1p(-x) - lbeta) / a * sum;
}

inline ld chi2_sf(ld stat, ld df) { return 1 - gamma_p_series(df / 2, stat / 2); }

inline ld f_sf(ld f, ld d1, ld d2) { return beta_inc_series(d2 / 2, d1 / 2, d2 / (d2 + d1 * f)); }

inline ld t_two_sided(ld t, ld df) { return beta_inc_series(df / 2, 0.5L, df / (df + t * t)); }

} // namespace oracle
