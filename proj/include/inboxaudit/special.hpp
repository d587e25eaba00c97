#pragma once

// Special functions backing the p-values in stats.hpp. Implemented in-repo
// so results do not depend on the platform libm beyond basic arithmetic,
// exp and log.

namespace inboxaudit::special {

/// ln Γ(x) for x > 0 (Lanczos, g=7, n=9).
double log_gamma(double x);

/// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);

/// Regularized upper incomplete gamma Q(a, x) = 1 − P(a, x), computed
/// directly in the tail to avoid cancellation.
double gamma_q(double a, double x);

/// Regularized incomplete beta I_x(a, b).
double beta_inc(double a, double b, double x);

/// Upper tail of the χ² distribution.
double chi2_sf(double statistic, double df);

/// Upper tail of the F distribution.
double f_sf(double statistic, double df1, double df2);

/// Two-sided p-value of Student's t.
double t_two_sided(double t, double df);

} // namespace inboxaudit::special
