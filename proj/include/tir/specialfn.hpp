#pragma once

namespace tir {

// ln Gamma(x) for x > 0 via a 15-term Lanczos approximation (g = 607/128).
// Throws std::domain_error for x <= 0 or non-finite x.
double log_gamma(double x);

// Digamma psi(x) for x > 0: upward recurrence to x >= 6, then the
// asymptotic Bernoulli series. Throws std::domain_error for x <= 0.
double digamma(double x);

// Trigamma psi'(x) for x > 0, same recurrence/series scheme. Needed for the
// analytic KL gradient of the Beta evidential loss.
double trigamma(double x);

// ln B(a,b) = log_gamma(a) + log_gamma(b) - log_gamma(a+b); exactly
// symmetric in its arguments.
double log_beta(double a, double b);

}  // namespace tir
