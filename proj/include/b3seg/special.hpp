#pragma once
// Special functions for positive arguments, double precision.

#include <cmath>

#include "b3seg/errors.hpp"

namespace b3seg {

// Digamma for x > 0: upward recurrence into the asymptotic regime, then the
// Bernoulli series. Absolute error < 1e-12 over the range used here.
inline double digamma(double x) {
    if (!(x > 0.0)) throw ValidationError("digamma: argument must be > 0");
    double acc = 0.0;
    while (x < 8.0) {
        acc -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    const double series =
        inv2 * (1.0 / 12.0 -
                inv2 * (1.0 / 120.0 -
                        inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0)))));
    return acc + std::log(x) - 0.5 * inv - series;
}

// ln B(a,b) for a,b > 0.
inline double log_beta(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) throw ValidationError("log_beta: arguments must be > 0");
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

// Bernoulli entropy in nats; 0 * ln 0 := 0.
inline double bernoulli_entropy(double q) {
    if (!(q >= 0.0) || !(q <= 1.0))
        throw ValidationError("bernoulli_entropy: argument must be in [0,1]");
    double h = 0.0;
    if (q > 0.0) h -= q * std::log(q);
    if (q < 1.0) h -= (1.0 - q) * std::log(1.0 - q);
    return h;
}

}  // namespace b3seg
