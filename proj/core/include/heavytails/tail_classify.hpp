#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "heavytails/distribution.hpp"

namespace heavytails {

enum class TailClass { heavy, light, inconclusive };

/// One probe of the moment-divergence functional: value = rate*x + log_tail(x).
/// e^{rate*x} P(X > x) diverges for every rate exactly when X is heavy-tailed,
/// so heavy evidence is this quantity climbing without bound at every rate.
struct TailProbe {
    double rate;
    double x;
    double value;
};

struct TailClassification {
    TailClass verdict = TailClass::inconclusive;
    std::vector<TailProbe> evidence;
    std::string detail;
};

/// Adaptive default: rates {0.01, 0.1, 1}, per-rate geometric x extension
/// until the probe decides. Bounded-support and step tails classify light as
/// soon as log_tail hits -inf. Returns inconclusive rather than guessing.
TailClassification is_heavy_tailed(const Distribution& d);

/// Fixed probe grid supplied by the caller: every (rate, x) pair is evaluated
/// verbatim. Heavy needs each rate's trajectory rising past +10 over its last
/// third; light needs some rate falling below -10.
TailClassification is_heavy_tailed(const Distribution& d,
                                   const std::vector<TailProbe>& probe_grid);

enum class RatioMethod { quadrature, monte_carlo };

struct RatioEstimate {
    double ratio;
    double error;      // quadrature residual or Monte Carlo standard error
    long evaluations;
};

/// P(X1 + X2 > x) / P(X > x) for iid copies of d (positive support).
/// Subexponential distributions drive this toward 2 as x grows.
/// `budget`: integrand evaluations (quadrature) or sample pairs (Monte Carlo).
/// Throws BudgetExhausted when the error estimate exceeds error_cap.
RatioEstimate subexponential_ratio(const Distribution& d, double x, RatioMethod method,
                                   long budget, double error_cap = kInf,
                                   std::uint64_t seed = 0x5e11);

struct DominanceRow {
    double t;
    double log_ratio;   // log [ t^p tail_V(t) / tail_X(t) ]
    double ratio;       // e^{log_ratio}, 0 when it underflows
};

struct DominanceTable {
    double p;
    std::vector<DominanceRow> rows;
    bool decreasing_to_zero;
};

/// The vanishing-utility-tail comparison t^p tail_V(t) / tail_X(t) along a
/// grid, evaluated in log space. decreasing_to_zero requires a strict
/// decrease across the grid and a final ratio below 1e-3.
DominanceTable tail_dominance_exponent(const Distribution& v, const Distribution& x,
                                       double p, const std::vector<double>& t_grid);

}
