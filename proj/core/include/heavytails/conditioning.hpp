#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "heavytails/distribution.hpp"

namespace heavytails {

enum class Dependence { independent, vshaped_counterexample };

/// E[V | X + V >= t] for independent X, V (tail of X and density or atoms of
/// V are what the computation uses), or the single dependent counterexample
/// law: V ~ normal(0,1), X|V ~ normal(0,4) when |V| <= 1, else X = 0.
struct ConditioningProblem {
    DistPtr v_dist;
    DistPtr x_dist;
    double t = 0.0;
    Dependence dependence = Dependence::independent;
};

/// The conditional mean together with the normalized pieces it is assembled
/// from: writing Q_t(v) = tail_X(t-v)/tail_X(t),
///   mean = (E[V] + shift) / denominator,
///   shift = Int v f_V(v) (Q_t(v) - 1) dv   (always >= 0),
///   denominator = Int f_V(v) Q_t(v) dv = Pr[X+V >= t] / tail_X(t).
struct ConditionalMeanDetail {
    double mean;
    double denominator;
    double numerator_shift;
};

ConditionalMeanDetail conditional_mean_detail(const ConditioningProblem& problem);
double conditional_mean(const ConditioningProblem& problem);

/// E[V | X+V >= t] for the dependent counterexample law at threshold t.
double conditional_mean_dependent_counterexample(double t);

/// Rejection-sampling estimate of the same conditional mean.
struct McEstimate {
    double mean;
    double standard_error;
    long long samples;
    long long accepted;
    double acceptance_rate;
};

McEstimate conditional_mean_mc(const ConditioningProblem& problem, long long n_samples,
                               std::uint64_t seed);

enum class HScheme { sqrt_t, log_power, custom };

/// A window function h(t) splitting the conditioning integral into regions
/// (-inf,-h], (-h,h), [h,t-h], (t-h,inf), with the tail-insensitivity of X
/// over |v| <= h(t) checked on a reference grid.
struct RegionScheme {
    std::function<double(double)> h;
    double p = 1.5;  // tail-dominance exponent the region bounds are used with
    HScheme kind = HScheme::sqrt_t;
    std::string label;
    // Insensitivity check: per grid t, sup over |v| <= h(t) of |Q_t(v) - 1|.
    std::vector<std::pair<double, double>> insensitivity;
    bool insensitivity_decreasing = false;
    std::string warning;  // non-empty when the check fails (h unsuitable)
};

/// Builds the scheme (sqrt_t: h = sqrt(t); log_power: h = log(t)^2; custom:
/// caller-provided h) and runs the insensitivity check against x_dist on the
/// grid {1e2..1e6}. Requires a heavy-tail classification for x_dist.
RegionScheme choose_h(DistPtr x_dist, HScheme scheme,
                      std::function<double(double)> custom_h = {}, double p = 1.5);

struct RegionRow {
    double lo, hi;
    double log_numerator;     // log Int_region |v| f_V |Q_t - 1| dv
    double numerator;
    double conditional_mass;  // Pr[V in region | X+V >= t]
};

struct RegionTable {
    double t;
    double h;
    std::array<RegionRow, 4> regions;
    // Signed pieces of Int f_V (Q_t - 1) over (-inf,-h), [-h,h], (h,inf):
    std::array<double, 3> denominator_piece_log;  // log |piece|
    std::array<int, 3> denominator_piece_sign;
    double denominator;       // Pr[X+V >= t] / tail_X(t)
    double lemma2_ratio;      // t * Pr[X+V > t, h < V < t-h] / tail_X(t)
    double log_lemma2_ratio;  // log of the same; stays comparable once the
                              // linear value underflows at deep t
    double conditional_mean;
};

/// Per-region contributions to the conditional-mean integrals (independent
/// case only); everything is evaluated in log space so regions whose
/// contribution underflows linear doubles still compare across t.
RegionTable region_decomposition(const ConditioningProblem& problem,
                                 const RegionScheme& scheme);

struct Region4Row {
    double t;
    double log_ratio_point;     // log [ t tail_V(t) / tail_X(t) ]
    double ratio_point;
    double log_ratio_integral;  // log [ Int_t^inf tail_V / tail_X(t) ]
    double ratio_integral;
};

struct Region4Table {
    std::vector<Region4Row> rows;
    bool point_decreasing;
    bool integral_decreasing;
};

/// The two far-region bounding ratios along a t grid, with trend flags.
Region4Table region4_tail_bound(const Distribution& v_dist, const Distribution& x_dist,
                                double p, const std::vector<double>& t_grid);

struct LightTailRatioRow {
    double t;
    double log_ratio;  // log [ Pr(V < c | X+V >= t) / Pr(V > c+1 | X+V >= t) ]
    double ratio;
    double log_bound;  // log [ tail_X(t-c)/tail_X(t-c-1) * Pr(V<c)/Pr(V>c+1) ]
    double bound;
    bool within_bound;
};

struct LightTailRatioTable {
    std::vector<LightTailRatioRow> rows;
    bool ratio_decreasing;
};

/// For light X and unbounded V: the probability that the conditioned V stays
/// below c, relative to it exceeding c+1, with the closed-form upper bound.
/// The bound collapsing to 0 along the grid is what forces the conditional
/// mean of V to grow without bound.
LightTailRatioTable light_tail_ratio_diagnostic(const Distribution& v_dist,
                                                const Distribution& x_dist, double c,
                                                const std::vector<double>& t_grid);

}
