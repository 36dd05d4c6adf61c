#pragma once

#include <memory>

#include "heavytails/distribution.hpp"

namespace heavytails {

/// Configuration for the tail-upweighting construction: take a base law Q,
/// move all mass above threshold t up to exactly c/t^gamma, and rescale both
/// pieces so they stay proportional to Q within each piece.
struct TailUpweightConfig {
    DistPtr base;        // Q; must have a finite mean
    double c;            // asymptotic mean target, > 0
    double t;            // threshold, > c
    double gamma = 1.0;  // mass above t is c/t^gamma; in (0, 1]
};

/// The reweighted law P_t. Within each piece (x <= t, x > t) it is the base
/// law conditioned to the piece; only the piece masses change, to (1 - m, m)
/// with m = c/t^gamma. tail(t) == m holds exactly by construction.
class TailUpweighted final : public Distribution {
public:
    explicit TailUpweighted(TailUpweightConfig cfg);

    double cdf(double x) const override;
    double tail(double x) const override;
    double log_tail(double x) const override;
    bool has_density() const override;
    double pdf(double x) const override;
    double log_pdf(double x) const override;
    double quantile(double u) const override;
    double inv_tail(double q) const override;
    std::optional<double> mean() const override;
    Support support() const override;
    std::string name() const override;

    const TailUpweightConfig& config() const { return cfg_; }
    double mass_above() const { return mass_above_; }          // m = c/t^gamma
    double base_tail_at_t() const { return base_tail_t_; }     // tail of Q at t
    double base_cdf_at_t() const { return base_cdf_t_; }

private:
    TailUpweightConfig cfg_;
    double mass_above_;
    double base_tail_t_;
    double base_cdf_t_;
    double log_base_tail_t_;
};

/// Validates the configuration and constructs the reweighted law.
/// Throws InvalidParameter on bad parameters, ThresholdTooDeep when the base
/// tail at t underflows even in log space.
std::shared_ptr<const TailUpweighted> build_tail_upweighted(TailUpweightConfig cfg);

/// Mean of the reweighted law through the decomposition
///   E[X] + (m - tail_Q(t)) * (E_Q[X | X > t] - E_Q[X | X <= t]),
/// with every ingredient reported for inspection.
struct UpweightedMeanBreakdown {
    double mean;
    double base_mean;
    double mass_above;
    double base_tail_at_t;
    double upper_conditional_mean;  // E_Q[X | X > t]
    double lower_conditional_mean;  // E_Q[X | X <= t]
};

UpweightedMeanBreakdown upweighted_mean_breakdown(const TailUpweighted& p);
double upweighted_mean(const TailUpweighted& p);

/// Independent cross-check: direct quadrature of the reweighted law's mean,
/// without using the decomposition.
double upweighted_mean_quadrature(const TailUpweighted& p);

/// KL(P_t || Q) in nats. Because the density ratio is constant on each piece,
/// this is exactly a two-point discrete KL over the piece masses; the deep
/// second term is evaluated with log_tail.
double upweighted_kl(const TailUpweighted& p);

/// Exponential tilt of a base law: density proportional to e^{s x} dQ(x).
struct ExpTilt {
    DistPtr base;
    double s;
    double log_normalizer;  // log E_Q[e^{sX}]
    double mean;            // tilted mean, d/ds log_normalizer
    double kl;              // KL(tilt || base) = s * mean - log_normalizer
};

/// Computes the tilt, detecting a divergent normalizer by integrating over
/// expanding quantile windows; throws DivergentNormalizer when the partial
/// integrals keep growing by more than 10x per expansion.
ExpTilt exp_tilt(DistPtr base, double s);

/// Optimum of E[U] - beta * KL for U = X + V with X, V independent: the
/// product law tilted at rate 1/beta, which factorizes into per-component
/// tilts. Throws DivergentNormalizer when either component is too heavy.
struct RegularizedOptimum {
    double tilt_rate;  // 1 / beta
    ExpTilt x_tilt;
    ExpTilt v_tilt;
    double e_u;  // tilted mean of U = X + V
    double e_v;  // tilted mean of V alone
    double kl;   // KL of the tilted joint to the base joint
};

RegularizedOptimum kl_regularized_optimum(DistPtr x_dist, DistPtr v_dist, double beta);

/// Mixing a point (or event) of base log-probability log_q into a policy with
/// weight alpha: KL of the mixture to the base, exactly and to first order.
struct MixtureKlInput {
    double alpha;              // mixture weight, in (0, 1)
    double log_q;              // log base probability of the upweighted event
    double delta_reward = 0.0; // event reward minus base mean reward
};

struct MixtureKl {
    double exact_kl;
    double first_order_kl;        // alpha * (log alpha - log_q)
    double expected_reward_gain;  // alpha * delta_reward
    bool first_order_regime;      // log_q < log alpha
};

MixtureKl mixture_kl(const MixtureKlInput& input);

}
