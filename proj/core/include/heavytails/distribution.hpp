#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "heavytails/log_space.hpp"
#include "heavytails/quadrature.hpp"
#include "heavytails/rng.hpp"

namespace heavytails {

/// Closed support interval; infinities mark unbounded sides.
struct Support {
    double lo = kNegInf;
    double hi = kInf;
};

/// One atom of a discrete distribution.
struct Atom {
    double value;
    double prob;
};

/// One-dimensional distribution. All families implement the exact CDF; the
/// survival function and its logarithm are first-class because every
/// tail-sensitive computation in this library runs on log_tail, which stays
/// finite far beyond the underflow point of tail() itself.
///
/// Implementations are immutable after construction and safe to share across
/// threads; samplers mutate only the caller-supplied Rng.
class Distribution {
public:
    virtual ~Distribution() = default;

    virtual double cdf(double x) const = 0;

    /// P(X > x). Default is 1 - cdf(x); families override where a direct
    /// form avoids cancellation.
    virtual double tail(double x) const;

    /// log P(X > x). Finite wherever the mathematical tail is positive,
    /// including regions where tail() underflows to zero.
    virtual double log_tail(double x) const;

    virtual bool has_density() const { return false; }
    virtual double pdf(double x) const;
    virtual double log_pdf(double x) const;

    /// Inverse CDF on (0, 1). Right-continuous generalized inverse for
    /// discrete families.
    virtual double quantile(double p) const = 0;

    /// Inverse survival function: x with tail(x) = q. Default routes through
    /// quantile(1-q); overridden where deep-tail precision matters.
    virtual double inv_tail(double q) const;

    /// Draw via inverse transform, so sampler and cdf are consistent by
    /// construction.
    virtual double sample(Rng& rng) const;
    std::vector<double> sample(Rng& rng, std::size_t count) const;

    /// Exact mean when it exists and is finite; nullopt otherwise.
    virtual std::optional<double> mean() const = 0;

    virtual Support support() const = 0;

    /// Atom list for purely discrete families; nullopt for continuous ones.
    virtual std::optional<std::vector<Atom>> atoms() const { return std::nullopt; }

    virtual std::string name() const = 0;
};

using DistPtr = std::shared_ptr<const Distribution>;

/// E[g(X)] by adaptive quadrature of the quantile-transformed integrand
/// g(Q(u)) on (0,1); infinite supports never appear explicitly.
quad::Result expectation(const Distribution& d, const quad::Fn& g,
                         const quad::Options& opt = {});

/// Mean by quadrature, independent of the closed-form mean() route.
double numeric_mean(const Distribution& d, const quad::Options& opt = {});

/// Two-sided Kolmogorov-Smirnov statistic of `samples` against d.cdf.
double ks_statistic(const Distribution& d, std::vector<double> samples);

}
