#pragma once

#include <optional>
#include <string>
#include <vector>

#include "heavytails/distribution.hpp"

namespace heavytails {

class Normal final : public Distribution {
public:
    Normal(double mu, double sigma);
    double cdf(double x) const override;
    double tail(double x) const override;
    double log_tail(double x) const override;
    bool has_density() const override { return true; }
    double pdf(double x) const override;
    double log_pdf(double x) const override;
    double quantile(double p) const override;
    double inv_tail(double q) const override;
    std::optional<double> mean() const override { return mu_; }
    Support support() const override { return {kNegInf, kInf}; }
    std::string name() const override;
    double mu() const { return mu_; }
    double sigma() const { return sigma_; }

private:
    double mu_, sigma_;
};

class Exponential final : public Distribution {
public:
    explicit Exponential(double rate);
    double cdf(double x) const override;
    double tail(double x) const override;
    double log_tail(double x) const override;
    bool has_density() const override { return true; }
    double pdf(double x) const override;
    double log_pdf(double x) const override;
    double quantile(double p) const override;
    double inv_tail(double q) const override;
    std::optional<double> mean() const override { return 1.0 / rate_; }
    Support support() const override { return {0.0, kInf}; }
    std::string name() const override;

private:
    double rate_;
};

class Pareto final : public Distribution {
public:
    Pareto(double shape, double scale = 1.0);
    double cdf(double x) const override;
    double tail(double x) const override;
    double log_tail(double x) const override;
    bool has_density() const override { return true; }
    double pdf(double x) const override;
    double log_pdf(double x) const override;
    double quantile(double p) const override;
    double inv_tail(double q) const override;
    std::optional<double> mean() const override;
    Support support() const override { return {scale_, kInf}; }
    std::string name() const override;
    double shape() const { return shape_; }

private:
    double shape_, scale_;
};

class StudentT final : public Distribution {
public:
    explicit StudentT(double df);
    double cdf(double x) const override;
    double tail(double x) const override;
    double log_tail(double x) const override;
    bool has_density() const override { return true; }
    double pdf(double x) const override;
    double log_pdf(double x) const override;
    double quantile(double p) const override;
    double inv_tail(double q) const override;
    std::optional<double> mean() const override;
    Support support() const override { return {kNegInf, kInf}; }
    std::string name() const override;

private:
    double positive_inv_tail(double q) const;  // solve tail(x)=q, x >= 0, q <= 1/2
    double df_;
    double log_norm_;   // log of the density normalization constant
    double log_coef_;   // log C with tail(x) ~ C x^-df
};

class LogNormal final : public Distribution {
public:
    LogNormal(double mu, double sigma);
    double cdf(double x) const override;
    double tail(double x) const override;
    double log_tail(double x) const override;
    bool has_density() const override { return true; }
    double pdf(double x) const override;
    double log_pdf(double x) const override;
    double quantile(double p) const override;
    double inv_tail(double q) const override;
    std::optional<double> mean() const override;
    Support support() const override { return {0.0, kInf}; }
    std::string name() const override;

private:
    double mu_, sigma_;
};

/// Tail exp(-(x/scale)^shape) on x >= 0; subexponential for shape < 1.
class WeibullStretched final : public Distribution {
public:
    explicit WeibullStretched(double shape, double scale = 1.0);
    double cdf(double x) const override;
    double tail(double x) const override;
    double log_tail(double x) const override;
    bool has_density() const override { return true; }
    double pdf(double x) const override;
    double log_pdf(double x) const override;
    double quantile(double p) const override;
    double inv_tail(double q) const override;
    std::optional<double> mean() const override;
    Support support() const override { return {0.0, kInf}; }
    std::string name() const override;

private:
    double shape_, scale_;
};

class Uniform final : public Distribution {
public:
    Uniform(double a, double b);
    double cdf(double x) const override;
    double log_tail(double x) const override;
    bool has_density() const override { return true; }
    double pdf(double x) const override;
    double quantile(double p) const override;
    std::optional<double> mean() const override { return 0.5 * (a_ + b_); }
    Support support() const override { return {a_, b_}; }
    std::string name() const override;

private:
    double a_, b_;
};

class PointMass final : public Distribution {
public:
    explicit PointMass(double c);
    double cdf(double x) const override;
    double tail(double x) const override;
    double quantile(double p) const override;
    double sample(Rng& rng) const override;
    std::optional<double> mean() const override { return c_; }
    Support support() const override { return {c_, c_}; }
    std::optional<std::vector<Atom>> atoms() const override;
    std::string name() const override;

private:
    double c_;
};

/// Power-law continuation of an empirical tail past the sample maximum,
/// anchored at mass 1/n: P(X > x) = (1/n) (x / max)^{-alpha}.
struct TailExtrapolation {
    double alpha;
};

/// Step CDF over an observed sample. Tail queries past the maximum return 0
/// unless a TailExtrapolation is attached (then they follow the fitted power
/// law and are flagged by tail_is_extrapolated). Quantiles and sampling
/// always resample the observed values.
class Empirical final : public Distribution {
public:
    explicit Empirical(std::vector<double> values,
                       std::optional<TailExtrapolation> extrap = std::nullopt);
    double cdf(double x) const override;
    double tail(double x) const override;
    double log_tail(double x) const override;
    double quantile(double p) const override;
    double sample(Rng& rng) const override;
    std::optional<double> mean() const override;
    Support support() const override;
    std::optional<std::vector<Atom>> atoms() const override;
    std::string name() const override;

    bool tail_is_extrapolated(double x) const;
    const std::vector<double>& values() const { return sorted_; }

private:
    std::vector<double> sorted_;
    std::optional<TailExtrapolation> extrap_;
};

/// Finite weighted support: atoms (value, prob) with probs summing to 1.
/// Duplicate values are merged; atoms are kept sorted by value. All moments
/// and tail queries are exact finite sums.
class Discrete final : public Distribution {
public:
    explicit Discrete(std::vector<Atom> atoms);
    double cdf(double x) const override;
    double tail(double x) const override;
    double log_tail(double x) const override;
    double quantile(double p) const override;
    double sample(Rng& rng) const override;
    std::optional<double> mean() const override;
    Support support() const override;
    std::optional<std::vector<Atom>> atoms() const override;
    std::string name() const override;

private:
    std::vector<Atom> atoms_;       // sorted by value, deduplicated
    std::vector<double> cum_;       // cumulative probs, cum_.back() == 1
};

/// Parsed textual family spec: "name" or "name:p1,p2".
struct FamilySpec {
    std::string family;
    std::vector<double> params;
};

/// Strict grammar: lowercase family name, optional colon, comma-separated
/// real parameters. Throws SpecParseError with the byte offset on error.
FamilySpec parse_family_spec(const std::string& text);

/// Instantiate a family from a parsed spec. Arity and parameter ranges are
/// validated with per-field error messages.
DistPtr make_distribution(const FamilySpec& spec);
DistPtr make_distribution(const std::string& text);

}
