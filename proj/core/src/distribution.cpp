#include "heavytails/distribution.hpp"

#include <algorithm>
#include <cmath>

#include "heavytails/errors.hpp"

namespace heavytails {

double Distribution::tail(double x) const { return 1.0 - cdf(x); }

double Distribution::log_tail(double x) const {
    double t = tail(x);
    return t > 0 ? std::log(t) : kNegInf;
}

double Distribution::pdf(double) const {
    throw NumericError(name() + ": density not available");
}

double Distribution::log_pdf(double x) const {
    double f = pdf(x);
    return f > 0 ? std::log(f) : kNegInf;
}

double Distribution::inv_tail(double q) const { return quantile(1.0 - q); }

double Distribution::sample(Rng& rng) const {
    double u = rng.uniform();
    // Map the upper half through inv_tail so deep-tail draws keep full
    // precision instead of evaluating quantile at p = 1 - epsilon.
    if (u > 0.5) return inv_tail(1.0 - u);
    return quantile(u);
}

std::vector<double> Distribution::sample(Rng& rng, std::size_t count) const {
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = sample(rng);
    return out;
}

quad::Result expectation(const Distribution& d, const quad::Fn& g,
                         const quad::Options& opt) {
    // Purely discrete laws are exact finite sums.
    if (auto atoms = d.atoms()) {
        quad::Result exact;
        exact.value = 0.0;
        for (const Atom& a : *atoms) exact.value += a.prob * g(a.value);
        exact.error = 0.0;
        exact.evaluations = atoms->size();
        exact.converged = true;
        return exact;
    }
    // Int g(Q(u)) du over (0,1). The middle runs directly; both endpoint
    // wings use u = e^{-y} (resp. 1-u = e^{-y}), which turns the quantile
    // blow-up of heavy tails into a smooth exponentially-damped integrand.
    const double cut = std::ldexp(1.0, -8);  // 2^-8
    quad::Result mid =
        quad::integrate([&](double u) { return g(d.quantile(u)); }, cut, 1.0 - cut, opt);
    const double y0 = -std::log(cut);
    quad::Result lower = quad::integrate_semi_inf_upper(
        [&](double y) {
            const double u = std::exp(-y);
            return u > 0.0 ? g(d.quantile(u)) * u : 0.0;
        },
        y0, opt);
    quad::Result upper = quad::integrate_semi_inf_upper(
        [&](double y) {
            const double q = std::exp(-y);
            return q > 0.0 ? g(d.inv_tail(q)) * q : 0.0;
        },
        y0, opt);
    quad::Result out;
    out.value = mid.value + lower.value + upper.value;
    out.error = mid.error + lower.error + upper.error;
    out.evaluations = mid.evaluations + lower.evaluations + upper.evaluations;
    out.converged = mid.converged && lower.converged && upper.converged;
    return out;
}

double numeric_mean(const Distribution& d, const quad::Options& opt) {
    // A purely relative tolerance can never be met when the mean is exactly
    // zero (symmetric laws), so give the convergence test an absolute floor
    // unless the caller chose one.
    quad::Options mean_opt = opt;
    if (mean_opt.abs_tol == 0.0) mean_opt.abs_tol = 1e-12;
    quad::Result r = expectation(d, [](double x) { return x; }, mean_opt);
    if (!r.converged)
        throw QuadratureFailure(d.name() + ": mean quadrature did not converge", r.error);
    return r.value;
}

double ks_statistic(const Distribution& d, std::vector<double> samples) {
    std::sort(samples.begin(), samples.end());
    std::size_t n = samples.size();
    double stat = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double f = d.cdf(samples[i]);
        stat = std::max(stat, std::fabs(static_cast<double>(i + 1) / n - f));
        stat = std::max(stat, std::fabs(f - static_cast<double>(i) / n));
    }
    return stat;
}

}
