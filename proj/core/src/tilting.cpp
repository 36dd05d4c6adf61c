#include "heavytails/tilting.hpp"

#include <algorithm>
#include <cmath>

#include "heavytails/errors.hpp"
#include "heavytails/log_space.hpp"
#include "heavytails/quadrature.hpp"

namespace heavytails {

namespace {

void validate_config(const TailUpweightConfig& cfg) {
    if (!cfg.base) throw InvalidParameter("base", "must be set");
    if (!(cfg.c > 0.0) || !std::isfinite(cfg.c))
        throw InvalidParameter("c", "must be positive and finite");
    if (!(cfg.t > cfg.c) || !std::isfinite(cfg.t))
        throw InvalidParameter("t", "must be finite and exceed c");
    if (!(cfg.gamma > 0.0) || !(cfg.gamma <= 1.0))
        throw InvalidParameter("gamma", "must lie in (0, 1]");
    const double m = cfg.c / std::pow(cfg.t, cfg.gamma);
    if (!(m > 0.0) || !(m < 1.0))
        throw InvalidParameter("c", "mass c/t^gamma must lie in (0, 1)");
    if (!cfg.base->mean().has_value())
        throw InvalidParameter("base", "must have a finite mean");
}

}  // namespace

TailUpweighted::TailUpweighted(TailUpweightConfig cfg) : cfg_(std::move(cfg)) {
    validate_config(cfg_);
    mass_above_ = cfg_.c / std::pow(cfg_.t, cfg_.gamma);
    log_base_tail_t_ = cfg_.base->log_tail(cfg_.t);
    if (log_base_tail_t_ == kNegInf)
        throw ThresholdTooDeep("base tail underflows in log space at threshold t=" +
                               std::to_string(cfg_.t));
    base_tail_t_ = std::exp(log_base_tail_t_);
    base_cdf_t_ = cfg_.base->cdf(cfg_.t);
    if (!(base_cdf_t_ > 0.0))
        throw InvalidParameter("t", "threshold lies at or below the base support");
}

double TailUpweighted::cdf(double x) const {
    if (x <= cfg_.t) return (1.0 - mass_above_) * cfg_.base->cdf(x) / base_cdf_t_;
    return 1.0 - mass_above_ * cfg_.base->tail(x) / base_tail_t_;
}

double TailUpweighted::tail(double x) const {
    if (x < cfg_.t) {
        return (base_cdf_t_ - (1.0 - mass_above_) * cfg_.base->cdf(x)) / base_cdf_t_;
    }
    if (x == cfg_.t) return mass_above_;  // the construction pins this exactly
    return mass_above_ * cfg_.base->tail(x) / base_tail_t_;
}

double TailUpweighted::log_tail(double x) const {
    if (x < cfg_.t) return std::log(tail(x));
    if (x == cfg_.t) return std::log(mass_above_);
    return std::log(mass_above_) + cfg_.base->log_tail(x) - log_base_tail_t_;
}

bool TailUpweighted::has_density() const { return cfg_.base->has_density(); }

double TailUpweighted::pdf(double x) const {
    if (x <= cfg_.t) return (1.0 - mass_above_) / base_cdf_t_ * cfg_.base->pdf(x);
    return mass_above_ / base_tail_t_ * cfg_.base->pdf(x);
}

double TailUpweighted::log_pdf(double x) const {
    if (x <= cfg_.t)
        return std::log1p(-mass_above_) - std::log(base_cdf_t_) + cfg_.base->log_pdf(x);
    return std::log(mass_above_) - log_base_tail_t_ + cfg_.base->log_pdf(x);
}

double TailUpweighted::quantile(double u) const {
    if (!(u >= 0.0) || !(u <= 1.0)) throw InvalidParameter("u", "must lie in [0, 1]");
    const double lower_mass = 1.0 - mass_above_;
    if (u <= lower_mass) return cfg_.base->quantile(u / lower_mass * base_cdf_t_);
    return cfg_.base->inv_tail((1.0 - u) / mass_above_ * base_tail_t_);
}

double TailUpweighted::inv_tail(double q) const {
    if (!(q >= 0.0) || !(q <= 1.0)) throw InvalidParameter("q", "must lie in [0, 1]");
    if (q >= mass_above_) return cfg_.base->quantile((1.0 - q) / (1.0 - mass_above_) * base_cdf_t_);
    return cfg_.base->inv_tail(q / mass_above_ * base_tail_t_);
}

std::optional<double> TailUpweighted::mean() const {
    return upweighted_mean(*this);
}

Support TailUpweighted::support() const { return cfg_.base->support(); }

std::string TailUpweighted::name() const {
    return "tail-upweighted(" + cfg_.base->name() + ")";
}

std::shared_ptr<const TailUpweighted> build_tail_upweighted(TailUpweightConfig cfg) {
    return std::make_shared<const TailUpweighted>(std::move(cfg));
}

UpweightedMeanBreakdown upweighted_mean_breakdown(const TailUpweighted& p) {
    const TailUpweightConfig& cfg = p.config();
    const Distribution& q = *cfg.base;
    const double base_mean = *q.mean();
    const double t_mass = p.base_tail_at_t();
    const double log_t_mass = q.log_tail(cfg.t);
    if (!(t_mass > 0.0) && !q.atoms()) {
        throw ThresholdTooDeep("base tail mass at t underflows below the smallest "
                               "positive double; reduce t");
    }

    double upper_cond;
    if (auto at = q.atoms()) {
        double num = 0.0, mass = 0.0;
        for (const Atom& a : *at) {
            if (a.value > cfg.t) {
                num += a.value * a.prob;
                mass += a.prob;
            }
        }
        upper_cond = num / mass;
    } else {
        // E_Q[X | X > t] by integrating the inverse tail over (0, tail(t))
        // with the substitution w = tail(t) e^{-y}, which resolves the
        // logarithmic crowding of deep tails.
        quad::Options opt;
        opt.rel_tol = 1e-11;
        quad::Result upper = quad::integrate_semi_inf_upper(
            [&](double y) {
                const double w = std::exp(log_t_mass - y);
                if (!(w > 0.0)) return 0.0;
                return q.inv_tail(w) * std::exp(-y);
            },
            0.0, opt);
        if (!upper.converged)
            throw QuadratureFailure("upper conditional mean", upper.error);
        upper_cond = upper.value;
    }
    const double lower_cond = (base_mean - t_mass * upper_cond) / (1.0 - t_mass);

    UpweightedMeanBreakdown out;
    out.base_mean = base_mean;
    out.mass_above = p.mass_above();
    out.base_tail_at_t = t_mass;
    out.upper_conditional_mean = upper_cond;
    out.lower_conditional_mean = lower_cond;
    out.mean = base_mean + (p.mass_above() - t_mass) * (upper_cond - lower_cond);
    return out;
}

double upweighted_mean(const TailUpweighted& p) {
    return upweighted_mean_breakdown(p).mean;
}

double upweighted_mean_quadrature(const TailUpweighted& p) {
    const TailUpweightConfig& cfg = p.config();
    const Distribution& q = *cfg.base;
    const double m = p.mass_above();
    if (auto at = q.atoms()) {
        // Exact piecewise-weighted sum; atoms at t itself sit in the lower
        // piece because the pieces split on P(X > t).
        const double lo_w = (1.0 - m) / p.base_cdf_at_t();
        const double hi_w = m / p.base_tail_at_t();
        double sum = 0.0;
        for (const Atom& a : *at) sum += a.value * a.prob * (a.value > cfg.t ? hi_w : lo_w);
        return sum;
    }
    if (!q.has_density()) return numeric_mean(p);
    if (!(p.base_tail_at_t() > 0.0)) {
        throw ThresholdTooDeep("base tail mass at t underflows below the smallest "
                               "positive double; reduce t");
    }
    // Independent path: integrate x f(x) over (t, hi) in x space — a
    // positive integrand with clean relative convergence — and recover the
    // lower piece from the exact identity lower = E_Q[X] - upper. Integrating
    // the lower piece directly would chase a near-cancelling value with a
    // relative tolerance.
    quad::Options opt;
    opt.rel_tol = 1e-10;
    opt.max_panels = 8000;
    const Support sup = q.support();
    auto xf = [&](double x) { return x * q.pdf(x); };
    const quad::Result upper = std::isfinite(sup.hi)
                                   ? quad::integrate(xf, cfg.t, sup.hi, opt)
                                   : quad::integrate_semi_inf_upper(xf, cfg.t, opt);
    if (!upper.converged) {
        throw QuadratureFailure("tail-upweighted mean cross-check", upper.error);
    }
    const double base_mean = *q.mean();
    return (1.0 - m) / p.base_cdf_at_t() * (base_mean - upper.value) +
           m / p.base_tail_at_t() * upper.value;
}

double upweighted_kl(const TailUpweighted& p) {
    // The density ratio is constant on each piece, so the KL collapses to the
    // KL between the piece-mass Bernoullis.
    const double m = p.mass_above();
    const double log_tail_t = p.config().base->log_tail(p.config().t);
    const double t_mass = p.base_tail_at_t();
    const double log_cdf_t =
        t_mass < 0.5 ? std::log1p(-t_mass) : std::log(p.base_cdf_at_t());
    const double kl =
        (1.0 - m) * (std::log1p(-m) - log_cdf_t) + m * (std::log(m) - log_tail_t);
    return std::max(kl, 0.0);
}

namespace {

// log of Int e^{s Q(u)} du over u in (2^-k, 1 - 2^-k), for divergence probing.
double log_partial_normalizer(const Distribution& d, double s, int k,
                              const quad::Options& opt) {
    const double eps = std::ldexp(1.0, -k);
    quad::LogResult r = quad::log_integrate(
        [&](double u) { return s * d.quantile(u); }, eps, 1.0 - eps, opt);
    return r.log_value;
}

struct LogMoment {
    SLog z;     // E[e^{sX}] pieces accumulated
    SLog xz;    // E[X e^{sX}]
};

// Accumulates Int over (u_lo, u_hi) of Q(u)^pow e^{s Q(u)} du for pow in {0,1}
// in signed log space. zero_u marks cdf(0) so each sub-integral has constant
// integrand sign.
void accumulate_piece(const Distribution& d, double s, double u_lo, double u_hi,
                      double zero_u, const quad::Options& opt, LogMoment& m) {
    if (!(u_hi > u_lo)) return;
    if (zero_u > u_lo && zero_u < u_hi) {
        accumulate_piece(d, s, u_lo, zero_u, zero_u, opt, m);
        accumulate_piece(d, s, zero_u, u_hi, zero_u, opt, m);
        return;
    }
    quad::LogResult z = quad::log_integrate(
        [&](double u) { return s * d.quantile(u); }, u_lo, u_hi, opt);
    m.z = m.z + SLog::from_log(z.log_value, 1);

    const double mid_sign = d.quantile(0.5 * (u_lo + u_hi)) < 0.0 ? -1 : 1;
    quad::LogResult xz = quad::log_integrate(
        [&](double u) {
            const double x = d.quantile(u);
            const double ax = std::fabs(x);
            return (ax > 0.0 ? std::log(ax) : kNegInf) + s * x;
        },
        u_lo, u_hi, opt);
    m.xz = m.xz + SLog::from_log(xz.log_value, mid_sign);
}

// Endpoint wings handled with u = e^{-y} (lower) and 1 - u = e^{-y} (upper),
// which trades the quantile singularity for exponential decay in y.
// Shared by both wings: accumulate the normalizer and first-moment pieces of
// Int e^{s x(y)} e^{-y} dy with x(y) = Q(e^{-y}) or invT(e^{-y}). Once e^{-y}
// underflows the contribution is below any representable mass, so the
// integrand clamps to -inf there (divergent tilts never reach this code; the
// probe stage rejects them first).
void accumulate_wing(const std::function<double(double)>& x_of_u, double s, double y0,
                     const quad::Options& opt, LogMoment& m) {
    auto x_of = [&](double y) { return x_of_u(std::exp(-y)); };
    quad::LogResult z = quad::log_integrate_semi_inf_upper(
        [&](double y) {
            if (std::exp(-y) <= 0.0) return kNegInf;
            return s * x_of(y) - y;
        },
        y0, opt);
    m.z = m.z + SLog::from_log(z.log_value, 1);

    auto log_abs_moment = [&](double y) {
        if (std::exp(-y) <= 0.0) return kNegInf;
        const double x = x_of(y);
        const double ax = std::fabs(x);
        return (ax > 0.0 ? std::log(ax) : kNegInf) + s * x - y;
    };
    // x(y) is monotone in y, so its sign flips at most once on the wing.
    const double y_deep = 745.0;  // e^{-y} underflows past here
    const double xa = x_of(y0);
    const double xb = x_of(y_deep);
    const int sign_a = xa < 0.0 ? -1 : 1;
    const int sign_b = xb < 0.0 ? -1 : 1;
    if (xa == 0.0 || xb == 0.0 || sign_a == sign_b) {
        quad::LogResult xz = quad::log_integrate_semi_inf_upper(log_abs_moment, y0, opt);
        m.xz = m.xz + SLog::from_log(xz.log_value, xa != 0.0 ? sign_a : sign_b);
        return;
    }
    double lo = y0, hi = y_deep;
    for (int i = 0; i < 200 && hi - lo > 1e-14 * std::max(1.0, lo); ++i) {
        const double mid = 0.5 * (lo + hi);
        ((x_of(mid) < 0.0 ? -1 : 1) == sign_a ? lo : hi) = mid;
    }
    const double y_flip = 0.5 * (lo + hi);
    quad::LogResult near = quad::log_integrate(log_abs_moment, y0, y_flip, opt);
    quad::LogResult far = quad::log_integrate_semi_inf_upper(log_abs_moment, y_flip, opt);
    m.xz = m.xz + SLog::from_log(near.log_value, sign_a) + SLog::from_log(far.log_value, sign_b);
}

void accumulate_upper_wing(const Distribution& d, double s, double y0,
                           const quad::Options& opt, LogMoment& m) {
    accumulate_wing([&](double u) { return d.inv_tail(u); }, s, y0, opt, m);
}

void accumulate_lower_wing(const Distribution& d, double s, double y0,
                           const quad::Options& opt, LogMoment& m) {
    accumulate_wing([&](double u) { return d.quantile(u); }, s, y0, opt, m);
}

ExpTilt exp_tilt_discrete(DistPtr base, double s, const std::vector<Atom>& atoms) {
    std::vector<double> terms;
    terms.reserve(atoms.size());
    for (const Atom& a : atoms) terms.push_back(std::log(a.prob) + s * a.value);
    double log_z = kNegInf;
    for (double t : terms) log_z = log_sum_exp(log_z, t);
    double mean = 0.0;
    for (std::size_t i = 0; i < atoms.size(); ++i)
        mean += atoms[i].value * std::exp(terms[i] - log_z);
    ExpTilt out{std::move(base), s, log_z, mean, std::max(s * mean - log_z, 0.0)};
    return out;
}

}  // namespace

ExpTilt exp_tilt(DistPtr base, double s) {
    if (!base) throw InvalidParameter("base", "must be set");
    if (!std::isfinite(s)) throw InvalidParameter("s", "must be finite");

    if (auto atoms = base->atoms()) return exp_tilt_discrete(base, s, *atoms);

    if (s == 0.0) {
        const double mean = base->mean() ? *base->mean() : numeric_mean(*base);
        return ExpTilt{base, 0.0, 0.0, mean, 0.0};
    }

    // Divergence probe: partial normalizers over expanding quantile windows.
    // A finite normalizer makes the increments shrink; a divergent one keeps
    // multiplying the partial integral many times over per expansion.
    quad::Options probe_opt;
    probe_opt.rel_tol = 1e-6;
    probe_opt.max_panels = 600;
    const int ks[] = {8, 16, 24, 32, 40, 48};
    double partials[6];
    for (int i = 0; i < 6; ++i) partials[i] = log_partial_normalizer(*base, s, ks[i], probe_opt);
    const double growth_penultimate = partials[4] - partials[3];
    const double growth_final = partials[5] - partials[4];
    const double kLog10 = std::log(10.0);
    if (!std::isfinite(partials[5]) ||
        (growth_penultimate > kLog10 && growth_final > kLog10))
        throw DivergentNormalizer(
            "normalizer for tilt rate s=" + std::to_string(s) +
            " keeps growing over expanding quantile windows");

    quad::Options opt;
    opt.rel_tol = 1e-11;
    opt.max_panels = 8000;
    const double u_edge = std::ldexp(1.0, -8);
    const double y_edge = 8.0 * std::log(2.0);
    const double zero_u = base->cdf(0.0);

    LogMoment m;
    accumulate_piece(*base, s, u_edge, 1.0 - u_edge, zero_u, opt, m);
    accumulate_lower_wing(*base, s, y_edge, opt, m);
    accumulate_upper_wing(*base, s, y_edge, opt, m);

    if (m.z.sign <= 0 || !std::isfinite(m.z.lg))
        throw DivergentNormalizer("normalizer quadrature failed for tilt rate s=" +
                                  std::to_string(s));
    const double log_z = m.z.lg;
    const SLog mean_slog = m.xz / m.z;
    const double mean = mean_slog.value();
    return ExpTilt{base, s, log_z, mean, std::max(s * mean - log_z, 0.0)};
}

RegularizedOptimum kl_regularized_optimum(DistPtr x_dist, DistPtr v_dist, double beta) {
    if (!(beta > 0.0) || !std::isfinite(beta))
        throw InvalidParameter("beta", "must be positive and finite");
    const double s = 1.0 / beta;
    RegularizedOptimum out;
    out.tilt_rate = s;
    out.x_tilt = exp_tilt(std::move(x_dist), s);
    out.v_tilt = exp_tilt(std::move(v_dist), s);
    out.e_v = out.v_tilt.mean;
    out.e_u = out.x_tilt.mean + out.v_tilt.mean;
    out.kl = out.x_tilt.kl + out.v_tilt.kl;
    return out;
}

MixtureKl mixture_kl(const MixtureKlInput& input) {
    if (!(input.alpha > 0.0) || !(input.alpha < 1.0))
        throw InvalidParameter("alpha", "must lie in (0, 1)");
    if (!(input.log_q <= 0.0))
        throw InvalidParameter("log_q", "must be a log-probability (<= 0)");
    const double log_alpha = std::log(input.alpha);
    // Mass at the upweighted event under the mixture: alpha + (1-alpha) q.
    const double log_p_atom =
        log_sum_exp(log_alpha, std::log1p(-input.alpha) + input.log_q);
    const double q = std::exp(input.log_q);  // harmless underflow to 0
    const double term_atom = std::exp(log_p_atom) * (log_p_atom - input.log_q);
    const double term_rest = (1.0 - input.alpha) * (1.0 - q) * std::log1p(-input.alpha);

    MixtureKl out;
    out.exact_kl = std::max(term_atom + term_rest, 0.0);
    out.first_order_kl = input.alpha * (log_alpha - input.log_q);
    out.expected_reward_gain = input.alpha * input.delta_reward;
    out.first_order_regime = input.log_q < log_alpha;
    return out;
}

}
