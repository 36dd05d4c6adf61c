#include "heavytails/conditioning.hpp"

#include <algorithm>
#include <cmath>

#include "heavytails/errors.hpp"
#include "heavytails/families.hpp"
#include "heavytails/log_space.hpp"
#include "heavytails/quadrature.hpp"
#include "heavytails/rng.hpp"
#include "heavytails/special.hpp"
#include "heavytails/tail_classify.hpp"

namespace heavytails {

using special::norm_log_pdf;
using special::norm_log_tail;
using special::norm_pdf;
using special::norm_tail;

namespace {

using LogWeight = std::function<double(double)>;

struct Interval {
    double lo, hi;
    bool lo_incl = false, hi_incl = false;
};

quad::Options default_log_opt() {
    quad::Options opt;
    opt.rel_tol = 1e-10;
    opt.max_panels = 8000;
    return opt;
}

/// log of Int_{interval} e^{w(v)} dF_V(v), for V with a density or atoms.
double log_weighted_measure(const Distribution& v, Interval iv, const LogWeight& w,
                            const quad::Options& opt) {
    if (auto atoms = v.atoms()) {
        double acc = kNegInf;
        for (const Atom& a : *atoms) {
            const bool above = a.value > iv.lo || (iv.lo_incl && a.value == iv.lo);
            const bool below = a.value < iv.hi || (iv.hi_incl && a.value == iv.hi);
            if (above && below) acc = log_sum_exp(acc, std::log(a.prob) + w(a.value));
        }
        return acc;
    }
    if (!v.has_density())
        throw InvalidParameter("v_dist", "needs a density or a finite atom list");
    const Support s = v.support();
    const double lo = std::max(iv.lo, s.lo);
    const double hi = std::min(iv.hi, s.hi);
    if (!(hi > lo)) return kNegInf;
    auto f_log = [&](double x) { return v.log_pdf(x) + w(x); };
    const bool lo_fin = std::isfinite(lo);
    const bool hi_fin = std::isfinite(hi);
    if (!lo_fin && !hi_fin)
        return quad::log_integrate_line(f_log, v.quantile(0.5), opt).log_value;
    if (!hi_fin) return quad::log_integrate_semi_inf_upper(f_log, lo, opt).log_value;
    if (!lo_fin) return quad::log_integrate_semi_inf_lower(f_log, hi, opt).log_value;
    return quad::log_integrate(f_log, lo, hi, opt).log_value;
}

double v_mean(const Distribution& v) {
    if (auto m = v.mean()) return *m;
    return numeric_mean(v);
}

/// Independent case via the centered identity
///   E[V | X+V >= t] = (E[V] + C) / D,
/// C = Int v f_V (Q_t - 1) dv  (the integrand is nonnegative: v and
/// Q_t(v) - 1 always share sign, so C accumulates without cancellation),
/// D = 1 + Int f_V (Q_t - 1) dv, with Q_t(v) = tail_X(t-v)/tail_X(t).
ConditionalMeanDetail independent_mean_centered(const Distribution& v,
                                                const Distribution& x, double t) {
    const double log_tail_t = x.log_tail(t);
    const quad::Options opt = default_log_opt();
    auto delta = [&](double vv) { return x.log_tail(t - vv) - log_tail_t; };

    const double log_c_pos = log_weighted_measure(
        v, {0.0, kInf},
        [&](double vv) { return std::log(vv) + log_abs_expm1(delta(vv)); }, opt);
    const double log_c_neg = log_weighted_measure(
        v, {-kInf, 0.0},
        [&](double vv) { return std::log(-vv) + log_abs_expm1(delta(vv)); }, opt);
    const double log_e_pos = log_weighted_measure(
        v, {0.0, kInf}, [&](double vv) { return log_abs_expm1(delta(vv)); }, opt);
    const double log_e_neg = log_weighted_measure(
        v, {-kInf, 0.0}, [&](double vv) { return log_abs_expm1(delta(vv)); }, opt);

    const SLog denom = SLog::from_value(1.0) + SLog::from_log(log_e_pos, 1) -
                       SLog::from_log(log_e_neg, 1);
    if (denom.sign <= 0 || denom.lg < std::log(1e-12) + std::max(0.0, log_e_neg))
        throw DenominatorUnderflow(
            "conditioning denominator lost all precision to cancellation at t=" +
            std::to_string(t));
    const SLog shift = SLog::from_log(log_c_pos, 1) + SLog::from_log(log_c_neg, 1);
    const SLog numer = SLog::from_value(v_mean(v)) + shift;

    ConditionalMeanDetail out;
    out.denominator = denom.value();
    out.numerator_shift = shift.value();
    out.mean = (numer / denom).value();
    return out;
}

/// Fallback when tail_X(t) underflows even in log space (t far beyond a
/// bounded X support): work with the unnormalized integrals directly.
ConditionalMeanDetail independent_mean_direct(const Distribution& v,
                                              const Distribution& x, double t) {
    const quad::Options opt = default_log_opt();
    auto w = [&](double vv) { return x.log_tail(t - vv); };
    const double log_d = log_weighted_measure(v, {-kInf, kInf}, w, opt);
    if (log_d == kNegInf)
        throw DenominatorUnderflow("event X+V >= t has no representable mass at t=" +
                                   std::to_string(t));
    const double log_n_pos = log_weighted_measure(
        v, {0.0, kInf}, [&](double vv) { return std::log(vv) + w(vv); }, opt);
    const double log_n_neg = log_weighted_measure(
        v, {-kInf, 0.0}, [&](double vv) { return std::log(-vv) + w(vv); }, opt);
    const SLog numer = SLog::from_log(log_n_pos, 1) - SLog::from_log(log_n_neg, 1);

    ConditionalMeanDetail out;
    out.denominator = std::exp(log_d);  // here: Pr[X+V >= t] itself
    out.numerator_shift = std::numeric_limits<double>::quiet_NaN();
    out.mean = (numer / SLog::from_log(log_d, 1)).value();
    return out;
}

struct DependentParts {
    SLog numer;
    SLog denom;
};

/// V ~ normal(0,1); X | V ~ normal(0,4) for |V| <= 1, else X = 0.
DependentParts dependent_parts(double t) {
    const quad::Options opt = default_log_opt();
    auto w = [&](double vv) { return norm_log_tail((t - vv) / 2.0); };
    auto f_log = [&](double vv) { return norm_log_pdf(vv); };

    DependentParts parts;
    // |v| <= 1 branch: X contributes a normal(0,4) tail.
    parts.denom = parts.denom + SLog::from_log(
        quad::log_integrate([&](double vv) { return f_log(vv) + w(vv); }, -1.0, 1.0, opt)
            .log_value, 1);
    parts.numer = parts.numer + SLog::from_log(
        quad::log_integrate(
            [&](double vv) { return std::log(vv) + f_log(vv) + w(vv); }, 0.0, 1.0, opt)
            .log_value, 1);
    parts.numer = parts.numer - SLog::from_log(
        quad::log_integrate(
            [&](double vv) { return std::log(-vv) + f_log(vv) + w(vv); }, -1.0, 0.0, opt)
            .log_value, 1);

    // |v| > 1 branch: X = 0, so the event is just V >= t. Closed forms:
    // over (a, b), Int phi = Phi(b) - Phi(a) and Int v phi = phi(a) - phi(b).
    if (t <= -1.0) {
        parts.denom = parts.denom + SLog::from_value(norm_tail(t) - norm_tail(-1.0));
        parts.denom = parts.denom + SLog::from_log(norm_log_tail(1.0), 1);
        parts.numer = parts.numer +
                      SLog::from_value(std::exp(norm_log_pdf(t)) - std::exp(norm_log_pdf(1.0)));
        parts.numer = parts.numer + SLog::from_log(norm_log_pdf(1.0), 1);
    } else if (t <= 1.0) {
        parts.denom = parts.denom + SLog::from_log(norm_log_tail(1.0), 1);
        parts.numer = parts.numer + SLog::from_log(norm_log_pdf(1.0), 1);
    } else {
        parts.denom = parts.denom + SLog::from_log(norm_log_tail(t), 1);
        parts.numer = parts.numer + SLog::from_log(norm_log_pdf(t), 1);
    }
    return parts;
}

}  // namespace

ConditionalMeanDetail conditional_mean_detail(const ConditioningProblem& problem) {
    if (!std::isfinite(problem.t)) throw InvalidParameter("t", "must be finite");
    if (problem.dependence == Dependence::vshaped_counterexample) {
        DependentParts parts = dependent_parts(problem.t);
        if (parts.denom.sign <= 0)
            throw DenominatorUnderflow("counterexample event has no representable mass");
        ConditionalMeanDetail out;
        out.mean = (parts.numer / parts.denom).value();
        out.denominator = parts.denom.value();  // Pr[X+V >= t], unnormalized
        out.numerator_shift = std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    if (!problem.v_dist || !problem.x_dist)
        throw InvalidParameter("problem", "independent case needs v_dist and x_dist");
    const double log_tail_t = problem.x_dist->log_tail(problem.t);
    if (log_tail_t == kNegInf)
        return independent_mean_direct(*problem.v_dist, *problem.x_dist, problem.t);
    return independent_mean_centered(*problem.v_dist, *problem.x_dist, problem.t);
}

double conditional_mean(const ConditioningProblem& problem) {
    return conditional_mean_detail(problem).mean;
}

double conditional_mean_dependent_counterexample(double t) {
    ConditioningProblem p;
    p.t = t;
    p.dependence = Dependence::vshaped_counterexample;
    return conditional_mean(p);
}

McEstimate conditional_mean_mc(const ConditioningProblem& problem, long long n_samples,
                               std::uint64_t seed) {
    if (n_samples <= 0) throw InvalidParameter("n_samples", "must be positive");
    Rng rng(seed);
    const Normal std_normal(0.0, 1.0);

    long long accepted = 0;
    double mean = 0.0, m2 = 0.0;  // Welford accumulation over accepted V
    for (long long i = 0; i < n_samples; ++i) {
        double v, x;
        if (problem.dependence == Dependence::vshaped_counterexample) {
            v = std_normal.sample(rng);
            x = std::fabs(v) <= 1.0 ? 2.0 * std_normal.sample(rng) : 0.0;
        } else {
            v = problem.v_dist->sample(rng);
            x = problem.x_dist->sample(rng);
        }
        if (x + v >= problem.t) {
            ++accepted;
            const double d = v - mean;
            mean += d / static_cast<double>(accepted);
            m2 += d * (v - mean);
        }
    }
    if (accepted == 0)
        throw BudgetExhausted("rejection sampler accepted no samples out of " +
                              std::to_string(n_samples));
    McEstimate est;
    est.mean = mean;
    est.samples = n_samples;
    est.accepted = accepted;
    est.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(n_samples);
    est.standard_error =
        accepted > 1 ? std::sqrt(m2 / static_cast<double>(accepted - 1) /
                                 static_cast<double>(accepted))
                     : kInf;
    return est;
}

RegionScheme choose_h(DistPtr x_dist, HScheme scheme,
                      std::function<double(double)> custom_h, double p) {
    if (!x_dist) throw InvalidParameter("x_dist", "must be set");
    if (!(p > 1.0)) throw InvalidParameter("p", "must exceed 1");
    const TailClassification cls = is_heavy_tailed(*x_dist);
    if (cls.verdict != TailClass::heavy)
        throw InvalidParameter("x_dist",
                               "window scheme needs a heavy-tail classification; got: " +
                                   cls.detail);

    RegionScheme out;
    out.kind = scheme;
    out.p = p;
    switch (scheme) {
        case HScheme::sqrt_t:
            out.h = [](double t) { return std::sqrt(t); };
            out.label = "sqrt(t)";
            break;
        case HScheme::log_power:
            out.h = [](double t) { return std::pow(std::log(t), 2.0); };
            out.label = "log(t)^2";
            break;
        case HScheme::custom:
            if (!custom_h) throw InvalidParameter("custom_h", "must be set for custom scheme");
            out.h = std::move(custom_h);
            out.label = "custom";
            break;
    }

    // Insensitivity of the tail ratio over the central window, checked on a
    // fixed reference grid: sup_{|v| <= h(t)} |Q_t(v) - 1| must decrease.
    const double grid[] = {1e2, 1e3, 1e4, 1e5, 1e6};
    for (double t : grid) {
        const double h = out.h(t);
        if (!(h > 0.0) || !(h <= t / 2.0)) {
            out.warning = "window h(t) outside (0, t/2] at t=" + std::to_string(t);
            continue;
        }
        const double log_tail_t = x_dist->log_tail(t);
        const double up = std::exp(log_abs_expm1(x_dist->log_tail(t - h) - log_tail_t));
        const double dn = std::exp(log_abs_expm1(x_dist->log_tail(t + h) - log_tail_t));
        out.insensitivity.emplace_back(t, std::max(up, dn));
    }
    out.insensitivity_decreasing = out.insensitivity.size() >= 2;
    for (std::size_t i = 1; i < out.insensitivity.size(); ++i)
        if (!(out.insensitivity[i].second < out.insensitivity[i - 1].second))
            out.insensitivity_decreasing = false;
    if (!out.insensitivity_decreasing && out.warning.empty())
        out.warning = "tail-ratio insensitivity failed to decrease on the reference grid";
    return out;
}

RegionTable region_decomposition(const ConditioningProblem& problem,
                                 const RegionScheme& scheme) {
    if (problem.dependence != Dependence::independent)
        throw InvalidParameter("problem", "region decomposition covers the independent case");
    if (!problem.v_dist || !problem.x_dist)
        throw InvalidParameter("problem", "needs v_dist and x_dist");
    const Distribution& v = *problem.v_dist;
    const Distribution& x = *problem.x_dist;
    const double t = problem.t;
    // A scheme without its window function filled in (not built by choose_h)
    // falls back to the named default for its kind.
    const RegionScheme& live =
        scheme.h ? scheme : choose_h(problem.x_dist, scheme.kind, {}, scheme.p);
    const double h = live.h(t);
    if (!(h > 0.0) || !(h <= t / 2.0))
        throw InvalidParameter("scheme", "window h(t) must lie in (0, t/2]");
    const double log_tail_t = x.log_tail(t);
    if (log_tail_t == kNegInf)
        throw DenominatorUnderflow("tail of X vanishes at t=" + std::to_string(t));

    const quad::Options opt = default_log_opt();
    auto delta = [&](double vv) { return x.log_tail(t - vv) - log_tail_t; };
    auto w_q = [&](double vv) { return delta(vv); };
    auto w_qm1 = [&](double vv) { return log_abs_expm1(delta(vv)); };
    auto w_num = [&](double vv) {
        const double av = std::fabs(vv);
        return (av > 0.0 ? std::log(av) : kNegInf) + log_abs_expm1(delta(vv));
    };

    RegionTable table;
    table.t = t;
    table.h = h;
    const Interval regions[4] = {
        {-kInf, -h, false, true},   // r1 = (-inf, -h]
        {-h, h, false, false},      // r2 = (-h, h)
        {h, t - h, true, true},     // r3 = [h, t-h]
        {t - h, kInf, false, false} // r4 = (t-h, inf)
    };

    double log_mass[4];
    for (int i = 0; i < 4; ++i) {
        table.regions[i].lo = regions[i].lo;
        table.regions[i].hi = regions[i].hi;
        table.regions[i].log_numerator = log_weighted_measure(v, regions[i], w_num, opt);
        table.regions[i].numerator = std::exp(table.regions[i].log_numerator);
        log_mass[i] = log_weighted_measure(v, regions[i], w_q, opt);
    }
    double log_total_mass = kNegInf;
    for (double lm : log_mass) log_total_mass = log_sum_exp(log_total_mass, lm);
    for (int i = 0; i < 4; ++i)
        table.regions[i].conditional_mass = std::exp(log_mass[i] - log_total_mass);

    // Signed denominator pieces of Int f_V (Q_t - 1) over (-inf,-h), [-h,h], (h,inf).
    const double lo_piece = log_weighted_measure(v, {-kInf, -h, false, false}, w_qm1, opt);
    table.denominator_piece_log[0] = lo_piece;
    table.denominator_piece_sign[0] = lo_piece == kNegInf ? 0 : -1;
    const SLog mid = SLog::from_log(
                         log_weighted_measure(v, {0.0, h, false, true}, w_qm1, opt), 1) -
                     SLog::from_log(
                         log_weighted_measure(v, {-h, 0.0, true, true}, w_qm1, opt), 1);
    table.denominator_piece_log[1] = mid.lg;
    table.denominator_piece_sign[1] = mid.sign;
    const double hi_piece = log_weighted_measure(v, {h, kInf, false, false}, w_qm1, opt);
    table.denominator_piece_log[2] = hi_piece;
    table.denominator_piece_sign[2] = hi_piece == kNegInf ? 0 : 1;

    const SLog denom = SLog::from_value(1.0) + SLog::from_log(lo_piece, -1) + mid +
                       SLog::from_log(hi_piece, 1);
    table.denominator = denom.value();

    const double log_r3_mass = log_mass[2];
    table.log_lemma2_ratio = std::log(t) + log_r3_mass;
    table.lemma2_ratio = std::exp(table.log_lemma2_ratio);
    table.conditional_mean = conditional_mean(problem);
    return table;
}

Region4Table region4_tail_bound(const Distribution& v_dist, const Distribution& x_dist,
                                double p, const std::vector<double>& t_grid) {
    if (t_grid.empty()) throw InvalidParameter("t_grid", "must be non-empty");
    if (!(p > 1.0)) throw InvalidParameter("p", "must exceed 1");
    quad::Options opt = default_log_opt();

    Region4Table table;
    for (double t : t_grid) {
        if (!(t > 0.0)) throw InvalidParameter("t_grid", "entries must be positive");
        const double log_tail_x = x_dist.log_tail(t);
        if (log_tail_x == kNegInf)
            throw InvalidParameter("t_grid", "tail of X vanishes inside the grid");
        Region4Row row;
        row.t = t;
        row.log_ratio_point = std::log(t) + v_dist.log_tail(t) - log_tail_x;
        row.ratio_point = std::exp(row.log_ratio_point);
        const double log_int = quad::log_integrate_semi_inf_upper(
                                   [&](double vv) { return v_dist.log_tail(vv); }, t, opt)
                                   .log_value;
        row.log_ratio_integral = log_int - log_tail_x;
        row.ratio_integral = std::exp(row.log_ratio_integral);
        table.rows.push_back(row);
    }

    auto decreasing = [](const std::vector<Region4Row>& rows, auto get) {
        for (std::size_t i = 1; i < rows.size(); ++i) {
            const double a = get(rows[i - 1]), b = get(rows[i]);
            if (a == kNegInf && b == kNegInf) continue;
            if (!(b < a)) return false;
        }
        return rows.size() >= 2;
    };
    table.point_decreasing =
        decreasing(table.rows, [](const Region4Row& r) { return r.log_ratio_point; });
    table.integral_decreasing =
        decreasing(table.rows, [](const Region4Row& r) { return r.log_ratio_integral; });
    return table;
}

LightTailRatioTable light_tail_ratio_diagnostic(const Distribution& v_dist,
                                                const Distribution& x_dist, double c,
                                                const std::vector<double>& t_grid) {
    if (t_grid.empty()) throw InvalidParameter("t_grid", "must be non-empty");
    if (!(v_dist.tail(c + 1.0) > 0.0))
        throw InvalidParameter("c", "V must place mass above c+1");
    const quad::Options opt = default_log_opt();

    LightTailRatioTable table;
    for (double t : t_grid) {
        auto w = [&](double vv) { return x_dist.log_tail(t - vv); };
        const double log_below =
            log_weighted_measure(v_dist, {-kInf, c, false, false}, w, opt);
        const double log_above =
            log_weighted_measure(v_dist, {c + 1.0, kInf, false, false}, w, opt);
        LightTailRatioRow row;
        row.t = t;
        row.log_ratio = log_below - log_above;
        row.ratio = std::exp(row.log_ratio);
        const double log_v_below = std::log(v_dist.cdf(c));
        row.log_bound = (x_dist.log_tail(t - c) - x_dist.log_tail(t - c - 1.0)) +
                        (log_v_below - v_dist.log_tail(c + 1.0));
        row.bound = std::exp(row.log_bound);
        row.within_bound = row.log_ratio <= row.log_bound + 1e-9;
        table.rows.push_back(row);
    }
    table.ratio_decreasing = table.rows.size() >= 2;
    for (std::size_t i = 1; i < table.rows.size(); ++i) {
        const double a = table.rows[i - 1].log_ratio, b = table.rows[i].log_ratio;
        if (a == kNegInf && b == kNegInf) continue;
        if (!(b < a)) table.ratio_decreasing = false;
    }
    return table;
}

}
