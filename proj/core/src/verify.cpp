#include "heavytails/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "heavytails/conditioning.hpp"
#include "heavytails/diagnostics.hpp"
#include "heavytails/distribution.hpp"
#include "heavytails/errors.hpp"
#include "heavytails/families.hpp"
#include "heavytails/mdp.hpp"
#include "heavytails/quadrature.hpp"
#include "heavytails/rng.hpp"
#include "heavytails/tail_classify.hpp"
#include "heavytails/tilting.hpp"

namespace heavytails::verify {

namespace {

class Recorder {
public:
    Recorder(std::vector<Check>& out, std::string suite)
        : out_(out), suite_(std::move(suite)) {}

    /// pass iff |measured| <= bound.
    void abs_le(const std::string& name, double measured, double bound,
                const std::string& detail = {}) {
        push(name, std::abs(measured) <= bound, measured, bound, detail);
    }

    /// pass iff measured <= bound.
    void le(const std::string& name, double measured, double bound,
            const std::string& detail = {}) {
        push(name, measured <= bound, measured, bound, detail);
    }

    /// pass iff measured >= bound.
    void ge(const std::string& name, double measured, double bound,
            const std::string& detail = {}) {
        push(name, measured >= bound, measured, bound, detail);
    }

    void flag(const std::string& name, bool ok, double measured,
              const std::string& detail = {}) {
        push(name, ok, measured, 0.0, detail);
    }

private:
    void push(const std::string& name, bool pass, double measured, double bound,
              const std::string& detail) {
        out_.push_back(Check{suite_, name, pass, measured, bound, detail});
    }

    std::vector<Check>& out_;
    std::string suite_;
};

double ks_statistic(const Distribution& d, std::size_t n, Rng& rng) {
    std::vector<double> x = d.sample(rng, n);
    std::sort(x.begin(), x.end());
    double ks = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = d.cdf(x[i]);
        const double lo = static_cast<double>(i) / static_cast<double>(n);
        const double hi = static_cast<double>(i + 1) / static_cast<double>(n);
        ks = std::max(ks, std::max(std::abs(f - lo), std::abs(f - hi)));
    }
    return ks;
}

void distributions_suite(Recorder& rec, std::uint64_t seed) {
    const std::vector<std::string> specs = {
        "normal:0,1",   "exponential:1",        "pareto:1.5,1", "pareto:2,1",
        "student_t:3",  "lognormal:0,1",        "weibull_stretched:0.5",
        "uniform:0,1",
    };
    std::size_t idx = 0;
    for (const auto& spec : specs) {
        DistPtr d = make_distribution(spec);
        // Quantile/CDF round trip across the body of the distribution.
        double worst = 0.0;
        for (int i = 1; i < 200; ++i) {
            const double p = static_cast<double>(i) / 200.0;
            worst = std::max(worst, std::abs(d->cdf(d->quantile(p)) - p));
        }
        rec.abs_le("roundtrip_" + spec, worst, 1e-9,
                   "max |cdf(quantile(p)) - p| over p grid");

        if (d->has_density()) {
            const Support sup = d->support();
            quad::Options opt;
            opt.rel_tol = 1e-10;
            quad::Result mass;
            if (std::isfinite(sup.lo) && std::isfinite(sup.hi)) {
                mass = quad::integrate([&](double x) { return d->pdf(x); }, sup.lo, sup.hi, opt);
            } else if (std::isfinite(sup.lo)) {
                mass = quad::integrate_semi_inf_upper([&](double x) { return d->pdf(x); },
                                                      sup.lo, opt);
            } else {
                mass = quad::integrate_line([&](double x) { return d->pdf(x); },
                                            d->quantile(0.5), opt);
            }
            rec.abs_le("density_normalization_" + spec, mass.value - 1.0, 1e-8,
                       "integral of the density minus 1");
        }

        // log_tail consistency where tail() is representable.
        double worst_lt = 0.0;
        for (int i = 1; i < 40; ++i) {
            const double p = static_cast<double>(i) / 40.0;
            const double x = d->quantile(p);
            const double t = d->tail(x);
            if (t > 1e-300 && t < 1.0) {
                worst_lt = std::max(worst_lt,
                                    std::abs(std::exp(d->log_tail(x)) - t) / t);
            }
        }
        rec.abs_le("log_tail_consistency_" + spec, worst_lt, 1e-9,
                   "max relative gap between exp(log_tail) and tail");

        // Sampler agrees with the CDF (Kolmogorov-Smirnov at alpha=0.001).
        const std::size_t n = 20000;
        Rng rng(seed + 17 * idx);
        const double ks = ks_statistic(*d, n, rng);
        const double crit = 1.9495 / std::sqrt(static_cast<double>(n));
        rec.le("ks_" + spec, ks, crit, "KS statistic vs critical value at alpha=0.001");
        ++idx;
    }

    // Tail classification matches the documented verdicts per family.
    const std::vector<std::pair<std::string, TailClass>> expected = {
        {"pareto:1.5,1", TailClass::heavy},  {"student_t:3", TailClass::heavy},
        {"lognormal:0,1", TailClass::heavy}, {"weibull_stretched:0.5", TailClass::heavy},
        {"normal:0,1", TailClass::light},    {"exponential:1", TailClass::light},
        {"uniform:0,1", TailClass::light},
    };
    for (const auto& [spec, want] : expected) {
        const TailClassification cls = is_heavy_tailed(*make_distribution(spec));
        rec.flag("tail_class_" + spec, cls.verdict == want,
                 cls.verdict == TailClass::heavy ? 1.0 : (cls.verdict == TailClass::light ? -1.0 : 0.0),
                 cls.detail);
    }

    // Two-fold convolution ratio: regularly varying tails approach 2, the
    // exponential grows like 1 + x.
    {
        DistPtr pareto = make_distribution("pareto:1.5,1");
        const RatioEstimate r =
            subexponential_ratio(*pareto, 1e3, RatioMethod::quadrature, 200000);
        rec.abs_le("subexp_ratio_pareto", r.ratio / 2.0 - 1.0, 0.05,
                   "convolution ratio at x=1e3 relative to the limit 2");
    }
    {
        DistPtr expo = make_distribution("exponential:1");
        const double x = 30.0;
        const RatioEstimate r = subexponential_ratio(*expo, x, RatioMethod::quadrature, 200000);
        rec.abs_le("subexp_ratio_exponential", r.ratio / (1.0 + x) - 1.0, 0.05,
                   "convolution ratio at x=30 relative to 1+x");
    }
}

void tilting_suite(Recorder& rec, std::uint64_t seed, bool break_tilt_formula) {
    (void)seed;
    // Gaussian closed forms: tilt by s shifts the mean to s with cost s^2/2.
    DistPtr gauss = make_distribution("normal:0,1");
    for (double s : {0.25, 0.5, 1.0}) {
        const ExpTilt tilt = exp_tilt(gauss, s);
        double mean = tilt.mean;
        if (break_tilt_formula) mean += 0.01;  // injected fault (negative control)
        char nbuf[64];
        std::snprintf(nbuf, sizeof(nbuf), "tilt_mean_cross_check_s=%g", s);
        rec.abs_le(nbuf, mean - s, 1e-5,
                   break_tilt_formula ? "fault injected: +0.01 added to the measured mean"
                                      : "quadrature mean of the tilted Gaussian minus s");
        std::snprintf(nbuf, sizeof(nbuf), "tilt_kl_cross_check_s=%g", s);
        rec.abs_le(nbuf, tilt.kl - 0.5 * s * s, 1e-5,
                   "KL of the tilted Gaussian minus s^2/2");
    }

    // Pareto base: the tilt normalizer diverges for any s > 0.
    bool divergent = false;
    try {
        exp_tilt(make_distribution("pareto:1.5,1"), 0.1);
    } catch (const DivergentNormalizer&) {
        divergent = true;
    }
    rec.flag("tilt_divergence_pareto", divergent, divergent ? 1.0 : 0.0,
             "positive tilt of a power-law base must be rejected");

    // Tail-upweighting: decomposition mean equals the direct quadrature mean,
    // mass above t is exact, and the two-term KL is consistent with the
    // density-ratio quadrature.
    for (const std::string& spec : {std::string("normal:0,1"), std::string("student_t:3")}) {
        TailUpweightConfig cfg;
        cfg.base = make_distribution(spec);
        cfg.c = 1.0;
        cfg.t = 10.0;
        cfg.gamma = 1.0;
        auto up = build_tail_upweighted(cfg);
        const UpweightedMeanBreakdown br = upweighted_mean_breakdown(*up);
        const double direct = upweighted_mean_quadrature(*up);
        rec.abs_le("upweight_mean_consistency_" + spec, br.mean - direct, 1e-7,
                   "decomposition mean minus direct quadrature mean");
        rec.abs_le("upweight_mass_exact_" + spec, up->tail(cfg.t) - cfg.c / cfg.t, 1e-15,
                   "mass above t minus c/t^gamma");
        const double kl = upweighted_kl(*up);
        // Independent path: E_P[log(dP/dQ)] with the piecewise-constant ratio.
        const double m = cfg.c / cfg.t;
        const double ft = cfg.base->cdf(cfg.t);
        const double kl_direct =
            (1.0 - m) * std::log((1.0 - m) / ft) + m * (std::log(m) - cfg.base->log_tail(cfg.t));
        rec.abs_le("upweight_kl_consistency_" + spec, kl - kl_direct, 1e-12,
                   "closed-form KL re-derived from cdf/log_tail directly");
    }

    // Mixture bound: exact KL stays above first order minus a small margin.
    {
        MixtureKlInput in;
        in.alpha = 0.01;
        in.log_q = -1339.7006607120717;
        in.delta_reward = 2.2377 - 0.3329;
        const MixtureKl mk = mixture_kl(in);
        rec.ge("mixture_exact_ge_first_order", mk.exact_kl - (mk.first_order_kl - 0.01), 0.0,
               "exact KL minus (first-order KL - 0.01)");
        rec.flag("mixture_first_order_regime", mk.first_order_regime,
                 mk.first_order_kl - mk.exact_kl, "deep-tail inputs are in the first-order regime");
    }

    // Regularized optimum: shrinking beta strictly increases the noise take.
    {
        DistPtr x = make_distribution("normal:0,1");
        DistPtr v = make_distribution("normal:0,1");
        double prev = -kInf;
        bool increasing = true;
        double last = 0.0;
        for (double beta : {4.0, 2.0, 1.0, 0.5}) {
            const RegularizedOptimum opt = kl_regularized_optimum(x, v, beta);
            increasing = increasing && opt.e_v > prev;
            prev = opt.e_v;
            last = opt.e_v;
        }
        rec.flag("regularized_noise_take_increasing", increasing, last,
                 "E[V] under the optimum grows as beta halves");
    }
}

void conditioning_suite(Recorder& rec, std::uint64_t seed) {
    // Heavy X absorbs the conditioning: the mean of light V stays near 0.
    {
        ConditioningProblem p;
        p.v_dist = make_distribution("normal:0,1");
        p.x_dist = make_distribution("pareto:1.5,1");
        p.t = 1e3;
        const ConditionalMeanDetail d = conditional_mean_detail(p);
        rec.abs_le("heavy_x_mean_small", d.mean, 0.01, "E[V | X+V >= 1e3], X pareto(1.5)");
        rec.abs_le("heavy_x_denominator_near_1", d.denominator - 1.0, 0.01,
                   "denominator of the centered representation");
        p.t = 10.0;
        const ConditionalMeanDetail d10 = conditional_mean_detail(p);
        const McEstimate mc = conditional_mean_mc(p, 400000, seed + 3);
        rec.abs_le("heavy_x_quadrature_vs_mc", d10.mean - mc.mean,
                   4.0 * mc.standard_error + 1e-9,
                   "quadrature vs Monte Carlo at t=10 within 4 standard errors");
    }

    // Light X hands the conditioning to V: the mean tracks t.
    {
        ConditioningProblem p;
        p.v_dist = make_distribution("exponential:1");
        p.x_dist = make_distribution("normal:0,1");
        p.t = 12.0;
        const double m = conditional_mean(p);
        rec.ge("light_x_mean_tracks_t", m, p.t - 3.0, "E[V | X+V >= t] for light X stays near t");
        const LightTailRatioTable tbl = light_tail_ratio_diagnostic(
            *p.v_dist, *p.x_dist, 1.0, std::vector<double>{8.0, 12.0, 16.0});
        bool ok = tbl.ratio_decreasing;
        for (const auto& row : tbl.rows) ok = ok && row.within_bound;
        rec.flag("light_tail_ratio_bound", ok,
                 tbl.rows.empty() ? 0.0 : tbl.rows.back().ratio,
                 "escape-probability ratio decreasing and within its analytic bound");
    }

    // Region decomposition: masses form a distribution and the pieces
    // reproduce the plain conditional mean.
    {
        ConditioningProblem p;
        p.v_dist = make_distribution("normal:0,1");
        p.x_dist = make_distribution("pareto:1.5,1");
        p.t = 1e3;
        const RegionTable tbl = region_decomposition(p, RegionScheme{});
        double mass = 0.0;
        for (const auto& r : tbl.regions) mass += r.conditional_mass;
        rec.abs_le("region_mass_total", mass - 1.0, 1e-6,
                   "sum of conditional region masses minus 1");
        rec.abs_le("region_mean_consistency", tbl.conditional_mean - conditional_mean(p), 1e-9,
                   "region-table mean minus direct mean");
        rec.abs_le("region_denominator_near_1", tbl.denominator - 1.0, 0.01,
                   "denominator at t=1e3");
    }

    // Dependent construction: quadrature matches brute-force conditioning.
    {
        const double t = 2.0;
        const double quad_mean = conditional_mean_dependent_counterexample(t);
        ConditioningProblem p;
        p.v_dist = make_distribution("normal:0,1");
        p.x_dist = make_distribution("normal:0,2");
        p.t = t;
        p.dependence = Dependence::vshaped_counterexample;
        const McEstimate mc = conditional_mean_mc(p, 2000000, seed + 11);
        rec.abs_le("dependent_quadrature_vs_mc", quad_mean - mc.mean,
                   4.0 * mc.standard_error, "closed-form quadrature vs Monte Carlo at t=2");
    }
}

void mdp_suite(Recorder& rec, std::uint64_t seed) {
    // Exact enumeration on a small token chain.
    const Dmrmdp chain = token_chain(2, 3, [](std::size_t i) -> DistPtr {
        return std::make_shared<Discrete>(std::vector<Atom>{
            {static_cast<double>(i), 0.5}, {static_cast<double>(i) + 4.0, 0.5}});
    });
    const Policy pi = random_policy(chain, seed + 1);
    const TrajectoryDist base = enumerate_trajectories(chain, pi);
    rec.flag("enumeration_count", base.trajectories.size() == 8,
             static_cast<double>(base.trajectories.size()),
             "2-letter depth-3 chain enumerates 2^3 trajectories");
    rec.abs_le("enumeration_mass", base.total_mass() - 1.0, 1e-12,
               "trajectory probabilities sum to 1");

    // Reward-measurable reweighting lifts exactly back to a Markov policy.
    const TrajectoryDist up = upweight_trajectories(chain, base, 0.5, 4.5, 1.0);
    const Policy lifted = lift_policy(chain, up);
    const TrajectoryDist relifted = enumerate_trajectories(chain, lifted);
    rec.le("lift_total_variation", total_variation(up, relifted), 1e-10,
           "TV between the reweighted law and its lifted-policy law");

    const KlDecomposition dec = kl_decomposition(chain, up, base);
    rec.abs_le("kl_chain_rule", dec.trajectory - (dec.pushforward + dec.conditional), 1e-10,
               "trajectory KL minus (pushforward + conditional)");
    rec.le("kl_conditional_zero", std::abs(dec.conditional), 1e-10,
           "conditional term vanishes for return-measurable reweighting");

    const PerStateKl ps = per_state_policy_kl(chain, relifted, lifted, pi);
    rec.abs_le("per_state_sum_form", ps.sum_form - trajectory_kl(relifted, base), 1e-10,
               "per-state sum form equals the trajectory KL of the lifted law");

    // JSON round trip preserves the enumerated law exactly.
    const Dmrmdp back = mdp_from_json(to_json(chain));
    const TrajectoryDist base2 = enumerate_trajectories(back, pi);
    rec.le("json_round_trip", total_variation(base, base2), 0.0,
           "TV between enumerations before and after JSON round trip");
}

void diagnostics_suite(Recorder& rec, std::uint64_t seed) {
    // Hill on an exact Pareto(2) quantile grid recovers 1/shape.
    {
        DistPtr pareto2 = make_distribution("pareto:2,1");
        const std::size_t n = 10000;
        SampleSet s;
        s.source = "pareto:2 quantile grid";
        s.values.reserve(n);
        for (std::size_t i = 1; i <= n; ++i) {
            s.values.push_back(
                pareto2->quantile((static_cast<double>(i) - 0.5) / static_cast<double>(n)));
        }
        const std::vector<HillPoint> hill = hill_estimator(s, {1000});
        rec.abs_le("hill_exact_grid", hill[0].estimate - 0.5, 0.016,
                   "Hill at k=1000 on the exact quantile grid minus 1/shape");
    }

    // Verdicts on sampled data.
    {
        Rng rng(seed + 5);
        DistPtr heavy = make_distribution("pareto:1.5,1");
        SampleSet hs{heavy->sample(rng, 20000), "pareto:1.5 sample", seed + 5};
        const TailReport hr = tail_verdict(hs);
        rec.flag("verdict_pareto_heavy", hr.verdict == Verdict::consistent_with_heavy,
                 hr.hill_curve.back().estimate, hr.rule_trace.back());

        DistPtr light = make_distribution("normal:0,1");
        SampleSet ls{light->sample(rng, 20000), "normal sample", seed + 5};
        const TailReport lr = tail_verdict(ls);
        rec.flag("verdict_normal_light", lr.verdict == Verdict::consistent_with_light,
                 lr.hill_curve.back().estimate, lr.rule_trace.back());

        // Scale invariance: doubling the sample leaves the Hill curve and the
        // verdict untouched.
        SampleSet scaled = hs;
        for (double& v : scaled.values) v *= 2.0;
        const TailReport sr = tail_verdict(scaled);
        double worst = 0.0;
        for (std::size_t i = 0; i < sr.hill_curve.size(); ++i) {
            worst = std::max(worst,
                             std::abs(sr.hill_curve[i].estimate - hr.hill_curve[i].estimate));
        }
        rec.abs_le("hill_scale_invariance", worst, 1e-12,
                   "max Hill shift under x -> 2x");
        rec.flag("verdict_scale_invariance", sr.verdict == hr.verdict,
                 sr.verdict == hr.verdict ? 1.0 : 0.0, "verdict unchanged under x -> 2x");
    }
}

}  // namespace

bool VerifyReport::all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

std::size_t VerifyReport::failures() const {
    return static_cast<std::size_t>(
        std::count_if(checks.begin(), checks.end(), [](const Check& c) { return !c.pass; }));
}

const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names = {"distributions", "tilting", "conditioning",
                                                   "mdp", "diagnostics"};
    return names;
}

VerifyReport run_verify(const VerifyOptions& opt) {
    for (const auto& name : opt.only) {
        if (std::find(suite_names().begin(), suite_names().end(), name) == suite_names().end()) {
            throw InvalidParameter("only", "unknown suite: " + name);
        }
    }
    auto selected = [&](const char* name) {
        return opt.only.empty() ||
               std::find(opt.only.begin(), opt.only.end(), name) != opt.only.end();
    };
    VerifyReport report;
    if (selected("distributions")) {
        Recorder rec(report.checks, "distributions");
        distributions_suite(rec, opt.seed);
    }
    if (selected("tilting")) {
        Recorder rec(report.checks, "tilting");
        tilting_suite(rec, opt.seed, opt.break_tilt_formula);
    }
    if (selected("conditioning")) {
        Recorder rec(report.checks, "conditioning");
        conditioning_suite(rec, opt.seed);
    }
    if (selected("mdp")) {
        Recorder rec(report.checks, "mdp");
        mdp_suite(rec, opt.seed);
    }
    if (selected("diagnostics")) {
        Recorder rec(report.checks, "diagnostics");
        diagnostics_suite(rec, opt.seed);
    }
    return report;
}

}  // namespace heavytails::verify
