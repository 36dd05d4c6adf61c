#include "heavytails/tail_classify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "heavytails/errors.hpp"
#include "heavytails/log_space.hpp"
#include "heavytails/quadrature.hpp"
#include "heavytails/rng.hpp"

namespace heavytails {

namespace {

enum class RateVerdict { up, down, undecided };

struct RateResult {
    RateVerdict verdict = RateVerdict::undecided;
    std::string note;
};

// Probe a single rate along a geometric x grid. The normalized hazard
// H(x) = -log_tail(x)/x separates the regimes robustly: heavy tails drive H
// to 0 (so rate*x + log_tail eventually climbs at any rate), light tails keep
// H above every sufficiently small rate. Watching H rather than the raw probe
// value avoids misreading the deep transient dip that heavy tails with slow
// onset (e.g. narrow lognormals) show before the rate term takes over.
RateResult probe_rate(const Distribution& d, double rate, double x0,
                      std::vector<TailProbe>& evidence) {
    constexpr int kMaxProbes = 200;
    constexpr int kLevelRunNeeded = 5;

    double x = x0;
    double h_prev = kInf;
    int level_run = 0;
    RateResult res;
    char buf[160];

    for (int k = 0; k < kMaxProbes && std::isfinite(x); ++k, x *= 2.0) {
        const double lt = d.log_tail(x);
        if (lt == kNegInf) {
            std::snprintf(buf, sizeof buf, "rate %g: tail vanishes at x=%g", rate, x);
            res.verdict = RateVerdict::down;
            res.note = buf;
            return res;
        }
        const double h = -lt / x;
        const double s = rate * x + lt;
        evidence.push_back({rate, x, s});

        if (h < 0.95 * rate && h < h_prev) {
            std::snprintf(buf, sizeof buf,
                          "rate %g: hazard average fell below the rate at x=%g (probe %g)",
                          rate, x, s);
            res.verdict = RateVerdict::up;
            res.note = buf;
            return res;
        }
        if (s > 25.0 && h < rate) {
            std::snprintf(buf, sizeof buf, "rate %g: probe exceeded +25 at x=%g", rate, x);
            res.verdict = RateVerdict::up;
            res.note = buf;
            return res;
        }
        if (h >= 1.05 * rate) {
            level_run = (h >= 0.999 * h_prev || h_prev == kInf) ? level_run + 1 : 0;
            if (level_run >= kLevelRunNeeded && s < -20.0) {
                std::snprintf(buf, sizeof buf,
                              "rate %g: hazard average held above the rate through x=%g "
                              "(probe %g)",
                              rate, x, s);
                res.verdict = RateVerdict::down;
                res.note = buf;
                return res;
            }
        } else {
            level_run = 0;
        }
        h_prev = h;
    }
    std::snprintf(buf, sizeof buf, "rate %g: undecided after %d probes", rate, kMaxProbes);
    res.note = buf;
    return res;
}

}  // namespace

TailClassification is_heavy_tailed(const Distribution& d) {
    const Support sup = d.support();
    TailClassification out;
    if (std::isfinite(sup.hi)) {
        out.verdict = TailClass::light;
        char buf[96];
        std::snprintf(buf, sizeof buf, "bounded support (upper end %g): light", sup.hi);
        out.detail = buf;
        return out;
    }

    double x0 = d.quantile(0.9);
    if (!(x0 > 0.0) || !std::isfinite(x0)) x0 = 1e-6;

    const double rates[] = {0.01, 0.1, 1.0};
    int ups = 0;
    bool any_down = false;
    std::string detail;
    for (double r : rates) {
        RateResult rr = probe_rate(d, r, x0, out.evidence);
        if (!detail.empty()) detail += "; ";
        detail += rr.note;
        if (rr.verdict == RateVerdict::up) ++ups;
        if (rr.verdict == RateVerdict::down) {
            any_down = true;
            break;  // one collapsing rate already settles it
        }
    }
    out.detail = detail;
    if (any_down)
        out.verdict = TailClass::light;
    else if (ups == 3)
        out.verdict = TailClass::heavy;
    else
        out.verdict = TailClass::inconclusive;
    return out;
}

TailClassification is_heavy_tailed(const Distribution& d,
                                   const std::vector<TailProbe>& probe_grid) {
    if (probe_grid.empty()) throw InvalidParameter("probe_grid", "must be non-empty");
    std::map<double, std::vector<TailProbe>> by_rate;
    for (const TailProbe& p : probe_grid) {
        if (!(p.rate > 0.0)) throw InvalidParameter("probe_grid", "rates must be positive");
        if (!std::isfinite(p.x)) throw InvalidParameter("probe_grid", "x must be finite");
        by_rate[p.rate].push_back(p);
    }

    TailClassification out;
    bool all_up = true;
    bool any_down = false;
    std::string detail;
    char buf[160];
    for (auto& [rate, probes] : by_rate) {
        std::sort(probes.begin(), probes.end(),
                  [](const TailProbe& a, const TailProbe& b) { return a.x < b.x; });
        std::vector<double> s;
        s.reserve(probes.size());
        for (TailProbe& p : probes) {
            p.value = rate * p.x + d.log_tail(p.x);
            out.evidence.push_back(p);
            s.push_back(p.value);
        }
        const std::size_t n = s.size();
        const std::size_t tail_len = std::max<std::size_t>(2, n / 3);
        const std::size_t start = n >= tail_len ? n - tail_len : 0;
        bool rising = n >= 2, falling = n >= 2;
        for (std::size_t i = start + 1; i < n; ++i) {
            if (!(s[i] > s[i - 1])) rising = false;
            if (!(s[i] < s[i - 1]) && !(s[i] == kNegInf && s[i - 1] == kNegInf))
                falling = false;
        }
        const bool up = rising && s.back() > 10.0;
        const bool down = falling && (s.back() < -10.0 || s.back() == kNegInf);
        std::snprintf(buf, sizeof buf, "rate %g: final probe %g, %s", rate, s.back(),
                      up ? "rising" : (down ? "falling" : "undecided"));
        if (!detail.empty()) detail += "; ";
        detail += buf;
        if (!up) all_up = false;
        if (down) any_down = true;
    }
    out.detail = detail;
    if (any_down)
        out.verdict = TailClass::light;
    else if (all_up)
        out.verdict = TailClass::heavy;
    else
        out.verdict = TailClass::inconclusive;
    return out;
}

RatioEstimate subexponential_ratio(const Distribution& d, double x, RatioMethod method,
                                   long budget, double error_cap, std::uint64_t seed) {
    if (!(x > 0.0) || !std::isfinite(x))
        throw InvalidParameter("x", "must be positive and finite");
    if (budget <= 0) throw InvalidParameter("budget", "must be positive");
    const Support sup = d.support();
    if (sup.lo < 0.0)
        throw InvalidParameter("d", "needs non-negative support for the convolution ratio");

    const double log_tail_x = d.log_tail(x);
    if (log_tail_x == kNegInf)
        throw InvalidParameter("x", "lies beyond the support of d");
    const double tail_x = std::exp(log_tail_x);

    if (method == RatioMethod::monte_carlo) {
        Rng rng(seed);
        long hits = 0;
        for (long i = 0; i < budget; ++i) {
            const double a = d.sample(rng);
            const double b = d.sample(rng);
            if (a + b > x) ++hits;
        }
        const double phat = static_cast<double>(hits) / static_cast<double>(budget);
        const double se =
            std::sqrt(std::max(phat * (1.0 - phat), 0.0) / static_cast<double>(budget));
        RatioEstimate est{phat / tail_x, se / tail_x, budget};
        if (!(est.error <= error_cap))
            throw BudgetExhausted("convolution-ratio Monte Carlo error " +
                                  std::to_string(est.error) + " exceeds cap " +
                                  std::to_string(error_cap));
        return est;
    }

    if (!d.has_density())
        throw InvalidParameter("d",
                               "quadrature convolution needs a density; use monte_carlo");

    // Symmetric split of P(X1 + X2 > x) for iid continuous X:
    //   2 * Int_0^{F(x/2)} tail(x - Q(p)) dp + tail(x/2)^2,
    // integrating in probability space so the measure handles any density shape.
    const double half = x / 2.0;
    const double f_half = d.cdf(half);
    const double tail_half = d.tail(half);
    quad::Options opt;
    opt.rel_tol = 1e-10;
    opt.abs_tol = tail_x * 1e-13;
    opt.max_panels = std::max<long>(1, budget / 15);
    quad::Result r = quad::integrate(
        [&](double p) { return d.tail(x - d.quantile(p)); }, 0.0, f_half, opt);
    const double prob = 2.0 * r.value + tail_half * tail_half;
    RatioEstimate est{prob / tail_x, r.error / tail_x, r.evaluations};
    if (!(est.error <= error_cap))
        throw BudgetExhausted("convolution-ratio quadrature error " +
                              std::to_string(est.error) + " exceeds cap " +
                              std::to_string(error_cap));
    return est;
}

DominanceTable tail_dominance_exponent(const Distribution& v, const Distribution& x,
                                       double p, const std::vector<double>& t_grid) {
    if (t_grid.empty()) throw InvalidParameter("t_grid", "must be non-empty");
    if (!(p >= 0.0)) throw InvalidParameter("p", "must be non-negative");
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        if (!(t_grid[i] > 0.0) || !std::isfinite(t_grid[i]))
            throw InvalidParameter("t_grid", "entries must be positive and finite");
        if (i > 0 && !(t_grid[i] > t_grid[i - 1]))
            throw InvalidParameter("t_grid", "entries must be strictly increasing");
    }

    DominanceTable table;
    table.p = p;
    table.rows.reserve(t_grid.size());
    for (double t : t_grid) {
        const double lx = x.log_tail(t);
        if (lx == kNegInf)
            throw InvalidParameter("t_grid", "reference tail vanishes inside the grid");
        const double lr = p * std::log(t) + v.log_tail(t) - lx;
        table.rows.push_back({t, lr, std::exp(lr)});
    }

    bool strictly_down = true;
    for (std::size_t i = 1; i < table.rows.size(); ++i) {
        const double a = table.rows[i - 1].log_ratio;
        const double b = table.rows[i].log_ratio;
        if (a == kNegInf && b == kNegInf) continue;  // both already at zero
        if (!(b < a)) strictly_down = false;
    }
    table.decreasing_to_zero =
        strictly_down && table.rows.size() >= 2 &&
        table.rows.back().log_ratio < std::log(1e-3);
    return table;
}

}
