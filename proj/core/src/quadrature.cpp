#include "heavytails/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <vector>

#include "heavytails/errors.hpp"
#include "heavytails/log_space.hpp"

namespace heavytails::quad {

namespace {

// 15-point Kronrod extension of 7-point Gauss (QUADPACK dqk15 constants).
constexpr double kXgk[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};
constexpr double kWgk[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};
constexpr double kWg[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

struct Panel {
    double a, b;
    double value, error;
    bool operator<(const Panel& o) const { return error < o.error; }
};

struct LogPanel {
    double a, b;
    double log_value, log_error;
    bool operator<(const LogPanel& o) const { return log_error < o.log_error; }
};

double safe_eval(const Fn& f, double x) {
    double v = f(x);
    return std::isnan(v) ? 0.0 : v;
}

Panel gk15(const Fn& f, double a, double b, int& evals) {
    double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double fc = safe_eval(f, c);
    double resk = kWgk[7] * fc;
    double resg = kWg[3] * fc;
    for (int j = 0; j < 7; ++j) {
        double x = h * kXgk[j];
        double f1 = safe_eval(f, c - x);
        double f2 = safe_eval(f, c + x);
        resk += kWgk[j] * (f1 + f2);
        if (j % 2 == 1) resg += kWg[j / 2] * (f1 + f2);
    }
    evals += 15;
    return {a, b, resk * h, std::fabs((resk - resg) * h)};
}

LogPanel log_gk15(const Fn& f_log, double a, double b, int& evals) {
    double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double g[15];
    double w[15];
    auto eval = [&](double x) {
        double v = f_log(x);
        return std::isnan(v) ? kNegInf : v;
    };
    g[0] = eval(c);
    w[0] = kWgk[7];
    int n = 1;
    double m = g[0];
    for (int j = 0; j < 7; ++j) {
        double x = h * kXgk[j];
        g[n] = eval(c - x);
        w[n] = kWgk[j];
        ++n;
        g[n] = eval(c + x);
        w[n] = kWgk[j];
        ++n;
        m = std::max(m, std::max(g[n - 2], g[n - 1]));
    }
    evals += 15;
    if (!std::isfinite(m))  // integrand vanishes (or is invalid) on the panel
        return {a, b, kNegInf, kNegInf};
    double sk = 0.0, sg = 0.0;
    // Gauss subset: node 0 (center, weight kWg[3]) and pairs j = 1, 3, 5.
    for (int i = 0; i < 15; ++i) {
        double e = std::isfinite(g[i]) ? std::exp(g[i] - m) : 0.0;
        sk += w[i] * e;
        int j = (i - 1) / 2;  // pair index for i >= 1
        if (i == 0)
            sg += kWg[3] * e;
        else if (j % 2 == 1)
            sg += kWg[j / 2] * e;
    }
    double lv = sk > 0 ? m + std::log(sk) + std::log(h) : kNegInf;
    double diff = std::fabs(sk - sg);
    double le = diff > 0 ? m + std::log(diff) + std::log(h) : kNegInf;
    return {a, b, lv, le};
}

Fn map_upper(const Fn& f, double a, bool log_space) {
    return [f, a, log_space](double u) {
        double om = 1.0 - u;
        double x = a + u / om;
        if (!std::isfinite(x)) return log_space ? kNegInf : 0.0;
        double fx = f(x);
        if (log_space) return fx - 2.0 * std::log(om);
        return fx / (om * om);
    };
}

Fn map_lower(const Fn& f, double b, bool log_space) {
    return [f, b, log_space](double u) {
        double om = 1.0 - u;
        double x = b - u / om;
        if (!std::isfinite(x)) return log_space ? kNegInf : 0.0;
        double fx = f(x);
        if (log_space) return fx - 2.0 * std::log(om);
        return fx / (om * om);
    };
}

}  // namespace

Result integrate(const Fn& f, double a, double b, const Options& opt) {
    Result res;
    if (a == b) {
        res.converged = true;
        return res;
    }
    std::priority_queue<Panel> heap;
    double value = 0.0, error = 0.0;
    int n0 = std::max(1, opt.initial_panels);
    for (int i = 0; i < n0; ++i) {
        double pa = a + (b - a) * i / n0;
        double pb = a + (b - a) * (i + 1) / n0;
        Panel p = gk15(f, pa, pb, res.evaluations);
        value += p.value;
        error += p.error;
        heap.push(p);
    }
    int panels = n0;
    double width_floor = 1e-15 * (std::fabs(a) + std::fabs(b) + 1.0);
    while (panels < opt.max_panels) {
        double tol = std::max(opt.abs_tol, opt.rel_tol * std::fabs(value));
        if (error <= tol) break;
        Panel worst = heap.top();
        if (worst.b - worst.a < width_floor) break;  // cannot refine further
        heap.pop();
        value -= worst.value;
        error -= worst.error;
        double mid = 0.5 * (worst.a + worst.b);
        Panel l = gk15(f, worst.a, mid, res.evaluations);
        Panel r = gk15(f, mid, worst.b, res.evaluations);
        value += l.value + r.value;
        error += l.error + r.error;
        heap.push(l);
        heap.push(r);
        ++panels;
    }
    res.value = value;
    res.error = std::fabs(error);
    res.converged = res.error <= std::max(opt.abs_tol, opt.rel_tol * std::fabs(value));
    return res;
}

Result integrate_semi_inf_upper(const Fn& f, double a, const Options& opt) {
    return integrate(map_upper(f, a, false), 0.0, 1.0, opt);
}

Result integrate_semi_inf_lower(const Fn& f, double b, const Options& opt) {
    return integrate(map_lower(f, b, false), 0.0, 1.0, opt);
}

Result integrate_line(const Fn& f, double center, const Options& opt) {
    Result lo = integrate_semi_inf_lower(f, center, opt);
    Result hi = integrate_semi_inf_upper(f, center, opt);
    Result res;
    res.value = lo.value + hi.value;
    res.error = lo.error + hi.error;
    res.evaluations = lo.evaluations + hi.evaluations;
    res.converged = lo.converged && hi.converged;
    return res;
}

LogResult log_integrate(const Fn& f_log, double a, double b, const Options& opt) {
    LogResult res{kNegInf, kNegInf, 0, true};
    if (a == b) return res;
    std::vector<LogPanel> heap;
    int n0 = std::max(1, opt.initial_panels);
    for (int i = 0; i < n0; ++i) {
        double pa = a + (b - a) * i / n0;
        double pb = a + (b - a) * (i + 1) / n0;
        heap.push_back(log_gk15(f_log, pa, pb, res.evaluations));
    }
    std::make_heap(heap.begin(), heap.end());
    // Incremental subtraction is unstable in log space, so totals are
    // recomputed by linear scan; refinement loops are short in practice.
    auto totals = [&](double& lv, double& le) {
        lv = kNegInf;
        le = kNegInf;
        for (const LogPanel& p : heap) {
            lv = log_sum_exp(lv, p.log_value);
            le = log_sum_exp(le, p.log_error);
        }
    };
    double lv, le;
    totals(lv, le);
    double log_rel = std::log(opt.rel_tol);
    double width_floor = 1e-15 * (std::fabs(a) + std::fabs(b) + 1.0);
    while (static_cast<int>(heap.size()) < opt.max_panels) {
        if (le == kNegInf || le <= lv + log_rel) break;
        std::pop_heap(heap.begin(), heap.end());
        LogPanel worst = heap.back();
        if (worst.b - worst.a < width_floor) {
            std::push_heap(heap.begin(), heap.end());
            break;
        }
        heap.pop_back();
        double mid = 0.5 * (worst.a + worst.b);
        heap.push_back(log_gk15(f_log, worst.a, mid, res.evaluations));
        std::push_heap(heap.begin(), heap.end());
        heap.push_back(log_gk15(f_log, mid, worst.b, res.evaluations));
        std::push_heap(heap.begin(), heap.end());
        totals(lv, le);
    }
    res.log_value = lv;
    res.log_error = le;
    res.converged = le == kNegInf || le <= lv + log_rel;
    return res;
}

LogResult log_integrate_semi_inf_upper(const Fn& f_log, double a, const Options& opt) {
    return log_integrate(map_upper(f_log, a, true), 0.0, 1.0, opt);
}

LogResult log_integrate_semi_inf_lower(const Fn& f_log, double b, const Options& opt) {
    return log_integrate(map_lower(f_log, b, true), 0.0, 1.0, opt);
}

LogResult log_integrate_line(const Fn& f_log, double center, const Options& opt) {
    LogResult lo = log_integrate_semi_inf_lower(f_log, center, opt);
    LogResult hi = log_integrate_semi_inf_upper(f_log, center, opt);
    LogResult res{log_sum_exp(lo.log_value, hi.log_value),
                  log_sum_exp(lo.log_error, hi.log_error),
                  lo.evaluations + hi.evaluations, lo.converged && hi.converged};
    return res;
}

double integrate_or_throw(const Fn& f, double a, double b, const Options& opt) {
    Result r = integrate(f, a, b, opt);
    if (!r.converged) throw QuadratureFailure("adaptive quadrature did not converge", r.error);
    return r.value;
}

}
