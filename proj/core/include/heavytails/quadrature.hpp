#pragma once

#include <functional>

namespace heavytails::quad {

struct Options {
    double rel_tol = 1e-9;
    double abs_tol = 0.0;       // absolute floor; 0 means purely relative
    int max_panels = 4000;
    int initial_panels = 8;
};

struct Result {
    double value = 0.0;
    double error = 0.0;         // error estimate, same units as value
    int evaluations = 0;
    bool converged = false;
};

/// Log-space result for nonnegative integrands: integral = e^{log_value}.
struct LogResult {
    double log_value;
    double log_error;
    int evaluations = 0;
    bool converged = false;
};

using Fn = std::function<double(double)>;

/// Globally adaptive Gauss-Kronrod 7/15 on a finite interval.
Result integrate(const Fn& f, double a, double b, const Options& opt = {});

/// (a, +inf) and (-inf, b) via the rational map u -> a + u/(1-u).
Result integrate_semi_inf_upper(const Fn& f, double a, const Options& opt = {});
Result integrate_semi_inf_lower(const Fn& f, double b, const Options& opt = {});

/// Whole line, split at `center` (put it near the integrand's mass).
Result integrate_line(const Fn& f, double center, const Options& opt = {});

/// Same integration schemes for a nonnegative integrand supplied in log
/// space: f_log(x) = log f(x), -inf where f vanishes. Panel sums use
/// max-shifted exponentials, so integrals like e^{-500000} are exact in
/// log space even though they underflow linearly.
LogResult log_integrate(const Fn& f_log, double a, double b, const Options& opt = {});
LogResult log_integrate_semi_inf_upper(const Fn& f_log, double a, const Options& opt = {});
LogResult log_integrate_semi_inf_lower(const Fn& f_log, double b, const Options& opt = {});
LogResult log_integrate_line(const Fn& f_log, double center, const Options& opt = {});

/// Throwing wrappers: QuadratureFailure when the panel budget is exhausted
/// above tolerance.
double integrate_or_throw(const Fn& f, double a, double b, const Options& opt = {});

}
