#pragma once

#include <cmath>
#include <limits>

namespace heavytails {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// log(e^a + e^b), safe for -inf operands.
inline double log_sum_exp(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    double hi = a > b ? a : b;
    double lo = a > b ? b : a;
    return hi + std::log1p(std::exp(lo - hi));
}

/// log(e^a - e^b) for a >= b. Returns -inf when a == b.
inline double log_diff_exp(double a, double b) {
    if (b == kNegInf) return a;
    if (a == b) return kNegInf;
    return a + std::log1p(-std::exp(b - a));
}

/// log|e^x - 1|, accurate across the whole line.
///
/// x >= 37: e^x - 1 == e^x to double precision, return x.
/// small |x|: e^x - 1 ~ x (1 + x/2), avoids log(expm1) underflowing through 0.
inline double log_abs_expm1(double x) {
    if (x >= 37.0) return x;
    double ax = std::fabs(x);
    if (ax < 1e-12) {
        if (ax == 0.0) return kNegInf;
        return std::log(ax) + x / 2;
    }
    if (x > 0) return std::log(std::expm1(x));
    return std::log1p(-std::exp(x));  // |e^x - 1| = 1 - e^x
}

/// Signed value carried in log space: value = sign * e^{lg}.
/// sign is -1, 0 or +1; lg is -inf when sign is 0.
struct SLog {
    double lg = kNegInf;
    int sign = 0;

    static SLog zero() { return {}; }

    static SLog from_value(double v) {
        if (v == 0.0) return {};
        return {std::log(std::fabs(v)), v > 0 ? 1 : -1};
    }

    static SLog from_log(double lg, int sign = 1) {
        if (lg == kNegInf || sign == 0) return {};
        return {lg, sign};
    }

    double value() const { return sign == 0 ? 0.0 : sign * std::exp(lg); }

    SLog operator+(const SLog& o) const {
        if (sign == 0) return o;
        if (o.sign == 0) return *this;
        if (sign == o.sign) return {log_sum_exp(lg, o.lg), sign};
        if (lg == o.lg) return {};
        if (lg > o.lg) return {log_diff_exp(lg, o.lg), sign};
        return {log_diff_exp(o.lg, lg), o.sign};
    }

    SLog operator-(const SLog& o) const { return *this + SLog{o.lg, -o.sign}; }

    SLog operator*(const SLog& o) const {
        if (sign == 0 || o.sign == 0) return {};
        return {lg + o.lg, sign * o.sign};
    }

    SLog operator/(const SLog& o) const {
        if (sign == 0) return {};
        return {lg - o.lg, sign * o.sign};
    }
};

}
