#include "heavytails/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "heavytails/errors.hpp"
#include "heavytails/log_space.hpp"
#include "heavytails/special.hpp"

namespace heavytails {

using special::norm_quantile;

namespace {

std::vector<double> sorted_ascending(const SampleSet& s) {
    if (s.values.size() < 2) {
        throw InvalidParameter("samples", "need at least 2 samples, got " +
                                              std::to_string(s.values.size()));
    }
    std::vector<double> x = s.values;
    std::sort(x.begin(), x.end());
    return x;
}

double sample_median(const std::vector<double>& ascending) {
    const std::size_t n = ascending.size();
    if (n % 2 == 1) return ascending[n / 2];
    return 0.5 * (ascending[n / 2 - 1] + ascending[n / 2]);
}

std::vector<HillPoint> hill_on_sorted(const std::vector<double>& ascending,
                                      const std::vector<int>& k_grid) {
    const std::size_t n = ascending.size();
    if (k_grid.empty()) throw InvalidParameter("k_grid", "must be non-empty");
    std::vector<HillPoint> out;
    out.reserve(k_grid.size());
    // Cumulative sums of log(x) over the largest order statistics let every k
    // be answered in O(1) after one pass.
    int k_max = 0;
    for (int k : k_grid) {
        if (k < 2) throw InvalidParameter("k_grid", "k must be >= 2, got " + std::to_string(k));
        if (static_cast<std::size_t>(k) >= n) {
            throw InvalidParameter("k_grid", "k must be < n = " + std::to_string(n) +
                                                 ", got " + std::to_string(k));
        }
        k_max = std::max(k_max, k);
    }
    const double anchor_min = ascending[n - 1 - static_cast<std::size_t>(k_max)];
    if (!(anchor_min > 0.0)) {
        throw InsufficientPositiveTail(
            "order statistic x_(n-k) = " + std::to_string(anchor_min) +
            " is not positive for k = " + std::to_string(k_max) +
            "; shift the sample or reduce k");
    }
    std::vector<double> cum_log(static_cast<std::size_t>(k_max) + 1, 0.0);
    for (int i = 1; i <= k_max; ++i) {
        cum_log[static_cast<std::size_t>(i)] =
            cum_log[static_cast<std::size_t>(i) - 1] + std::log(ascending[n - static_cast<std::size_t>(i)]);
    }
    for (int k : k_grid) {
        const double anchor = ascending[n - 1 - static_cast<std::size_t>(k)];
        const double est = cum_log[static_cast<std::size_t>(k)] / k - std::log(anchor);
        out.push_back(HillPoint{k, est, est / std::sqrt(static_cast<double>(k))});
    }
    return out;
}

struct QuadFit {
    double a, b, c;  // y = a + b x + c x^2
};

// Least-squares parabola through the points; 3x3 normal equations by Cramer.
QuadFit fit_quadratic(const std::vector<std::pair<double, double>>& pts) {
    double s0 = 0, s1 = 0, s2 = 0, s3 = 0, s4 = 0;
    double t0 = 0, t1 = 0, t2 = 0;
    for (const auto& [x, y] : pts) {
        const double x2 = x * x;
        s0 += 1;
        s1 += x;
        s2 += x2;
        s3 += x2 * x;
        s4 += x2 * x2;
        t0 += y;
        t1 += x * y;
        t2 += x2 * y;
    }
    auto det3 = [](double a11, double a12, double a13, double a21, double a22, double a23,
                   double a31, double a32, double a33) {
        return a11 * (a22 * a33 - a23 * a32) - a12 * (a21 * a33 - a23 * a31) +
               a13 * (a21 * a32 - a22 * a31);
    };
    const double d = det3(s0, s1, s2, s1, s2, s3, s2, s3, s4);
    if (d == 0.0 || !std::isfinite(d)) return {0.0, 0.0, 0.0};
    const double da = det3(t0, s1, s2, t1, s2, s3, t2, s3, s4);
    const double db = det3(s0, t0, s2, s1, t1, s3, s2, t2, s4);
    const double dc = det3(s0, s1, t0, s1, s2, t1, s2, s3, t2);
    return {da / d, db / d, dc / d};
}

double squared_correlation(const std::vector<std::pair<double, double>>& pts) {
    double mx = 0, my = 0;
    for (const auto& [x, y] : pts) {
        mx += x;
        my += y;
    }
    mx /= static_cast<double>(pts.size());
    my /= static_cast<double>(pts.size());
    double sxy = 0, sxx = 0, syy = 0;
    for (const auto& [x, y] : pts) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if (sxx <= 0.0 || syy <= 0.0) return 0.0;
    return (sxy * sxy) / (sxx * syy);
}

QqPlot finish_plot(PlotKind kind, std::vector<std::pair<double, double>> pts) {
    QqPlot plot;
    plot.kind = kind;
    plot.linearity = squared_correlation(pts);
    const QuadFit fit = fit_quadratic(pts);
    plot.curvature = fit.c;
    // A tolerance proportional to the fitted slope keeps the sign stable under
    // positive rescaling of the data.
    const double tol = 1e-9 * std::max(1.0, std::abs(fit.b));
    plot.curvature_sign = fit.c > tol ? 1 : (fit.c < -tol ? -1 : 0);
    plot.points = std::move(pts);
    return plot;
}

}  // namespace

std::vector<int> default_k_grid(std::size_t n) {
    if (n < 30) {
        throw InvalidParameter("samples",
                               "need at least 30 samples for the default k grid, got " +
                                   std::to_string(n));
    }
    const double lo = 10.0;
    const double hi = static_cast<double>(n) / 10.0;
    std::vector<int> grid;
    for (int i = 0; i < 20; ++i) {
        const double f = static_cast<double>(i) / 19.0;
        const int k = static_cast<int>(std::lround(lo * std::pow(hi / lo, f)));
        if (grid.empty() || k > grid.back()) grid.push_back(std::max(k, 2));
    }
    return grid;
}

std::vector<HillPoint> hill_estimator(const SampleSet& s, const std::vector<int>& k_grid) {
    return hill_on_sorted(sorted_ascending(s), k_grid);
}

QqPlot probability_plot(const SampleSet& s, PlotKind kind) {
    const std::vector<double> x = sorted_ascending(s);
    const std::size_t n = x.size();
    if (n < 20) {
        throw InvalidParameter("samples", "need at least 20 samples for a probability plot, got " +
                                              std::to_string(n));
    }
    std::vector<std::pair<double, double>> pts;
    if (kind == PlotKind::normal) {
        pts.reserve(n);
        for (std::size_t i = 1; i <= n; ++i) {
            const double p = (static_cast<double>(i) - 0.5) / static_cast<double>(n);
            pts.emplace_back(norm_quantile(p), x[i - 1]);
        }
    } else {
        const double med = sample_median(x);
        const std::size_t start = n / 2;  // keep the upper half
        const std::size_t m = n - start;
        pts.reserve(m);
        for (std::size_t j = 1; j <= m; ++j) {
            const double p = (static_cast<double>(j) - 0.5) / static_cast<double>(m);
            pts.emplace_back(-std::log1p(-p), x[start + j - 1] - med);
        }
    }
    return finish_plot(kind, std::move(pts));
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::consistent_with_light: return "consistent_with_light";
        case Verdict::consistent_with_heavy: return "consistent_with_heavy";
        default: return "ambiguous";
    }
}

TailReport tail_verdict(const SampleSet& s, const std::vector<int>& k_grid) {
    TailReport report;
    const std::vector<double> ascending = sorted_ascending(s);
    const std::vector<int> grid = k_grid.empty() ? default_k_grid(ascending.size()) : k_grid;

    int k_max = 0;
    for (int k : grid) k_max = std::max(k_max, k);
    if (k_max < 2 || static_cast<std::size_t>(k_max) >= ascending.size()) {
        // hill_on_sorted re-validates and throws with the precise message.
        hill_on_sorted(ascending, grid);
    }

    char buf[160];
    std::vector<double> shifted = ascending;
    report.hill_shift = 0.0;
    if (!(ascending[ascending.size() - 1 - static_cast<std::size_t>(k_max)] > 0.0)) {
        // Only shift when positivity actually requires it; shifting a sample
        // that is already positive distorts power-law tail estimates.
        const double med = sample_median(ascending);
        report.hill_shift = med;
        for (double& v : shifted) v -= med;
        std::snprintf(buf, sizeof(buf),
                      "tail order statistics include non-positive values; subtracted the sample "
                      "median %.6g before the Hill estimator",
                      med);
        report.rule_trace.emplace_back(buf);
        if (!(shifted[shifted.size() - 1 - static_cast<std::size_t>(k_max)] > 0.0)) {
            throw InsufficientPositiveTail(
                "tail order statistics remain non-positive after subtracting the median; "
                "the upper tail is too thin to analyze");
        }
    }
    report.hill_curve = hill_on_sorted(shifted, grid);
    report.normal_qq = probability_plot(s, PlotKind::normal);
    report.exp_qq = probability_plot(s, PlotKind::exponential_right_half);

    // Stabilization: over the top half of the k grid (the large-k side, where
    // the curve must flatten for a genuine power law), no step between
    // consecutive grid points may change the estimate by 10% or more.
    const std::size_t half_start = report.hill_curve.size() / 2;
    double rel_change = 0.0;
    for (std::size_t i = half_start + 1; i < report.hill_curve.size(); ++i) {
        const double prev = report.hill_curve[i - 1].estimate;
        const double cur = report.hill_curve[i].estimate;
        rel_change = std::max(rel_change,
                              prev != 0.0 ? std::abs(cur / prev - 1.0) : kInf);
    }
    const bool stabilized = rel_change < 0.10;
    std::snprintf(buf, sizeof(buf),
                  "hill stabilization over top half of k grid (k >= %d): largest "
                  "step-to-step relative change %.4g (threshold 0.1) -> %s",
                  report.hill_curve[half_start].k, rel_change,
                  stabilized ? "stabilized" : "not stabilized");
    report.rule_trace.emplace_back(buf);

    const int bend = report.exp_qq.curvature_sign;
    std::snprintf(buf, sizeof(buf),
                  "exponential plot of the upper half: quadratic coefficient %.4g -> %s",
                  report.exp_qq.curvature,
                  bend > 0 ? "bending up" : (bend < 0 ? "bending down" : "no curvature"));
    report.rule_trace.emplace_back(buf);

    if (stabilized && bend > 0) {
        report.verdict = Verdict::consistent_with_heavy;
        report.rule_trace.emplace_back(
            "verdict: consistent_with_heavy (stabilized Hill curve and upward-bending "
            "exponential plot)");
    } else if (!stabilized && bend < 0) {
        report.verdict = Verdict::consistent_with_light;
        report.rule_trace.emplace_back(
            "verdict: consistent_with_light (drifting Hill curve and downward-bending "
            "exponential plot)");
    } else {
        report.verdict = Verdict::ambiguous;
        report.rule_trace.emplace_back("verdict: ambiguous (rules for heavy and light both unmet)");
    }
    return report;
}

SampleSet ingest_samples(const std::string& path, SampleFormat format) {
    std::ifstream in(path);
    if (!in) throw InvalidParameter("input", "cannot open file: " + path);
    SampleSet s;
    s.source = path;
    if (format == SampleFormat::csv_single_column) {
        std::string line;
        std::size_t row = 0;
        while (std::getline(in, line)) {
            ++row;
            // Tolerate trailing carriage returns and surrounding spaces.
            std::size_t b = line.find_first_not_of(" \t\r");
            if (b == std::string::npos) continue;  // blank line
            std::size_t e = line.find_last_not_of(" \t\r");
            const std::string tok = line.substr(b, e - b + 1);
            if (row == 1 && !tok.empty() && tok[0] == '#') continue;  // comment header
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(tok, &used);
            } catch (const std::exception&) {
                throw InvalidParameter("input",
                                       "row " + std::to_string(row) + ": not a number: " + tok);
            }
            if (used != tok.size()) {
                throw InvalidParameter("input", "row " + std::to_string(row) +
                                                    ": trailing characters after number: " + tok);
            }
            if (!std::isfinite(v)) {
                throw InvalidParameter("input", "row " + std::to_string(row) +
                                                    ": non-finite value rejected: " + tok);
            }
            s.values.push_back(v);
        }
    } else {
        nlohmann::json j;
        try {
            in >> j;
        } catch (const std::exception& ex) {
            throw InvalidParameter("input", std::string("json parse error: ") + ex.what());
        }
        if (!j.is_array()) throw InvalidParameter("input", "expected a top-level json array");
        std::size_t idx = 0;
        for (const auto& item : j) {
            if (!item.is_number()) {
                throw InvalidParameter("input", "element " + std::to_string(idx) +
                                                    ": expected a number, got " +
                                                    std::string(item.type_name()));
            }
            const double v = item.get<double>();
            if (!std::isfinite(v)) {
                throw InvalidParameter(
                    "input", "element " + std::to_string(idx) + ": non-finite value rejected");
            }
            s.values.push_back(v);
            ++idx;
        }
    }
    if (s.values.empty()) throw InvalidParameter("input", "no samples found in " + path);
    return s;
}

}  // namespace heavytails
