#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace heavytails {

struct SampleSet {
    std::vector<double> values;
    std::string source;                 // free-text provenance
    std::optional<std::uint64_t> seed;  // set when internally generated
};

struct HillPoint {
    int k;
    double estimate;        // (1/k) sum log(x_(n-i+1) / x_(n-k))
    double standard_error;  // estimate / sqrt(k)
};

/// Hill tail-index curve over a grid of k values, computed on the raw
/// samples. Throws InsufficientPositiveTail when the (k+1)-th largest value
/// is not strictly positive for some requested k.
std::vector<HillPoint> hill_estimator(const SampleSet& s, const std::vector<int>& k_grid);

/// Logarithmic grid from 10 to n/10 with 20 points (deduplicated).
std::vector<int> default_k_grid(std::size_t n);

enum class PlotKind { normal, exponential_right_half };

struct QqPlot {
    PlotKind kind;
    std::vector<std::pair<double, double>> points;  // (theoretical, empirical)
    double linearity;   // squared correlation of the pairs
    double curvature;   // quadratic coefficient of the LS parabola fit
    int curvature_sign; // +1 bending up (heavy), -1 bending down (light), 0 flat
};

/// Probability plot against normal quantiles (all samples) or exponential
/// quantiles (values above the median, shifted by the median).
QqPlot probability_plot(const SampleSet& s, PlotKind kind);

enum class Verdict { consistent_with_light, consistent_with_heavy, ambiguous };

std::string to_string(Verdict v);

struct TailReport {
    std::vector<HillPoint> hill_curve;
    QqPlot normal_qq;
    QqPlot exp_qq;
    Verdict verdict;
    std::vector<std::string> rule_trace;
    double hill_shift = 0.0;  // subtracted before Hill when positivity demands
};

/// Deterministic verdict pipeline: Hill curve (shifting by the sample median
/// first when the tail otherwise contains non-positive values), both
/// probability plots, then the documented rules:
///   heavy  = Hill stabilized over the top half of the k grid (relative
///            change < 10%) AND exponential plot bending up;
///   light  = NOT stabilized AND bending down;
///   else ambiguous.
/// The verdict concerns the right tail of the sample.
TailReport tail_verdict(const SampleSet& s, const std::vector<int>& k_grid = {});

enum class SampleFormat { csv_single_column, json_array };

/// Reads numbers from a file. Non-finite or unparseable entries are rejected
/// with their row (CSV) or index (JSON) in the message; empty inputs throw.
SampleSet ingest_samples(const std::string& path, SampleFormat format);

}
