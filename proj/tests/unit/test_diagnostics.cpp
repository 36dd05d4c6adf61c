#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "heavytails/diagnostics.hpp"
#include "heavytails/errors.hpp"
#include "heavytails/families.hpp"
#include "heavytails/rng.hpp"

using namespace heavytails;

namespace {

SampleSet quantile_grid(const Distribution& d, std::size_t n) {
    SampleSet s;
    s.source = "quantile grid";
    s.values.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        s.values.push_back(d.quantile((static_cast<double>(i) + 0.5) / n));
    return s;
}

SampleSet draw(const std::string& spec, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    SampleSet s;
    s.values = make_distribution(spec)->sample(rng, n);
    s.source = spec;
    s.seed = seed;
    return s;
}

std::filesystem::path temp_file(const std::string& stem) {
    return std::filesystem::temp_directory_path() / ("heavytails_test_" + stem);
}

}  // namespace

TEST_CASE("Hill estimator recovers the pareto tail index on an exact grid") {
    const SampleSet s = quantile_grid(*make_distribution("pareto:2,1"), 10000);
    const auto curve = hill_estimator(s, {1000});
    REQUIRE(curve.size() == 1);
    CHECK(curve[0].k == 1000);
    CHECK(std::fabs(curve[0].estimate - 0.5) < 0.016);
    CHECK(curve[0].standard_error ==
          doctest::Approx(curve[0].estimate / std::sqrt(1000.0)).epsilon(1e-12));
}

TEST_CASE("Hill estimator is invariant under positive scaling") {
    SampleSet s = draw("pareto:1.5,1", 5000, 11);
    SampleSet scaled = s;
    for (double& x : scaled.values) x *= 2.0;
    const auto a = hill_estimator(s, {100, 500});
    const auto b = hill_estimator(scaled, {100, 500});
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(a[i].estimate == doctest::Approx(b[i].estimate).epsilon(1e-12));
}

TEST_CASE("Hill estimator on a constant positive sample is exactly zero") {
    SampleSet s;
    s.values.assign(200, 3.5);
    const auto curve = hill_estimator(s, {10, 50});
    for (const auto& p : curve) {
        CHECK(p.estimate == 0.0);
        CHECK(p.standard_error == 0.0);
    }
}

TEST_CASE("Hill estimator validates k and the positive tail") {
    SampleSet s = draw("pareto:2,1", 100, 5);
    CHECK_THROWS_AS(hill_estimator(s, {}), InvalidParameter);
    CHECK_THROWS_AS(hill_estimator(s, {1}), InvalidParameter);
    CHECK_THROWS_AS(hill_estimator(s, {100}), InvalidParameter);

    SampleSet neg;
    neg.values.assign(100, -1.0);
    CHECK_THROWS_AS(hill_estimator(neg, {10}), InsufficientPositiveTail);
}

TEST_CASE("default k grid is logarithmic from 10 to n/10") {
    const auto grid = default_k_grid(100000);
    REQUIRE(!grid.empty());
    CHECK(grid.front() == 10);
    CHECK(grid.back() == 10000);
    CHECK(grid.size() <= 20);
    for (std::size_t i = 1; i < grid.size(); ++i) CHECK(grid[i] > grid[i - 1]);
    CHECK_THROWS_AS(default_k_grid(29), InvalidParameter);
}

TEST_CASE("normal probability plot is exactly linear on a normal quantile grid") {
    const SampleSet s = quantile_grid(*make_distribution("normal:1,2"), 2000);
    const QqPlot p = probability_plot(s, PlotKind::normal);
    CHECK(p.kind == PlotKind::normal);
    CHECK(p.points.size() == 2000);
    CHECK(p.linearity == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p.curvature_sign == 0);
}

TEST_CASE("probability plots are invariant under affine maps of the sample") {
    const SampleSet s = draw("normal:0,1", 2000, 77);
    SampleSet moved = s;
    for (double& x : moved.values) x = 3.0 + 2.0 * x;
    const QqPlot a = probability_plot(s, PlotKind::normal);
    const QqPlot b = probability_plot(moved, PlotKind::normal);
    CHECK(a.linearity == doctest::Approx(b.linearity).epsilon(1e-12));
    CHECK(a.curvature_sign == b.curvature_sign);
}

TEST_CASE("exponential plot of the upper half bends by the tail weight") {
    const QqPlot heavy =
        probability_plot(draw("pareto:1.5,1", 20000, 3), PlotKind::exponential_right_half);
    CHECK(heavy.curvature_sign == 1);
    const QqPlot light =
        probability_plot(draw("normal:0,1", 20000, 3), PlotKind::exponential_right_half);
    CHECK(light.curvature_sign == -1);
    const QqPlot flat = probability_plot(quantile_grid(*make_distribution("exponential:1"),
                                                       20000),
                                         PlotKind::exponential_right_half);
    CHECK(flat.linearity > 0.9999);
}

TEST_CASE("probability plots need a minimal sample") {
    SampleSet s;
    for (int i = 0; i < 19; ++i) s.values.push_back(i + 1.0);
    CHECK_THROWS_AS(probability_plot(s, PlotKind::exponential_right_half),
                    InvalidParameter);
}

TEST_CASE("verdict pipeline: heavy and light exemplars at full sample size") {
    const TailReport heavy = tail_verdict(draw("pareto:1.5,1", 100000, 2024));
    CHECK(heavy.verdict == Verdict::consistent_with_heavy);
    CHECK(heavy.hill_shift == 0.0);
    CHECK(!heavy.rule_trace.empty());

    const TailReport light = tail_verdict(draw("normal:0,1", 100000, 2024));
    CHECK(light.verdict == Verdict::consistent_with_light);
}

TEST_CASE("verdict is deterministic: same samples, same report") {
    const SampleSet s = draw("pareto:1.5,1", 30000, 555);
    const TailReport a = tail_verdict(s);
    const TailReport b = tail_verdict(s);
    CHECK(a.verdict == b.verdict);
    REQUIRE(a.rule_trace.size() == b.rule_trace.size());
    for (std::size_t i = 0; i < a.rule_trace.size(); ++i)
        CHECK(a.rule_trace[i] == b.rule_trace[i]);
    REQUIRE(a.hill_curve.size() == b.hill_curve.size());
    for (std::size_t i = 0; i < a.hill_curve.size(); ++i)
        CHECK(a.hill_curve[i].estimate == b.hill_curve[i].estimate);
}

TEST_CASE("verdict is invariant under positive scaling of the sample") {
    SampleSet s = draw("pareto:1.5,1", 30000, 9001);
    const Verdict base = tail_verdict(s).verdict;
    for (double& x : s.values) x *= 100.0;
    CHECK(tail_verdict(s).verdict == base);
}

TEST_CASE("shifted-location samples trigger the median shift rule") {
    // Mean -5 normal: even the top decile is negative, so the Hill stage
    // must re-anchor at the sample median and report the shift.
    const TailReport r = tail_verdict(draw("normal:-5,1", 50000, 31));
    CHECK(r.hill_shift != 0.0);
    bool mentioned = false;
    for (const auto& line : r.rule_trace)
        if (line.find("median") != std::string::npos) mentioned = true;
    CHECK(mentioned);
    CHECK(r.verdict == Verdict::consistent_with_light);
}

TEST_CASE("verdict replication accuracy holds on a quick screen") {
    int heavy_ok = 0, light_ok = 0;
    const int reps = 20;
    for (int r = 0; r < reps; ++r) {
        if (tail_verdict(draw("pareto:1.5,1", 100000, 4000 + r)).verdict ==
            Verdict::consistent_with_heavy)
            ++heavy_ok;
        if (tail_verdict(draw("normal:0,1", 100000, 4000 + r)).verdict ==
            Verdict::consistent_with_light)
            ++light_ok;
    }
    CHECK(heavy_ok >= 19);
    CHECK(light_ok >= 19);
}

TEST_CASE("a light sample with rare heavy contamination never reads as heavy") {
    // 0.1% pareto(1.5) atoms inside a normal bulk at n = 10^4: too few tail
    // points for the Hill curve to stabilize, so the pipeline must refuse to
    // call it heavy (ambiguous or light are both defensible).
    DistPtr bulk = make_distribution("normal:0,1");
    DistPtr tail = make_distribution("pareto:1.5,1");
    int heavy_calls = 0;
    for (int rep = 0; rep < 200; ++rep) {
        Rng rng(7000 + rep);
        SampleSet s;
        s.source = "mixture";
        s.values.reserve(10000);
        for (int i = 0; i < 10000; ++i) {
            const double u = rng.uniform();
            s.values.push_back(u < 0.001 ? tail->sample(rng) : bulk->sample(rng));
        }
        if (tail_verdict(s).verdict == Verdict::consistent_with_heavy) ++heavy_calls;
    }
    CHECK(heavy_calls == 0);
}

TEST_CASE("reported standard error tracks the replication spread") {
    const int reps = 200;
    const int k = 400;
    std::vector<double> estimates;
    double se_sum = 0.0;
    for (int r = 0; r < reps; ++r) {
        const auto curve = hill_estimator(draw("pareto:2,1", 20000, 6000 + r), {k});
        estimates.push_back(curve[0].estimate);
        se_sum += curve[0].standard_error;
    }
    double mean = 0.0;
    for (double e : estimates) mean += e;
    mean /= reps;
    double var = 0.0;
    for (double e : estimates) var += (e - mean) * (e - mean);
    const double sd = std::sqrt(var / (reps - 1));
    const double se = se_sum / reps;
    CHECK(std::fabs(se / sd - 1.0) < 0.2);
}

TEST_CASE("csv ingestion round-trips full-precision values bit for bit") {
    const auto path = temp_file("roundtrip.csv");
    SampleSet original = draw("student_t:3", 10000, 99);
    {
        std::ofstream out(path);
        for (double x : original.values) {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", x);
            out << buf << "\n";
        }
    }
    const SampleSet back = ingest_samples(path.string(), SampleFormat::csv_single_column);
    REQUIRE(back.values.size() == original.values.size());
    for (std::size_t i = 0; i < back.values.size(); ++i)
        CHECK(back.values[i] == original.values[i]);
    std::filesystem::remove(path);
}

TEST_CASE("csv ingestion reports the offending row") {
    const auto path = temp_file("bad.csv");
    {
        std::ofstream out(path);
        out << "# leading comment row\n1.5\n\n2.5\nnot-a-number\n";
    }
    try {
        ingest_samples(path.string(), SampleFormat::csv_single_column);
        FAIL("expected InvalidParameter");
    } catch (const InvalidParameter& e) {
        CHECK(std::string(e.what()).find("row 5") != std::string::npos);
    }
    std::filesystem::remove(path);
}

TEST_CASE("csv ingestion rejects non-finite entries and empty files") {
    const auto path = temp_file("naninf.csv");
    {
        std::ofstream out(path);
        out << "1.0\nnan\n";
    }
    CHECK_THROWS_AS(ingest_samples(path.string(), SampleFormat::csv_single_column),
                    InvalidParameter);
    {
        std::ofstream out(path);
        out << "\n\n";
    }
    CHECK_THROWS_AS(ingest_samples(path.string(), SampleFormat::csv_single_column),
                    InvalidParameter);
    CHECK_THROWS_AS(
        ingest_samples((temp_file("missing.csv")).string(), SampleFormat::csv_single_column),
        InvalidParameter);
    std::filesystem::remove(path);
}

TEST_CASE("json ingestion accepts arrays and reports the offending element") {
    const auto path = temp_file("samples.json");
    {
        std::ofstream out(path);
        out << "[1.5, 2.5, -0.25]";
    }
    const SampleSet s = ingest_samples(path.string(), SampleFormat::json_array);
    REQUIRE(s.values.size() == 3);
    CHECK(s.values[1] == 2.5);

    {
        std::ofstream out(path);
        out << "[1.5, \"two\"]";
    }
    try {
        ingest_samples(path.string(), SampleFormat::json_array);
        FAIL("expected InvalidParameter");
    } catch (const InvalidParameter& e) {
        CHECK(std::string(e.what()).find("element 1") != std::string::npos);
    }
    {
        std::ofstream out(path);
        out << "{\"a\": 1}";
    }
    CHECK_THROWS_AS(ingest_samples(path.string(), SampleFormat::json_array),
                    InvalidParameter);
    std::filesystem::remove(path);
}
