#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "heavytails/distribution.hpp"
#include "heavytails/errors.hpp"
#include "heavytails/families.hpp"
#include "heavytails/rng.hpp"
#include "heavytails/tail_classify.hpp"

using namespace heavytails;

namespace {

const std::vector<std::string> kContinuousSpecs = {
    "normal:0,1",     "normal:2,0.5",    "exponential:1", "exponential:2.5",
    "pareto:1.5,1",   "pareto:3,2",      "student_t:3",   "student_t:5",
    "lognormal:0,1",  "lognormal:0,0.2", "weibull_stretched:0.5,1", "weibull_stretched:1.5,2",
    "uniform:0,1",    "uniform:-2,3"};

}  // namespace

TEST_CASE("family spec grammar accepts names with optional parameter lists") {
    FamilySpec s = parse_family_spec("pareto:1.5,1");
    CHECK(s.family == "pareto");
    REQUIRE(s.params.size() == 2);
    CHECK(s.params[0] == doctest::Approx(1.5));
    CHECK(s.params[1] == doctest::Approx(1.0));

    s = parse_family_spec("student_t:3");
    CHECK(s.family == "student_t");
    REQUIRE(s.params.size() == 1);

    s = parse_family_spec("point_mass:-2.5e3");
    REQUIRE(s.params.size() == 1);
    CHECK(s.params[0] == doctest::Approx(-2500.0));
}

TEST_CASE("family spec grammar rejects malformed text with a position") {
    CHECK_THROWS_AS(parse_family_spec(""), SpecParseError);
    CHECK_THROWS_AS(parse_family_spec("Normal:0,1"), SpecParseError);
    CHECK_THROWS_AS(parse_family_spec("normal:"), SpecParseError);
    CHECK_THROWS_AS(parse_family_spec("normal:0,,1"), SpecParseError);
    CHECK_THROWS_AS(parse_family_spec("normal:0,1,"), SpecParseError);
    CHECK_THROWS_AS(parse_family_spec("normal:0,abc"), SpecParseError);
    try {
        parse_family_spec("normal:0,abc");
        FAIL("expected SpecParseError");
    } catch (const SpecParseError& e) {
        CHECK(e.position >= 7);  // inside the parameter list, not the name
    }
}

TEST_CASE("make_distribution validates arity and parameter ranges") {
    CHECK_THROWS_AS(make_distribution("normal:0"), ValidationError);
    CHECK_THROWS_AS(make_distribution("normal:0,0"), InvalidParameter);
    CHECK_THROWS_AS(make_distribution("normal:0,-1"), InvalidParameter);
    CHECK_THROWS_AS(make_distribution("exponential:0"), InvalidParameter);
    CHECK_THROWS_AS(make_distribution("pareto:0,1"), InvalidParameter);
    CHECK_THROWS_AS(make_distribution("pareto:1.5,0"), InvalidParameter);
    CHECK_THROWS_AS(make_distribution("student_t:0"), InvalidParameter);
    CHECK_THROWS_AS(make_distribution("uniform:1,1"), InvalidParameter);
    CHECK_THROWS_AS(make_distribution("weibull_stretched:-1,1"), InvalidParameter);
    CHECK_THROWS_AS(make_distribution("nosuchfamily:1"), ValidationError);
}

TEST_CASE("quantile and cdf are inverse on a probability grid") {
    for (const auto& spec : kContinuousSpecs) {
        CAPTURE(spec);
        DistPtr d = make_distribution(spec);
        for (double p : {1e-6, 1e-3, 0.01, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99, 0.999, 1 - 1e-6}) {
            const double x = d->quantile(p);
            CHECK(d->cdf(x) == doctest::Approx(p).epsilon(1e-9));
        }
    }
}

TEST_CASE("inv_tail inverts the survival function deep into the tail") {
    for (const auto& spec : kContinuousSpecs) {
        CAPTURE(spec);
        DistPtr d = make_distribution(spec);
        const bool bounded_above = std::isfinite(d->support().hi);
        for (double q : {0.5, 0.1, 1e-3, 1e-8, 1e-12}) {
            // Near a finite endpoint the tail quantizes at the double grid, so
            // a bounded support cannot express q = 1e-12 to relative 1e-7.
            if (bounded_above && q < 1e-8) continue;
            const double x = d->inv_tail(q);
            // Verify in log space so q = 1e-12 still carries full precision.
            CHECK(d->log_tail(x) == doctest::Approx(std::log(q)).epsilon(1e-7));
        }
    }
}

TEST_CASE("tail and log_tail agree where both are representable") {
    for (const auto& spec : kContinuousSpecs) {
        CAPTURE(spec);
        DistPtr d = make_distribution(spec);
        for (double p : {0.05, 0.25, 0.5, 0.75, 0.95}) {
            const double x = d->quantile(p);
            CHECK(std::exp(d->log_tail(x)) == doctest::Approx(d->tail(x)).epsilon(1e-12));
            CHECK(d->tail(x) == doctest::Approx(1.0 - d->cdf(x)).epsilon(1e-12));
        }
    }
}

TEST_CASE("densities integrate to one") {
    for (const auto& spec : kContinuousSpecs) {
        CAPTURE(spec);
        DistPtr d = make_distribution(spec);
        REQUIRE(d->has_density());
        const quad::Result r = expectation(*d, [](double) { return 1.0; });
        CHECK(r.converged);
        CHECK(r.value == doctest::Approx(1.0).epsilon(1e-8));
    }
}

TEST_CASE("numeric mean matches the closed-form mean") {
    for (const auto& spec : kContinuousSpecs) {
        CAPTURE(spec);
        DistPtr d = make_distribution(spec);
        const auto m = d->mean();
        if (!m) continue;  // pareto:1.5 and student_t means exist here
        CHECK(numeric_mean(*d) == doctest::Approx(*m).epsilon(1e-7));
    }
}

TEST_CASE("heavy families report no finite mean below the moment threshold") {
    CHECK_FALSE(make_distribution("pareto:1,1")->mean().has_value());
    CHECK_FALSE(make_distribution("pareto:0.8,1")->mean().has_value());
    CHECK_FALSE(make_distribution("student_t:1")->mean().has_value());
    CHECK(make_distribution("pareto:1.5,1")->mean().value() == doctest::Approx(3.0));
    CHECK(make_distribution("student_t:3")->mean().value() == doctest::Approx(0.0));
}

TEST_CASE("sampling is deterministic in the seed and matches the cdf") {
    DistPtr d = make_distribution("pareto:2,1");
    Rng a(123), b(123), c(124);
    const auto va = d->sample(a, 1000);
    const auto vb = d->sample(b, 1000);
    const auto vc = d->sample(c, 1000);
    CHECK(va == vb);
    CHECK(va != vc);
}

TEST_CASE("Kolmogorov-Smirnov consistency of samplers at alpha = 0.001") {
    // Critical value 1.9495 / sqrt(n) for the two-sided statistic.
    const std::size_t n = 20000;
    const double crit = 1.9495 / std::sqrt(static_cast<double>(n));
    std::uint64_t seed = 777;
    for (const auto& spec : kContinuousSpecs) {
        CAPTURE(spec);
        DistPtr d = make_distribution(spec);
        Rng rng(seed++);
        const double ks = ks_statistic(*d, d->sample(rng, n));
        CHECK(ks < crit);
    }
}

TEST_CASE("point mass and discrete families expose exact atoms") {
    DistPtr pm = make_distribution("point_mass:2.5");
    REQUIRE(pm->atoms().has_value());
    const auto pm_atoms = pm->atoms();
    REQUIRE(pm_atoms->size() == 1);
    CHECK((*pm_atoms)[0].value == 2.5);
    CHECK((*pm_atoms)[0].prob == 1.0);
    CHECK(pm->cdf(2.4) == 0.0);
    CHECK(pm->cdf(2.5) == 1.0);
    CHECK(pm->tail(2.5) == 0.0);
    CHECK(pm->mean().value() == 2.5);

    const Discrete d(std::vector<Atom>{{1.0, 0.25}, {3.0, 0.5}, {1.0, 0.25}});
    const auto atoms = d.atoms();
    REQUIRE(atoms.has_value());
    REQUIRE(atoms->size() == 2);  // duplicates merged
    CHECK((*atoms)[0].value == 1.0);
    CHECK((*atoms)[0].prob == doctest::Approx(0.5));
    CHECK(d.mean().value() == doctest::Approx(2.0));
    CHECK(d.cdf(1.0) == doctest::Approx(0.5));
    CHECK(d.tail(1.0) == doctest::Approx(0.5));
    CHECK(d.quantile(0.4) == 1.0);
    CHECK(d.quantile(0.6) == 3.0);

    CHECK_THROWS_AS(Discrete(std::vector<Atom>{{1.0, 0.5}}), InvalidParameter);
    CHECK_THROWS_AS(Discrete(std::vector<Atom>{{1.0, -0.5}, {2.0, 1.5}}), InvalidParameter);
}

TEST_CASE("expectation takes the exact finite-sum branch on atom laws") {
    const Discrete d(std::vector<Atom>{{-1.0, 0.25}, {0.0, 0.25}, {2.0, 0.5}});
    const quad::Result r = expectation(d, [](double x) { return x * x; });
    CHECK(r.converged);
    CHECK(r.value == doctest::Approx(0.25 + 2.0).epsilon(1e-15));
    CHECK(r.error == 0.0);
}

TEST_CASE("empirical distribution: step cdf, resampling, optional tail extrapolation") {
    const std::vector<double> values{3.0, 1.0, 2.0, 2.0};
    const Empirical e(values);
    CHECK(e.cdf(0.5) == 0.0);
    CHECK(e.cdf(1.0) == doctest::Approx(0.25));
    CHECK(e.cdf(2.0) == doctest::Approx(0.75));
    CHECK(e.cdf(3.0) == 1.0);
    CHECK(e.tail(3.0) == 0.0);
    CHECK(e.tail(5.0) == 0.0);
    CHECK_FALSE(e.tail_is_extrapolated(5.0));
    CHECK(e.mean().value() == doctest::Approx(2.0));

    const Empirical ex(values, TailExtrapolation{2.0});
    CHECK(ex.tail(3.0) == 0.0);  // at the maximum itself the step value stands
    // Strictly beyond the maximum the power-law continuation anchors 1/n there.
    CHECK(ex.tail(3.0 * (1.0 + 1e-12)) == doctest::Approx(0.25));
    CHECK(ex.tail(6.0) == doctest::Approx(0.25 * std::pow(2.0, -2.0)));
    CHECK(ex.tail_is_extrapolated(6.0));
    CHECK_FALSE(ex.tail_is_extrapolated(2.0));

    Rng rng(9);
    for (int i = 0; i < 50; ++i) {
        const double x = ex.sample(rng);
        const bool observed = x == 1.0 || x == 2.0 || x == 3.0;
        CHECK(observed);
    }
    CHECK_THROWS_AS(Empirical(std::vector<double>{}), InvalidParameter);
}

TEST_CASE("tail classification separates the standard families") {
    auto verdict = [](const std::string& spec) {
        return is_heavy_tailed(*make_distribution(spec)).verdict;
    };
    CHECK(verdict("pareto:1.5,1") == TailClass::heavy);
    CHECK(verdict("pareto:3,1") == TailClass::heavy);
    CHECK(verdict("student_t:3") == TailClass::heavy);
    CHECK(verdict("lognormal:0,1") == TailClass::heavy);
    CHECK(verdict("lognormal:0,0.2") == TailClass::heavy);  // narrow but still subexponential
    CHECK(verdict("weibull_stretched:0.5,1") == TailClass::heavy);    // stretched exponential
    CHECK(verdict("normal:0,1") == TailClass::light);
    CHECK(verdict("exponential:1") == TailClass::light);
    CHECK(verdict("exponential:0.1") == TailClass::light);
    CHECK(verdict("uniform:0,1") == TailClass::light);
    CHECK(verdict("point_mass:5") == TailClass::light);
}

TEST_CASE("tail classification on a fixed probe grid follows the trajectories") {
    DistPtr heavy = make_distribution("pareto:2,1");
    std::vector<TailProbe> grid;
    for (double x : {10.0, 100.0, 1000.0, 10000.0, 100000.0, 1000000.0})
        grid.push_back({0.01, x, 0.0});
    const TailClassification c = is_heavy_tailed(*heavy, grid);
    CHECK(c.verdict == TailClass::heavy);
    CHECK(c.evidence.size() == grid.size());
    for (const auto& p : c.evidence)
        CHECK(p.value == doctest::Approx(p.rate * p.x + heavy->log_tail(p.x)));

    DistPtr light = make_distribution("normal:0,1");
    std::vector<TailProbe> lgrid;
    for (double x : {2.0, 4.0, 6.0, 8.0, 10.0}) lgrid.push_back({0.5, x, 0.0});
    CHECK(is_heavy_tailed(*light, lgrid).verdict == TailClass::light);
}

TEST_CASE("subexponential convolution ratio approaches 2 for pareto") {
    DistPtr p = make_distribution("pareto:1.5,1");
    const RatioEstimate r =
        subexponential_ratio(*p, 1000.0, RatioMethod::quadrature, 200000);
    CHECK(r.ratio == doctest::Approx(2.008988745622044).epsilon(1e-6));
    CHECK(std::fabs(r.ratio / 2.0 - 1.0) < 0.05);
}

TEST_CASE("exponential convolution ratio equals 1 + x exactly in the limit law") {
    DistPtr e = make_distribution("exponential:1");
    const double x = 30.0;
    const RatioEstimate r = subexponential_ratio(*e, x, RatioMethod::quadrature, 200000);
    // Erlang(2) tail over exponential tail: (1 + x) e^{-x} / e^{-x}.
    CHECK(r.ratio == doctest::Approx(1.0 + x).epsilon(1e-6));
    CHECK(std::fabs(r.ratio / (1.0 + x) - 1.0) < 0.05);
}

TEST_CASE("monte carlo convolution ratio agrees with quadrature at moderate x") {
    DistPtr p = make_distribution("pareto:1.5,1");
    const double x = 30.0;
    const RatioEstimate q = subexponential_ratio(*p, x, RatioMethod::quadrature, 200000);
    const RatioEstimate mc =
        subexponential_ratio(*p, x, RatioMethod::monte_carlo, 2000000, kInf, 4242);
    CHECK(std::fabs(mc.ratio - q.ratio) < 4.0 * mc.error + 1e-9);
}

TEST_CASE("tail dominance diagnostic vanishes for light V against heavy X") {
    DistPtr v = make_distribution("normal:0,1");
    DistPtr x = make_distribution("pareto:1.5,1");
    const DominanceTable t =
        tail_dominance_exponent(*v, *x, 1.5, {10, 100, 1000, 10000});
    CHECK(t.decreasing_to_zero);
    REQUIRE(t.rows.size() == 4);
    for (std::size_t i = 1; i < t.rows.size(); ++i)
        CHECK(t.rows[i].log_ratio < t.rows[i - 1].log_ratio);
    CHECK(t.rows.back().ratio < 1e-3);
}

TEST_CASE("support bounds are respected by quantiles") {
    DistPtr p = make_distribution("pareto:1.5,2");
    CHECK(p->support().lo == 2.0);
    CHECK(p->quantile(1e-12) >= 2.0);
    DistPtr u = make_distribution("uniform:-2,3");
    CHECK(u->quantile(1e-12) >= -2.0);
    CHECK(u->quantile(1.0 - 1e-12) <= 3.0);
}
