#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "heavytails/conditioning.hpp"
#include "heavytails/errors.hpp"
#include "heavytails/families.hpp"

using namespace heavytails;

namespace {

ConditioningProblem heavy_pair(double t) {
    return {make_distribution("normal:0,1"), make_distribution("pareto:1.5,1"), t,
            Dependence::independent};
}

ConditioningProblem light_pair(double t) {
    return {make_distribution("exponential:1"), make_distribution("normal:0,1"), t,
            Dependence::independent};
}

}  // namespace

TEST_CASE("heavy error absorbs the threshold: conditional mean returns to E[V]") {
    // E[V | X+V >= t] for V = normal(0,1), X = pareto(1.5): the X tail does
    // all the work, so the conditional mean of V falls like 1.5/t.
    const std::vector<std::pair<double, double>> expect = {
        {1e2, 0.015003752251942686},  {1e3, 0.0015000037500225325},
        {1e4, 0.00015000000375000813}, {1e5, 1.500000000377145e-05},
        {1e6, 1.4999999999783105e-06},
    };
    for (const auto& [t, mean] : expect) {
        CAPTURE(t);
        CHECK(conditional_mean(heavy_pair(t)) == doctest::Approx(mean).epsilon(1e-9));
    }
}

TEST_CASE("heavy pair: denominator tends to one as the tail flattens") {
    const ConditionalMeanDetail d2 = conditional_mean_detail(heavy_pair(1e2));
    CHECK(d2.denominator == doctest::Approx(1.00018757387215).epsilon(1e-9));
    const ConditionalMeanDetail d6 = conditional_mean_detail(heavy_pair(1e6));
    CHECK(d6.denominator == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(d6.mean == doctest::Approx(d2.mean * 1e-4).epsilon(1e-4));
    CHECK(d2.numerator_shift >= 0.0);
}

TEST_CASE("light error cannot absorb the threshold: conditional mean tracks t") {
    const std::vector<std::pair<double, double>> expect = {
        {5.0, 5.0000306161966641},
        {10.0, 9.9999999999999751},
        {15.0, 15.00000000000022},
        {20.0, 19.999999999999847},
    };
    double prev = -1.0;
    for (const auto& [t, mean] : expect) {
        CAPTURE(t);
        const double m = conditional_mean(light_pair(t));
        CHECK(m == doctest::Approx(mean).epsilon(1e-9));
        CHECK(m > prev);
        prev = m;
    }
    CHECK(prev - 5.0000306161966641 > 3.0);
}

TEST_CASE("light-tail ratio diagnostic: bounded above and collapsing") {
    DistPtr v = make_distribution("exponential:1");
    DistPtr x = make_distribution("normal:0,1");
    const LightTailRatioTable t =
        light_tail_ratio_diagnostic(*v, *x, 1.0, {5, 10, 15, 20});
    REQUIRE(t.rows.size() == 4);
    const std::vector<double> log_ratio = {-8.1214550797249387, -37.23574001048128,
                                           -90.639152170941969, -168.76244137802496};
    const std::vector<double> log_bound = {-2.2110504104040234, -7.0733870988046501,
                                           -12.031989581814534, -17.012430563833853};
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        CAPTURE(i);
        CHECK(t.rows[i].log_ratio == doctest::Approx(log_ratio[i]).epsilon(1e-6));
        CHECK(t.rows[i].log_bound == doctest::Approx(log_bound[i]).epsilon(1e-6));
        CHECK(t.rows[i].within_bound);
        CHECK(t.rows[i].log_ratio <= t.rows[i].log_bound);
    }
    CHECK(t.ratio_decreasing);
    // The bound itself decays at least tenfold per grid step.
    for (std::size_t i = 1; i < t.rows.size(); ++i)
        CHECK(t.rows[i].log_bound < t.rows[i - 1].log_bound - std::log(10.0));
}

TEST_CASE("dependent counterexample: quadrature values along the grid") {
    CHECK(conditional_mean_dependent_counterexample(2.0) ==
          doctest::Approx(0.56981279944257068).epsilon(1e-9));
    CHECK(conditional_mean_dependent_counterexample(10.0) ==
          doctest::Approx(0.56914632467123694).epsilon(1e-9));
    CHECK(conditional_mean_dependent_counterexample(30.0) ==
          doctest::Approx(0.84963267033259171).epsilon(1e-9));
}

TEST_CASE("dependent counterexample drifts toward the inner boundary, not zero") {
    // Mass escaping through the unbounded-V route vanishes like
    // exp(-t^2/2) against the exp(-t^2/8) of the gaussian-error route, so
    // the conditioned V concentrates near +1 as t grows.
    const double m10 = conditional_mean_dependent_counterexample(10.0);
    const double m30 = conditional_mean_dependent_counterexample(30.0);
    const double m60 = conditional_mean_dependent_counterexample(60.0);
    CHECK(m30 > m10);
    CHECK(m60 > m30);
    CHECK(m60 > 0.9);
    CHECK(m60 < 1.0);
}

TEST_CASE("rejection sampler agrees with quadrature on the dependent law") {
    ConditioningProblem prob;
    prob.t = 2.0;
    prob.dependence = Dependence::vshaped_counterexample;
    const McEstimate mc = conditional_mean_mc(prob, 400000, 42);
    CHECK(mc.accepted > 1000);
    CHECK(std::fabs(mc.mean - 0.56981279944257068) < 4.0 * mc.standard_error);
}

TEST_CASE("rejection sampler agrees with quadrature on an independent pair") {
    ConditioningProblem prob = heavy_pair(10.0);
    const double quad_mean = conditional_mean(prob);
    const McEstimate mc = conditional_mean_mc(prob, 400000, 4242);
    CHECK(std::fabs(mc.mean - quad_mean) < 4.0 * mc.standard_error + 1e-9);
    // Same seed, same estimate: the sampler is deterministic.
    const McEstimate again = conditional_mean_mc(prob, 400000, 4242);
    CHECK(mc.mean == again.mean);
    CHECK(mc.accepted == again.accepted);
}

TEST_CASE("window scheme: sqrt window passes the insensitivity check for pareto error") {
    const RegionScheme s = choose_h(make_distribution("pareto:1.5,1"), HScheme::sqrt_t);
    CHECK(s.h(100.0) == doctest::Approx(10.0));
    CHECK(s.insensitivity_decreasing);
    CHECK(s.warning.empty());
    REQUIRE(s.insensitivity.size() >= 2);
    for (std::size_t i = 1; i < s.insensitivity.size(); ++i)
        CHECK(s.insensitivity[i].second < s.insensitivity[i - 1].second);
}

TEST_CASE("window scheme: log-power window also qualifies") {
    const RegionScheme s = choose_h(make_distribution("pareto:1.5,1"), HScheme::log_power);
    const double l = std::log(100.0);
    CHECK(s.h(100.0) == doctest::Approx(l * l));
    CHECK(s.warning.empty());
}

TEST_CASE("region decomposition: masses, consistency and the lemma ratio") {
    const RegionScheme scheme = choose_h(make_distribution("pareto:1.5,1"), HScheme::sqrt_t);
    const RegionTable tab = region_decomposition(heavy_pair(1e3), scheme);
    CHECK(tab.h == doctest::Approx(std::sqrt(1e3)));

    double mass = 0.0;
    for (const auto& r : tab.regions) mass += r.conditional_mass;
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
    // Nearly everything sits in the central window around E[V].
    CHECK(tab.regions[1].conditional_mass > 0.999);

    CHECK(tab.conditional_mean ==
          doctest::Approx(conditional_mean(heavy_pair(1e3))).epsilon(1e-9));
    CHECK(tab.denominator ==
          doctest::Approx(conditional_mean_detail(heavy_pair(1e3)).denominator)
              .epsilon(1e-2));

    CHECK(tab.log_lemma2_ratio == doctest::Approx(-497.41780915647234).epsilon(1e-6));
    CHECK(tab.lemma2_ratio == doctest::Approx(std::exp(tab.log_lemma2_ratio)));
}

TEST_CASE("region decomposition stays comparable after linear underflow") {
    const RegionScheme scheme = choose_h(make_distribution("pareto:1.5,1"), HScheme::sqrt_t);
    const RegionTable t4 = region_decomposition(heavy_pair(1e4), scheme);
    const RegionTable t5 = region_decomposition(heavy_pair(1e5), scheme);
    CHECK(t4.lemma2_ratio == 0.0);  // linear value is gone at this depth
    CHECK(t4.log_lemma2_ratio == doctest::Approx(-4996.2987913035968).epsilon(1e-6));
    CHECK(t5.log_lemma2_ratio < t4.log_lemma2_ratio);
    for (int r = 0; r < 4; ++r) {
        CAPTURE(r);
        CHECK(t5.regions[r].log_numerator < t4.regions[r].log_numerator);
    }
}

TEST_CASE("region decomposition validates its inputs") {
    const RegionScheme scheme = choose_h(make_distribution("pareto:1.5,1"), HScheme::sqrt_t);
    ConditioningProblem dep;
    dep.t = 10.0;
    dep.dependence = Dependence::vshaped_counterexample;
    CHECK_THROWS_AS(region_decomposition(dep, scheme), InvalidParameter);

    RegionScheme wide = scheme;
    wide.h = [](double t) { return t; };  // h > t/2 leaves no middle region
    CHECK_THROWS_AS(region_decomposition(heavy_pair(100.0), wide), InvalidParameter);
}

TEST_CASE("degenerate error reduces conditioning to the V tail alone") {
    // With X identically 0 the event is just {V >= t}; for a standard normal
    // the conditional mean is the inverse Mills ratio pdf(t) / tail(t).
    DistPtr v = make_distribution("normal:0,1");
    ConditioningProblem prob{v, make_distribution("point_mass:0"), 5.0,
                             Dependence::independent};
    CHECK(conditional_mean(prob) ==
          doctest::Approx(v->pdf(5.0) / v->tail(5.0)).epsilon(1e-8));
}

TEST_CASE("conditioning refuses events with no representable mass") {
    // Bounded V and degenerate X leave the event {X+V >= t} empty.
    ConditioningProblem prob{make_distribution("uniform:0,1"),
                             make_distribution("point_mass:0"), 5.0,
                             Dependence::independent};
    CHECK_THROWS_AS(conditional_mean(prob), DenominatorUnderflow);
}

TEST_CASE("far-region bounding ratios decay along the grid") {
    DistPtr v = make_distribution("normal:0,1");
    DistPtr x = make_distribution("pareto:1.5,1");
    const Region4Table t = region4_tail_bound(*v, *x, 1.5, {10, 100, 1000});
    CHECK(t.point_decreasing);
    CHECK(t.integral_decreasing);
    REQUIRE(t.rows.size() == 3);
    for (const auto& row : t.rows) CHECK(row.log_ratio_point < 0.0);
}

TEST_CASE("conditional mean handles discrete V exactly") {
    // V uniform on {-1, 0, 1}, X = pareto(1.5): every piece is a finite sum.
    auto v = std::make_shared<Discrete>(
        std::vector<Atom>{{-1.0, 1.0 / 3}, {0.0, 1.0 / 3}, {1.0, 1.0 / 3}});
    ConditioningProblem prob{v, make_distribution("pareto:1.5,1"), 100.0,
                             Dependence::independent};
    const double got = conditional_mean(prob);
    // Exact ratio sum_v v w(v) / sum_v w(v) with w(v) = tail_X(t - v).
    DistPtr x = make_distribution("pareto:1.5,1");
    double num = 0.0, den = 0.0;
    for (double vv : {-1.0, 0.0, 1.0}) {
        const double w = x->tail(100.0 - vv) / 3.0;
        num += vv * w;
        den += w;
    }
    CHECK(got == doctest::Approx(num / den).epsilon(1e-12));
}
