// heavytails: reproducible sweep and diagnostic experiments on the library's
// upweighting / tilting / conditioning / MDP / tail-diagnostic modules.
//
// Every subcommand is deterministic given (config, seed): emitted CSV/JSON
// files are byte-identical across runs. All files carry a config echo and the
// artifact version; no timestamps. Exit codes: 0 success, 1 validation error,
// 2 numeric failure, 3 verify-suite failure.

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "heavytails/conditioning.hpp"
#include "heavytails/diagnostics.hpp"
#include "heavytails/distribution.hpp"
#include "heavytails/errors.hpp"
#include "heavytails/families.hpp"
#include "heavytails/mdp.hpp"
#include "heavytails/rng.hpp"
#include "heavytails/tail_classify.hpp"
#include "heavytails/tilting.hpp"
#include "heavytails/verify.hpp"
#include "heavytails/version.hpp"

namespace ht = heavytails;
using nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------------------
// Formatting and file helpers
// ---------------------------------------------------------------------------

std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string join_doubles(const std::vector<double>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ',';
        out += fmt17(xs[i]);
    }
    return out;
}

std::string join_ints(const std::vector<int>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(xs[i]);
    }
    return out;
}

using Echo = std::vector<std::pair<std::string, std::string>>;

/// CSV writer: `# key=value` metadata block, then a header row, then rows of
/// preformatted cells.
class CsvFile {
public:
    CsvFile(const std::filesystem::path& path, const Echo& echo,
            const std::vector<std::string>& columns)
        : out_(path, std::ios::binary) {
        if (!out_) throw ht::ValidationError("cannot open output file " + path.string());
        out_ << "# heavytails " << ht::kVersion << "\n";
        for (const auto& [k, v] : echo) out_ << "# " << k << "=" << v << "\n";
        for (std::size_t i = 0; i < columns.size(); ++i)
            out_ << (i ? "," : "") << columns[i];
        out_ << "\n";
    }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
        out_ << "\n";
    }

private:
    std::ofstream out_;
};

ordered_json echo_json(const std::string& subcommand, const Echo& echo) {
    ordered_json j;
    j["artifact"] = "heavytails";
    j["version"] = ht::kVersion;
    j["subcommand"] = subcommand;
    ordered_json cfg;
    for (const auto& [k, v] : echo) cfg[k] = v;
    j["config"] = cfg;
    return j;
}

void write_json(const std::filesystem::path& path, const ordered_json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ht::ValidationError("cannot open output file " + path.string());
    out << j.dump(2) << "\n";
}

std::filesystem::path ensure_out_dir(const std::string& dir) {
    std::filesystem::path p(dir);
    std::error_code ec;
    std::filesystem::create_directories(p, ec);
    if (ec) throw ht::ValidationError("cannot create output directory " + dir);
    return p;
}

void require_sorted_grid(const std::vector<double>& grid, const std::string& flag) {
    if (grid.empty()) throw ht::InvalidParameter(flag, "grid must be nonempty");
    for (double t : grid)
        if (!std::isfinite(t)) throw ht::InvalidParameter(flag, "grid entries must be finite");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1]))
            throw ht::InvalidParameter(flag, "grid must be strictly increasing");
}

const char* verdict_name(ht::TailClass c) {
    switch (c) {
        case ht::TailClass::heavy: return "heavy";
        case ht::TailClass::light: return "light";
        default: return "inconclusive";
    }
}

// ---------------------------------------------------------------------------
// Shared option state
// ---------------------------------------------------------------------------

struct GlobalOpts {
    std::uint64_t seed = 0x5eedULL;
    std::string out_dir = ".";
};

// ---------------------------------------------------------------------------
// tilt-sweep
// ---------------------------------------------------------------------------

struct TiltSweepOpts {
    std::string base = "student_t:3";
    double c = 1.0;
    double gamma = 1.0;
    std::vector<double> t_grid{10, 100, 1000, 10000};
    bool allow_light = false;
};

int run_tilt_sweep(const GlobalOpts& g, const TiltSweepOpts& o) {
    require_sorted_grid(o.t_grid, "--t");
    ht::DistPtr base = ht::make_distribution(o.base);

    const ht::TailClassification cls = ht::is_heavy_tailed(*base);
    if (cls.verdict != ht::TailClass::heavy && !o.allow_light)
        throw ht::ValidationError("base '" + o.base + "' classified " +
                                  verdict_name(cls.verdict) +
                                  "-tailed; pass --allow-light to sweep it anyway");

    const auto out = ensure_out_dir(g.out_dir);
    Echo echo{{"subcommand", "tilt-sweep"},
              {"base", o.base},
              {"c", fmt17(o.c)},
              {"gamma", fmt17(o.gamma)},
              {"t", join_doubles(o.t_grid)},
              {"allow_light", o.allow_light ? "true" : "false"},
              {"seed", std::to_string(g.seed)},
              {"tail_class", verdict_name(cls.verdict)}};

    CsvFile csv(out / "tilt_sweep.csv", echo, {"t", "mass", "mean", "kl"});
    std::vector<double> means, kls;
    ordered_json rows = ordered_json::array();
    for (double t : o.t_grid) {
        const auto p = ht::build_tail_upweighted({base, o.c, t, o.gamma});
        const double mass = p->mass_above();
        const double mean = ht::upweighted_mean(*p);
        const double kl = ht::upweighted_kl(*p);
        means.push_back(mean);
        kls.push_back(kl);
        csv.row({fmt17(t), fmt17(mass), fmt17(mean), fmt17(kl)});
        rows.push_back({{"t", t}, {"mass", mass}, {"mean", mean}, {"kl", kl}});
        std::printf("t=%-10g mass=%-12g mean=%-12g kl=%g\n", t, mass, mean, kl);
    }

    auto strictly = [](const std::vector<double>& v, bool increasing) {
        for (std::size_t i = 1; i < v.size(); ++i)
            if (increasing ? !(v[i] > v[i - 1]) : !(v[i] < v[i - 1])) return false;
        return v.size() >= 2;
    };
    const bool mean_inc = strictly(means, true);
    const bool kl_dec = strictly(kls, false);

    ordered_json summary = echo_json("tilt-sweep", echo);
    summary["rows"] = rows;
    summary["trend"] = {{"mean_increasing", mean_inc}, {"kl_decreasing", kl_dec}};
    summary["final"] = rows.back();
    write_json(out / "tilt_sweep_summary.json", summary);

    std::printf("trend: mean_increasing=%s kl_decreasing=%s\n", mean_inc ? "true" : "false",
                kl_dec ? "true" : "false");
    return 0;
}

// ---------------------------------------------------------------------------
// condition-sweep
// ---------------------------------------------------------------------------

struct ConditionSweepOpts {
    std::string v = "normal:0,1";
    std::string x = "pareto:1.5,1";
    std::vector<double> t_grid;  // default depends on mode
    std::string mode = "auto";   // auto | regions | light-ratio | mean-only
    std::string h_scheme = "sqrt_t";
    double light_c = 1.0;
    bool dependent = false;
    long long mc_samples = 0;
};

int run_condition_sweep(const GlobalOpts& g, const ConditionSweepOpts& o) {
    const auto out = ensure_out_dir(g.out_dir);

    if (o.dependent) {
        std::vector<double> grid = o.t_grid.empty() ? std::vector<double>{2, 10, 30} : o.t_grid;
        require_sorted_grid(grid, "--t");
        Echo echo{{"subcommand", "condition-sweep"},
                  {"dependent", "true"},
                  {"t", join_doubles(grid)},
                  {"mc_samples", std::to_string(o.mc_samples)},
                  {"seed", std::to_string(g.seed)}};
        std::vector<std::string> cols{"t", "conditional_mean"};
        if (o.mc_samples > 0) {
            cols.push_back("mc_mean");
            cols.push_back("mc_se");
            cols.push_back("mc_acceptance");
        }
        CsvFile csv(out / "condition_sweep.csv", echo, cols);
        ordered_json rows = ordered_json::array();
        double final_mean = 0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double t = grid[i];
            const double mean = ht::conditional_mean_dependent_counterexample(t);
            final_mean = mean;
            std::vector<std::string> cells{fmt17(t), fmt17(mean)};
            ordered_json row{{"t", t}, {"conditional_mean", mean}};
            if (o.mc_samples > 0) {
                ht::ConditioningProblem prob;
                prob.t = t;
                prob.dependence = ht::Dependence::vshaped_counterexample;
                const ht::McEstimate mc = ht::conditional_mean_mc(
                    prob, o.mc_samples, g.seed + static_cast<std::uint64_t>(i));
                cells.push_back(fmt17(mc.mean));
                cells.push_back(fmt17(mc.standard_error));
                cells.push_back(fmt17(mc.acceptance_rate));
                row["mc_mean"] = mc.mean;
                row["mc_se"] = mc.standard_error;
                row["mc_acceptance"] = mc.acceptance_rate;
            }
            csv.row(cells);
            rows.push_back(row);
            std::printf("t=%-8g conditional_mean=%.10g\n", t, mean);
        }
        ordered_json summary = echo_json("condition-sweep", echo);
        summary["mode"] = "dependent";
        summary["rows"] = rows;
        summary["final"] = {{"t", grid.back()},
                            {"conditional_mean", final_mean},
                            {"abs_conditional_mean", std::fabs(final_mean)}};
        write_json(out / "condition_sweep_summary.json", summary);
        return 0;
    }

    ht::DistPtr v_dist = ht::make_distribution(o.v);
    ht::DistPtr x_dist = ht::make_distribution(o.x);

    std::string mode = o.mode;
    if (mode == "auto") {
        const ht::TailClassification cls = ht::is_heavy_tailed(*x_dist);
        mode = cls.verdict == ht::TailClass::heavy
                   ? "regions"
                   : (cls.verdict == ht::TailClass::light ? "light-ratio" : "mean-only");
    }

    std::vector<double> grid = o.t_grid;
    if (grid.empty())
        grid = mode == "regions" ? std::vector<double>{1e2, 1e3, 1e4, 1e5, 1e6}
                                 : std::vector<double>{5, 10, 15, 20};
    require_sorted_grid(grid, "--t");

    Echo echo{{"subcommand", "condition-sweep"},
              {"v", o.v},
              {"x", o.x},
              {"t", join_doubles(grid)},
              {"mode", mode},
              {"h_scheme", o.h_scheme},
              {"light_c", fmt17(o.light_c)},
              {"mc_samples", std::to_string(o.mc_samples)},
              {"seed", std::to_string(g.seed)}};

    ordered_json summary = echo_json("condition-sweep", echo);
    summary["mode"] = mode;
    ordered_json rows = ordered_json::array();
    std::vector<double> means;

    if (mode == "regions") {
        const ht::HScheme kind =
            o.h_scheme == "log_power" ? ht::HScheme::log_power : ht::HScheme::sqrt_t;
        if (o.h_scheme != "sqrt_t" && o.h_scheme != "log_power")
            throw ht::InvalidParameter("--h-scheme", "must be sqrt_t or log_power");
        const ht::RegionScheme scheme = ht::choose_h(x_dist, kind);
        summary["h_scheme"] = {{"label", scheme.label},
                               {"insensitivity_decreasing", scheme.insensitivity_decreasing},
                               {"warning", scheme.warning}};

        CsvFile csv(out / "condition_sweep.csv", echo,
                    {"t", "h", "conditional_mean", "denominator", "r1_log_numerator",
                     "r2_log_numerator", "r3_log_numerator", "r4_log_numerator", "r1_mass",
                     "r2_mass", "r3_mass", "r4_mass", "lemma2_ratio", "log_lemma2_ratio",
                     "denom_lo_log", "denom_lo_sign", "denom_mid_log", "denom_mid_sign",
                     "denom_hi_log", "denom_hi_sign"});

        std::vector<ht::RegionTable> tables;
        for (double t : grid) {
            ht::ConditioningProblem prob{v_dist, x_dist, t, ht::Dependence::independent};
            const ht::RegionTable tab = ht::region_decomposition(prob, scheme);
            tables.push_back(tab);
            means.push_back(tab.conditional_mean);
            csv.row({fmt17(tab.t), fmt17(tab.h), fmt17(tab.conditional_mean),
                     fmt17(tab.denominator), fmt17(tab.regions[0].log_numerator),
                     fmt17(tab.regions[1].log_numerator), fmt17(tab.regions[2].log_numerator),
                     fmt17(tab.regions[3].log_numerator), fmt17(tab.regions[0].conditional_mass),
                     fmt17(tab.regions[1].conditional_mass),
                     fmt17(tab.regions[2].conditional_mass),
                     fmt17(tab.regions[3].conditional_mass), fmt17(tab.lemma2_ratio),
                     fmt17(tab.log_lemma2_ratio), fmt17(tab.denominator_piece_log[0]),
                     std::to_string(tab.denominator_piece_sign[0]),
                     fmt17(tab.denominator_piece_log[1]),
                     std::to_string(tab.denominator_piece_sign[1]),
                     fmt17(tab.denominator_piece_log[2]),
                     std::to_string(tab.denominator_piece_sign[2])});
            ordered_json row{{"t", tab.t},
                             {"h", tab.h},
                             {"conditional_mean", tab.conditional_mean},
                             {"denominator", tab.denominator},
                             {"lemma2_ratio", tab.lemma2_ratio},
                             {"log_lemma2_ratio", tab.log_lemma2_ratio}};
            ordered_json regions = ordered_json::array();
            for (const auto& r : tab.regions)
                regions.push_back({{"lo", r.lo},
                                   {"hi", r.hi},
                                   {"log_numerator", r.log_numerator},
                                   {"conditional_mass", r.conditional_mass}});
            row["regions"] = regions;
            rows.push_back(row);
            std::printf("t=%-10g mean=%.10g denom=%.10g log_lemma2=%.6g\n", tab.t,
                        tab.conditional_mean, tab.denominator, tab.log_lemma2_ratio);
        }

        // Trend flags over the top three grid points, in log space so deep-t
        // rows that underflow linear doubles still compare.
        const std::size_t n = tables.size();
        bool lemma2_dec = n >= 3;
        std::array<bool, 4> region_dec{n >= 3, n >= 3, n >= 3, n >= 3};
        if (n >= 3) {
            for (std::size_t i = n - 2; i < n; ++i) {
                if (!(tables[i].log_lemma2_ratio < tables[i - 1].log_lemma2_ratio))
                    lemma2_dec = false;
                for (int r = 0; r < 4; ++r)
                    if (!(tables[i].regions[r].log_numerator <
                          tables[i - 1].regions[r].log_numerator))
                        region_dec[r] = false;
            }
        }
        summary["trend"] = {{"lemma2_decreasing_top3", lemma2_dec},
                            {"region_numerators_decreasing_top3",
                             {region_dec[0], region_dec[1], region_dec[2], region_dec[3]}}};
        summary["final"] = {{"t", tables.back().t},
                            {"conditional_mean", tables.back().conditional_mean},
                            {"abs_conditional_mean", std::fabs(tables.back().conditional_mean)},
                            {"denominator", tables.back().denominator}};
    } else if (mode == "light-ratio") {
        const ht::LightTailRatioTable diag =
            ht::light_tail_ratio_diagnostic(*v_dist, *x_dist, o.light_c, grid);
        CsvFile csv(out / "condition_sweep.csv", echo,
                    {"t", "conditional_mean", "denominator", "numerator_shift", "ratio",
                     "log_ratio", "bound", "log_bound", "within_bound"});
        for (std::size_t i = 0; i < grid.size(); ++i) {
            ht::ConditioningProblem prob{v_dist, x_dist, grid[i],
                                         ht::Dependence::independent};
            const ht::ConditionalMeanDetail det = ht::conditional_mean_detail(prob);
            means.push_back(det.mean);
            const ht::LightTailRatioRow& r = diag.rows[i];
            csv.row({fmt17(grid[i]), fmt17(det.mean), fmt17(det.denominator),
                     fmt17(det.numerator_shift), fmt17(r.ratio), fmt17(r.log_ratio),
                     fmt17(r.bound), fmt17(r.log_bound), r.within_bound ? "1" : "0"});
            rows.push_back({{"t", grid[i]},
                            {"conditional_mean", det.mean},
                            {"denominator", det.denominator},
                            {"ratio", r.ratio},
                            {"log_ratio", r.log_ratio},
                            {"bound", r.bound},
                            {"log_bound", r.log_bound},
                            {"within_bound", r.within_bound}});
            std::printf("t=%-8g mean=%.10g log_ratio=%.6g log_bound=%.6g\n", grid[i], det.mean,
                        r.log_ratio, r.log_bound);
        }
        summary["trend"] = {{"ratio_decreasing", diag.ratio_decreasing}};
    } else if (mode == "mean-only") {
        CsvFile csv(out / "condition_sweep.csv", echo,
                    {"t", "conditional_mean", "denominator", "numerator_shift"});
        for (double t : grid) {
            ht::ConditioningProblem prob{v_dist, x_dist, t, ht::Dependence::independent};
            const ht::ConditionalMeanDetail det = ht::conditional_mean_detail(prob);
            means.push_back(det.mean);
            csv.row({fmt17(t), fmt17(det.mean), fmt17(det.denominator),
                     fmt17(det.numerator_shift)});
            rows.push_back({{"t", t},
                            {"conditional_mean", det.mean},
                            {"denominator", det.denominator},
                            {"numerator_shift", det.numerator_shift}});
            std::printf("t=%-8g mean=%.10g\n", t, det.mean);
        }
    } else {
        throw ht::InvalidParameter("--mode", "must be auto, regions, light-ratio or mean-only");
    }

    if (o.mc_samples > 0) {
        ordered_json mc_rows = ordered_json::array();
        for (std::size_t i = 0; i < grid.size(); ++i) {
            ht::ConditioningProblem prob{v_dist, x_dist, grid[i], ht::Dependence::independent};
            const ht::McEstimate mc = ht::conditional_mean_mc(
                prob, o.mc_samples, g.seed + static_cast<std::uint64_t>(i));
            mc_rows.push_back({{"t", grid[i]},
                               {"mc_mean", mc.mean},
                               {"mc_se", mc.standard_error},
                               {"mc_acceptance", mc.acceptance_rate},
                               {"quadrature_mean", means[i]},
                               {"abs_difference", std::fabs(mc.mean - means[i])}});
        }
        summary["monte_carlo"] = mc_rows;
    }

    auto strictly_inc = [&] {
        for (std::size_t i = 1; i < means.size(); ++i)
            if (!(means[i] > means[i - 1])) return false;
        return means.size() >= 2;
    };
    summary["rows"] = rows;
    ordered_json trend =
        summary.contains("trend") ? summary["trend"] : ordered_json::object();
    trend["mean_increasing"] = strictly_inc();
    trend["mean_gain"] = means.back() - means.front();
    summary["trend"] = trend;
    if (!summary.contains("final"))
        summary["final"] = {{"t", grid.back()},
                            {"conditional_mean", means.back()},
                            {"abs_conditional_mean", std::fabs(means.back())}};
    write_json(out / "condition_sweep_summary.json", summary);
    return 0;
}

// ---------------------------------------------------------------------------
// mdp-demo
// ---------------------------------------------------------------------------

struct MdpDemoOpts {
    std::string mdp_file;
    int alphabet = 3;
    int depth = 5;
    int return_atoms = 64;
    std::string return_dist = "pareto:1.5,1";
    double c = 2.5;
    double gamma = 1.0;
    std::vector<double> t_grid{7.812625};
    bool random_policy = false;
    bool emit_instance = false;
};

ht::Dmrmdp load_or_generate_mdp(const MdpDemoOpts& o) {
    if (!o.mdp_file.empty()) {
        std::ifstream in(o.mdp_file, std::ios::binary);
        if (!in) throw ht::ValidationError("cannot read mdp file " + o.mdp_file);
        std::string text((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
        return ht::mdp_from_json(text);
    }
    if (o.alphabet < 1) throw ht::InvalidParameter("--alphabet", "must be >= 1");
    if (o.depth < 1) throw ht::InvalidParameter("--depth", "must be >= 1");
    if (o.return_atoms < 1) throw ht::InvalidParameter("--return-atoms", "must be >= 1");
    ht::DistPtr ret = ht::make_distribution(o.return_dist);
    const int m = o.return_atoms;
    // Sink i carries a point return at the quantile midpoint (j + 1/2)/m of the
    // return law, cycling j = i mod m, so the pushforward under a uniform
    // policy approximates the law by its m-atom quantile discretization.
    return ht::token_chain(o.alphabet, o.depth, [ret, m](std::size_t i) -> ht::DistPtr {
        const int j = static_cast<int>(i % static_cast<std::size_t>(m));
        const double u = (static_cast<double>(j) + 0.5) / m;
        return std::make_shared<ht::Discrete>(
            std::vector<ht::Atom>{{ret->quantile(u), 1.0}});
    });
}

int run_mdp_demo(const GlobalOpts& g, const MdpDemoOpts& o) {
    require_sorted_grid(o.t_grid, "--t");
    const auto out = ensure_out_dir(g.out_dir);
    const ht::Dmrmdp mdp = load_or_generate_mdp(o);

    Echo echo{{"subcommand", "mdp-demo"},
              {"mdp_file", o.mdp_file.empty() ? "(generated token chain)" : o.mdp_file},
              {"alphabet", std::to_string(o.alphabet)},
              {"depth", std::to_string(o.depth)},
              {"return_atoms", std::to_string(o.return_atoms)},
              {"return_dist", o.return_dist},
              {"c", fmt17(o.c)},
              {"gamma", fmt17(o.gamma)},
              {"t", join_doubles(o.t_grid)},
              {"policy", o.random_policy ? "random" : "uniform"},
              {"seed", std::to_string(g.seed)}};

    if (o.emit_instance) {
        std::ofstream inst(out / "mdp_instance.json", std::ios::binary);
        if (!inst) throw ht::ValidationError("cannot open mdp_instance.json");
        inst << ht::to_json(mdp) << "\n";
    }

    const ht::Policy pi0 =
        o.random_policy ? ht::random_policy(mdp, g.seed) : ht::uniform_policy(mdp);
    const ht::TrajectoryDist base = ht::enumerate_trajectories(mdp, pi0);
    const double base_mean = ht::mean_return(mdp, base);
    std::printf("instance: %d states, %d actions, %zu trajectories, base mean %.10g\n",
                mdp.n_states(), mdp.n_actions(), base.trajectories.size(), base_mean);

    CsvFile csv(out / "mdp_demo.csv", echo,
                {"t", "mean", "tv_lift_roundtrip", "avg_state_kl", "sum_state_kl", "kl_trajectory",
                 "kl_pushforward", "kl_conditional"});
    ordered_json rows = ordered_json::array();
    for (double t : o.t_grid) {
        const ht::TrajectoryDist up = ht::upweight_trajectories(mdp, base, o.c, t, o.gamma);
        const ht::Policy lifted = ht::lift_policy(mdp, up);
        const ht::TrajectoryDist relift = ht::enumerate_trajectories(mdp, lifted);
        const double tv = ht::total_variation(up, relift);
        const ht::PerStateKl ps = ht::per_state_policy_kl(mdp, relift, lifted, pi0);
        const ht::KlDecomposition dec = ht::kl_decomposition(mdp, up, base);
        const double mean = ht::mean_return(mdp, up);
        csv.row({fmt17(t), fmt17(mean), fmt17(tv), fmt17(ps.average_form), fmt17(ps.sum_form),
                 fmt17(dec.trajectory), fmt17(dec.pushforward), fmt17(dec.conditional)});
        rows.push_back({{"t", t},
                        {"mean", mean},
                        {"tv_lift_roundtrip", tv},
                        {"avg_state_kl", ps.average_form},
                        {"sum_state_kl", ps.sum_form},
                        {"kl_trajectory", dec.trajectory},
                        {"kl_pushforward", dec.pushforward},
                        {"kl_conditional", dec.conditional}});
        std::printf("t=%-10g mean=%.10g tv=%.3e avg_kl=%.10g traj_kl=%.10g\n", t, mean, tv,
                    ps.average_form, dec.trajectory);
    }

    ordered_json report = echo_json("mdp-demo", echo);
    report["instance"] = {{"states", mdp.n_states()},
                          {"actions", mdp.n_actions()},
                          {"max_depth", mdp.max_depth()},
                          {"trajectories", base.trajectories.size()},
                          {"base_mean", base_mean}};
    report["rows"] = rows;
    write_json(out / "mdp_demo.json", report);
    return 0;
}

// ---------------------------------------------------------------------------
// tails
// ---------------------------------------------------------------------------

struct TailsOpts {
    std::string input;
    std::string format = "csv";
    std::string generate;
    std::size_t n = 100000;
    std::string k_grid = "auto";
};

std::vector<int> parse_k_grid(const std::string& text) {
    if (text == "auto") return {};
    std::vector<int> grid;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t next = text.find(',', pos);
        if (next == std::string::npos) next = text.size();
        const std::string token = text.substr(pos, next - pos);
        try {
            std::size_t used = 0;
            const int k = std::stoi(token, &used);
            if (used != token.size()) throw std::invalid_argument(token);
            grid.push_back(k);
        } catch (const std::exception&) {
            throw ht::InvalidParameter("--k-grid", "bad entry '" + token + "'");
        }
        pos = next + 1;
    }
    if (grid.empty()) throw ht::InvalidParameter("--k-grid", "must be 'auto' or a comma list");
    return grid;
}

int run_tails(const GlobalOpts& g, const TailsOpts& o) {
    if (o.input.empty() == o.generate.empty())
        throw ht::ValidationError("pass exactly one of --input FILE or --generate SPEC");

    ht::SampleSet samples;
    if (!o.input.empty()) {
        ht::SampleFormat fmt;
        if (o.format == "csv")
            fmt = ht::SampleFormat::csv_single_column;
        else if (o.format == "json")
            fmt = ht::SampleFormat::json_array;
        else
            throw ht::InvalidParameter("--format", "must be csv or json");
        samples = ht::ingest_samples(o.input, fmt);
    } else {
        if (o.n < 30) throw ht::InvalidParameter("--n", "need at least 30 samples");
        ht::DistPtr d = ht::make_distribution(o.generate);
        ht::Rng rng(g.seed);
        samples.values = d->sample(rng, o.n);
        samples.source = o.generate;
        samples.seed = g.seed;
    }

    const std::vector<int> k_grid = parse_k_grid(o.k_grid);
    const ht::TailReport report = ht::tail_verdict(samples, k_grid);

    const auto out = ensure_out_dir(g.out_dir);
    Echo echo{{"subcommand", "tails"},
              {"input", o.input.empty() ? "(generated)" : o.input},
              {"format", o.format},
              {"generate", o.generate.empty() ? "(none)" : o.generate},
              {"n", std::to_string(samples.values.size())},
              {"k_grid", o.k_grid},
              {"seed", std::to_string(g.seed)}};

    {
        CsvFile csv(out / "hill.csv", echo, {"k", "estimate", "standard_error"});
        for (const auto& p : report.hill_curve)
            csv.row({std::to_string(p.k), fmt17(p.estimate), fmt17(p.standard_error)});
    }
    {
        CsvFile csv(out / "normal_qq.csv", echo, {"theoretical", "empirical"});
        for (const auto& [th, em] : report.normal_qq.points) csv.row({fmt17(th), fmt17(em)});
    }
    {
        CsvFile csv(out / "exp_qq.csv", echo, {"theoretical", "empirical"});
        for (const auto& [th, em] : report.exp_qq.points) csv.row({fmt17(th), fmt17(em)});
    }

    auto plot_json = [](const ht::QqPlot& p) {
        return ordered_json{{"points", p.points.size()},
                            {"linearity", p.linearity},
                            {"curvature", p.curvature},
                            {"curvature_sign", p.curvature_sign}};
    };
    ordered_json j = echo_json("tails", echo);
    j["verdict"] = ht::to_string(report.verdict);
    j["rule_trace"] = report.rule_trace;
    j["hill_shift"] = report.hill_shift;
    ordered_json hill = ordered_json::array();
    for (const auto& p : report.hill_curve)
        hill.push_back(
            {{"k", p.k}, {"estimate", p.estimate}, {"standard_error", p.standard_error}});
    j["hill"] = hill;
    j["normal_qq"] = plot_json(report.normal_qq);
    j["exp_qq"] = plot_json(report.exp_qq);
    write_json(out / "tail_report.json", j);

    std::printf("verdict: %s\n", ht::to_string(report.verdict).c_str());
    for (const auto& line : report.rule_trace) std::printf("  %s\n", line.c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// kl-calc
// ---------------------------------------------------------------------------

struct KlCalcOpts {
    double alpha = 0.0;
    double log_q = 0.0;
    double delta_reward = 0.0;
};

int run_kl_calc(const GlobalOpts& g, const KlCalcOpts& o) {
    const ht::MixtureKl kl = ht::mixture_kl({o.alpha, o.log_q, o.delta_reward});
    const auto out = ensure_out_dir(g.out_dir);
    Echo echo{{"subcommand", "kl-calc"},
              {"alpha", fmt17(o.alpha)},
              {"log_q", fmt17(o.log_q)},
              {"delta_reward", fmt17(o.delta_reward)}};
    ordered_json j = echo_json("kl-calc", echo);
    j["exact_kl"] = kl.exact_kl;
    j["first_order_kl"] = kl.first_order_kl;
    j["expected_reward_gain"] = kl.expected_reward_gain;
    j["first_order_regime"] = kl.first_order_regime;
    write_json(out / "kl_calc.json", j);
    std::printf("first_order_kl=%.17g\nexact_kl=%.17g\nexpected_reward_gain=%.17g\n"
                "first_order_regime=%s\n",
                kl.first_order_kl, kl.exact_kl, kl.expected_reward_gain,
                kl.first_order_regime ? "true" : "false");
    return 0;
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

struct VerifyOpts {
    std::vector<std::string> only;
    bool break_tilt_formula = false;
};

int run_verify_cmd(const GlobalOpts& g, const VerifyOpts& o) {
    ht::verify::VerifyOptions opt;
    opt.only = o.only;
    opt.break_tilt_formula = o.break_tilt_formula;
    opt.seed = g.seed;
    const ht::verify::VerifyReport report = ht::verify::run_verify(opt);

    const auto out = ensure_out_dir(g.out_dir);
    std::string only_echo;
    for (std::size_t i = 0; i < o.only.size(); ++i)
        only_echo += (i ? "," : "") + o.only[i];
    Echo echo{{"subcommand", "verify"},
              {"only", o.only.empty() ? "(all)" : only_echo},
              {"break_tilt_formula", o.break_tilt_formula ? "true" : "false"},
              {"seed", std::to_string(g.seed)}};

    ordered_json checks = ordered_json::array();
    for (const auto& c : report.checks) {
        checks.push_back({{"suite", c.suite},
                          {"name", c.name},
                          {"pass", c.pass},
                          {"measured", c.measured},
                          {"bound", c.bound},
                          {"detail", c.detail}});
        std::printf("[%s] %s/%s: %s (measured=%.10g, bound=%.10g)\n", c.pass ? "PASS" : "FAIL",
                    c.suite.c_str(), c.name.c_str(), c.detail.c_str(), c.measured, c.bound);
    }
    ordered_json j = echo_json("verify", echo);
    j["checks"] = checks;
    j["total"] = report.checks.size();
    j["failures"] = report.failures();
    j["all_passed"] = report.all_passed();
    write_json(out / "verify_report.json", j);

    std::printf("verify: %zu checks, %zu failures\n", report.checks.size(), report.failures());
    return report.all_passed() ? 0 : 3;
}

}  // namespace

// ---------------------------------------------------------------------------
// main
// ---------------------------------------------------------------------------

int main(int argc, char** argv) {
    CLI::App app{"heavytails: tail-upweighting, tilting, conditioning, MDP and "
                 "tail-diagnostic experiments"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from a TOML/INI file (flags win)");

    GlobalOpts g;
    app.add_option("--seed", g.seed, "Master seed for all sampling")->capture_default_str();
    app.add_option("--out", g.out_dir, "Output directory for emitted files")
        ->capture_default_str();

    TiltSweepOpts tilt;
    CLI::App* tilt_cmd = app.add_subcommand(
        "tilt-sweep", "Tail-upweighting sweep: mass, mean and KL along a threshold grid");
    tilt_cmd->add_option("--base", tilt.base, "Base distribution spec")->capture_default_str();
    tilt_cmd->add_option("--c", tilt.c, "Asymptotic mean target")->capture_default_str();
    tilt_cmd->add_option("--gamma", tilt.gamma, "Mass exponent: mass above t is c/t^gamma")
        ->capture_default_str();
    tilt_cmd->add_option("--t", tilt.t_grid, "Threshold grid (comma separated, increasing)")
        ->delimiter(',')
        ->capture_default_str();
    tilt_cmd->add_flag("--allow-light", tilt.allow_light,
                       "Sweep a base that does not classify heavy-tailed");

    ConditionSweepOpts cond;
    CLI::App* cond_cmd = app.add_subcommand(
        "condition-sweep", "Conditional mean of V given X+V >= t along a threshold grid");
    cond_cmd->add_option("--v", cond.v, "V distribution spec")->capture_default_str();
    cond_cmd->add_option("--x", cond.x, "X distribution spec")->capture_default_str();
    cond_cmd->add_option("--t", cond.t_grid, "Threshold grid (comma separated, increasing)")
        ->delimiter(',');
    cond_cmd->add_option("--mode", cond.mode, "auto | regions | light-ratio | mean-only")
        ->capture_default_str();
    cond_cmd->add_option("--h-scheme", cond.h_scheme, "Region window: sqrt_t | log_power")
        ->capture_default_str();
    cond_cmd->add_option("--light-c", cond.light_c, "Cut point for the light-tail ratio")
        ->capture_default_str();
    cond_cmd->add_flag("--dependent", cond.dependent,
                       "Use the built-in dependent counterexample law");
    cond_cmd->add_option("--mc-samples", cond.mc_samples,
                         "Rejection-sampling cross-check sample count (0 = off)")
        ->capture_default_str();

    MdpDemoOpts mdp;
    CLI::App* mdp_cmd = app.add_subcommand(
        "mdp-demo", "Trajectory upweighting, policy lift and KL accounting on a small MDP");
    mdp_cmd->add_option("--mdp", mdp.mdp_file, "MDP instance JSON file (else a token chain)");
    mdp_cmd->add_option("--alphabet", mdp.alphabet, "Token-chain alphabet size")
        ->capture_default_str();
    mdp_cmd->add_option("--depth", mdp.depth, "Token-chain depth")->capture_default_str();
    mdp_cmd->add_option("--return-atoms", mdp.return_atoms,
                        "Quantile discretization size for sink returns")
        ->capture_default_str();
    mdp_cmd->add_option("--return-dist", mdp.return_dist, "Sink return distribution spec")
        ->capture_default_str();
    mdp_cmd->add_option("--c", mdp.c, "Upweighting mean target")->capture_default_str();
    mdp_cmd->add_option("--gamma", mdp.gamma, "Upweighting mass exponent")
        ->capture_default_str();
    mdp_cmd->add_option("--t", mdp.t_grid, "Upweighting threshold grid (comma separated)")
        ->delimiter(',')
        ->capture_default_str();
    mdp_cmd->add_flag("--random-policy", mdp.random_policy,
                      "Seeded random base policy instead of uniform");
    mdp_cmd->add_flag("--emit-instance", mdp.emit_instance,
                      "Also write the instance as mdp_instance.json");

    TailsOpts tails;
    CLI::App* tails_cmd = app.add_subcommand(
        "tails", "Hill curve, probability plots and tail verdict for a sample");
    tails_cmd->add_option("--input", tails.input, "Sample file to ingest");
    tails_cmd->add_option("--format", tails.format, "Input format: csv | json")
        ->capture_default_str();
    tails_cmd->add_option("--generate", tails.generate,
                          "Generate samples from this distribution spec instead");
    tails_cmd->add_option("--n", tails.n, "Sample count for --generate")->capture_default_str();
    tails_cmd->add_option("--k-grid", tails.k_grid, "auto or comma list of k values")
        ->capture_default_str();

    KlCalcOpts klc;
    CLI::App* kl_cmd = app.add_subcommand(
        "kl-calc", "Mixture KL of upweighting one event: exact and first order");
    kl_cmd->add_option("--alpha", klc.alpha, "Mixture weight in (0,1)")->required();
    kl_cmd->add_option("--log-q", klc.log_q, "Log base probability of the event")->required();
    kl_cmd->add_option("--delta-reward", klc.delta_reward,
                       "Event reward minus base mean reward")
        ->capture_default_str();

    VerifyOpts ver;
    CLI::App* ver_cmd =
        app.add_subcommand("verify", "Run the library's invariant suites and report");
    ver_cmd->add_option("--only", ver.only, "Comma list of suites to run")->delimiter(',');
    ver_cmd->add_flag("--break-tilt-formula", ver.break_tilt_formula,
                      "Negative control: perturb the tilt mean cross-check");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (tilt_cmd->parsed()) return run_tilt_sweep(g, tilt);
        if (cond_cmd->parsed()) return run_condition_sweep(g, cond);
        if (mdp_cmd->parsed()) return run_mdp_demo(g, mdp);
        if (tails_cmd->parsed()) return run_tails(g, tails);
        if (kl_cmd->parsed()) return run_kl_calc(g, klc);
        if (ver_cmd->parsed()) return run_verify_cmd(g, ver);
    } catch (const ht::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const ht::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
