#include "heavytails/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "heavytails/errors.hpp"
#include "heavytails/families.hpp"
#include "heavytails/log_space.hpp"
#include "heavytails/rng.hpp"

namespace heavytails {

namespace {

constexpr double kMaxTrajectories = 1e7;

}  // namespace

Dmrmdp::Dmrmdp(const Builder& b) : max_depth_(b.max_depth) {
    if (b.states.empty()) throw InvalidParameter("states", "must be nonempty");
    if (b.actions.empty()) throw InvalidParameter("actions", "must be nonempty");
    if (b.max_depth <= 0) throw InvalidParameter("max_depth", "must be positive");
    state_names_ = b.states;
    action_names_ = b.actions;

    std::map<std::string, int> sidx, aidx;
    for (int i = 0; i < n_states(); ++i) {
        if (!sidx.emplace(state_names_[i], i).second)
            throw InvalidParameter("states", "duplicate state " + state_names_[i]);
    }
    for (int i = 0; i < n_actions(); ++i) {
        if (!aidx.emplace(action_names_[i], i).second)
            throw InvalidParameter("actions", "duplicate action " + action_names_[i]);
    }

    sink_.assign(n_states(), false);
    for (const std::string& s : b.sinks) {
        auto it = sidx.find(s);
        if (it == sidx.end()) throw InvalidParameter("sinks", "unknown state " + s);
        sink_[it->second] = true;
    }

    transition_.assign(n_states(), std::vector<int>(n_actions(), -1));
    for (int s = 0; s < n_states(); ++s) {
        if (sink_[s]) continue;
        auto row = b.transition.find(state_names_[s]);
        if (row == b.transition.end())
            throw InvalidParameter("transition",
                                   "missing row for non-sink state " + state_names_[s]);
        for (int a = 0; a < n_actions(); ++a) {
            auto cell = row->second.find(action_names_[a]);
            if (cell == row->second.end())
                throw InvalidParameter("transition", "state " + state_names_[s] +
                                                         " missing action " +
                                                         action_names_[a]);
            auto dest = sidx.find(cell->second);
            if (dest == sidx.end())
                throw InvalidParameter("transition", "unknown destination " + cell->second);
            transition_[s][a] = dest->second;
        }
    }

    double start_total = 0.0;
    for (const auto& [name, p] : b.start) {
        auto it = sidx.find(name);
        if (it == sidx.end()) throw InvalidParameter("start", "unknown state " + name);
        if (sink_[it->second])
            throw InvalidParameter("start", "sink state " + name + " cannot start");
        if (!(p > 0.0)) throw InvalidParameter("start", "probabilities must be positive");
        start_.emplace_back(it->second, p);
        start_total += p;
    }
    if (start_.empty()) throw InvalidParameter("start", "must be nonempty");
    if (std::fabs(start_total - 1.0) > 1e-12)
        throw InvalidParameter("start", "probabilities must sum to 1");
    std::sort(start_.begin(), start_.end());

    returns_.assign(n_states(), nullptr);
    mean_returns_.assign(n_states(), 0.0);
    for (int s = 0; s < n_states(); ++s) {
        if (!sink_[s]) continue;
        auto it = b.returns.find(state_names_[s]);
        if (it == b.returns.end() || !it->second)
            throw InvalidParameter("returns", "missing for sink " + state_names_[s]);
        if (!it->second->atoms())
            throw InvalidParameter("returns", "sink " + state_names_[s] +
                                                  " needs a finite-atom distribution");
        returns_[s] = it->second;
        mean_returns_[s] = *returns_[s]->mean();
    }

    // Termination under every policy: longest path to a sink must be finite
    // (no reachable cycle) and bounded by max_depth. Colors: 0 new, 1 on the
    // current path, 2 done.
    std::vector<int> color(n_states(), 0), depth(n_states(), 0);
    std::function<int(int)> longest = [&](int s) -> int {
        if (sink_[s]) return 0;
        if (color[s] == 1)
            throw InvalidParameter("transition", "cycle reachable through state " +
                                                     state_names_[s] +
                                                     "; some policy never terminates");
        if (color[s] == 2) return depth[s];
        color[s] = 1;
        int worst = 0;
        for (int a = 0; a < n_actions(); ++a)
            worst = std::max(worst, 1 + longest(transition_[s][a]));
        color[s] = 2;
        depth[s] = worst;
        return worst;
    };
    for (const auto& [s, p] : start_) {
        (void)p;
        if (longest(s) > max_depth_)
            throw InvalidParameter("max_depth",
                                   "a trajectory from " + state_names_[s] +
                                       " can exceed the declared bound");
    }
}

int Dmrmdp::state_index(const std::string& name) const {
    for (int i = 0; i < n_states(); ++i)
        if (state_names_[i] == name) return i;
    throw InvalidParameter("state", "unknown state " + name);
}

int Dmrmdp::action_index(const std::string& name) const {
    for (int i = 0; i < n_actions(); ++i)
        if (action_names_[i] == name) return i;
    throw InvalidParameter("action", "unknown action " + name);
}

const DistPtr& Dmrmdp::return_dist(int sink) const {
    if (!sink_[sink])
        throw InvalidParameter("sink", state_names_[sink] + " is not a sink");
    return returns_[sink];
}

double Dmrmdp::mean_return(int sink) const {
    if (!sink_[sink])
        throw InvalidParameter("sink", state_names_[sink] + " is not a sink");
    return mean_returns_[sink];
}

double Dmrmdp::trajectory_count() const {
    std::vector<double> memo(n_states(), -1.0);
    std::function<double(int)> count = [&](int s) -> double {
        if (sink_[s]) return 1.0;
        if (memo[s] >= 0.0) return memo[s];
        double total = 0.0;
        for (int a = 0; a < n_actions(); ++a) total += count(transition_[s][a]);
        memo[s] = total;
        return total;
    };
    double total = 0.0;
    for (const auto& [s, p] : start_) {
        (void)p;
        total += count(s);
    }
    return total;
}

Policy uniform_policy(const Dmrmdp& mdp) {
    Policy pi;
    pi.action_probs.assign(
        mdp.n_states(),
        std::vector<double>(mdp.n_actions(), 1.0 / mdp.n_actions()));
    return pi;
}

Policy random_policy(const Dmrmdp& mdp, std::uint64_t seed) {
    Rng rng(seed);
    Policy pi;
    pi.action_probs.assign(mdp.n_states(), {});
    for (int s = 0; s < mdp.n_states(); ++s) {
        std::vector<double>& row = pi.action_probs[s];
        row.resize(mdp.n_actions());
        double total = 0.0;
        for (double& p : row) {
            p = 0.05 + rng.uniform();  // bounded away from 0 to keep support full
            total += p;
        }
        for (double& p : row) p /= total;
    }
    return pi;
}

double TrajectoryDist::total_mass() const {
    double m = 0.0;
    for (const Trajectory& tr : trajectories) m += tr.prob;
    return m;
}

namespace {

void validate_policy(const Dmrmdp& mdp, const Policy& policy) {
    if (static_cast<int>(policy.action_probs.size()) != mdp.n_states())
        throw InvalidParameter("policy", "row count must equal the state count");
    for (int s = 0; s < mdp.n_states(); ++s) {
        if (mdp.is_sink(s)) continue;
        const std::vector<double>& row = policy.action_probs[s];
        if (static_cast<int>(row.size()) != mdp.n_actions())
            throw InvalidParameter("policy", "row width must equal the action count");
        double total = 0.0;
        for (double p : row) {
            if (!(p >= 0.0)) throw InvalidParameter("policy", "probabilities must be >= 0");
            total += p;
        }
        if (std::fabs(total - 1.0) > 1e-12)
            throw InvalidParameter("policy", "row for state " + mdp.state_name(s) +
                                                 " must sum to 1");
    }
}

void check_same_support_shape(const TrajectoryDist& p, const TrajectoryDist& q) {
    if (p.trajectories.size() != q.trajectories.size())
        throw SupportMismatch("trajectory lists differ in size");
    for (std::size_t i = 0; i < p.trajectories.size(); ++i) {
        if (p.trajectories[i].states != q.trajectories[i].states ||
            p.trajectories[i].actions != q.trajectories[i].actions)
            throw SupportMismatch("trajectory lists disagree at index " +
                                  std::to_string(i));
    }
}

}  // namespace

TrajectoryDist enumerate_trajectories(const Dmrmdp& mdp, const Policy& policy) {
    validate_policy(mdp, policy);
    const double count = mdp.trajectory_count();
    if (count > kMaxTrajectories)
        throw SizeBoundExceeded("instance has " + std::to_string(count) +
                                " trajectories; bound is 1e7");

    TrajectoryDist out;
    out.trajectories.reserve(static_cast<std::size_t>(count));
    std::vector<int> states, actions;
    std::function<void(int, double)> dfs = [&](int s, double prob) {
        states.push_back(s);
        if (mdp.is_sink(s)) {
            Trajectory tr;
            tr.states = states;
            tr.actions = actions;
            tr.prob = prob;
            tr.g = mdp.mean_return(s);
            out.trajectories.push_back(std::move(tr));
        } else {
            for (int a = 0; a < mdp.n_actions(); ++a) {
                const double pa = policy.action_probs[s][a];
                actions.push_back(a);
                dfs(mdp.next_state(s, a), prob * pa);
                actions.pop_back();
            }
        }
        states.pop_back();
    };
    for (const auto& [s, p] : mdp.start()) dfs(s, p);
    return out;
}

DistPtr return_distribution(const Dmrmdp& mdp, const TrajectoryDist& traj) {
    std::map<int, double> sink_mass;
    for (const Trajectory& tr : traj.trajectories)
        sink_mass[tr.states.back()] += tr.prob;
    std::vector<Atom> mixture;
    for (const auto& [sink, mass] : sink_mass) {
        const auto atoms = mdp.return_dist(sink)->atoms();
        for (const Atom& a : *atoms) mixture.push_back({a.value, a.prob * mass});
    }
    return std::make_shared<Discrete>(std::move(mixture));
}

double mean_return(const Dmrmdp& mdp, const TrajectoryDist& traj) {
    (void)mdp;
    double m = 0.0;
    for (const Trajectory& tr : traj.trajectories) m += tr.prob * tr.g;
    return m;
}

TrajectoryDist upweight_trajectories(const Dmrmdp& mdp, const TrajectoryDist& base,
                                     double c, double t, double gamma) {
    (void)mdp;
    if (!(c > 0.0)) throw InvalidParameter("c", "must be positive");
    if (!(t > c)) throw InvalidParameter("t", "must exceed c");
    if (!(gamma > 0.0) || !(gamma <= 1.0))
        throw InvalidParameter("gamma", "must lie in (0, 1]");
    const double m = c / std::pow(t, gamma);
    if (!(m < 1.0)) throw InvalidParameter("c", "mass c/t^gamma must be below 1");

    double upper = 0.0;
    for (const Trajectory& tr : base.trajectories)
        if (tr.g > t) upper += tr.prob;
    if (upper <= 0.0)
        throw EmptyUpperTail("no trajectory has mean return above t=" +
                             std::to_string(t));
    const double lower = 1.0 - upper;
    if (lower <= 0.0)
        throw InvalidParameter("t", "threshold below every trajectory return");

    TrajectoryDist out = base;
    const double up_factor = m / upper;
    const double down_factor = (1.0 - m) / lower;
    for (Trajectory& tr : out.trajectories)
        tr.prob *= (tr.g > t ? up_factor : down_factor);
    return out;
}

Policy lift_policy(const Dmrmdp& mdp, const TrajectoryDist& rho, const Policy* fallback,
                   std::vector<std::string>* warnings) {
    if (fallback) validate_policy(mdp, *fallback);
    // visit[s][a] = rho-mass of trajectories taking a at s.
    std::vector<std::vector<double>> visit(mdp.n_states(),
                                           std::vector<double>(mdp.n_actions(), 0.0));
    for (const Trajectory& tr : rho.trajectories)
        for (std::size_t i = 0; i < tr.actions.size(); ++i)
            visit[tr.states[i]][tr.actions[i]] += tr.prob;

    Policy pi = fallback ? *fallback : uniform_policy(mdp);
    for (int s = 0; s < mdp.n_states(); ++s) {
        if (mdp.is_sink(s)) continue;
        double mass = 0.0;
        for (int a = 0; a < mdp.n_actions(); ++a) mass += visit[s][a];
        if (mass > 0.0) {
            for (int a = 0; a < mdp.n_actions(); ++a)
                pi.action_probs[s][a] = visit[s][a] / mass;
        } else if (warnings) {
            warnings->push_back("state " + mdp.state_name(s) +
                                " never visited; fallback row kept");
        }
    }
    return pi;
}

double trajectory_kl(const TrajectoryDist& p, const TrajectoryDist& q) {
    check_same_support_shape(p, q);
    double kl = 0.0;
    for (std::size_t i = 0; i < p.trajectories.size(); ++i) {
        const double pp = p.trajectories[i].prob;
        const double qq = q.trajectories[i].prob;
        if (pp == 0.0) continue;
        if (qq == 0.0)
            throw SupportMismatch("p has mass on trajectory " + std::to_string(i) +
                                  " where q has none");
        kl += pp * std::log(pp / qq);
    }
    return std::max(kl, 0.0);
}

double total_variation(const TrajectoryDist& p, const TrajectoryDist& q) {
    check_same_support_shape(p, q);
    double tv = 0.0;
    for (std::size_t i = 0; i < p.trajectories.size(); ++i)
        tv += std::fabs(p.trajectories[i].prob - q.trajectories[i].prob);
    return 0.5 * tv;
}

KlDecomposition kl_decomposition(const Dmrmdp& mdp, const TrajectoryDist& p,
                                 const TrajectoryDist& q) {
    (void)mdp;
    check_same_support_shape(p, q);
    // Group by the exact mean-return value (identical doubles across p and q
    // since both lists come from the same instance).
    std::map<double, std::pair<double, double>> by_g;
    for (std::size_t i = 0; i < p.trajectories.size(); ++i) {
        auto& cell = by_g[p.trajectories[i].g];
        cell.first += p.trajectories[i].prob;
        cell.second += q.trajectories[i].prob;
    }
    double push = 0.0;
    for (const auto& [g, masses] : by_g) {
        (void)g;
        if (masses.first == 0.0) continue;
        if (masses.second == 0.0)
            throw SupportMismatch("pushforward of p has mass where q has none");
        push += masses.first * std::log(masses.first / masses.second);
    }
    KlDecomposition out;
    out.trajectory = trajectory_kl(p, q);
    out.pushforward = std::max(push, 0.0);
    out.conditional = out.trajectory - out.pushforward;
    return out;
}

PerStateKl per_state_policy_kl(const Dmrmdp& mdp, const TrajectoryDist& weight,
                               const Policy& pi, const Policy& pi0) {
    validate_policy(mdp, pi);
    validate_policy(mdp, pi0);
    // Per-state action KL, computed once per state.
    std::vector<double> state_kl(mdp.n_states(), 0.0);
    for (int s = 0; s < mdp.n_states(); ++s) {
        if (mdp.is_sink(s)) continue;
        double kl = 0.0;
        for (int a = 0; a < mdp.n_actions(); ++a) {
            const double pp = pi.action_probs[s][a];
            if (pp == 0.0) continue;
            const double qq = pi0.action_probs[s][a];
            if (qq == 0.0)
                throw SupportMismatch("policy has mass on action " +
                                      mdp.action_name(a) + " at state " +
                                      mdp.state_name(s) + " where the base has none");
            kl += pp * std::log(pp / qq);
        }
        state_kl[s] = std::max(kl, 0.0);
    }

    PerStateKl out{0.0, 0.0};
    for (const Trajectory& tr : weight.trajectories) {
        double sum = 0.0;
        const std::size_t decisions = tr.actions.size();
        for (std::size_t i = 0; i < decisions; ++i) sum += state_kl[tr.states[i]];
        out.sum_form += tr.prob * sum;
        if (decisions > 0)
            out.average_form += tr.prob * sum / static_cast<double>(decisions);
    }
    return out;
}

Dmrmdp token_chain(int alphabet, int depth,
                   const std::function<DistPtr(std::size_t)>& returns) {
    if (alphabet < 1 || alphabet > 36)
        throw InvalidParameter("alphabet", "must lie in [1, 36]");
    if (depth < 1) throw InvalidParameter("depth", "must be positive");
    const double n_sinks = std::pow(static_cast<double>(alphabet), depth);
    if (n_sinks > kMaxTrajectories)
        throw SizeBoundExceeded("token chain would have " + std::to_string(n_sinks) +
                                " sinks; bound is 1e7");

    auto token = [](int i) -> char {
        return i < 10 ? static_cast<char>('0' + i) : static_cast<char>('a' + i - 10);
    };

    Dmrmdp::Builder b;
    b.max_depth = depth;
    b.start[""] = 1.0;
    for (int a = 0; a < alphabet; ++a) b.actions.push_back(std::string(1, token(a)));

    // Breadth-first generation of all strings up to length `depth`, so sink
    // order is lexicographic within each length tier.
    std::vector<std::string> frontier{""};
    std::size_t sink_counter = 0;
    for (int len = 0; len <= depth; ++len) {
        std::vector<std::string> next;
        for (const std::string& s : frontier) {
            b.states.push_back(s);
            if (len == depth) {
                b.sinks.push_back(s);
                b.returns[s] = returns(sink_counter++);
            } else {
                for (int a = 0; a < alphabet; ++a) {
                    const std::string child = s + token(a);
                    b.transition[s][std::string(1, token(a))] = child;
                    next.push_back(child);
                }
            }
        }
        frontier = std::move(next);
    }
    return Dmrmdp(b);
}

std::string to_json(const Dmrmdp& mdp) {
    nlohmann::json j;
    j["max_depth"] = mdp.max_depth();
    for (int s = 0; s < mdp.n_states(); ++s) j["states"].push_back(mdp.state_name(s));
    for (int a = 0; a < mdp.n_actions(); ++a) j["actions"].push_back(mdp.action_name(a));
    nlohmann::json start = nlohmann::json::object();
    for (const auto& [s, p] : mdp.start()) start[mdp.state_name(s)] = p;
    j["start"] = start;
    nlohmann::json sinks = nlohmann::json::array();
    nlohmann::json transitions = nlohmann::json::object();
    nlohmann::json returns = nlohmann::json::object();
    for (int s = 0; s < mdp.n_states(); ++s) {
        if (mdp.is_sink(s)) {
            sinks.push_back(mdp.state_name(s));
            nlohmann::json atoms = nlohmann::json::array();
            const auto sink_atoms = mdp.return_dist(s)->atoms();
            for (const Atom& a : *sink_atoms)
                atoms.push_back({{"value", a.value}, {"prob", a.prob}});
            returns[mdp.state_name(s)] = atoms;
        } else {
            nlohmann::json row = nlohmann::json::object();
            for (int a = 0; a < mdp.n_actions(); ++a)
                row[mdp.action_name(a)] = mdp.state_name(mdp.next_state(s, a));
            transitions[mdp.state_name(s)] = row;
        }
    }
    j["sinks"] = sinks;
    j["transitions"] = transitions;
    j["returns"] = returns;
    return j.dump(2);
}

Dmrmdp mdp_from_json(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("mdp json: ") + e.what());
    }
    try {
        Dmrmdp::Builder b;
        b.max_depth = j.at("max_depth").get<int>();
        for (const auto& s : j.at("states")) b.states.push_back(s.get<std::string>());
        for (const auto& a : j.at("actions")) b.actions.push_back(a.get<std::string>());
        for (const auto& [k, v] : j.at("start").items()) b.start[k] = v.get<double>();
        for (const auto& s : j.at("sinks")) b.sinks.push_back(s.get<std::string>());
        for (const auto& [state, row] : j.at("transitions").items())
            for (const auto& [action, dest] : row.items())
                b.transition[state][action] = dest.get<std::string>();
        for (const auto& [state, atoms] : j.at("returns").items()) {
            std::vector<Atom> list;
            for (const auto& a : atoms)
                list.push_back({a.at("value").get<double>(), a.at("prob").get<double>()});
            b.returns[state] = std::make_shared<Discrete>(std::move(list));
        }
        return Dmrmdp(b);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("mdp json: ") + e.what());
    }
}

}
