#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "heavytails/distribution.hpp"

namespace heavytails {

/// Finite MDP with deterministic transitions and returns attached to sink
/// states as finite-atom distributions (the return of a trajectory depends
/// only on its final state). Every trajectory must reach a sink within
/// max_depth steps no matter which actions are taken; this is validated by
/// graph search at construction.
class Dmrmdp {
public:
    struct Builder {
        std::vector<std::string> states;
        std::vector<std::string> actions;
        // transition[state][action] -> state name; required for non-sinks.
        std::map<std::string, std::map<std::string, std::string>> transition;
        std::map<std::string, double> start;      // over non-sink states
        std::vector<std::string> sinks;
        std::map<std::string, DistPtr> returns;   // per sink, finite atoms
        int max_depth = 0;
    };

    explicit Dmrmdp(const Builder& b);

    int n_states() const { return static_cast<int>(state_names_.size()); }
    int n_actions() const { return static_cast<int>(action_names_.size()); }
    const std::string& state_name(int s) const { return state_names_[s]; }
    const std::string& action_name(int a) const { return action_names_[a]; }
    int state_index(const std::string& name) const;
    int action_index(const std::string& name) const;
    bool is_sink(int s) const { return sink_[s]; }
    int next_state(int s, int a) const { return transition_[s][a]; }
    const std::vector<std::pair<int, double>>& start() const { return start_; }
    const DistPtr& return_dist(int sink) const;
    double mean_return(int sink) const;
    int max_depth() const { return max_depth_; }

    /// Exact number of distinct trajectories (all-policy DAG count).
    double trajectory_count() const;

private:
    std::vector<std::string> state_names_;
    std::vector<std::string> action_names_;
    std::vector<std::vector<int>> transition_;  // [-1 row for sinks]
    std::vector<bool> sink_;
    std::vector<std::pair<int, double>> start_;
    std::vector<DistPtr> returns_;              // empty ptr for non-sinks
    std::vector<double> mean_returns_;
    int max_depth_;
};

/// Per-state action distribution.
struct Policy {
    // action_probs[state][action]; rows for sink states are ignored.
    std::vector<std::vector<double>> action_probs;
};

Policy uniform_policy(const Dmrmdp& mdp);
Policy random_policy(const Dmrmdp& mdp, std::uint64_t seed);

/// One complete run: states s0..sk (sk a sink) and the actions taken.
struct Trajectory {
    std::vector<int> states;
    std::vector<int> actions;  // size = states.size() - 1
    double prob;
    double g;  // mean return of the final state
};

struct TrajectoryDist {
    std::vector<Trajectory> trajectories;  // fixed DFS order for one mdp
    double total_mass() const;
};

/// Exhaustive depth-first enumeration of Tr(policy). Throws SizeBoundExceeded
/// if the instance has more than 1e7 trajectories (counted up front).
TrajectoryDist enumerate_trajectories(const Dmrmdp& mdp, const Policy& policy);

/// Pushforward of the trajectory measure through the sink returns: a finite
/// mixture, returned as a weighted-atom distribution.
DistPtr return_distribution(const Dmrmdp& mdp, const TrajectoryDist& traj);

/// Mean of the pushforward = sum of trajectory mass times mean sink return.
double mean_return(const Dmrmdp& mdp, const TrajectoryDist& traj);

/// Reweights trajectory mass by a two-value factor split at mean return t:
/// mass above t becomes exactly c/t^gamma, each piece staying proportional to
/// the base within itself. Throws EmptyUpperTail when nothing lies above t.
TrajectoryDist upweight_trajectories(const Dmrmdp& mdp, const TrajectoryDist& base,
                                     double c, double t, double gamma = 1.0);

/// Reconstructs a per-state policy from a trajectory measure: at each visited
/// state, the conditional action frequencies under rho. States never visited
/// get the fallback policy's row (uniform when fallback is null) and are
/// reported in *warnings when provided.
Policy lift_policy(const Dmrmdp& mdp, const TrajectoryDist& rho,
                   const Policy* fallback = nullptr,
                   std::vector<std::string>* warnings = nullptr);

/// Exact KL between two measures over the same enumerated trajectory list.
/// Throws SupportMismatch when p places mass where q has none.
double trajectory_kl(const TrajectoryDist& p, const TrajectoryDist& q);

/// Total variation distance between two measures over the same list.
double total_variation(const TrajectoryDist& p, const TrajectoryDist& q);

/// KL decomposition through the return pushforward:
///   trajectory = pushforward + conditional,
/// where pushforward is the KL of the induced mean-return distributions and
/// the conditional term vanishes exactly when the reweighting factor depends
/// only on the return.
struct KlDecomposition {
    double trajectory;
    double pushforward;
    double conditional;
};

KlDecomposition kl_decomposition(const Dmrmdp& mdp, const TrajectoryDist& p,
                                 const TrajectoryDist& q);

/// Per-state policy divergence aggregated over trajectories of `weight`:
///   sum_form     = E_tau [ sum over decision states of KL(pi(s) || pi0(s)) ]
///   average_form = E_tau [ mean over decision states of the same ]
struct PerStateKl {
    double sum_form;
    double average_form;
};

PerStateKl per_state_policy_kl(const Dmrmdp& mdp, const TrajectoryDist& weight,
                               const Policy& pi, const Policy& pi0);

/// Token-generation chain: states are strings over an alphabet of size
/// `alphabet`, actions append one token, strings of length `depth` are sinks.
/// `returns(i)` supplies the return distribution of the i-th sink in
/// lexicographic order.
Dmrmdp token_chain(int alphabet, int depth,
                   const std::function<DistPtr(std::size_t)>& returns);

/// JSON (de)serialization of instances; the schema is documented in the
/// README. Round-trips exactly for finite-atom returns.
std::string to_json(const Dmrmdp& mdp);
Dmrmdp mdp_from_json(const std::string& json_text);

}
