#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pagar/rational.hpp"

namespace pagar {

// state-action table: rows are states, columns are actions
using Table = Eigen::MatrixXd;

struct NamedFeature {
  std::string name;
  Table values;
};

// Finite MDP. Terminal states self-loop in the stored transition model, but
// every solver treats them as the last state of an episode: arriving there
// collects the action-averaged reward once and nothing follows.
class Mdp {
 public:
  Mdp(int n_states, int n_actions, std::vector<Eigen::MatrixXd> transition,
      Eigen::VectorXd initial, std::vector<int> terminals, double gamma,
      std::optional<int> horizon = std::nullopt,
      std::vector<NamedFeature> features = {});

  int n_states() const { return n_states_; }
  int n_actions() const { return n_actions_; }
  double gamma() const { return gamma_; }
  const std::optional<int>& horizon() const { return horizon_; }
  const Eigen::VectorXd& initial() const { return initial_; }
  const std::vector<int>& terminals() const { return terminals_; }
  bool is_terminal(int s) const { return terminal_mask_[s]; }

  // P(s'|s,a) as an S x S matrix for action a
  const Eigen::MatrixXd& transition(int a) const { return transition_[a]; }
  double p(int s, int a, int s2) const { return transition_[a](s, s2); }
  // nonzero successors of (s,a), ascending by state index
  const std::vector<std::pair<int, double>>& successors(int s, int a) const {
    return successors_[s * n_actions_ + a];
  }

  const std::vector<NamedFeature>& features() const { return features_; }
  const Table& feature(const std::string& name) const;

  // copy with a different discount / horizon
  Mdp with_gamma(double gamma) const;
  Mdp with_horizon(std::optional<int> horizon) const;

 private:
  int n_states_;
  int n_actions_;
  std::vector<Eigen::MatrixXd> transition_;
  Eigen::VectorXd initial_;
  std::vector<int> terminals_;
  std::vector<bool> terminal_mask_;
  double gamma_;
  std::optional<int> horizon_;
  std::vector<NamedFeature> features_;
  std::vector<std::vector<std::pair<int, double>>> successors_;
};

struct Trajectory {
  std::vector<std::pair<int, int>> steps;
  int final_state = 0;

  // number of states visited, counting the final one
  int length() const { return static_cast<int>(steps.size()) + 1; }
  int state_at(int t) const {
    return t < static_cast<int>(steps.size()) ? steps[t].first : final_state;
  }
  bool visits(int s) const;
};

struct TabularPolicy {
  Table probs;

  TabularPolicy() = default;
  explicit TabularPolicy(Table p);

  static TabularPolicy uniform(int n_states, int n_actions);
  static TabularPolicy deterministic(const std::vector<int>& actions, int n_actions);

  int n_states() const { return static_cast<int>(probs.rows()); }
  int n_actions() const { return static_cast<int>(probs.cols()); }
  double operator()(int s, int a) const { return probs(s, a); }
};

class RewardFunction {
 public:
  RewardFunction() = default;
  static RewardFunction tabular(Table values, double lipschitz = 0.0);
  static RewardFunction linear(std::vector<Table> features, Eigen::VectorXd weights,
                               double lipschitz = 0.0);

  bool is_linear() const { return linear_; }
  const Table& table() const { return table_; }
  const std::vector<Table>& features() const { return features_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  double operator()(int s, int a) const { return table_(s, a); }

  double lipschitz = 0.0;

 private:
  bool linear_ = false;
  Table table_;
  std::vector<Table> features_;
  Eigen::VectorXd weights_;
};

struct DemonstrationSet {
  std::vector<Trajectory> trajectories;
  std::optional<std::vector<double>> weights;

  // weights if given, else uniform; always sums to 1
  std::vector<double> effective_weights() const;
  void check() const;
};

// reward a terminal state pays on arrival: the mean over its actions
double terminal_reward(const Table& r, int s);

// discounted return of a trajectory; a terminal final state pays its
// action-averaged reward unless it arrives at the horizon itself; a
// truncated final state pays nothing
double trajectory_return(const Mdp& mdp, const Table& r, const Trajectory& tau);

struct WeightedTrajectory {
  Trajectory tau;
  double prob;  // d0(s0) times the transition factors, no policy factors
};

constexpr std::size_t kDefaultNodeBudget = 10'000'000;

std::vector<WeightedTrajectory> enumerate_trajectories(
    const Mdp& mdp, int max_len, std::size_t node_budget = kDefaultNodeBudget);

double trajectory_probability(const Mdp& mdp, const TabularPolicy& pi, const Trajectory& tau);

// probability that a rollout visits target among its first max_len states
double event_probability(const Mdp& mdp, const TabularPolicy& pi, int target, int max_len);
Rational event_probability_exact(const Mdp& mdp, const TabularPolicy& pi, int target,
                                 int max_len);

void check_policy(const Mdp& mdp, const TabularPolicy& pi);
void check_feasible(const Mdp& mdp, const Trajectory& tau);

}  // namespace pagar
