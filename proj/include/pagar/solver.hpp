#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "pagar/irl.hpp"
#include "pagar/mdp.hpp"
#include "pagar/soft_rl.hpp"

namespace pagar {

struct RegretReport {
  double regret = 0.0;
  RewardFunction witness_reward;
  TabularPolicy antagonist;
  double protagonist_utility = 0.0;
  double antagonist_utility = 0.0;
  int witness_index = -1;  // position in the admissible list, if any
};

RegretReport regret(const Mdp& mdp, const TabularPolicy& pi_p, const RewardFunction& r);

// The admissible members of a reward set, each with its standard optimum
// cached. Linear members also cache their weights so utilities reduce to a
// dot product with the feature utilities of the protagonist.
class AdmissibleRewards {
 public:
  AdmissibleRewards(const Mdp& mdp, const DemonstrationSet& demos, const RewardSet& set);
  // a hand-made list, taken as admissible
  AdmissibleRewards(const Mdp& mdp, std::vector<RewardFunction> rewards);

  std::size_t size() const { return rewards_.size(); }
  const RewardFunction& reward(std::size_t i) const { return rewards_[i]; }
  const std::vector<double>& losses() const { return losses_; }
  const std::vector<Eigen::VectorXd>& thetas() const { return thetas_; }
  double optimum(std::size_t i) const { return optimum_[i]; }
  const TabularPolicy& antagonist(std::size_t i) const { return antagonist_[i]; }

  // U_r(pi) for every member
  Eigen::VectorXd utilities(const TabularPolicy& pi) const;
  double max_regret_value(const TabularPolicy& pi) const;
  RegretReport max_regret(const TabularPolicy& pi) const;

 private:
  void finish();

  const Mdp* mdp_;
  std::vector<RewardFunction> rewards_;
  std::vector<double> losses_;
  std::vector<Eigen::VectorXd> thetas_;
  std::vector<double> optimum_;
  std::vector<TabularPolicy> antagonist_;
  std::optional<std::vector<Table>> features_;  // shared across linear members
  Eigen::MatrixXd weights_;  // members x features
};

RegretReport max_regret(const Mdp& mdp, const TabularPolicy& pi_p, const RewardSet& set,
                        const DemonstrationSet& demos);

// one free choice: pi(action_b | state) = p, pi(action_a | state) = 1 - p,
// everything else taken from base
struct DecisionPoint {
  TabularPolicy base;
  int state = 0;
  int action_a = 0;
  int action_b = 1;
  double step = 1e-3;
  int refinements = 2;

  TabularPolicy at(double p) const;
};

// per-state simplex grid over non-terminal states, checked against a
// projected subgradient search with random restarts
struct FullTabular {
  double grid_step = 0.25;
  int restarts = 5;
  int iterations = 400;
  double learning_rate = 0.5;
  std::uint64_t seed = 0;
  std::size_t budget = 2'000'000;
};

using PolicySpace = std::variant<DecisionPoint, FullTabular>;

struct TraceRow {
  int iteration;
  std::vector<double> params;
  double regret;
};

struct MinimaxResult {
  TabularPolicy policy;
  RegretReport report;
  std::optional<double> param;  // the decision-point probability
  double subgradient_regret = 0.0;  // best value the local search reached
  std::vector<TraceRow> trace;
};

MinimaxResult minimax_regret(const Mdp& mdp, const AdmissibleRewards& rewards, const PolicySpace& space);
MinimaxResult minimax_regret(const Mdp& mdp, const RewardSet& set, const DemonstrationSet& demos,
                             const PolicySpace& space);

// every policy whose non-terminal rows lie on the simplex grid with the given step
std::vector<TabularPolicy> simplex_grid_policies(const Mdp& mdp, double step,
                                                 std::size_t budget = 2'000'000);

// Euclidean projection of each row onto the simplex
Table project_rows(const Table& x);

// occupancy-space mixture: the policy whose state-action occupancy is the
// alpha-mixture of those of pi1 and pi2, so utilities mix linearly
TabularPolicy mix_policies(const Mdp& mdp, const TabularPolicy& pi1, const TabularPolicy& pi2, double alpha);

// utilities of a finite policy list (rows) under a finite reward list (columns)
struct GameMatrix {
  Eigen::MatrixXd U;

  static GameMatrix build(const Mdp& mdp, const std::vector<TabularPolicy>& policies,
                          const std::vector<RewardFunction>& rewards);
  int n_policies() const { return static_cast<int>(U.rows()); }
  int n_rewards() const { return static_cast<int>(U.cols()); }

  // max over rows of each column
  Eigen::RowVectorXd best() const { return U.colwise().maxCoeff(); }
  Eigen::VectorXd regret_row(int i) const { return (best() - U.row(i)).transpose(); }
  Eigen::VectorXd max_regrets() const;
};

// rows tied with the minimum max-regret within tol
std::vector<int> argmin_regret(const GameMatrix& g, double tol = 1e-9);

enum class DominationCase { NotWeaklyDominated, WeaklyDominated, TotallyDominated };

struct DecisionRule {
  int policy_index = 0;
  DominationCase case_kind = DominationCase::NotWeaklyDominated;
  Eigen::VectorXd baseline_weights;
  int star_index = 0;
  RewardFunction star_reward;
  double coefficient = 0.0;
  double constant_c = 0.0;
};

// policies not weakly totally dominated by any other row
std::vector<int> not_weakly_dominated(const GameMatrix& g, double tol = 1e-12);

DecisionRule build_decision_rule(const GameMatrix& g, int policy_index, double tol = 1e-12);
DecisionRule build_decision_rule(const Mdp& mdp, const std::vector<RewardFunction>& rewards,
                                 const std::vector<TabularPolicy>& policies, const TabularPolicy& pi);

double mixed_utility(const DecisionRule& rule, const Eigen::VectorXd& utilities);
double mixed_utility(const DecisionRule& rule, const Mdp& mdp, const TabularPolicy& pi,
                     const std::vector<RewardFunction>& rewards);

// rows tied with the maximum mixed utility within tol
std::vector<int> argmax_mixed_utility(const GameMatrix& g, double tol = 1e-9);

}  // namespace pagar
