#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pagar/mdp.hpp"

namespace pagar {

struct VisitTarget {
  int state = 0;
  double min_prob = 0.0;
  int max_len = 1;
};

// the task: every target must be visited often enough, or a custom test
struct TaskPredicate {
  std::vector<VisitTarget> targets;
  std::function<bool(const Mdp&, const TabularPolicy&)> custom;

  static TaskPredicate visit_threshold(std::vector<VisitTarget> targets);
  static TaskPredicate from(std::function<bool(const Mdp&, const TabularPolicy&)> fn);

  bool operator()(const Mdp& mdp, const TabularPolicy& pi) const;
};

struct Interval {
  double lo = 0.0, hi = 0.0;
  double width() const { return hi - lo; }
};

struct AlignmentResult {
  bool aligned = false;
  std::optional<Interval> s_interval;
  std::optional<Interval> f_interval;
  Interval u_range;
  std::size_t grid_size = 0;
};

AlignmentResult classify_alignment(const Mdp& mdp, const Table& r, const TaskPredicate& phi,
                                   const std::vector<TabularPolicy>& policy_grid);

enum class TheoremKind { FailureAvoidance, SuccessGuarantee, CorollaryFailure, CorollarySuccess };

// inputs the two corollaries need on top of the grid
struct CorollaryInputs {
  double delta = 0.0;
  double w_e = 0.0;  // smallest W1 between any grid policy and the demonstrations
  std::vector<double> lipschitz;  // one per reward
};

struct TheoremReport {
  bool passed = false;
  bool condition1 = false;
  bool condition2 = false;
  std::optional<int> witness_policy;
  std::vector<AlignmentResult> alignment;
  double min_gap = 0.0;  // min over aligned r of inf S - sup F
  double max_f_width = 0.0;
  double max_s_width = 0.0;
  double min_s_width = 0.0;
  // set when a success-side inequality holds with <= but not with <, which
  // is where the two printed forms of the success bracket disagree
  bool bracket_flag = false;
  std::string detail;
};

TheoremReport check_theorem_conditions(const Mdp& mdp, const std::vector<RewardFunction>& rewards,
                                       const TaskPredicate& phi, const std::vector<TabularPolicy>& policy_grid,
                                       TheoremKind which, const CorollaryInputs& extra = {});

enum class DominationVerdict { TotallyDominates, WeaklyTotallyDominates, Incomparable };

// how pi2 stands over pi1: TotallyDominates iff max_r U_r(pi1) < min_r U_r(pi2)
DominationVerdict domination(const Mdp& mdp, const TabularPolicy& pi1, const TabularPolicy& pi2,
                             const std::vector<RewardFunction>& rewards);

struct TrajectoryDistribution {
  std::vector<Trajectory> support;
  std::vector<double> probs;

  static TrajectoryDistribution of_policy(const Mdp& mdp, const TabularPolicy& pi, int max_len);
  static TrajectoryDistribution of_demos(const DemonstrationSet& demos);
};

using TrajectoryMetric = std::function<double(const Trajectory&, const Trajectory&)>;

// L1 distance between discounted feature sums, terminal bonus included
TrajectoryMetric feature_expectation_metric(const Mdp& mdp, std::vector<Table> features);

struct WassersteinReport {
  double w1 = 0.0;
  Eigen::MatrixXd coupling;
  std::string metric_name;
};

WassersteinReport wasserstein1(const TrajectoryDistribution& a, const TrajectoryDistribution& b,
                               const TrajectoryMetric& metric, const std::string& metric_name = "feature_l1");

// smallest W1 to the demonstrations over a policy grid, with the arg
std::pair<double, int> smallest_w1(const Mdp& mdp, const DemonstrationSet& demos,
                                   const std::vector<TabularPolicy>& grid, const TrajectoryMetric& metric,
                                   int max_len);

// tightest L with |r(tau) - r(tau')| <= L d(tau, tau') over the support
double lipschitz_constant(const Mdp& mdp, const Table& r, const std::vector<Trajectory>& support,
                          const TrajectoryMetric& metric);

// min c.x subject to A x = b, x >= 0 (dense two-phase simplex)
struct LpResult {
  Eigen::VectorXd x;
  double value = 0.0;
};
LpResult solve_lp(const Eigen::VectorXd& c, const Eigen::MatrixXd& A, const Eigen::VectorXd& b);

// min sum cost .* x over couplings with the given marginals (transportation
// simplex); x comes back column-major, n x m
LpResult solve_transport(const Eigen::MatrixXd& cost, const Eigen::VectorXd& supply,
                         const Eigen::VectorXd& demand);

struct BoundsReport {
  double lhs_own = 0.0;    // state distribution of pi1
  double lhs_other = 0.0;  // state distribution of pi2
  double bound_own = 0.0;
  double bound_other = 0.0;
  double alpha = 0.0;
  double epsilon = 0.0;
  double slack_own() const { return bound_own - lhs_own; }
  double slack_other() const { return bound_other - lhs_other; }
  bool passed(double tol = 1e-9) const { return slack_own() >= -tol && slack_other() >= -tol; }
};

// pi2 is the soft optimum under r
BoundsReport verify_bounds(const Mdp& mdp, const Table& r, const TabularPolicy& pi1);

}  // namespace pagar
