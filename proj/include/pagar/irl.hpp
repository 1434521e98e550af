#pragma once

#include <limits>
#include <optional>
#include <variant>
#include <vector>

#include "pagar/mdp.hpp"

namespace pagar {

enum class LossKind { MaxMargin, MaxEnt, Ziebart };

// reference measure inside the likelihood partition function: the uniform
// random policy through the dynamics, bare dynamics, or plain counting
enum class BaseMeasure { Uniform, Dynamics, Counting };

struct IrlLoss {
  LossKind kind = LossKind::MaxMargin;
  int max_len = 5;  // likelihood only
  BaseMeasure base = BaseMeasure::Uniform;

  static IrlLoss max_margin() { return {LossKind::MaxMargin}; }
  static IrlLoss max_ent() { return {LossKind::MaxEnt}; }
  static IrlLoss ziebart(int max_len = 5, BaseMeasure base = BaseMeasure::Uniform) {
    return {LossKind::Ziebart, max_len, base};
  }
};

// weights = A theta + b with theta in the box [lo, hi]
struct LinearFamily {
  std::vector<Table> features;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::VectorXd lo, hi;

  int dim() const { return static_cast<int>(lo.size()); }
};

// every entry r(s,a) ranges over [lo, hi]
struct TabularFamily {
  int n_states = 0, n_actions = 0;
  double lo = -1.0, hi = 1.0;

  int dim() const { return n_states * n_actions; }
};

// an explicit finite list
struct FiniteFamily {
  std::vector<RewardFunction> members;
};

struct RewardFamily {
  std::variant<LinearFamily, TabularFamily, FiniteFamily> kind;

  int dim() const;
  Eigen::VectorXd lower() const;
  Eigen::VectorXd upper() const;
  RewardFunction make(const Eigen::VectorXd& theta) const;
};

// r = omega r1 + (1 - omega) r2 with omega in [lo, hi]
RewardFamily convex_pair(const Table& r1, const Table& r2, double lo = 0.0, double hi = 1.0);

constexpr double kUnconstrained = -std::numeric_limits<double>::infinity();

struct RewardSet {
  RewardFamily family;
  double delta = kUnconstrained;
  IrlLoss loss;
  double grid_step = 1e-3;
  int refinements = 2;

  // delta may not exceed the best achievable loss
  void validate(double delta_star) const;
};

// demonstration-average discounted return
double demo_utility(const Mdp& mdp, const DemonstrationSet& demos, const Table& r);

// Trajectory likelihood with a partition over all trajectories of at most
// max_len states. The enumeration and per-trajectory feature returns are
// computed once so that sweeps over linear rewards are cheap.
class LikelihoodModel {
 public:
  LikelihoodModel(const Mdp& mdp, const DemonstrationSet& demos, int max_len, BaseMeasure base);

  double loss(const Table& r) const;
  std::size_t support_size() const { return log_base_.size(); }

 private:
  const Mdp* mdp_;
  std::vector<Trajectory> paths_;
  std::vector<double> log_base_;
  std::vector<Trajectory> demos_;
  std::vector<double> demo_mult_;
};

double irl_loss(const Mdp& mdp, const DemonstrationSet& demos, const Table& r, const IrlLoss& kind);
double irl_loss(const Mdp& mdp, const DemonstrationSet& demos, const RewardFunction& r,
                const IrlLoss& kind);

struct DeltaStar {
  double value = 0.0;
  RewardFunction witness;
  Eigen::VectorXd theta;
};

// grid points of the family: lo + i step per coordinate, with hi included
std::vector<Eigen::VectorXd> family_grid(const RewardFamily& family, double step,
                                         std::size_t budget = 2'000'000);

DeltaStar delta_star(const Mdp& mdp, const DemonstrationSet& demos, const RewardFamily& family,
                     const IrlLoss& kind, double grid_step = 1e-3, int refinements = 2);

// IRL loss at each parameter point, evaluated in parallel
std::vector<double> sweep_losses(const Mdp& mdp, const DemonstrationSet& demos, const RewardFamily& family,
                                 const IrlLoss& kind, const std::vector<Eigen::VectorXd>& points);

bool in_reward_set(const RewardSet& set, const Mdp& mdp, const DemonstrationSet& demos,
                   const RewardFunction& r);

// r = log(pi_A / D - pi_A), arguments floored at 1e-12
RewardFunction gan_reward_from_discriminator(const Table& d, const TabularPolicy& pi_a);

}  // namespace pagar
