#pragma once

#include <Eigen/Dense>

#include "pagar/mdp.hpp"

namespace pagar {

struct SoftSolution {
  Eigen::VectorXd v;
  Table q;
  Table adv;
  TabularPolicy policy;
  double entropy_total = 0.0;
};

struct StandardSolution {
  TabularPolicy policy;
  Eigen::VectorXd v;
  Table q;
  double value = 0.0;  // d0 . v, the optimal utility
};

struct Visitation {
  Eigen::VectorXd rho;
  double total() const { return rho.sum(); }
};

constexpr double kDefaultTol = 1e-10;
constexpr long kDefaultIterCap = 1'000'000;

// state-to-state kernel under pi; terminal rows are zero
Eigen::MatrixXd policy_kernel(const Mdp& mdp, const TabularPolicy& pi);
// expected one-step reward under pi; terminals pay their action mean
Eigen::VectorXd policy_reward(const Mdp& mdp, const TabularPolicy& pi, const Table& r);
// per-state entropy of pi; zero at terminals
Eigen::VectorXd policy_entropy(const Mdp& mdp, const TabularPolicy& pi);

// standard value of pi at t = 0
Eigen::VectorXd state_values(const Mdp& mdp, const TabularPolicy& pi, const Table& r);
Table action_values(const Mdp& mdp, const TabularPolicy& pi, const Table& r);

double utility(const Mdp& mdp, const TabularPolicy& pi, const Table& r);
double utility(const Mdp& mdp, const TabularPolicy& pi, const RewardFunction& r);

// soft Q/V/advantage of an arbitrary policy
SoftSolution evaluate_soft(const Mdp& mdp, const TabularPolicy& pi, const Table& r);

SoftSolution solve_soft(const Mdp& mdp, const Table& r, double tol = kDefaultTol,
                        long iter_cap = kDefaultIterCap);
SoftSolution solve_soft(const Mdp& mdp, const RewardFunction& r, double tol = kDefaultTol);

StandardSolution solve_standard(const Mdp& mdp, const Table& r, double tol = kDefaultTol,
                                long iter_cap = kDefaultIterCap);
StandardSolution solve_standard(const Mdp& mdp, const RewardFunction& r, double tol = kDefaultTol);

double entropy(const Mdp& mdp, const TabularPolicy& pi);
Visitation visitation(const Mdp& mdp, const TabularPolicy& pi);

// J_RL = U + H
double soft_objective(const Mdp& mdp, const TabularPolicy& pi, const Table& r);

// row-wise softmax of q; terminal rows become uniform
TabularPolicy softmax_policy(const Mdp& mdp, const Table& q);

double total_variation(const Eigen::VectorXd& p, const Eigen::VectorXd& q);
double kl_divergence(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

}  // namespace pagar
