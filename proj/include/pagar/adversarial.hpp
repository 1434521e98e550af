#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pagar/irl.hpp"
#include "pagar/mdp.hpp"
#include "pagar/random.hpp"

namespace pagar {

struct RolloutBatch {
  std::vector<Trajectory> trajectories;
  TabularPolicy source_policy;
  std::uint64_t seed = 0;
  // per-trajectory weights; uniform 1/N when absent
  std::optional<std::vector<double>> weights;

  std::vector<double> effective_weights() const;
  bool empty() const { return trajectories.empty(); }
};

// n rollouts under pi; infinite-horizon rollouts are truncated at max_steps
RolloutBatch sample_batch(const Mdp& mdp, const TabularPolicy& pi, int n, std::uint64_t seed,
                          int max_steps = 1000);

// every trajectory of at most max_len states with its exact probability
// under pi as weight, zero-probability paths dropped
RolloutBatch exact_batch(const Mdp& mdp, const TabularPolicy& pi, int max_len);

struct EstimatorOptions {
  double clip = 0.2;        // sigma, the clip window is [1 - clip, 1 + clip]
  double ratio_cap = 1e6;
  double c_scale = 1.0;     // proportionality constant in C1 and C2
  bool average_reward = false;  // per-step averages instead of discounted sums
  // J_R3 and J_R4 with their exp(r) ratios; off leaves them at zero
  bool exp_ratio_bounds = true;
};

struct RatioRange {
  double min = 0.0, max = 0.0;
};

struct RatioSummary {
  RatioRange xi;      // pi_P / pi_A over the antagonist batch
  RatioRange delta2;  // pi_A / pi_P over the protagonist batch
  RatioRange delta3;  // exp(r) / pi_A over the antagonist batch
  RatioRange delta4;  // exp(r) / pi_P over the protagonist batch
};

struct ObjectiveEstimate {
  double j_r1 = 0.0, j_r2 = 0.0, j_r3 = 0.0, j_r4 = 0.0;
  double j_pi_a = 0.0;
  double j_pagar = 0.0;
  double j_irl = 0.0;
  // pieces of j_r1 and j_r2
  double r1_ratio_term = 0.0, r2_ratio_term = 0.0;
  double c1 = 0.0, c2 = 0.0;
  double max_abs_r_a = 0.0, max_abs_r_p = 0.0;
  double alpha_hat = 0.0;
  // plain Monte-Carlo utilities, terminal bonus included
  double u_p = 0.0, u_a = 0.0;
  RatioSummary ratios;
  std::size_t skipped = 0;  // steps whose source probability was zero
};

// j_irl is filled from irl when one is given
ObjectiveEstimate estimate_objectives(const Mdp& mdp, const RolloutBatch& batch_a,
                                      const RolloutBatch& batch_p, const TabularPolicy& pi_p,
                                      const TabularPolicy& pi_a, const Table& r,
                                      const EstimatorOptions& opt = {},
                                      const std::function<double(const Table&)>& irl = {});

// the same quantities by exact summation over discounted visitation, with
// the batch maxima taken over the reachable support
ObjectiveEstimate expected_objectives(const Mdp& mdp, const TabularPolicy& pi_p,
                                      const TabularPolicy& pi_a, const Table& r,
                                      const EstimatorOptions& opt = {});

// standard advantage Q - V of pi, no entropy
Table standard_advantage(const Mdp& mdp, const TabularPolicy& pi, const Table& r);
// soft advantage used by the policy gradient, Q_soft - V_soft - tau log pi,
// where tau weighs the entropy bonus (tau = 1 is J_RL itself)
Table soft_advantage(const Mdp& mdp, const TabularPolicy& pi, const Table& r, double tau = 1.0);

enum class RewardObjective { Pagar, PagarMc };
enum class Variant { Plain, Gail, Vail };

struct TrainConfig {
  int iterations = 2000;
  int batch_size = 64;
  int max_steps = 1000;
  double clip = 0.2;
  double lambda0 = 1e3;
  double mu = 1.0;
  bool lambda_floor = false;  // keep lambda >= lambda0
  // the reward set keeps the IRL score at or above delta; the trainer reads
  // J_IRL as the loss -score, so the constraint is J_IRL + delta <= 0
  double delta = 0.5;
  bool delta_star_mode = false;  // mu = 0, objective J_PAGAR - lambda * score
  double entropy_weight = 1.0;  // tau inside J_RL = U + tau H
  double policy_lr = 0.1;
  std::optional<double> antagonist_lr;  // defaults to policy_lr
  int policy_epochs = 4;
  double reward_lr = 0.05;
  double fd_step = 1e-6;
  double c_scale = 1.0;
  double ratio_cap = 1e6;
  bool average_reward = false;
  RewardObjective objective = RewardObjective::PagarMc;
  IrlLoss irl = IrlLoss::ziebart(5);
  // adversarial variants
  double beta0 = 0.0;
  double i_c = 0.5;
  double beta_lr = 1.0;
  std::function<double(const Table&)> bottleneck;  // defaults to mean squared logit
  std::optional<Table> initial_discriminator;  // logits
  std::optional<Eigen::VectorXd> initial_theta;
};

struct GameState {
  Table pi_p_logits, pi_a_logits;
  Eigen::VectorXd theta;   // reward parameters (plain variant)
  Table disc_logits;       // discriminator logits (adversarial variants)
  double lambda = 0.0;
  double beta = 0.0;
  int iteration = 0;
  TrainConfig config;

  TabularPolicy pi_p(const Mdp& mdp) const;
  TabularPolicy pi_a(const Mdp& mdp) const;
};

// lambda * exp(mu * (loss - bound)), floored at lambda0 when configured;
// the trainer passes the IRL loss with bound = -delta
double update_lambda(double lambda, double mu, double loss, double bound,
                     std::optional<double> floor = std::nullopt);
GameState update_lambda(GameState state, double j_irl);

struct TrainRow {
  int iteration = 0;
  double j_irl = 0.0;
  double j_pagar = 0.0;
  double lambda = 0.0;
  double exact_regret = 0.0;
  std::string pi_p_summary;  // pi_P(.|s) at the most likely start state
};

struct TrainResult {
  TabularPolicy policy;
  std::vector<TrainRow> trace;
  GameState state;
};

TabularPolicy logits_policy(const Mdp& mdp, const Table& logits);

TrainResult train_pagar(const Mdp& mdp, const DemonstrationSet& demos, const RewardFamily& family,
                        const TrainConfig& config, std::uint64_t seed);

// classifier score E_A[log D] + E_E[log(1 - D)] over state-action pairs
double gan_score(const RolloutBatch& batch_a, const DemonstrationSet& demos, const Table& d);

TrainResult train_gail_pagar(const Mdp& mdp, const DemonstrationSet& demos, const TrainConfig& config,
                             std::uint64_t seed, Variant variant);

}  // namespace pagar
