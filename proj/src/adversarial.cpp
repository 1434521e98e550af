#include "pagar/adversarial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "pagar/errors.hpp"
#include "pagar/soft_rl.hpp"

namespace pagar {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLogFloor = 1e-12;

int draw(Rng& rng, const Eigen::RowVectorXd& p) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double x = u(rng);
  double acc = 0.0;
  int last = 0;
  for (int i = 0; i < p.size(); ++i) {
    if (p(i) <= 0.0) continue;
    acc += p(i);
    last = i;
    if (x < acc) return i;
  }
  return last;  // rounding left a sliver at the top
}

int draw_successor(Rng& rng, const std::vector<std::pair<int, double>>& succ) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double x = u(rng);
  double acc = 0.0;
  for (const auto& [s2, p] : succ) {
    acc += p;
    if (x < acc) return s2;
  }
  return succ.back().first;
}

void widen(RatioRange& r, double v, bool& first) {
  if (first) {
    r.min = r.max = v;
    first = false;
  } else {
    r.min = std::min(r.min, v);
    r.max = std::max(r.max, v);
  }
}

double clipped(double ratio, double clip) { return std::clamp(ratio, 1.0 - clip, 1.0 + clip); }

// min(ratio * x, clip(ratio) * x)
double ppo_term(double ratio, double x, double clip) {
  return std::min(ratio * x, clipped(ratio, clip) * x);
}

// sum over Sigma_{t >= 1} gamma^t, truncated at the horizon when there is one
double tail_discount(const Mdp& mdp) {
  const double g = mdp.gamma();
  if (!mdp.horizon()) return g / (1.0 - g);
  double total = 0.0, disc = g;
  for (int t = 1; t < *mdp.horizon(); ++t) {
    total += disc;
    disc *= g;
  }
  return total;
}

// step weights for one trajectory: gamma^t, or 1/n for the average form
std::vector<double> step_weights(const Mdp& mdp, const Trajectory& tau, bool average) {
  const std::size_t n = tau.steps.size();
  std::vector<double> w(n);
  double disc = 1.0;
  for (std::size_t t = 0; t < n; ++t) {
    w[t] = average ? 1.0 / static_cast<double>(n) : disc;
    disc *= mdp.gamma();
  }
  return w;
}

double checked_ratio(double num, double den, double cap, const char* what) {
  const double v = num / den;
  if (!(v <= cap)) throw RatioOverflow(fmt::format("{} ratio {} exceeds cap {}", what, v, cap));
  return v;
}

}  // namespace

std::vector<double> RolloutBatch::effective_weights() const {
  if (weights) {
    if (weights->size() != trajectories.size()) throw InputError("batch weights do not match trajectories");
    return *weights;
  }
  return std::vector<double>(trajectories.size(), trajectories.empty() ? 0.0 : 1.0 / trajectories.size());
}

RolloutBatch sample_batch(const Mdp& mdp, const TabularPolicy& pi, int n, std::uint64_t seed, int max_steps) {
  check_policy(mdp, pi);
  Rng rng(seed);
  RolloutBatch out;
  out.source_policy = pi;
  out.seed = seed;
  const int cap = mdp.horizon() ? *mdp.horizon() : max_steps;
  Eigen::RowVectorXd d0 = mdp.initial().transpose();
  for (int k = 0; k < n; ++k) {
    Trajectory tau;
    int s = draw(rng, d0);
    while (!mdp.is_terminal(s) && static_cast<int>(tau.steps.size()) < cap) {
      const int a = draw(rng, pi.probs.row(s));
      tau.steps.emplace_back(s, a);
      s = draw_successor(rng, mdp.successors(s, a));
    }
    tau.final_state = s;
    out.trajectories.push_back(std::move(tau));
  }
  return out;
}

RolloutBatch exact_batch(const Mdp& mdp, const TabularPolicy& pi, int max_len) {
  RolloutBatch out;
  out.source_policy = pi;
  std::vector<double> w;
  for (auto& wt : enumerate_trajectories(mdp, max_len)) {
    const double p = trajectory_probability(mdp, pi, wt.tau);
    if (p <= 0.0) continue;
    out.trajectories.push_back(std::move(wt.tau));
    w.push_back(p);
  }
  out.weights = std::move(w);
  return out;
}

Table standard_advantage(const Mdp& mdp, const TabularPolicy& pi, const Table& r) {
  Table q = action_values(mdp, pi, r);
  Eigen::VectorXd v = state_values(mdp, pi, r);
  Table adv = q.colwise() - v;
  for (int s = 0; s < mdp.n_states(); ++s)
    if (mdp.is_terminal(s)) adv.row(s).setZero();
  return adv;
}

Table soft_advantage(const Mdp& mdp, const TabularPolicy& pi, const Table& r, double tau) {
  if (!(tau > 0.0)) return standard_advantage(mdp, pi, r);
  // U + tau H = tau (U_{r / tau} + H)
  SoftSolution sol = evaluate_soft(mdp, pi, r / tau);
  Table adv = tau * sol.adv;
  for (int s = 0; s < mdp.n_states(); ++s) {
    if (mdp.is_terminal(s)) {
      adv.row(s).setZero();
      continue;
    }
    for (int a = 0; a < mdp.n_actions(); ++a) adv(s, a) -= tau * std::log(std::max(pi(s, a), kLogFloor));
  }
  return adv;
}

ObjectiveEstimate estimate_objectives(const Mdp& mdp, const RolloutBatch& batch_a, const RolloutBatch& batch_p,
                                      const TabularPolicy& pi_p, const TabularPolicy& pi_a, const Table& r,
                                      const EstimatorOptions& opt,
                                      const std::function<double(const Table&)>& irl) {
  if (batch_a.empty() || batch_p.empty()) throw EmptyBatch("both rollout batches must be non-empty");
  check_policy(mdp, pi_p);
  check_policy(mdp, pi_a);
  const Table adv_a = standard_advantage(mdp, pi_a, r);
  const auto wa = batch_a.effective_weights();
  const auto wp = batch_p.effective_weights();

  ObjectiveEstimate est;
  std::set<int> states;
  bool f_xi = true, f_d2 = true, f_d3 = true, f_d4 = true;
  bool any_a = false, any_p = false;

  // antagonist batch: J_R1 ratio term, J_R3 clip term, J_{pi_A}
  double r3_clip = 0.0;
  for (std::size_t k = 0; k < batch_a.trajectories.size(); ++k) {
    const Trajectory& tau = batch_a.trajectories[k];
    const auto g = step_weights(mdp, tau, opt.average_reward);
    const auto gd = step_weights(mdp, tau, false);
    for (std::size_t t = 0; t < tau.steps.size(); ++t) {
      const auto [s, a] = tau.steps[t];
      if (pi_a(s, a) <= 0.0) {
        ++est.skipped;
        continue;
      }
      states.insert(s);
      const double rv = r(s, a);
      const double xi = checked_ratio(pi_p(s, a), pi_a(s, a), opt.ratio_cap, "pi_P / pi_A");
      widen(est.ratios.xi, xi, f_xi);
      est.max_abs_r_a = any_a ? std::max(est.max_abs_r_a, std::abs(rv)) : std::abs(rv);
      any_a = true;
      est.r1_ratio_term += wa[k] * g[t] * (xi - 1.0) * rv;
      if (opt.exp_ratio_bounds) {
        const double d3 = checked_ratio(std::exp(rv), pi_a(s, a), opt.ratio_cap, "exp(r) / pi_A");
        widen(est.ratios.delta3, d3, f_d3);
        r3_clip += wa[k] * gd[t] * ppo_term(d3, rv, opt.clip);
      }
      est.j_pi_a += wa[k] * gd[t] * ppo_term(xi, adv_a(s, a), opt.clip);
    }
    est.u_a += wa[k] * trajectory_return(mdp, r, tau);
  }

  // protagonist batch: J_R2 ratio term, J_R4 clip term, returns
  double r4_clip = 0.0;
  for (std::size_t k = 0; k < batch_p.trajectories.size(); ++k) {
    const Trajectory& tau = batch_p.trajectories[k];
    const auto g = step_weights(mdp, tau, opt.average_reward);
    const auto gd = step_weights(mdp, tau, false);
    for (std::size_t t = 0; t < tau.steps.size(); ++t) {
      const auto [s, a] = tau.steps[t];
      if (pi_p(s, a) <= 0.0) {
        ++est.skipped;
        continue;
      }
      states.insert(s);
      const double rv = r(s, a);
      const double d2 = checked_ratio(pi_a(s, a), pi_p(s, a), opt.ratio_cap, "pi_A / pi_P");
      widen(est.ratios.delta2, d2, f_d2);
      est.max_abs_r_p = any_p ? std::max(est.max_abs_r_p, std::abs(rv)) : std::abs(rv);
      any_p = true;
      est.r2_ratio_term += wp[k] * g[t] * (1.0 - d2) * rv;
      if (opt.exp_ratio_bounds) {
        const double d4 = checked_ratio(std::exp(rv), pi_p(s, a), opt.ratio_cap, "exp(r) / pi_P");
        widen(est.ratios.delta4, d4, f_d4);
        r4_clip += wp[k] * gd[t] * ppo_term(d4, rv, opt.clip);
      }
    }
    est.u_p += wp[k] * trajectory_return(mdp, r, tau);
  }

  for (int s : states) {
    const double kl = kl_divergence(pi_a.probs.row(s).transpose(), pi_p.probs.row(s).transpose());
    est.alpha_hat = std::max(est.alpha_hat, kl);
  }
  const double scale = opt.c_scale * est.alpha_hat * tail_discount(mdp);
  est.c1 = -scale;
  est.c2 = scale;
  est.j_r1 = est.r1_ratio_term + est.c1 * est.max_abs_r_a;
  est.j_r2 = est.r2_ratio_term + est.c2 * est.max_abs_r_p;
  if (opt.exp_ratio_bounds) {
    est.j_r3 = est.u_p - r3_clip;
    est.j_r4 = est.u_p - r4_clip;
  }
  est.j_pagar = est.j_r1 + est.j_r2;
  if (irl) est.j_irl = irl(r);
  return est;
}

ObjectiveEstimate expected_objectives(const Mdp& mdp, const TabularPolicy& pi_p, const TabularPolicy& pi_a,
                                      const Table& r, const EstimatorOptions& opt) {
  if (opt.average_reward) throw DomainError("no closed form for the average-reward estimators");
  check_policy(mdp, pi_p);
  check_policy(mdp, pi_a);
  const Eigen::VectorXd rho_a = visitation(mdp, pi_a).rho;
  const Eigen::VectorXd rho_p = visitation(mdp, pi_p).rho;
  const Table adv_a = standard_advantage(mdp, pi_a, r);

  ObjectiveEstimate est;
  double r3_clip = 0.0, r4_clip = 0.0;
  bool f_xi = true, f_d2 = true, f_d3 = true, f_d4 = true;
  for (int s = 0; s < mdp.n_states(); ++s) {
    if (mdp.is_terminal(s)) continue;
    const bool in_a = rho_a(s) > 0.0, in_p = rho_p(s) > 0.0;
    if (in_a || in_p) {
      const double kl = kl_divergence(pi_a.probs.row(s).transpose(), pi_p.probs.row(s).transpose());
      est.alpha_hat = std::max(est.alpha_hat, kl);
    }
    for (int a = 0; a < mdp.n_actions(); ++a) {
      const double rv = r(s, a);
      if (in_a && pi_a(s, a) > 0.0) {
        const double xi = pi_p(s, a) / pi_a(s, a);
        const double d3 = std::exp(rv) / pi_a(s, a);
        widen(est.ratios.xi, xi, f_xi);
        widen(est.ratios.delta3, d3, f_d3);
        est.max_abs_r_a = std::max(est.max_abs_r_a, std::abs(rv));
        const double m = rho_a(s) * pi_a(s, a);
        est.r1_ratio_term += m * (xi - 1.0) * rv;
        r3_clip += m * ppo_term(d3, rv, opt.clip);
        est.j_pi_a += m * ppo_term(xi, adv_a(s, a), opt.clip);
      }
      if (in_p && pi_p(s, a) > 0.0) {
        const double d2 = pi_a(s, a) / pi_p(s, a);
        const double d4 = std::exp(rv) / pi_p(s, a);
        widen(est.ratios.delta2, d2, f_d2);
        widen(est.ratios.delta4, d4, f_d4);
        est.max_abs_r_p = std::max(est.max_abs_r_p, std::abs(rv));
        const double m = rho_p(s) * pi_p(s, a);
        est.r2_ratio_term += m * (1.0 - d2) * rv;
        r4_clip += m * ppo_term(d4, rv, opt.clip);
      }
    }
  }
  est.u_p = utility(mdp, pi_p, r);
  est.u_a = utility(mdp, pi_a, r);
  const double scale = opt.c_scale * est.alpha_hat * tail_discount(mdp);
  est.c1 = -scale;
  est.c2 = scale;
  est.j_r1 = est.r1_ratio_term + est.c1 * est.max_abs_r_a;
  est.j_r2 = est.r2_ratio_term + est.c2 * est.max_abs_r_p;
  est.j_r3 = est.u_p - r3_clip;
  est.j_r4 = est.u_p - r4_clip;
  est.j_pagar = est.j_r1 + est.j_r2;
  return est;
}

double update_lambda(double lambda, double mu, double loss, double bound, std::optional<double> floor) {
  if (!(lambda >= 0.0)) throw DomainError("lambda must be non-negative");
  if (mu == 0.0) return lambda;
  double next = lambda * std::exp(mu * (loss - bound));
  if (floor) next = std::max(*floor, next);
  return next;
}

GameState update_lambda(GameState state, double j_irl) {
  const auto& c = state.config;
  const double mu = c.delta_star_mode ? 0.0 : c.mu;
  state.lambda = update_lambda(state.lambda, mu, j_irl, -c.delta,
                               c.lambda_floor ? std::optional<double>(c.lambda0) : std::nullopt);
  return state;
}

TabularPolicy logits_policy(const Mdp& mdp, const Table& logits) { return softmax_policy(mdp, logits); }

TabularPolicy GameState::pi_p(const Mdp& mdp) const { return logits_policy(mdp, pi_p_logits); }
TabularPolicy GameState::pi_a(const Mdp& mdp) const { return logits_policy(mdp, pi_a_logits); }

namespace {

// Gradient of sum_k w_k sum_t gamma^t min(rho adv, clip(rho) adv) with
// rho = pi(a|s) / old(a|s), with respect to the logits behind pi. The
// clipped branch is flat, so only steps on the unclipped branch count.
Table surrogate_gradient(const Mdp& mdp, const RolloutBatch& batch, const TabularPolicy& pi,
                         const TabularPolicy& old, const Table& adv, double clip) {
  Table grad = Table::Zero(mdp.n_states(), mdp.n_actions());
  const auto w = batch.effective_weights();
  for (std::size_t k = 0; k < batch.trajectories.size(); ++k) {
    const Trajectory& tau = batch.trajectories[k];
    double disc = 1.0;
    for (const auto& [s, a] : tau.steps) {
      const double x = adv(s, a);
      const double rho = pi(s, a) / old(s, a);
      if (rho * x <= clipped(rho, clip) * x) {
        const double c = w[k] * disc * rho * x;
        for (int b = 0; b < mdp.n_actions(); ++b) grad(s, b) -= c * pi(s, b);
        grad(s, a) += c;
      }
      disc *= mdp.gamma();
    }
  }
  return grad;
}

void check_finite(const Table& t, const char* what) {
  if (!t.allFinite()) throw NonFinite(fmt::format("{} diverged", what));
}

int likeliest_start(const Mdp& mdp) {
  int best = 0;
  for (int s = 1; s < mdp.n_states(); ++s)
    if (mdp.initial()(s) > mdp.initial()(best)) best = s;
  return best;
}

std::string policy_summary(const TabularPolicy& pi, int s) {
  std::string out;
  for (int a = 0; a < pi.n_actions(); ++a) {
    if (a) out += ';';
    out += fmt::format("{:.17g}", pi(s, a));
  }
  return out;
}

double exact_regret(const Mdp& mdp, const TabularPolicy& pi, const Table& r) {
  return solve_standard(mdp, r).value - utility(mdp, pi, r);
}

// one iteration's clipped-surrogate ascent for both players
void policy_step(const Mdp& mdp, GameState& st, const RolloutBatch& da, const RolloutBatch& dp,
                 const Table& r) {
  const auto& c = st.config;
  const TabularPolicy old_a = st.pi_a(mdp);
  const TabularPolicy old_p = st.pi_p(mdp);
  const Table soft_a = soft_advantage(mdp, old_a, r, c.entropy_weight);
  const Table soft_p = soft_advantage(mdp, old_p, r, c.entropy_weight);
  const Table std_a = standard_advantage(mdp, old_a, r);
  for (int e = 0; e < c.policy_epochs; ++e) {
    const TabularPolicy pa = st.pi_a(mdp);
    st.pi_a_logits += c.antagonist_lr.value_or(c.policy_lr) * surrogate_gradient(mdp, da, pa, old_a, soft_a, c.clip);
    const TabularPolicy pp = st.pi_p(mdp);
    Table g = surrogate_gradient(mdp, dp, pp, old_p, soft_p, c.clip);
    g += surrogate_gradient(mdp, da, pp, old_a, std_a, c.clip);
    st.pi_p_logits += c.policy_lr * g;
  }
  check_finite(st.pi_a_logits, "antagonist logits");
  check_finite(st.pi_p_logits, "protagonist logits");
}

GameState initial_state(const Mdp& mdp, const TrainConfig& config) {
  GameState st;
  st.config = config;
  st.pi_p_logits = Table::Zero(mdp.n_states(), mdp.n_actions());
  st.pi_a_logits = Table::Zero(mdp.n_states(), mdp.n_actions());
  st.lambda = config.lambda0;
  st.beta = config.beta0;
  return st;
}

EstimatorOptions estimator_options(const Mdp& mdp, const TrainConfig& c) {
  EstimatorOptions o;
  o.clip = c.clip;
  o.ratio_cap = c.ratio_cap;
  o.c_scale = c.c_scale;
  o.average_reward = c.average_reward && mdp.horizon().has_value();
  o.exp_ratio_bounds = false;  // neither reward objective uses J_R3 or J_R4
  return o;
}

// IRL score of a reward table, kept at or above delta by the reward set
std::function<double(const Table&)> irl_score(const Mdp& mdp, const DemonstrationSet& demos,
                                              const IrlLoss& kind) {
  if (kind.kind == LossKind::Ziebart) {
    auto model = std::make_shared<LikelihoodModel>(mdp, demos, kind.max_len, kind.base);
    return [model](const Table& r) { return model->loss(r); };
  }
  return [&mdp, &demos, kind](const Table& r) { return irl_loss(mdp, demos, r, kind); };
}

// central differences of f on the box, then a projected step downhill
Eigen::VectorXd descend(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd x,
                        const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, double h, double lr,
                        double max_step = kInf) {
  Eigen::VectorXd g(x.size());
  for (int i = 0; i < x.size(); ++i) {
    Eigen::VectorXd up = x, dn = x;
    up(i) += h;
    dn(i) -= h;
    g(i) = (f(up) - f(dn)) / (2.0 * h);
  }
  x -= (lr * g).cwiseMax(-max_step).cwiseMin(max_step);
  return x.cwiseMax(lo).cwiseMin(hi);
}

std::vector<std::uint64_t> batch_seeds(Rng& rng) { return {rng(), rng()}; }

constexpr double kLogitBound = 30.0;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

Table squash(const Table& z) { return z.unaryExpr([](double v) { return sigmoid(v); }); }

double mean_squared_logit(const Table& z) { return z.array().square().mean(); }

}  // namespace

TrainResult train_pagar(const Mdp& mdp, const DemonstrationSet& demos, const RewardFamily& family,
                        const TrainConfig& config, std::uint64_t seed) {
  demos.check();
  for (const auto& tau : demos.trajectories) check_feasible(mdp, tau);
  if (config.iterations < 0 || config.batch_size <= 0) throw InputError("iterations and batch size must be positive");
  GameState st = initial_state(mdp, config);
  const bool finite = std::holds_alternative<FiniteFamily>(family.kind);
  const Eigen::VectorXd lo = family.lower(), hi = family.upper();
  st.theta = config.initial_theta ? *config.initial_theta : Eigen::VectorXd(0.5 * (lo + hi));
  if (finite) st.theta = lo;
  if (st.theta.size() != family.dim()) throw InputError("initial reward parameters have the wrong size");
  const auto score = irl_score(mdp, demos, config.irl);
  const EstimatorOptions eopt = estimator_options(mdp, config);
  const int start = likeliest_start(mdp);
  Rng rng(seed);

  TrainResult out;
  for (int it = 0; it < config.iterations; ++it) {
    const auto seeds = batch_seeds(rng);
    const TabularPolicy pa = st.pi_a(mdp), pp = st.pi_p(mdp);
    const RolloutBatch da = sample_batch(mdp, pa, config.batch_size, seeds[0], config.max_steps);
    const RolloutBatch dp = sample_batch(mdp, pp, config.batch_size, seeds[1], config.max_steps);
    const Table r = family.make(st.theta).table();

    policy_step(mdp, st, da, dp, r);

    // reward player: J_PAGAR (+ Monte-Carlo regret) plus the penalty
    const double lambda = st.lambda;
    auto objective = [&](const Eigen::VectorXd& theta) {
      const Table rt = family.make(theta).table();
      ObjectiveEstimate e = estimate_objectives(mdp, da, dp, pp, pa, rt, eopt);
      double v = e.j_pagar;
      if (config.objective == RewardObjective::PagarMc) v += e.u_p - e.u_a;
      const double loss = -score(rt);
      v += config.delta_star_mode ? lambda * loss : lambda * (loss + config.delta);
      return v;
    };
    if (finite) {
      double best = kInf;
      for (int i = 0; i <= static_cast<int>(hi(0)); ++i) {
        const double v = objective(Eigen::VectorXd::Constant(1, i));
        if (v < best) {
          best = v;
          st.theta(0) = i;
        }
      }
    } else if (family.dim() > 0) {
      st.theta = descend(objective, st.theta, lo, hi, config.fd_step, config.reward_lr);
    }
    if (!st.theta.allFinite()) throw NonFinite("reward parameters diverged");

    const Table rn = family.make(st.theta).table();
    ObjectiveEstimate e = estimate_objectives(mdp, da, dp, pp, pa, rn, eopt);
    const double loss = -score(rn);
    st = update_lambda(std::move(st), loss);
    st.iteration = it + 1;

    const TabularPolicy now = st.pi_p(mdp);
    out.trace.push_back({it, loss, e.j_pagar, st.lambda, exact_regret(mdp, now, rn), policy_summary(now, start)});
  }
  out.policy = st.pi_p(mdp);
  out.state = std::move(st);
  return out;
}

double gan_score(const RolloutBatch& batch_a, const DemonstrationSet& demos, const Table& d) {
  auto side = [&](const std::vector<Trajectory>& trajs, const std::vector<double>& w, bool policy_side) {
    double total = 0.0, mass = 0.0;
    for (std::size_t k = 0; k < trajs.size(); ++k) {
      for (const auto& [s, a] : trajs[k].steps) {
        const double p = policy_side ? d(s, a) : 1.0 - d(s, a);
        total += w[k] * std::log(std::max(p, kLogFloor));
        mass += w[k];
      }
    }
    return mass > 0.0 ? total / mass : 0.0;
  };
  return side(batch_a.trajectories, batch_a.effective_weights(), true) +
         side(demos.trajectories, demos.effective_weights(), false);
}

TrainResult train_gail_pagar(const Mdp& mdp, const DemonstrationSet& demos, const TrainConfig& config,
                             std::uint64_t seed, Variant variant) {
  demos.check();
  for (const auto& tau : demos.trajectories) check_feasible(mdp, tau);
  if (config.iterations < 0 || config.batch_size <= 0) throw InputError("iterations and batch size must be positive");
  if (variant == Variant::Plain) throw InputError("the plain variant trains through train_pagar");
  GameState st = initial_state(mdp, config);
  st.disc_logits = config.initial_discriminator ? *config.initial_discriminator
                                                : Table::Zero(mdp.n_states(), mdp.n_actions());
  if (st.disc_logits.rows() != mdp.n_states() || st.disc_logits.cols() != mdp.n_actions())
    throw InputError("discriminator table has the wrong shape");
  const auto bottleneck = config.bottleneck ? config.bottleneck : std::function<double(const Table&)>(mean_squared_logit);
  const bool vail = variant == Variant::Vail;
  const EstimatorOptions eopt = estimator_options(mdp, config);
  const int start = likeliest_start(mdp);
  const int n = mdp.n_states() * mdp.n_actions();
  // logits live in a box where the sigmoid stays strictly inside (0, 1)
  const Eigen::VectorXd lo = Eigen::VectorXd::Constant(n, -kLogitBound), hi = Eigen::VectorXd::Constant(n, kLogitBound);
  Rng rng(seed);

  auto as_table = [&](const Eigen::VectorXd& z) {
    return Eigen::Map<const Table>(z.data(), mdp.n_states(), mdp.n_actions()).eval();
  };

  TrainResult out;
  for (int it = 0; it < config.iterations; ++it) {
    const auto seeds = batch_seeds(rng);
    const TabularPolicy pa = st.pi_a(mdp), pp = st.pi_p(mdp);
    const RolloutBatch da = sample_batch(mdp, pa, config.batch_size, seeds[0], config.max_steps);
    const RolloutBatch dp = sample_batch(mdp, pp, config.batch_size, seeds[1], config.max_steps);
    const Table r = gan_reward_from_discriminator(squash(st.disc_logits), pa).table();

    policy_step(mdp, st, da, dp, r);

    const double lambda = st.lambda, beta = st.beta;
    auto objective = [&](const Eigen::VectorXd& zv) {
      const Table z = as_table(zv);
      const Table d = squash(z);
      const Table rt = gan_reward_from_discriminator(d, pa).table();
      ObjectiveEstimate e = estimate_objectives(mdp, da, dp, pp, pa, rt, eopt);
      double v = e.j_pagar;
      if (config.objective == RewardObjective::PagarMc) v += e.u_p - e.u_a;
      const double loss = -gan_score(da, demos, d);
      v += lambda * std::max(loss + config.delta, 0.0);
      if (vail) v += beta * bottleneck(z);
      return v;
    };
    Eigen::VectorXd zv = Eigen::Map<const Eigen::VectorXd>(st.disc_logits.data(), n);
    // with lambda in the thousands a raw step would jump between box corners
    zv = descend(objective, zv, lo, hi, config.fd_step, config.reward_lr, 1.0);
    st.disc_logits = as_table(zv);
    check_finite(st.disc_logits, "discriminator logits");

    const Table d = squash(st.disc_logits);
    const Table rn = gan_reward_from_discriminator(d, pa).table();
    ObjectiveEstimate e = estimate_objectives(mdp, da, dp, pp, pa, rn, eopt);
    const double loss = -gan_score(da, demos, d);
    st = update_lambda(std::move(st), loss);
    if (vail) st.beta = std::max(0.0, st.beta - config.beta_lr * (bottleneck(st.disc_logits) / 3.0 - config.i_c));
    st.iteration = it + 1;

    const TabularPolicy now = st.pi_p(mdp);
    out.trace.push_back({it, loss, e.j_pagar, st.lambda, exact_regret(mdp, now, rn), policy_summary(now, start)});
  }
  out.policy = st.pi_p(mdp);
  out.state = std::move(st);
  return out;
}

}  // namespace pagar
