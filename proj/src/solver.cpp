#include "pagar/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pagar/errors.hpp"
#include "pagar/parallel.hpp"
#include "pagar/random.hpp"

namespace pagar {

RegretReport regret(const Mdp& mdp, const TabularPolicy& pi_p, const RewardFunction& r) {
  auto opt = solve_standard(mdp, r);
  RegretReport rep;
  rep.protagonist_utility = utility(mdp, pi_p, r);
  rep.antagonist_utility = opt.value;
  rep.regret = rep.antagonist_utility - rep.protagonist_utility;
  rep.witness_reward = r;
  rep.antagonist = std::move(opt.policy);
  return rep;
}

AdmissibleRewards::AdmissibleRewards(const Mdp& mdp, const DemonstrationSet& demos, const RewardSet& set)
    : mdp_(&mdp) {
  auto pts = family_grid(set.family, set.grid_step);
  std::vector<double> loss(pts.size(), std::numeric_limits<double>::infinity());
  const bool constrained = set.delta != kUnconstrained;
  if (constrained) loss = sweep_losses(mdp, demos, set.family, set.loss, pts);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (constrained && loss[i] < set.delta - 1e-12) continue;
    rewards_.push_back(set.family.make(pts[i]));
    losses_.push_back(loss[i]);
    thetas_.push_back(pts[i]);
  }
  // the refined optimum may sit between grid points; keep it when it qualifies
  if (constrained && !std::holds_alternative<FiniteFamily>(set.family.kind)) {
    auto best = delta_star(mdp, demos, set.family, set.loss, set.grid_step, set.refinements);
    bool known = false;
    for (const auto& t : thetas_) known = known || (t - best.theta).cwiseAbs().maxCoeff() < 1e-15;
    if (!known && best.value >= set.delta - 1e-12) {
      rewards_.push_back(best.witness);
      losses_.push_back(best.value);
      thetas_.push_back(best.theta);
    }
  }
  if (rewards_.empty()) throw EmptyRewardSet("no grid member reaches delta = " + std::to_string(set.delta));
  finish();
}

AdmissibleRewards::AdmissibleRewards(const Mdp& mdp, std::vector<RewardFunction> rewards)
    : mdp_(&mdp), rewards_(std::move(rewards)) {
  if (rewards_.empty()) throw EmptyRewardSet("reward list is empty");
  losses_.assign(rewards_.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < rewards_.size(); ++i) thetas_.push_back(Eigen::VectorXd::Constant(1, double(i)));
  finish();
}

void AdmissibleRewards::finish() {
  const std::size_t n = rewards_.size();
  optimum_.assign(n, 0.0);
  antagonist_.assign(n, TabularPolicy());
  parallel_for(n, [&](std::size_t i) {
    auto sol = solve_standard(*mdp_, rewards_[i]);
    optimum_[i] = sol.value;
    antagonist_[i] = std::move(sol.policy);
  });
  // a shared feature basis lets utilities be computed once per feature
  bool shared = std::all_of(rewards_.begin(), rewards_.end(), [&](const RewardFunction& r) {
    if (!r.is_linear() || r.features().size() != rewards_[0].features().size()) return false;
    for (std::size_t k = 0; k < r.features().size(); ++k)
      if (!(r.features()[k].array() == rewards_[0].features()[k].array()).all()) return false;
    return true;
  });
  if (shared && rewards_[0].is_linear()) {
    features_ = rewards_[0].features();
    weights_.resize(static_cast<int>(n), static_cast<int>(features_->size()));
    for (std::size_t i = 0; i < n; ++i) weights_.row(static_cast<int>(i)) = rewards_[i].weights().transpose();
  }
}

Eigen::VectorXd AdmissibleRewards::utilities(const TabularPolicy& pi) const {
  if (features_) {
    Eigen::VectorXd uf(static_cast<int>(features_->size()));
    for (std::size_t k = 0; k < features_->size(); ++k) uf(static_cast<int>(k)) = utility(*mdp_, pi, (*features_)[k]);
    return weights_ * uf;
  }
  Eigen::VectorXd u(static_cast<int>(rewards_.size()));
  for (std::size_t i = 0; i < rewards_.size(); ++i) u(static_cast<int>(i)) = utility(*mdp_, pi, rewards_[i]);
  return u;
}

double AdmissibleRewards::max_regret_value(const TabularPolicy& pi) const {
  const Eigen::VectorXd u = utilities(pi);
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < u.size(); ++i) best = std::max(best, optimum_[i] - u(i));
  return best;
}

RegretReport AdmissibleRewards::max_regret(const TabularPolicy& pi) const {
  const Eigen::VectorXd u = utilities(pi);
  int best = 0;
  for (int i = 1; i < u.size(); ++i)
    if (optimum_[i] - u(i) > optimum_[best] - u(best)) best = i;
  RegretReport rep;
  rep.witness_index = best;
  rep.witness_reward = rewards_[best];
  rep.antagonist = antagonist_[best];
  rep.antagonist_utility = optimum_[best];
  rep.protagonist_utility = u(best);
  rep.regret = rep.antagonist_utility - rep.protagonist_utility;
  return rep;
}

RegretReport max_regret(const Mdp& mdp, const TabularPolicy& pi_p, const RewardSet& set,
                        const DemonstrationSet& demos) {
  return AdmissibleRewards(mdp, demos, set).max_regret(pi_p);
}

TabularPolicy DecisionPoint::at(double p) const {
  Table t = base.probs;
  t.row(state).setZero();
  t(state, action_a) = 1.0 - p;
  t(state, action_b) = p;
  return TabularPolicy(std::move(t));
}

namespace {

// true if candidate (v, x) beats incumbent (bv, bx): lower value, ties to lower x
bool better(double v, double x, double bv, double bx) {
  if (v < bv - 1e-12) return true;
  return std::fabs(v - bv) <= 1e-12 && x < bx;
}

MinimaxResult solve_decision_point(const Mdp& mdp, const AdmissibleRewards& R, const DecisionPoint& dp) {
  if (!(dp.step > 0.0 && dp.step <= 1.0)) throw DomainError("decision-point step must lie in (0,1]");
  MinimaxResult out;
  double lo = 0.0, hi = 1.0, step = dp.step;
  double best_p = 0.0, best_v = std::numeric_limits<double>::infinity();
  int iter = 0;
  for (int round = 0; round <= dp.refinements; ++round) {
    std::vector<double> ps;
    const long n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    for (long i = 0; i <= n; ++i) ps.push_back(std::min(hi, lo + static_cast<double>(i) * step));
    if (ps.back() < hi - 1e-12) ps.push_back(hi);
    std::vector<double> vals(ps.size());
    parallel_for(ps.size(), [&](std::size_t i) { vals[i] = R.max_regret_value(dp.at(ps[i])); });
    for (std::size_t i = 0; i < ps.size(); ++i) {
      out.trace.push_back({iter++, {ps[i]}, vals[i]});
      if (better(vals[i], ps[i], best_v, best_p)) {
        best_v = vals[i];
        best_p = ps[i];
      }
    }
    lo = std::max(0.0, best_p - step);
    hi = std::min(1.0, best_p + step);
    step /= 10.0;
  }
  out.policy = dp.at(best_p);
  out.report = R.max_regret(out.policy);
  out.param = best_p;
  out.subgradient_regret = out.report.regret;
  return out;
}

// compositions of n into k parts, lexicographic
void compositions(int n, int k, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (k == 1) {
    cur.push_back(n);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  for (int i = n; i >= 0; --i) {
    cur.push_back(i);
    compositions(n - i, k - 1, cur, out);
    cur.pop_back();
  }
}

MinimaxResult solve_full(const Mdp& mdp, const AdmissibleRewards& R, const FullTabular& ft) {
  auto grid = simplex_grid_policies(mdp, ft.grid_step, ft.budget);
  std::vector<double> vals(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) { vals[i] = R.max_regret_value(grid[i]); });
  std::size_t best = 0;
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (vals[i] < vals[best] - 1e-12) best = i;

  MinimaxResult out;
  for (std::size_t i = 0; i < grid.size(); ++i) out.trace.push_back({static_cast<int>(i), {double(i)}, vals[i]});

  // projected subgradient on the convex max-regret objective
  const int S = mdp.n_states(), A = mdp.n_actions();
  std::vector<TabularPolicy> finals(ft.restarts);
  std::vector<double> final_vals(ft.restarts, std::numeric_limits<double>::infinity());
  parallel_for(static_cast<std::size_t>(ft.restarts), [&](std::size_t k) {
    Rng rng(ft.seed + 7919 * (k + 1));
    Table x = random_policy(rng, S, A).probs;
    TabularPolicy inc(x);
    double inc_v = R.max_regret_value(inc);
    for (int t = 0; t < ft.iterations; ++t) {
      TabularPolicy pi(x);
      auto rep = R.max_regret(pi);
      if (rep.regret < inc_v) {
        inc = pi;
        inc_v = rep.regret;
      }
      // d U_r / d pi(a|s) = rho(s) Q(s,a) for a direct tabular parameterisation
      const Eigen::VectorXd rho = visitation(mdp, pi).rho;
      Table g = action_values(mdp, pi, rep.witness_reward.table());
      g = rho.asDiagonal() * g;
      for (int s : mdp.terminals()) g.row(s).setZero();
      const double norm = g.norm();
      if (norm < 1e-14) break;
      x = project_rows(x + (ft.learning_rate / std::sqrt(t + 1.0)) * g / norm);
      for (int s : mdp.terminals()) x.row(s) = grid[0].probs.row(s);
    }
    finals[k] = inc;
    final_vals[k] = inc_v;
  });
  std::size_t kb = 0;
  for (std::size_t k = 1; k < finals.size(); ++k)
    if (final_vals[k] < final_vals[kb]) kb = k;
  out.subgradient_regret = ft.restarts > 0 ? final_vals[kb] : std::numeric_limits<double>::infinity();

  // the grid answer stands unless the local search is strictly better
  if (ft.restarts > 0 && final_vals[kb] < vals[best] - 1e-9) out.policy = finals[kb];
  else out.policy = grid[best];
  out.report = R.max_regret(out.policy);
  return out;
}

}  // namespace

MinimaxResult minimax_regret(const Mdp& mdp, const AdmissibleRewards& rewards, const PolicySpace& space) {
  if (auto* dp = std::get_if<DecisionPoint>(&space)) return solve_decision_point(mdp, rewards, *dp);
  return solve_full(mdp, rewards, std::get<FullTabular>(space));
}

MinimaxResult minimax_regret(const Mdp& mdp, const RewardSet& set, const DemonstrationSet& demos,
                             const PolicySpace& space) {
  return minimax_regret(mdp, AdmissibleRewards(mdp, demos, set), space);
}

std::vector<TabularPolicy> simplex_grid_policies(const Mdp& mdp, double step, std::size_t budget) {
  const int n = static_cast<int>(std::lround(1.0 / step));
  if (n < 1 || std::fabs(n * step - 1.0) > 1e-9) throw DomainError("simplex step must divide 1");
  const int S = mdp.n_states(), A = mdp.n_actions();
  std::vector<std::vector<int>> rows;
  std::vector<int> cur;
  compositions(n, A, cur, rows);

  std::vector<int> live;
  for (int s = 0; s < S; ++s)
    if (!mdp.is_terminal(s)) live.push_back(s);
  double total = std::pow(static_cast<double>(rows.size()), static_cast<double>(live.size()));
  if (total > static_cast<double>(budget))
    throw BudgetExceeded("policy grid has " + std::to_string(total) + " members");

  std::vector<TabularPolicy> out;
  std::vector<std::size_t> idx(live.size(), 0);
  for (std::size_t c = 0; c < static_cast<std::size_t>(total); ++c) {
    Table t = Table::Constant(S, A, 1.0 / A);
    for (std::size_t j = 0; j < live.size(); ++j)
      for (int a = 0; a < A; ++a) t(live[j], a) = static_cast<double>(rows[idx[j]][a]) / n;
    out.emplace_back(std::move(t));
    for (int j = static_cast<int>(live.size()) - 1; j >= 0; --j) {
      if (++idx[j] < rows.size()) break;
      idx[j] = 0;
    }
  }
  return out;
}

Table project_rows(const Table& x) {
  Table out(x.rows(), x.cols());
  for (int s = 0; s < x.rows(); ++s) {
    std::vector<double> u(x.cols());
    for (int a = 0; a < x.cols(); ++a) u[a] = x(s, a);
    std::sort(u.begin(), u.end(), std::greater<>());
    double cum = 0.0, theta = 0.0;
    for (int j = 0; j < x.cols(); ++j) {
      cum += u[j];
      const double t = (cum - 1.0) / (j + 1);
      if (u[j] - t > 0.0) theta = t;
    }
    double sum = 0.0;
    for (int a = 0; a < x.cols(); ++a) sum += out(s, a) = std::max(0.0, x(s, a) - theta);
    out.row(s) /= sum;
  }
  return out;
}

TabularPolicy mix_policies(const Mdp& mdp, const TabularPolicy& pi1, const TabularPolicy& pi2, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("mixing weight must lie in [0,1]");
  const Eigen::VectorXd r1 = visitation(mdp, pi1).rho, r2 = visitation(mdp, pi2).rho;
  Table t(mdp.n_states(), mdp.n_actions());
  for (int s = 0; s < mdp.n_states(); ++s) {
    const double w1 = alpha * r1(s), w2 = (1.0 - alpha) * r2(s);
    if (w1 + w2 <= 0.0) {
      t.row(s) = alpha * pi1.probs.row(s) + (1.0 - alpha) * pi2.probs.row(s);
    } else {
      t.row(s) = (w1 * pi1.probs.row(s) + w2 * pi2.probs.row(s)) / (w1 + w2);
    }
    t.row(s) /= t.row(s).sum();
  }
  return TabularPolicy(std::move(t));
}

GameMatrix GameMatrix::build(const Mdp& mdp, const std::vector<TabularPolicy>& policies,
                             const std::vector<RewardFunction>& rewards) {
  GameMatrix g;
  g.U.resize(static_cast<int>(policies.size()), static_cast<int>(rewards.size()));
  parallel_for(policies.size(), [&](std::size_t i) {
    for (std::size_t j = 0; j < rewards.size(); ++j)
      g.U(static_cast<int>(i), static_cast<int>(j)) = utility(mdp, policies[i], rewards[j]);
  });
  return g;
}

Eigen::VectorXd GameMatrix::max_regrets() const {
  const Eigen::RowVectorXd b = best();
  Eigen::VectorXd out(n_policies());
  for (int i = 0; i < n_policies(); ++i) out(i) = (b - U.row(i)).maxCoeff();
  return out;
}

std::vector<int> argmin_regret(const GameMatrix& g, double tol) {
  const Eigen::VectorXd m = g.max_regrets();
  const double lo = m.minCoeff();
  std::vector<int> out;
  for (int i = 0; i < m.size(); ++i)
    if (m(i) <= lo + tol) out.push_back(i);
  return out;
}

namespace {

void check_assumption(const GameMatrix& g) {
  if (g.n_policies() == 0 || g.n_rewards() == 0) throw DomainError("game matrix is empty");
  for (int i = 0; i < g.n_policies(); ++i)
    if (g.U.row(i).maxCoeff() - g.U.row(i).minCoeff() < 1e-12)
      throw AssumptionViolated("policy " + std::to_string(i) + " has constant utility across rewards");
}

}  // namespace

std::vector<int> not_weakly_dominated(const GameMatrix& g, double tol) {
  const Eigen::VectorXd hi = g.U.rowwise().maxCoeff(), lo = g.U.rowwise().minCoeff();
  std::vector<int> out;
  for (int i = 0; i < g.n_policies(); ++i) {
    bool dominated = false;
    for (int k = 0; k < g.n_policies() && !dominated; ++k) dominated = k != i && hi(i) <= lo(k) + tol;
    if (!dominated) out.push_back(i);
  }
  return out;
}

DecisionRule build_decision_rule(const GameMatrix& g, int i, double tol) {
  check_assumption(g);
  if (i < 0 || i >= g.n_policies()) throw DomainError("policy index out of range");
  const int R = g.n_rewards();
  const Eigen::VectorXd hi = g.U.rowwise().maxCoeff(), lo = g.U.rowwise().minCoeff();

  DecisionRule rule;
  rule.policy_index = i;
  const auto free = not_weakly_dominated(g, tol);
  if (free.empty()) throw DomainError("every policy is weakly dominated");
  rule.constant_c = -std::numeric_limits<double>::infinity();
  for (int k : free) rule.constant_c = std::max(rule.constant_c, lo(k));
  const double c = rule.constant_c;

  bool weak = false, total = false;
  for (int k = 0; k < g.n_policies(); ++k) {
    if (k == i) continue;
    weak = weak || hi(i) <= lo(k) + tol;
    total = total || hi(i) < lo(k) - tol;
  }
  rule.case_kind = total ? DominationCase::TotallyDominated
                         : weak ? DominationCase::WeaklyDominated : DominationCase::NotWeaklyDominated;

  Eigen::Index jmin, jmax;
  g.U.row(i).minCoeff(&jmin);
  g.U.row(i).maxCoeff(&jmax);
  rule.baseline_weights = Eigen::VectorXd::Zero(R);
  switch (rule.case_kind) {
    case DominationCase::NotWeaklyDominated: {
      // two-point mixture whose expected utility is exactly c
      const double w = std::clamp((c - lo(i)) / (hi(i) - lo(i)), 0.0, 1.0);
      rule.baseline_weights(jmax) += w;
      rule.baseline_weights(jmin) += 1.0 - w;
      break;
    }
    case DominationCase::WeaklyDominated:
      rule.baseline_weights(jmax) = 1.0;
      break;
    case DominationCase::TotallyDominated:
      rule.baseline_weights.setConstant(1.0 / R);
      break;
  }

  // r*: the best-utility reward among the regret maximisers
  const Eigen::VectorXd reg = g.regret_row(i);
  const double top = reg.maxCoeff();
  int star = -1;
  for (int j = 0; j < R; ++j)
    if (reg(j) >= top - tol && (star < 0 || g.U(i, j) > g.U(i, star))) star = j;
  rule.star_index = star;

  const double den = c - g.U(i, star);
  if (std::fabs(den) < 1e-12) {
    if (std::fabs(reg(star)) >= 1e-12)
      throw DegenerateDenominator("c equals U_{r*}(pi) while the regret is nonzero");
    rule.coefficient = 1.0;
  } else {
    rule.coefficient = reg(star) / den;
  }
  return rule;
}

DecisionRule build_decision_rule(const Mdp& mdp, const std::vector<RewardFunction>& rewards,
                                 const std::vector<TabularPolicy>& policies, const TabularPolicy& pi) {
  int idx = -1;
  for (std::size_t k = 0; k < policies.size() && idx < 0; ++k)
    if ((policies[k].probs - pi.probs).cwiseAbs().maxCoeff() < 1e-12) idx = static_cast<int>(k);
  if (idx < 0) throw DomainError("policy is not a member of the policy list");
  auto rule = build_decision_rule(GameMatrix::build(mdp, policies, rewards), idx);
  rule.star_reward = rewards[rule.star_index];
  return rule;
}

double mixed_utility(const DecisionRule& rule, const Eigen::VectorXd& u) {
  return rule.coefficient * u(rule.star_index) + (1.0 - rule.coefficient) * rule.baseline_weights.dot(u);
}

double mixed_utility(const DecisionRule& rule, const Mdp& mdp, const TabularPolicy& pi,
                     const std::vector<RewardFunction>& rewards) {
  Eigen::VectorXd u(static_cast<int>(rewards.size()));
  for (std::size_t j = 0; j < rewards.size(); ++j) u(static_cast<int>(j)) = utility(mdp, pi, rewards[j]);
  return mixed_utility(rule, u);
}

std::vector<int> argmax_mixed_utility(const GameMatrix& g, double tol) {
  Eigen::VectorXd m(g.n_policies());
  for (int i = 0; i < g.n_policies(); ++i)
    m(i) = mixed_utility(build_decision_rule(g, i), g.U.row(i).transpose());
  const double top = m.maxCoeff();
  std::vector<int> out;
  for (int i = 0; i < m.size(); ++i)
    if (m(i) >= top - tol) out.push_back(i);
  return out;
}

}  // namespace pagar
