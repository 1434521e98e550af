#include "pagar/soft_rl.hpp"

#include <cmath>
#include <limits>

#include "pagar/errors.hpp"

namespace pagar {

namespace {

double logsumexp(const Eigen::VectorXd& x) {
  const double m = x.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((x.array() - m).exp().sum());
}

Eigen::VectorXd expected_next(const Mdp& mdp, int a, const Eigen::VectorXd& v) {
  return mdp.transition(a) * v;
}

// Q(s,a) = r(s,a) + gamma E[v(s')], with terminal rows pinned to v(s)
Table backup(const Mdp& mdp, const Table& r, const Eigen::VectorXd& v) {
  Table q(mdp.n_states(), mdp.n_actions());
  for (int a = 0; a < mdp.n_actions(); ++a) q.col(a) = r.col(a) + mdp.gamma() * expected_next(mdp, a, v);
  for (int s : mdp.terminals()) q.row(s).setConstant(terminal_reward(r, s));
  return q;
}

Eigen::VectorXd solve_linear(const Mdp& mdp, const Eigen::MatrixXd& K, const Eigen::VectorXd& b) {
  const int S = mdp.n_states();
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(S, S) - mdp.gamma() * K;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
  if (!lu.isInvertible()) throw SolveFailure("policy evaluation system is singular");
  Eigen::VectorXd x = lu.solve(b);
  if (!x.allFinite()) throw SolveFailure("policy evaluation produced non-finite values");
  return x;
}

// v_0 of the recursion v_t = b + gamma K v_{t+1}, v_T = 0
Eigen::VectorXd backward(const Mdp& mdp, const Eigen::MatrixXd& K, const Eigen::VectorXd& b) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(mdp.n_states());
  for (int t = 0; t < *mdp.horizon(); ++t) v = b + mdp.gamma() * K * v;
  return v;
}

Eigen::VectorXd evaluate(const Mdp& mdp, const Eigen::MatrixXd& K, const Eigen::VectorXd& b) {
  return mdp.horizon() ? backward(mdp, K, b) : solve_linear(mdp, K, b);
}

void check_reward(const Mdp& mdp, const Table& r) {
  if (r.rows() != mdp.n_states() || r.cols() != mdp.n_actions())
    throw DomainError("reward shape does not match the mdp");
}

}  // namespace

Eigen::MatrixXd policy_kernel(const Mdp& mdp, const TabularPolicy& pi) {
  check_policy(mdp, pi);
  const int S = mdp.n_states();
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(S, S);
  for (int a = 0; a < mdp.n_actions(); ++a) K += pi.probs.col(a).asDiagonal() * mdp.transition(a);
  for (int s : mdp.terminals()) K.row(s).setZero();
  return K;
}

Eigen::VectorXd policy_reward(const Mdp& mdp, const TabularPolicy& pi, const Table& r) {
  check_reward(mdp, r);
  Eigen::VectorXd b = (pi.probs.array() * r.array()).rowwise().sum();
  for (int s : mdp.terminals()) b(s) = terminal_reward(r, s);
  return b;
}

Eigen::VectorXd policy_entropy(const Mdp& mdp, const TabularPolicy& pi) {
  Eigen::VectorXd h = Eigen::VectorXd::Zero(mdp.n_states());
  for (int s = 0; s < mdp.n_states(); ++s) {
    if (mdp.is_terminal(s)) continue;
    for (int a = 0; a < mdp.n_actions(); ++a)
      if (pi(s, a) > 0.0) h(s) -= pi(s, a) * std::log(pi(s, a));
  }
  return h;
}

Eigen::VectorXd state_values(const Mdp& mdp, const TabularPolicy& pi, const Table& r) {
  return evaluate(mdp, policy_kernel(mdp, pi), policy_reward(mdp, pi, r));
}

Table action_values(const Mdp& mdp, const TabularPolicy& pi, const Table& r) {
  // Q at t = 0 needs v_1, which differs from v_0 only in finite horizon
  if (!mdp.horizon()) return backup(mdp, r, state_values(mdp, pi, r));
  if (*mdp.horizon() == 0) return Table::Zero(mdp.n_states(), mdp.n_actions());
  Mdp shorter = mdp.with_horizon(*mdp.horizon() - 1);
  return backup(mdp, r, state_values(shorter, pi, r));
}

double utility(const Mdp& mdp, const TabularPolicy& pi, const Table& r) {
  return mdp.initial().dot(state_values(mdp, pi, r));
}

double utility(const Mdp& mdp, const TabularPolicy& pi, const RewardFunction& r) {
  return utility(mdp, pi, r.table());
}

SoftSolution evaluate_soft(const Mdp& mdp, const TabularPolicy& pi, const Table& r) {
  check_reward(mdp, r);
  const Eigen::MatrixXd K = policy_kernel(mdp, pi);
  const Eigen::VectorXd b = policy_reward(mdp, pi, r) + policy_entropy(mdp, pi);
  SoftSolution out;
  out.policy = pi;
  out.v = evaluate(mdp, K, b);
  if (!mdp.horizon()) {
    out.q = backup(mdp, r, out.v);
  } else if (*mdp.horizon() == 0) {
    out.q = Table::Zero(mdp.n_states(), mdp.n_actions());
  } else {
    Mdp shorter = mdp.with_horizon(*mdp.horizon() - 1);
    out.q = backup(mdp, r, evaluate(shorter, K, b));
  }
  out.adv = out.q.colwise() - out.v;
  out.entropy_total = entropy(mdp, pi);
  return out;
}

TabularPolicy softmax_policy(const Mdp& mdp, const Table& q) {
  Table p(q.rows(), q.cols());
  for (int s = 0; s < q.rows(); ++s) {
    if (mdp.is_terminal(s)) {
      p.row(s).setConstant(1.0 / static_cast<double>(q.cols()));
      continue;
    }
    const double m = q.row(s).maxCoeff();
    Eigen::RowVectorXd e = (q.row(s).array() - m).exp();
    p.row(s) = e / e.sum();
  }
  return TabularPolicy(std::move(p));
}

SoftSolution solve_soft(const Mdp& mdp, const Table& r, double tol, long iter_cap) {
  check_reward(mdp, r);
  if (!(tol > 0.0)) throw DomainError("tol must be positive");
  const int S = mdp.n_states();

  if (mdp.horizon()) {
    // backward soft recursion; the stationary answer is the t = 0 slice
    Eigen::VectorXd v = Eigen::VectorXd::Zero(S);
    Table q = Table::Zero(S, mdp.n_actions());
    for (int t = 0; t < *mdp.horizon(); ++t) {
      q = backup(mdp, r, v);
      for (int s = 0; s < S; ++s) v(s) = mdp.is_terminal(s) ? terminal_reward(r, s) : logsumexp(q.row(s).transpose());
    }
    SoftSolution out;
    out.policy = softmax_policy(mdp, q);
    out.v = v;
    out.q = q;
    out.adv = q.colwise() - v;
    out.entropy_total = entropy(mdp, out.policy);
    return out;
  }

  // soft policy iteration: evaluate exactly, then take the softmax of Q. The
  // Bellman residual is the KL gap to the softmax, which is quadratic in the
  // policy error, so convergence is judged on the policy itself.
  TabularPolicy pi = TabularPolicy::uniform(S, mdp.n_actions());
  for (long it = 0; it < iter_cap; ++it) {
    SoftSolution ev = evaluate_soft(mdp, pi, r);
    TabularPolicy next = softmax_policy(mdp, ev.q);
    const double moved = (next.probs - pi.probs).cwiseAbs().maxCoeff();
    if (!std::isfinite(moved)) throw NonConvergence("soft solve diverged");
    if (moved < tol) return ev;
    pi = std::move(next);
  }
  throw NonConvergence("soft solve did not converge within the iteration cap");
}

SoftSolution solve_soft(const Mdp& mdp, const RewardFunction& r, double tol) {
  return solve_soft(mdp, r.table(), tol);
}

namespace {

// lowest action whose value is within tolerance of the best
int greedy_action(const Eigen::RowVectorXd& q) {
  const double m = q.maxCoeff();
  const double slack = 1e-12 * std::max(1.0, std::fabs(m));
  for (int a = 0; a < q.size(); ++a)
    if (q(a) >= m - slack) return a;
  return 0;
}

}  // namespace

StandardSolution solve_standard(const Mdp& mdp, const Table& r, double tol, long iter_cap) {
  check_reward(mdp, r);
  if (!(tol > 0.0)) throw DomainError("tol must be positive");
  const int S = mdp.n_states(), A = mdp.n_actions();

  if (mdp.horizon()) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(S);
    Table q = Table::Zero(S, A);
    for (int t = 0; t < *mdp.horizon(); ++t) {
      q = backup(mdp, r, v);
      v = q.rowwise().maxCoeff();
    }
    std::vector<int> acts(S);
    for (int s = 0; s < S; ++s) acts[s] = greedy_action(q.row(s));
    StandardSolution out{TabularPolicy::deterministic(acts, A), v, q, mdp.initial().dot(v)};
    return out;
  }

  std::vector<int> acts(S, 0);
  for (long it = 0; it < iter_cap; ++it) {
    TabularPolicy pi = TabularPolicy::deterministic(acts, A);
    Eigen::VectorXd v = state_values(mdp, pi, r);
    Table q = backup(mdp, r, v);
    bool changed = false;
    for (int s = 0; s < S; ++s) {
      if (mdp.is_terminal(s)) continue;
      const int best = greedy_action(q.row(s));
      // switch only on a real improvement so that near-ties cannot cycle
      if (best != acts[s] && q(s, best) > q(s, acts[s]) + tol * 1e-3) {
        acts[s] = best;
        changed = true;
      }
    }
    if (!changed) {
      // settle remaining near-ties on the lowest index
      for (int s = 0; s < S; ++s) acts[s] = mdp.is_terminal(s) ? 0 : greedy_action(q.row(s));
      TabularPolicy fin = TabularPolicy::deterministic(acts, A);
      Eigen::VectorXd vf = state_values(mdp, fin, r);
      return StandardSolution{fin, vf, backup(mdp, r, vf), mdp.initial().dot(vf)};
    }
  }
  throw NonConvergence("policy iteration did not converge within the iteration cap");
}

StandardSolution solve_standard(const Mdp& mdp, const RewardFunction& r, double tol) {
  return solve_standard(mdp, r.table(), tol);
}

Visitation visitation(const Mdp& mdp, const TabularPolicy& pi) {
  const Eigen::MatrixXd K = policy_kernel(mdp, pi);
  Visitation out;
  if (mdp.horizon()) {
    Eigen::VectorXd d = mdp.initial();
    out.rho = Eigen::VectorXd::Zero(mdp.n_states());
    double disc = 1.0;
    for (int t = 0; t < *mdp.horizon(); ++t) {
      out.rho += disc * d;
      d = K.transpose() * d;
      disc *= mdp.gamma();
    }
  } else {
    const int S = mdp.n_states();
    Eigen::MatrixXd M = Eigen::MatrixXd::Identity(S, S) - mdp.gamma() * K.transpose();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    if (!lu.isInvertible()) throw SolveFailure("visitation system is singular");
    out.rho = lu.solve(mdp.initial());
  }
  return out;
}

double entropy(const Mdp& mdp, const TabularPolicy& pi) {
  return visitation(mdp, pi).rho.dot(policy_entropy(mdp, pi));
}

double soft_objective(const Mdp& mdp, const TabularPolicy& pi, const Table& r) {
  return utility(mdp, pi, r) + entropy(mdp, pi);
}

double total_variation(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  return 0.5 * (p - q).cwiseAbs().sum();
}

double kl_divergence(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  double kl = 0.0;
  for (int i = 0; i < p.size(); ++i) {
    if (p(i) <= 0.0) continue;
    if (q(i) <= 0.0) return std::numeric_limits<double>::infinity();
    kl += p(i) * std::log(p(i) / q(i));
  }
  return kl;
}

}  // namespace pagar
