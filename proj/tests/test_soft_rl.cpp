#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>

#include "pagar/example1.hpp"
#include "pagar/random.hpp"
#include "pagar/soft_rl.hpp"

using namespace pagar;

namespace {

Mdp single_state(double gamma, std::optional<int> horizon, int n_actions = 1) {
  std::vector<Eigen::MatrixXd> P(n_actions, Eigen::MatrixXd::Identity(1, 1));
  return Mdp(1, n_actions, P, Eigen::VectorXd::Ones(1), {}, gamma, horizon);
}

// forward-propagated oracle: sum_t gamma^t E[per-state payoff], truncated
double forward_oracle(const Mdp& m, const TabularPolicy& pi, const Eigen::VectorXd& payoff, int depth) {
  Eigen::VectorXd d = m.initial();
  double total = 0.0, disc = 1.0;
  int T = m.horizon() ? *m.horizon() : depth;
  for (int t = 0; t < T; ++t) {
    total += disc * d.dot(payoff);
    Eigen::VectorXd next = Eigen::VectorXd::Zero(m.n_states());
    for (int s = 0; s < m.n_states(); ++s) {
      if (m.is_terminal(s)) continue;
      for (int a = 0; a < m.n_actions(); ++a)
        for (const auto& [s2, p] : m.successors(s, a)) next(s2) += d(s) * pi(s, a) * p;
    }
    d = next;
    disc *= m.gamma();
  }
  return total;
}

RandomMdpOptions opts(int k) {
  RandomMdpOptions o;
  o.n_states = 3 + k % 4;
  o.n_actions = 2 + k % 2;
  o.gamma = 0.9;
  o.n_terminals = k % 3 == 0 ? 1 : 0;
  return o;
}

}  // namespace

TEST_CASE("geometric utility and visitation") {
  Mdp m = single_state(0.5, std::nullopt);
  auto pi = TabularPolicy::uniform(1, 1);
  CHECK(utility(m, pi, Table::Ones(1, 1)) == doctest::Approx(2.0));
  CHECK(visitation(m, pi).rho(0) == doctest::Approx(2.0));
  CHECK(utility(m, pi, Table::Zero(1, 1)) == 0.0);
}

TEST_CASE("chain visitation with a horizon") {
  std::vector<Eigen::MatrixXd> P(1, Eigen::MatrixXd::Zero(2, 2));
  P[0] << 0, 1, 0, 1;
  Eigen::VectorXd d0(2);
  d0 << 1, 0;
  Mdp m(2, 1, P, d0, {1}, 1.0, 2);
  auto rho = visitation(m, TabularPolicy::uniform(2, 1)).rho;
  CHECK(rho(0) == doctest::Approx(1.0));
  CHECK(rho(1) == doctest::Approx(1.0));
}

TEST_CASE("closed-form one-step softmax") {
  Mdp m = single_state(1.0, 1, 2);
  Table r(1, 2);
  r << 1, 0;
  auto sol = solve_soft(m, r);
  const double e = std::exp(1.0);
  CHECK(sol.policy(0, 0) == doctest::Approx(e / (1 + e)));
  CHECK(sol.policy(0, 1) == doctest::Approx(1 / (1 + e)));
  CHECK(sol.v(0) == doctest::Approx(std::log(1 + e)));
  auto hard = solve_standard(m, r);
  CHECK(hard.policy(0, 0) == 1.0);
  CHECK(hard.value == doctest::Approx(1.0));
  CHECK(entropy(m, TabularPolicy::uniform(1, 2)) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("constant reward over a finite horizon") {
  Rng rng(3);
  RandomMdpOptions o;
  o.gamma = 0.8;
  o.horizon = 4;
  Mdp m = random_mdp(rng, o);
  auto sol = solve_standard(m, Table::Constant(m.n_states(), m.n_actions(), 2.5));
  const double expect = 2.5 * (1 + 0.8 + 0.64 + 0.512);
  for (int s = 0; s < m.n_states(); ++s) CHECK(sol.v(s) == doctest::Approx(expect));
}

TEST_CASE("zero reward gives the uniform soft optimum") {
  Rng rng(4);
  Mdp m = random_mdp(rng, opts(1));
  auto sol = solve_soft(m, Table::Zero(m.n_states(), m.n_actions()));
  for (int s = 0; s < m.n_states(); ++s)
    for (int a = 0; a < m.n_actions(); ++a) CHECK(sol.policy(s, a) == doctest::Approx(1.0 / m.n_actions()));
}

TEST_CASE("example 1 utility matches a depth-50 enumeration") {
  Mdp m = example1::mdp();
  // both actions at s2 share their dynamics, so fixing a2 there keeps the
  // oracle linear in depth without changing the value
  Table t = example1::policy(0.5).probs;
  t.row(example1::kS2) << 0.0, 1.0;
  TabularPolicy pi(t);
  Table r = m.feature("r1");
  CHECK(utility(m, pi, r) == doctest::Approx(utility(m, example1::policy(0.5), r)).epsilon(1e-12));
  // policy-weighted depth-first enumeration, skipping zero-probability branches
  double oracle = 0.0;
  Trajectory cur;
  std::function<void(int, double)> grow = [&](int s, double prob) {
    if (m.is_terminal(s) || cur.length() >= 50) {
      cur.final_state = s;
      CHECK(trajectory_probability(m, pi, cur) == doctest::Approx(prob));
      oracle += prob * trajectory_return(m, r, cur);
      return;
    }
    for (int a = 0; a < m.n_actions(); ++a)
      for (const auto& [s2, p] : m.successors(s, a)) {
        if (pi(s, a) == 0.0) continue;
        cur.steps.emplace_back(s, a);
        grow(s2, prob * pi(s, a) * p);
        cur.steps.pop_back();
      }
  };
  grow(0, 1.0);
  CHECK(utility(m, pi, r) == doctest::Approx(oracle).epsilon(1e-6));
}

TEST_CASE("example 1 optimum under r1 takes a2") {
  Mdp m = example1::mdp();
  auto sol = solve_standard(m, m.feature("r1"));
  CHECK(sol.policy(example1::kStart, example1::kA2) == 1.0);
}

TEST_CASE("solver invariants on random models") {
  Rng rng(21);
  for (int k = 0; k < 12; ++k) {
    Mdp m = random_mdp(rng, opts(k));
    const int S = m.n_states(), A = m.n_actions();
    Table r = random_table(rng, S, A, -2.0, 2.0);
    auto soft = solve_soft(m, r);
    auto hard = solve_standard(m, r);

    Table gap = soft.adv - (soft.q.colwise() - soft.v);
    CHECK(gap.cwiseAbs().maxCoeff() < 1e-10);
    auto relaxed = softmax_policy(m, soft.q);
    CHECK((relaxed.probs - soft.policy.probs).cwiseAbs().maxCoeff() < 1e-8);

    const double j_soft = soft_objective(m, soft.policy, r);
    const double u_hard = utility(m, hard.policy, r);
    CHECK(u_hard == doctest::Approx(hard.value).epsilon(1e-10));
    for (int i = 0; i < 1000; ++i) {
      auto pi = random_policy(rng, S, A);
      CHECK(j_soft >= soft_objective(m, pi, r) - 1e-9);
      CHECK(u_hard >= utility(m, pi, r) - 1e-9);
    }
  }
}

TEST_CASE("entropy, utility and visitation match the forward oracle") {
  Rng rng(8);
  for (int k = 0; k < 12; ++k) {
    auto o = opts(k);
    if (k % 2) o.horizon = 3 + k % 3;
    Mdp m = random_mdp(rng, o);
    auto pi = random_policy(rng, m.n_states(), m.n_actions());
    Table r = random_table(rng, m.n_states(), m.n_actions());
    CHECK(entropy(m, pi) == doctest::Approx(forward_oracle(m, pi, policy_entropy(m, pi), 400)).epsilon(1e-8));
    CHECK(utility(m, pi, r) == doctest::Approx(forward_oracle(m, pi, policy_reward(m, pi, r), 400)).epsilon(1e-8));
    auto rho = visitation(m, pi).rho;
    for (int s = 0; s < m.n_states(); ++s) {
      Eigen::VectorXd e = Eigen::VectorXd::Unit(m.n_states(), s);
      CHECK(rho(s) == doctest::Approx(forward_oracle(m, pi, e, 400)).epsilon(1e-8));
      CHECK(rho(s) >= 0.0);
    }
    if (!m.horizon() && m.terminals().empty()) CHECK(rho.sum() == doctest::Approx(1.0 / (1.0 - m.gamma())));
  }
}

TEST_CASE("performance difference identity holds exactly") {
  Rng rng(13);
  for (int k = 0; k < 20; ++k) {
    Mdp m = random_mdp(rng, opts(k));
    Table r = random_table(rng, m.n_states(), m.n_actions());
    auto p1 = random_policy(rng, m.n_states(), m.n_actions());
    auto p2 = random_policy(rng, m.n_states(), m.n_actions());
    auto e2 = evaluate_soft(m, p2, r);
    // E_{pi1}[sum gamma^t A_{pi2}] + H(pi2)
    const double lhs = utility(m, p1, r) - utility(m, p2, r);
    const double rhs = utility(m, p1, e2.adv) + entropy(m, p2);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-8));
    // the soft optimum's own advantage accumulates to minus its entropy
    auto opt = solve_soft(m, r);
    CHECK(utility(m, opt.policy, opt.adv) == doctest::Approx(-opt.entropy_total).epsilon(1e-8));
  }
}
