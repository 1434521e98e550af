#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pagar/analysis.hpp"
#include "pagar/errors.hpp"
#include "pagar/example1.hpp"
#include "pagar/random.hpp"
#include "pagar/soft_rl.hpp"

using namespace pagar;

namespace {

Table omega_reward(const Mdp& m, double w) { return w * m.feature("r1") + (1.0 - w) * m.feature("r2"); }

std::vector<TabularPolicy> p_grid(int n) {
  std::vector<TabularPolicy> out;
  for (int i = 0; i <= n; ++i) out.push_back(example1::policy(double(i) / n));
  return out;
}

TaskPredicate reach_s6() {
  return TaskPredicate::visit_threshold({{example1::kS6, 0.5, example1::kTaskLen}});
}

TrajectoryDistribution random_distribution(Rng& rng, const Mdp& m, int max_len) {
  return TrajectoryDistribution::of_policy(m, random_policy(rng, m.n_states(), m.n_actions()), max_len);
}

}  // namespace

TEST_CASE("the task holds exactly on the success interval") {
  const Mdp m = example1::mdp();
  const auto phi = reach_s6();
  const double upper = to_double(example1::success_upper());
  for (int i = 0; i <= 100; ++i) {
    const double p = i / 100.0;
    CHECK(phi(m, example1::policy(p)) == (p <= upper + 1e-12));
  }
}

TEST_CASE("reaching s6 is aligned, lingering in s2 is not") {
  const Mdp m = example1::mdp();
  const auto grid = p_grid(100);
  const auto on_s6 = classify_alignment(m, omega_reward(m, 0.0), reach_s6(), grid);
  CHECK(on_s6.aligned);
  REQUIRE(on_s6.s_interval);
  REQUIRE(on_s6.f_interval);
  CHECK(on_s6.s_interval->lo > on_s6.f_interval->hi);
  const auto on_s2 = classify_alignment(m, omega_reward(m, 1.0), reach_s6(), grid);
  CHECK_FALSE(on_s2.aligned);
}

TEST_CASE("a lone aligned reward guarantees success") {
  const Mdp m = example1::mdp();
  // utilities are affine in p, so a grid {0, 0.1, 1} leaves a narrow success
  // interval well separated from the single failing point
  std::vector<TabularPolicy> grid{example1::policy(0.0), example1::policy(0.1), example1::policy(1.0)};
  std::vector<RewardFunction> rs{RewardFunction::tabular(omega_reward(m, 0.0))};
  const auto rep = check_theorem_conditions(m, rs, reach_s6(), grid, TheoremKind::SuccessGuarantee);
  CHECK(rep.condition1);
  CHECK(rep.condition2);
  CHECK(rep.passed);
  REQUIRE(rep.witness_policy);
  CHECK(reach_s6()(m, grid[*rep.witness_policy]));
  // on a fine grid the success interval is wider than the gap
  const auto fine = check_theorem_conditions(m, rs, reach_s6(), p_grid(100), TheoremKind::SuccessGuarantee);
  CHECK_FALSE(fine.condition1);
}

TEST_CASE("no aligned reward means no guarantee") {
  const Mdp m = example1::mdp();
  std::vector<RewardFunction> rs{RewardFunction::tabular(omega_reward(m, 1.0))};
  const auto rep = check_theorem_conditions(m, rs, reach_s6(), p_grid(20), TheoremKind::FailureAvoidance);
  CHECK_FALSE(rep.passed);
}

TEST_CASE("domination compares utility ranges") {
  const Mdp m = example1::mdp();
  std::vector<RewardFunction> rs{RewardFunction::tabular(omega_reward(m, 0.0)),
                                 RewardFunction::tabular(0.5 * omega_reward(m, 0.0))};
  // under rewards on s6 alone the a1 route wins every comparison
  CHECK(domination(m, example1::policy(1.0), example1::policy(0.0), rs) == DominationVerdict::TotallyDominates);
  CHECK(domination(m, example1::policy(0.0), example1::policy(1.0), rs) == DominationVerdict::Incomparable);
  std::vector<RewardFunction> zero{RewardFunction::tabular(Table::Zero(7, 2))};
  CHECK_THROWS_AS(domination(m, example1::policy(0.3), example1::policy(0.7), zero), AssumptionViolated);
}

TEST_CASE("simplex solves small programs") {
  // min -x1 - 2 x2 with x1 + x2 + s = 4, x1 + 3 x2 + t = 6
  Eigen::VectorXd c(4);
  c << -1, -2, 0, 0;
  Eigen::MatrixXd A(2, 4);
  A << 1, 1, 1, 0, 1, 3, 0, 1;
  Eigen::VectorXd b(2);
  b << 4, 6;
  const auto res = solve_lp(c, A, b);
  CHECK(res.value == doctest::Approx(-5.0));
  CHECK(res.x(0) == doctest::Approx(3.0));
  CHECK(res.x(1) == doctest::Approx(1.0));
  Eigen::MatrixXd bad(1, 1);
  bad << 1;
  CHECK_THROWS_AS(solve_lp(Eigen::VectorXd::Ones(1), bad, -Eigen::VectorXd::Ones(1)), InfeasibleLP);
}

TEST_CASE("transport simplex agrees with the general simplex") {
  Rng rng(21);
  for (int k = 0; k < 20; ++k) {
    const int n = 2 + k % 5, m = 1 + (k * 7) % 6;
    const Table cost = random_table(rng, n, m, 0.0, 1.0);
    Eigen::VectorXd a = random_policy(rng, 1, n).probs.row(0).transpose();
    Eigen::VectorXd b = random_policy(rng, 1, m).probs.row(0).transpose();
    if (k % 4 == 0) a = Eigen::VectorXd::Constant(n, 1.0 / n), b = Eigen::VectorXd::Constant(m, 1.0 / m);
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n + m, n * m);
    Eigen::VectorXd rhs(n + m), c(n * m);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) {
        A(i, j * n + i) = 1.0;
        A(n + j, j * n + i) = 1.0;
        c(j * n + i) = cost(i, j);
      }
    rhs << a, b;
    const auto t = solve_transport(cost, a, b);
    CHECK(t.value == doctest::Approx(solve_lp(c, A, rhs).value).epsilon(1e-9));
    const Eigen::Map<const Eigen::MatrixXd> x(t.x.data(), n, m);
    CHECK((x.rowwise().sum() - a).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((x.colwise().sum().transpose() - b).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(x.minCoeff() >= 0.0);
  }
}

TEST_CASE("wasserstein distance behaves like a metric") {
  Rng rng(2);
  RandomMdpOptions o;
  o.n_states = 4;
  o.n_actions = 2;
  o.n_terminals = 1;
  const Mdp m = random_mdp(rng, o);
  const auto metric = feature_expectation_metric(m, {random_table(rng, 4, 2), random_table(rng, 4, 2)});
  for (int k = 0; k < 10; ++k) {
    const auto a = random_distribution(rng, m, 3), b = random_distribution(rng, m, 3), c = random_distribution(rng, m, 3);
    const double ab = wasserstein1(a, b, metric).w1, ba = wasserstein1(b, a, metric).w1;
    CHECK(wasserstein1(a, a, metric).w1 == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(ab == doctest::Approx(ba).epsilon(1e-9));
    CHECK(ab <= wasserstein1(a, c, metric).w1 + wasserstein1(c, b, metric).w1 + 1e-9);
    const auto rep = wasserstein1(a, b, metric);
    CHECK(rep.coupling.rowwise().sum().isApprox(Eigen::Map<const Eigen::VectorXd>(a.probs.data(), a.probs.size()), 1e-9));
  }
}

TEST_CASE("point masses are as far apart as their metric distance") {
  const Mdp m = example1::mdp();
  const auto e = example1::demos();
  const auto metric = feature_expectation_metric(m, {m.feature("r1"), m.feature("r2")});
  TrajectoryDistribution a{{e.trajectories[0]}, {1.0}}, b{{e.trajectories[2]}, {1.0}};
  CHECK(wasserstein1(a, b, metric).w1 == doctest::Approx(metric(e.trajectories[0], e.trajectories[2])));
}

TEST_CASE("demo distributions merge duplicates") {
  const auto e = example1::demos();
  DemonstrationSet twice{{e.trajectories[0], e.trajectories[0], e.trajectories[1]}};
  const auto d = TrajectoryDistribution::of_demos(twice);
  REQUIRE(d.support.size() == 2);
  CHECK(d.probs[0] == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("a feature reward is 1-Lipschitz under its own feature metric") {
  Rng rng(6);
  RandomMdpOptions o;
  o.n_states = 4;
  o.n_actions = 2;
  o.n_terminals = 1;
  const Mdp m = random_mdp(rng, o);
  const Table f = random_table(rng, 4, 2);
  const auto support = random_distribution(rng, m, 3).support;
  const double L = lipschitz_constant(m, f, support, feature_expectation_metric(m, {f}));
  CHECK(L <= 1.0 + 1e-12);
  CHECK(lipschitz_constant(m, 3.0 * f, support, feature_expectation_metric(m, {f})) == doctest::Approx(3.0 * L));
}

TEST_CASE("advantage bounds hold with exact solvers") {
  Rng rng(7);
  for (int k = 0; k < 30; ++k) {
    RandomMdpOptions o;
    o.n_states = 2 + k % 5;
    o.n_actions = 2 + k % 2;
    o.n_terminals = k % 2;
    const Mdp m = random_mdp(rng, o);
    const auto rep = verify_bounds(m, random_table(rng, o.n_states, o.n_actions), random_policy(rng, o.n_states, o.n_actions));
    CHECK(rep.passed());
    CHECK(rep.alpha >= 0.0);
    CHECK(rep.alpha <= 1.0);
  }
}

TEST_CASE("bounds are tight when the policy is already soft optimal") {
  const Mdp m = example1::mdp();
  const Table r = omega_reward(m, 0.3);
  const auto rep = verify_bounds(m, r, solve_soft(m, r).policy);
  CHECK(rep.alpha == doctest::Approx(0.0).epsilon(1e-8));
  CHECK(std::abs(rep.lhs_own) < 1e-8);
  CHECK(std::abs(rep.lhs_other) < 1e-8);
}
