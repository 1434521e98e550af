#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pagar/adversarial.hpp"
#include "pagar/errors.hpp"
#include "pagar/example1.hpp"
#include "pagar/random.hpp"
#include "pagar/soft_rl.hpp"

using namespace pagar;

namespace {

struct Instance {
  Mdp mdp;
  TabularPolicy pi_p, pi_a;
  Table r;
};

Instance finite_instance(Rng& rng) {
  RandomMdpOptions o;
  o.n_states = 4;
  o.n_actions = 2;
  o.n_terminals = 1;
  o.horizon = 3;
  Mdp m = random_mdp(rng, o);
  return {m, random_policy(rng, 4, 2), random_policy(rng, 4, 2), random_table(rng, 4, 2)};
}

// the ratio term of J_R1 written straight from its definition
double r1_oracle(const Mdp& m, const TabularPolicy& pp, const TabularPolicy& pa, const Table& r) {
  double total = 0.0;
  for (const auto& wt : enumerate_trajectories(m, *m.horizon() + 1)) {
    const double w = trajectory_probability(m, pa, wt.tau);
    double disc = 1.0;
    for (const auto& [s, a] : wt.tau.steps) {
      total += w * disc * (pp(s, a) / pa(s, a) - 1.0) * r(s, a);
      disc *= m.gamma();
    }
  }
  return total;
}

TrainConfig short_config(int iterations) {
  TrainConfig c;
  c.iterations = iterations;
  c.batch_size = 16;
  return c;
}

}  // namespace

TEST_CASE("identical players leave only the constant terms") {
  Rng rng(1);
  auto in = finite_instance(rng);
  const auto da = sample_batch(in.mdp, in.pi_a, 50, 3), dp = sample_batch(in.mdp, in.pi_a, 50, 4);
  const auto est = estimate_objectives(in.mdp, da, dp, in.pi_a, in.pi_a, in.r);
  CHECK(est.r1_ratio_term == 0.0);
  CHECK(est.r2_ratio_term == 0.0);
  CHECK(est.alpha_hat == 0.0);
  CHECK(est.ratios.xi.min == 1.0);
  CHECK(est.ratios.xi.max == 1.0);
}

TEST_CASE("a zero reward zeroes every reward objective") {
  Rng rng(2);
  auto in = finite_instance(rng);
  const auto da = sample_batch(in.mdp, in.pi_a, 30, 5), dp = sample_batch(in.mdp, in.pi_p, 30, 6);
  const auto est = estimate_objectives(in.mdp, da, dp, in.pi_p, in.pi_a, Table::Zero(4, 2));
  CHECK(est.j_r1 == 0.0);
  CHECK(est.j_r2 == 0.0);
  CHECK(est.j_r3 == 0.0);
  CHECK(est.j_r4 == 0.0);
  CHECK(est.j_pagar == 0.0);
}

TEST_CASE("the pagar objective is the sum of its two bounds") {
  Rng rng(3);
  for (int k = 0; k < 10; ++k) {
    auto in = finite_instance(rng);
    const auto da = sample_batch(in.mdp, in.pi_a, 20, rng()), dp = sample_batch(in.mdp, in.pi_p, 20, rng());
    const auto est = estimate_objectives(in.mdp, da, dp, in.pi_p, in.pi_a, in.r);
    CHECK(est.j_pagar == est.j_r1 + est.j_r2);
  }
}

TEST_CASE("exact-weighted enumeration reproduces the closed forms") {
  Rng rng(4);
  for (int k = 0; k < 10; ++k) {
    auto in = finite_instance(rng);
    const int len = *in.mdp.horizon() + 1;
    const auto da = exact_batch(in.mdp, in.pi_a, len), dp = exact_batch(in.mdp, in.pi_p, len);
    const auto est = estimate_objectives(in.mdp, da, dp, in.pi_p, in.pi_a, in.r);
    const auto ref = expected_objectives(in.mdp, in.pi_p, in.pi_a, in.r);
    CHECK(est.r1_ratio_term == doctest::Approx(r1_oracle(in.mdp, in.pi_p, in.pi_a, in.r)).epsilon(1e-10));
    CHECK(std::abs(est.j_r1 - ref.j_r1) < 1e-8);
    CHECK(std::abs(est.j_r2 - ref.j_r2) < 1e-8);
    CHECK(std::abs(est.j_r3 - ref.j_r3) < 1e-8);
    CHECK(std::abs(est.j_r4 - ref.j_r4) < 1e-8);
    CHECK(std::abs(est.j_pi_a - ref.j_pi_a) < 1e-8);
  }
}

TEST_CASE("sampled estimates approach the closed form as batches grow") {
  Rng rng(5);
  auto in = finite_instance(rng);
  const auto ref = expected_objectives(in.mdp, in.pi_p, in.pi_a, in.r);
  // average absolute error over repeated batches, at three sizes
  auto err = [&](int n) {
    double total = 0.0;
    for (int rep = 0; rep < 40; ++rep) {
      const auto da = sample_batch(in.mdp, in.pi_a, n, 1000 * n + rep);
      const auto dp = sample_batch(in.mdp, in.pi_p, n, 5000 * n + rep);
      const auto est = estimate_objectives(in.mdp, da, dp, in.pi_p, in.pi_a, in.r);
      total += std::abs(est.r1_ratio_term - ref.r1_ratio_term) + std::abs(est.r2_ratio_term - ref.r2_ratio_term) +
               std::abs(est.j_pi_a - ref.j_pi_a);
    }
    return total / 40.0;
  };
  const double e1 = err(10), e2 = err(100), e3 = err(1000);
  CHECK(e2 < e1);
  CHECK(e3 < e2);
}

TEST_CASE("empty batches and huge ratios are rejected") {
  Rng rng(6);
  auto in = finite_instance(rng);
  RolloutBatch empty;
  const auto dp = sample_batch(in.mdp, in.pi_p, 5, 1);
  CHECK_THROWS_AS(estimate_objectives(in.mdp, empty, dp, in.pi_p, in.pi_a, in.r), EmptyBatch);
  EstimatorOptions tight;
  tight.ratio_cap = 1e-3;
  CHECK_THROWS_AS(estimate_objectives(in.mdp, dp, dp, in.pi_p, in.pi_a, in.r, tight), RatioOverflow);
}

TEST_CASE("lambda follows the exponential rule") {
  CHECK(update_lambda(1e3, 1.0, 0.4, 0.5) == doctest::Approx(1e3 * std::exp(-0.1)));
  CHECK(update_lambda(7.0, 0.0, 100.0, 0.0) == 7.0);
  CHECK(update_lambda(7.0, 2.0, 0.3, 0.3) == 7.0);
  CHECK(update_lambda(1.0, 1.0, -5.0, 0.0, 3.0) == 3.0);
  CHECK_THROWS_AS(update_lambda(-1.0, 1.0, 0.0, 0.0), DomainError);
  GameState st;
  st.lambda = 2.0;
  st.config.mu = 0.5;
  st.config.delta = 1.0;  // bound on the loss is -1
  CHECK(update_lambda(st, -1.5).lambda < 2.0);
  CHECK(update_lambda(st, -0.5).lambda > 2.0);
  st.config.delta_star_mode = true;
  CHECK(update_lambda(st, 10.0).lambda == 2.0);
}

TEST_CASE("zero iterations return the initial policy") {
  const Mdp m = example1::mdp();
  const auto fam = convex_pair(m.feature("r1"), m.feature("r2"));
  const auto res = train_pagar(m, example1::demos(), fam, short_config(0), 1);
  CHECK(res.trace.empty());
  CHECK((res.policy.probs - softmax_policy(m, Table::Zero(7, 2)).probs).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("training is reproducible from the seed") {
  const Mdp m = example1::mdp();
  const auto fam = convex_pair(m.feature("r1"), m.feature("r2"));
  const auto a = train_pagar(m, example1::demos(), fam, short_config(40), 9);
  const auto b = train_pagar(m, example1::demos(), fam, short_config(40), 9);
  const auto c = train_pagar(m, example1::demos(), fam, short_config(40), 10);
  REQUIRE(a.trace.size() == 40);
  bool same = true, differ = false;
  for (int i = 0; i < 40; ++i) {
    same = same && a.trace[i].pi_p_summary == b.trace[i].pi_p_summary && a.trace[i].j_irl == b.trace[i].j_irl &&
           a.trace[i].lambda == b.trace[i].lambda && a.trace[i].exact_regret == b.trace[i].exact_regret;
    differ = differ || a.trace[i].pi_p_summary != c.trace[i].pi_p_summary;
  }
  CHECK(same);
  CHECK(differ);
}

TEST_CASE("lambda falls exactly when the constraint holds") {
  const Mdp m = example1::mdp();
  const auto fam = convex_pair(m.feature("r1"), m.feature("r2"));
  TrainConfig c = short_config(30);
  c.mu = 0.01;
  const auto res = train_pagar(m, example1::demos(), fam, c, 2);
  double prev = c.lambda0;
  for (const auto& row : res.trace) {
    // J_IRL is the loss, the constraint reads J_IRL + delta <= 0
    CHECK((row.lambda <= prev) == (row.j_irl + c.delta <= 0.0));
    prev = row.lambda;
  }
}

TEST_CASE("a singleton reward family trains toward its optimum") {
  // demos from the r-optimal policy; rewards scaled so entropy does not dominate
  Rng rng(7);
  const Mdp m = layered_mdp(rng, 2, 2, 2, 0.9);
  const Table r = 20.0 * random_table(rng, m.n_states(), 2);
  const auto opt = solve_standard(m, r);
  DemonstrationSet e;
  for (int k = 0; k < 5; ++k) {
    const auto b = sample_batch(m, opt.policy, 1, 100 + k);
    e.trajectories.push_back(b.trajectories[0]);
  }
  RewardFamily fam{FiniteFamily{{RewardFunction::tabular(r)}}};
  TrainConfig c;
  c.iterations = 500;
  c.irl = IrlLoss::max_margin();
  c.delta = -1e9;
  const auto res = train_pagar(m, e, fam, c, 3);
  CHECK(res.trace.back().exact_regret < 0.05 * (std::abs(opt.value) + 1.0));
}

TEST_CASE("a perfect discriminator recovers the true reward") {
  const Mdp m = example1::mdp();
  const TabularPolicy pa = softmax_policy(m, Table::Zero(7, 2));
  const Table r_true = m.feature("r1") - 0.5 * m.feature("r2");
  Table z(7, 2);
  for (int s = 0; s < 7; ++s)
    for (int a = 0; a < 2; ++a) {
      const double d = pa(s, a) / (std::exp(r_true(s, a)) + pa(s, a));
      z(s, a) = std::log(d / (1.0 - d));
    }
  Table d = z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
  CHECK((gan_reward_from_discriminator(d, pa).table() - r_true).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("a silent bottleneck makes the two adversarial variants agree") {
  const Mdp m = example1::mdp();
  TrainConfig c = short_config(25);
  c.delta = -1.2;
  c.bottleneck = [](const Table&) { return 0.0; };
  const auto g = train_gail_pagar(m, example1::demos(), c, 4, Variant::Gail);
  const auto v = train_gail_pagar(m, example1::demos(), c, 4, Variant::Vail);
  REQUIRE(g.trace.size() == v.trace.size());
  for (std::size_t i = 0; i < g.trace.size(); ++i) {
    CHECK(g.trace[i].pi_p_summary == v.trace[i].pi_p_summary);
    CHECK(g.trace[i].j_irl == v.trace[i].j_irl);
  }
}

TEST_CASE("discriminator score rewards separating the two sources") {
  const Mdp m = example1::mdp();
  const auto e = example1::demos();
  const auto da = sample_batch(m, example1::policy(0.0), 20, 1);  // never visits s2
  Table good = Table::Constant(7, 2, 0.5), bad = good;
  good.row(example1::kS2).setConstant(0.01);  // low policy probability on expert pairs
  good.row(1).setConstant(0.99);
  bad.row(example1::kS2).setConstant(0.99);
  bad.row(1).setConstant(0.01);
  CHECK(gan_score(da, e, good) > gan_score(da, e, Table::Constant(7, 2, 0.5)));
  CHECK(gan_score(da, e, bad) < gan_score(da, e, Table::Constant(7, 2, 0.5)));
}
