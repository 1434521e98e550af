#include "pagar/experiments.hpp"

#include <algorithm>

#include "pagar/errors.hpp"
#include "pagar/example1.hpp"
#include "pagar/solver.hpp"

namespace pagar::example1 {
namespace {

RewardFamily family(const Mdp& m) { return convex_pair(m.feature("r1"), m.feature("r2")); }

}  // namespace

IrlCurve irl_curve(double step, int max_len) {
  const Mdp m = mdp();
  const auto e = demos();
  const auto fam = family(m);
  const IrlLoss kind = IrlLoss::ziebart(max_len);
  IrlCurve out;
  const auto pts = family_grid(fam, step);
  out.likelihood = sweep_losses(m, e, fam, kind, pts);
  for (const auto& p : pts) out.omega.push_back(p(0));
  const DeltaStar ds = delta_star(m, e, fam, kind, step);
  out.omega_star = ds.theta(0);
  out.delta_star = ds.value;
  return out;
}

double protagonist_a2(double delta, double grid_step) {
  const Mdp m = mdp();
  RewardSet set{family(m), delta, IrlLoss::ziebart()};
  set.grid_step = grid_step;
  DecisionPoint dp{policy(0.5), kStart, kA1, kA2};
  const auto res = minimax_regret(m, AdmissibleRewards(m, demos(), set), dp);
  if (!res.param) throw SolveFailure("decision-point search returned no parameter");
  return *res.param;
}

DeltaSweep delta_sweep(const std::vector<double>& deltas, double grid_step) {
  DeltaSweep out;
  for (double d : deltas) {
    out.delta.push_back(d);
    out.p_a2.push_back(protagonist_a2(d, grid_step));
  }
  return out;
}

double likelihood_floor() {
  const auto curve = irl_curve(1e-3);
  return *std::min_element(curve.likelihood.begin(), curve.likelihood.end());
}

double success_threshold(double tol, double grid_step) {
  const double upper = to_double(success_upper());
  double lo = likelihood_floor();
  double hi = irl_curve(grid_step).delta_star;
  if (protagonist_a2(lo, grid_step) > upper) return lo;
  if (protagonist_a2(hi, grid_step) <= upper) return hi;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (protagonist_a2(mid, grid_step) <= upper ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace pagar::example1
