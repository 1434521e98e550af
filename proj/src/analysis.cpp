#include "pagar/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pagar/errors.hpp"
#include "pagar/parallel.hpp"
#include "pagar/soft_rl.hpp"

namespace pagar {

namespace {
constexpr double kTie = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

TaskPredicate TaskPredicate::visit_threshold(std::vector<VisitTarget> targets) {
  for (const auto& t : targets)
    if (!(t.min_prob >= 0.0 && t.min_prob <= 1.0)) throw DomainError("visit threshold must lie in [0,1]");
  TaskPredicate p;
  p.targets = std::move(targets);
  return p;
}

TaskPredicate TaskPredicate::from(std::function<bool(const Mdp&, const TabularPolicy&)> fn) {
  TaskPredicate p;
  p.custom = std::move(fn);
  return p;
}

bool TaskPredicate::operator()(const Mdp& mdp, const TabularPolicy& pi) const {
  if (custom) return custom(mdp, pi);
  for (const auto& t : targets)
    if (event_probability(mdp, pi, t.state, t.max_len) < t.min_prob - kTie) return false;
  return true;
}

AlignmentResult classify_alignment(const Mdp& mdp, const Table& r, const TaskPredicate& phi,
                                   const std::vector<TabularPolicy>& grid) {
  if (grid.empty()) throw DomainError("policy grid is empty");
  const std::size_t n = grid.size();
  std::vector<double> u(n);
  std::vector<char> ok(n);
  parallel_for(n, [&](std::size_t i) {
    u[i] = utility(mdp, grid[i], r);
    ok[i] = phi(mdp, grid[i]);
  });

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return u[a] > u[b]; });

  // groups of (numerically) equal utility, from the top down
  struct Group {
    double hi, lo;
    bool all_ok, all_fail;
  };
  std::vector<Group> groups;
  for (std::size_t k = 0; k < n;) {
    Group g{u[order[k]], u[order[k]], true, true};
    std::size_t j = k;
    while (j < n && u[order[j]] >= g.hi - kTie) {
      g.lo = u[order[j]];
      g.all_ok = g.all_ok && ok[order[j]];
      g.all_fail = g.all_fail && !ok[order[j]];
      ++j;
    }
    groups.push_back(g);
    k = j;
  }

  AlignmentResult res;
  res.grid_size = n;
  res.u_range = {u[order.back()], u[order.front()]};
  std::size_t top = 0;
  while (top < groups.size() && groups[top].all_ok) ++top;
  if (top == 0) return res;
  res.aligned = true;
  res.s_interval = Interval{groups[top - 1].lo, groups[0].hi};
  std::size_t bottom = groups.size();
  while (bottom > top && groups[bottom - 1].all_fail) --bottom;
  if (bottom < groups.size()) res.f_interval = Interval{groups.back().lo, groups[bottom].hi};
  return res;
}

TheoremReport check_theorem_conditions(const Mdp& mdp, const std::vector<RewardFunction>& rewards,
                                       const TaskPredicate& phi, const std::vector<TabularPolicy>& grid,
                                       TheoremKind which, const CorollaryInputs& extra) {
  TheoremReport rep;
  const std::size_t R = rewards.size();
  if (R == 0) throw DomainError("reward list is empty");
  std::vector<double> vstar(R);
  for (std::size_t j = 0; j < R; ++j) {
    rep.alignment.push_back(classify_alignment(mdp, rewards[j].table(), phi, grid));
    vstar[j] = solve_standard(mdp, rewards[j]).value;
  }

  std::vector<std::size_t> pos, neg;
  for (std::size_t j = 0; j < R; ++j) (rep.alignment[j].aligned ? pos : neg).push_back(j);
  if (pos.empty()) {
    rep.detail = "no aligned reward in the set";
    return rep;
  }

  // with no failing grid policy the failure interval is empty and its gap unbounded
  rep.min_gap = kInf;
  rep.min_s_width = kInf;
  for (std::size_t j : pos) {
    const auto& a = rep.alignment[j];
    const double sw = a.s_interval->width();
    rep.max_s_width = std::max(rep.max_s_width, sw);
    rep.min_s_width = std::min(rep.min_s_width, sw);
    if (a.f_interval) {
      rep.max_f_width = std::max(rep.max_f_width, a.f_interval->width());
      rep.min_gap = std::min(rep.min_gap, a.s_interval->lo - a.f_interval->hi);
    }
  }
  rep.condition1 = rep.max_f_width < rep.min_gap && rep.max_s_width < rep.min_gap;

  Eigen::MatrixXd U(static_cast<int>(grid.size()), static_cast<int>(R));
  parallel_for(grid.size(), [&](std::size_t i) {
    for (std::size_t j = 0; j < R; ++j) U(int(i), int(j)) = utility(mdp, grid[i], rewards[j]);
  });

  auto lw = [&](std::size_t j) {
    if (extra.lipschitz.size() != R) throw DomainError("one Lipschitz constant per reward is required");
    return extra.lipschitz[j] * extra.w_e - extra.delta;
  };

  switch (which) {
    case TheoremKind::FailureAvoidance:
      for (int i = 0; i < U.rows() && !rep.condition2; ++i) {
        bool good = true;
        for (std::size_t j : pos) {
          const auto& s = *rep.alignment[j].s_interval;
          good = good && U(i, int(j)) >= s.lo - kTie && U(i, int(j)) <= s.hi + kTie;
        }
        for (std::size_t j : neg) good = good && vstar[j] - U(i, int(j)) < rep.min_gap;
        if (good) {
          rep.condition2 = true;
          rep.witness_policy = i;
        }
      }
      break;
    case TheoremKind::SuccessGuarantee:
      for (int i = 0; i < U.rows() && !rep.condition2; ++i) {
        bool strict = true, loose = true;
        for (std::size_t j = 0; j < R; ++j) {
          const double gap = vstar[j] - U(i, int(j));
          strict = strict && gap < rep.min_s_width;
          loose = loose && gap <= rep.min_s_width + kTie;
        }
        if (strict) {
          rep.condition2 = true;
          rep.witness_policy = i;
        } else if (loose) {
          rep.bracket_flag = true;
        }
      }
      break;
    case TheoremKind::CorollaryFailure: {
      bool good = true, strict = true;
      for (std::size_t j : pos) {
        good = good && lw(j) <= rep.alignment[j].s_interval->width() + kTie;
        strict = strict && lw(j) < rep.alignment[j].s_interval->width();
      }
      for (std::size_t j : neg) good = good && lw(j) < rep.min_gap;
      rep.condition2 = good;
      rep.bracket_flag = good && !strict;
      break;
    }
    case TheoremKind::CorollarySuccess: {
      bool good = true, strict = true;
      for (std::size_t j = 0; j < R; ++j) {
        good = good && lw(j) <= rep.min_s_width + kTie;
        strict = strict && lw(j) < rep.min_s_width;
      }
      rep.condition2 = good;
      rep.bracket_flag = good && !strict;
      break;
    }
  }
  rep.passed = rep.condition1 && rep.condition2;
  if (!rep.condition1) rep.detail = "interval widths do not fit inside the success-failure gap";
  else if (!rep.condition2) rep.detail = "no policy or bound meets the second condition";
  return rep;
}

DominationVerdict domination(const Mdp& mdp, const TabularPolicy& pi1, const TabularPolicy& pi2,
                             const std::vector<RewardFunction>& rewards) {
  if (rewards.empty()) throw DomainError("reward list is empty");
  double hi1 = -kInf, lo1 = kInf, hi2 = -kInf, lo2 = kInf;
  for (const auto& r : rewards) {
    const double u1 = utility(mdp, pi1, r), u2 = utility(mdp, pi2, r);
    hi1 = std::max(hi1, u1);
    lo1 = std::min(lo1, u1);
    hi2 = std::max(hi2, u2);
    lo2 = std::min(lo2, u2);
  }
  if (hi1 - lo1 < kTie || hi2 - lo2 < kTie)
    throw AssumptionViolated("a policy has constant utility across the reward list");
  if (hi1 < lo2 - kTie) return DominationVerdict::TotallyDominates;
  if (hi1 <= lo2 + kTie) return DominationVerdict::WeaklyTotallyDominates;
  return DominationVerdict::Incomparable;
}

TrajectoryDistribution TrajectoryDistribution::of_policy(const Mdp& mdp, const TabularPolicy& pi, int max_len) {
  TrajectoryDistribution d;
  for (auto& w : enumerate_trajectories(mdp, max_len)) {
    const double p = trajectory_probability(mdp, pi, w.tau);
    if (p <= 0.0) continue;
    d.support.push_back(std::move(w.tau));
    d.probs.push_back(p);
  }
  return d;
}

TrajectoryDistribution TrajectoryDistribution::of_demos(const DemonstrationSet& demos) {
  demos.check();
  const auto w = demos.effective_weights();
  TrajectoryDistribution d;
  for (std::size_t i = 0; i < demos.trajectories.size(); ++i) {
    const auto& tau = demos.trajectories[i];
    auto it = std::find_if(d.support.begin(), d.support.end(), [&](const Trajectory& t) {
      return t.steps == tau.steps && t.final_state == tau.final_state;
    });
    if (it == d.support.end()) {
      d.support.push_back(tau);
      d.probs.push_back(w[i]);
    } else {
      d.probs[static_cast<std::size_t>(it - d.support.begin())] += w[i];
    }
  }
  return d;
}

TrajectoryMetric feature_expectation_metric(const Mdp& mdp, std::vector<Table> features) {
  return [&mdp, features = std::move(features)](const Trajectory& a, const Trajectory& b) {
    double d = 0.0;
    for (const auto& f : features) d += std::fabs(trajectory_return(mdp, f, a) - trajectory_return(mdp, f, b));
    return d;
  };
}

LpResult solve_lp(const Eigen::VectorXd& c, const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  const int m = static_cast<int>(A.rows()), n = static_cast<int>(A.cols());
  if (c.size() != n || b.size() != m) throw DomainError("lp dimensions disagree");
  // tableau [A | I | b] with artificial slack columns
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, n + m + 1);
  T.leftCols(n) = A;
  T.block(0, n, m, m).setIdentity();
  T.col(n + m) = b;
  for (int i = 0; i < m; ++i)
    if (T(i, n + m) < 0.0) T.row(i).head(n) *= -1.0, T(i, n + m) *= -1.0;
  std::vector<int> basis(m);
  std::iota(basis.begin(), basis.end(), n);

  auto pivot = [&](int r, int col) {
    T.row(r) /= T(r, col);
    for (int i = 0; i < m; ++i)
      if (i != r && T(i, col) != 0.0) T.row(i) -= T(i, col) * T.row(r);
    basis[r] = col;
  };
  // Dantzig pricing, falling back to Bland's rule during long degenerate
  // stretches so the method cannot cycle
  auto run = [&](const Eigen::VectorXd& cost, int ncols) {
    int degenerate = 0;
    for (int guard = 0; guard < 1000000; ++guard) {
      Eigen::RowVectorXd y(m);
      for (int i = 0; i < m; ++i) y(i) = cost(basis[i]);
      const Eigen::RowVectorXd reduced = cost.head(ncols).transpose() - y * T.leftCols(ncols);
      int enter = -1;
      if (degenerate > 50) {
        for (int j = 0; j < ncols && enter < 0; ++j)
          if (reduced(j) < -1e-11) enter = j;
      } else {
        Eigen::Index j;
        if (reduced.minCoeff(&j) < -1e-11) enter = static_cast<int>(j);
      }
      if (enter < 0) return;
      int leave = -1;
      double best = kInf;
      for (int i = 0; i < m; ++i) {
        if (T(i, enter) <= 1e-12) continue;
        const double ratio = T(i, n + m) / T(i, enter);
        if (leave < 0 || ratio < best - 1e-15 || (std::fabs(ratio - best) <= 1e-15 && basis[i] < basis[leave])) {
          best = ratio;
          leave = i;
        }
      }
      if (leave < 0) throw SolveFailure("linear program is unbounded");
      degenerate = best <= 1e-15 ? degenerate + 1 : 0;
      pivot(leave, enter);
    }
    throw NonConvergence("simplex did not terminate");
  };

  Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(n + m);
  phase1.tail(m).setOnes();
  run(phase1, n + m);
  double infeas = 0.0;
  for (int i = 0; i < m; ++i)
    if (basis[i] >= n) infeas += T(i, n + m);
  if (infeas > 1e-9) throw InfeasibleLP("linear program is infeasible");
  // drive zero-level artificials out; rows where that fails are redundant
  for (int i = 0; i < m; ++i) {
    if (basis[i] < n) continue;
    for (int j = 0; j < n; ++j)
      if (std::fabs(T(i, j)) > 1e-9) {
        pivot(i, j);
        break;
      }
  }
  Eigen::VectorXd phase2 = Eigen::VectorXd::Zero(n + m);
  phase2.head(n) = c;
  run(phase2, n);

  LpResult out;
  out.x = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < m; ++i)
    if (basis[i] < n) out.x(basis[i]) = std::max(0.0, T(i, n + m));
  out.value = c.dot(out.x);
  return out;
}

LpResult solve_transport(const Eigen::MatrixXd& cost, const Eigen::VectorXd& supply, const Eigen::VectorXd& demand) {
  const int n = static_cast<int>(supply.size()), m = static_cast<int>(demand.size());
  if (cost.rows() != n || cost.cols() != m) throw DomainError("cost matrix does not match the marginals");
  if (n == 0 || m == 0) throw DomainError("marginals must be non-empty");
  if ((supply.array() < 0).any() || (demand.array() < 0).any()) throw DomainError("marginals must be non-negative");
  if (std::fabs(supply.sum() - demand.sum()) > 1e-9) throw InfeasibleLP("marginals carry different mass");

  // north-west corner start; advancing one index per cell keeps exactly
  // n + m - 1 basic cells, some of them at zero flow
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, m);
  std::vector<std::pair<int, int>> basis;
  {
    Eigen::VectorXd a = supply, b = demand;
    b *= a.sum() / std::max(b.sum(), 1e-300);
    int i = 0, j = 0;
    while (i < n && j < m) {
      const double f = std::min(a(i), b(j));
      x(i, j) = f;
      basis.emplace_back(i, j);
      a(i) -= f;
      b(j) -= f;
      if (i == n - 1) ++j;
      else if (j == m - 1) ++i;
      else if (a(i) <= b(j)) ++i;
      else ++j;
    }
  }
  std::vector<std::vector<char>> in_basis(n, std::vector<char>(m, 0));
  for (auto [i, j] : basis) in_basis[i][j] = 1;

  // nodes 0..n-1 are rows and n..n+m-1 columns; basic cells form a spanning tree
  const int N = n + m;
  Eigen::VectorXd u(n), v(m);
  std::vector<std::vector<int>> adj(N);
  std::vector<int> parent(N), order;
  for (int guard = 0; guard < 1000000; ++guard) {
    for (auto& l : adj) l.clear();
    for (auto [i, j] : basis) {
      adj[i].push_back(n + j);
      adj[n + j].push_back(i);
    }
    // potentials from tree traversal rooted at row 0
    std::fill(parent.begin(), parent.end(), -2);
    order.assign(1, 0);
    parent[0] = -1;
    u(0) = 0.0;
    for (std::size_t k = 0; k < order.size(); ++k) {
      const int a = order[k];
      for (int b : adj[a]) {
        if (parent[b] != -2) continue;
        parent[b] = a;
        order.push_back(b);
        if (b >= n) v(b - n) = cost(a, b - n) - u(a);
        else u(b) = cost(b, a - n) - v(a - n);
      }
    }
    if (static_cast<int>(order.size()) != N) throw SolveFailure("transport basis is not a spanning tree");

    int ei = -1, ej = -1;
    double most = -1e-12;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) {
        if (in_basis[i][j]) continue;
        const double d = cost(i, j) - u(i) - v(j);
        if (d < most) most = d, ei = i, ej = j;
      }
    if (ei < 0) {
      LpResult out;
      out.x = Eigen::Map<const Eigen::VectorXd>(x.data(), n * m);
      out.value = (cost.array() * x.array()).sum();
      return out;
    }

    // the tree path from column ej up to row ei closes the cycle; along it
    // from the column side the signs alternate minus, plus, ...
    std::vector<int> up_i{ei}, up_j{n + ej};
    auto depth_of = [&](int a) {
      int d = 0;
      while (parent[a] >= 0) a = parent[a], ++d;
      return d;
    };
    int a = ei, b = n + ej, da = depth_of(a), db = depth_of(b);
    while (da > db) a = parent[a], up_i.push_back(a), --da;
    while (db > da) b = parent[b], up_j.push_back(b), --db;
    while (a != b) {
      a = parent[a], up_i.push_back(a);
      b = parent[b], up_j.push_back(b);
    }
    std::vector<int> path(up_j.begin(), up_j.end());  // column ej ... apex
    for (int k = static_cast<int>(up_i.size()) - 2; k >= 0; --k) path.push_back(up_i[k]);  // ... row ei
    std::vector<std::pair<int, int>> cells;
    for (std::size_t k = 0; k + 1 < path.size(); ++k) {
      const int p = path[k], q = path[k + 1];
      cells.push_back(p < n ? std::pair{p, q - n} : std::pair{q, p - n});
    }
    double theta = kInf;
    int leave = -1;
    for (std::size_t k = 0; k < cells.size(); k += 2) {
      const double f = x(cells[k].first, cells[k].second);
      if (f < theta) theta = f, leave = static_cast<int>(k);
    }
    x(ei, ej) += theta;
    for (std::size_t k = 0; k < cells.size(); ++k)
      x(cells[k].first, cells[k].second) += (k % 2 == 0 ? -theta : theta);
    const auto gone = cells[leave];
    x(gone.first, gone.second) = 0.0;
    in_basis[gone.first][gone.second] = 0;
    in_basis[ei][ej] = 1;
    *std::find(basis.begin(), basis.end(), gone) = {ei, ej};
  }
  throw NonConvergence("transport simplex did not terminate");
}

WassersteinReport wasserstein1(const TrajectoryDistribution& a, const TrajectoryDistribution& b,
                               const TrajectoryMetric& metric, const std::string& metric_name) {
  const int n = static_cast<int>(a.support.size()), m = static_cast<int>(b.support.size());
  if (n == 0 || m == 0) throw DomainError("distributions need non-empty supports");
  Eigen::MatrixXd cost(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) cost(i, j) = metric(a.support[i], b.support[j]);
  const auto lp = solve_transport(cost, Eigen::Map<const Eigen::VectorXd>(a.probs.data(), n),
                                  Eigen::Map<const Eigen::VectorXd>(b.probs.data(), m));
  WassersteinReport rep;
  rep.metric_name = metric_name;
  rep.coupling = Eigen::Map<const Eigen::MatrixXd>(lp.x.data(), n, m);
  rep.w1 = lp.value;
  return rep;
}

std::pair<double, int> smallest_w1(const Mdp& mdp, const DemonstrationSet& demos,
                                   const std::vector<TabularPolicy>& grid, const TrajectoryMetric& metric,
                                   int max_len) {
  const auto e = TrajectoryDistribution::of_demos(demos);
  std::vector<double> w(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    w[i] = wasserstein1(TrajectoryDistribution::of_policy(mdp, grid[i], max_len), e, metric).w1;
  });
  int best = 0;
  for (int i = 1; i < static_cast<int>(w.size()); ++i)
    if (w[i] < w[best]) best = i;
  return {w[best], best};
}

double lipschitz_constant(const Mdp& mdp, const Table& r, const std::vector<Trajectory>& support,
                          const TrajectoryMetric& metric) {
  double L = 0.0;
  for (std::size_t i = 0; i < support.size(); ++i)
    for (std::size_t j = i + 1; j < support.size(); ++j) {
      const double dr = std::fabs(trajectory_return(mdp, r, support[i]) - trajectory_return(mdp, r, support[j]));
      const double d = metric(support[i], support[j]);
      if (d <= 0.0) {
        if (dr > kTie) return kInf;
        continue;
      }
      L = std::max(L, dr / d);
    }
  return L;
}

BoundsReport verify_bounds(const Mdp& mdp, const Table& r, const TabularPolicy& pi1) {
  auto opt = solve_soft(mdp, r);
  const TabularPolicy& pi2 = opt.policy;
  const int S = mdp.n_states();

  BoundsReport rep;
  Eigen::VectorXd dA = Eigen::VectorXd::Zero(S);
  for (int s = 0; s < S; ++s) {
    if (mdp.is_terminal(s)) continue;
    const Eigen::VectorXd p1 = pi1.probs.row(s).transpose(), p2 = pi2.probs.row(s).transpose();
    rep.alpha = std::max(rep.alpha, total_variation(p1, p2));
    rep.epsilon = std::max(rep.epsilon, opt.adv.row(s).cwiseAbs().maxCoeff());
    dA(s) = (p1 - p2).dot(opt.adv.row(s).transpose());
  }
  const double du = utility(mdp, pi1, r) - utility(mdp, pi2, r);
  rep.lhs_own = std::fabs(du - visitation(mdp, pi1).rho.dot(dA));
  rep.lhs_other = std::fabs(du - visitation(mdp, pi2).rho.dot(dA));
  const double g = mdp.gamma(), k = 2.0 * rep.alpha * g * rep.epsilon / ((1.0 - g) * (1.0 - g));
  rep.bound_own = k;
  rep.bound_other = k * (2.0 * rep.alpha + 1.0);
  return rep;
}

}  // namespace pagar
