#include "pagar/irl.hpp"

#include <algorithm>
#include <cmath>

#include "pagar/errors.hpp"
#include "pagar/parallel.hpp"
#include "pagar/soft_rl.hpp"

namespace pagar {

namespace {

constexpr double kLogFloor = 1e-12;

const FiniteFamily* as_finite(const RewardFamily& f) { return std::get_if<FiniteFamily>(&f.kind); }

}  // namespace

int RewardFamily::dim() const {
  return std::visit([](const auto& f) -> int {
    if constexpr (std::is_same_v<std::decay_t<decltype(f)>, FiniteFamily>) return 1;
    else return f.dim();
  }, kind);
}

Eigen::VectorXd RewardFamily::lower() const {
  if (auto* lin = std::get_if<LinearFamily>(&kind)) return lin->lo;
  if (auto* tab = std::get_if<TabularFamily>(&kind)) return Eigen::VectorXd::Constant(tab->dim(), tab->lo);
  return Eigen::VectorXd::Zero(1);
}

Eigen::VectorXd RewardFamily::upper() const {
  if (auto* lin = std::get_if<LinearFamily>(&kind)) return lin->hi;
  if (auto* tab = std::get_if<TabularFamily>(&kind)) return Eigen::VectorXd::Constant(tab->dim(), tab->hi);
  const auto& fin = std::get<FiniteFamily>(kind);
  return Eigen::VectorXd::Constant(1, static_cast<double>(fin.members.size()) - 1.0);
}

RewardFunction RewardFamily::make(const Eigen::VectorXd& theta) const {
  if (theta.size() != dim()) throw DomainError("parameter has the wrong dimension");
  if (auto* lin = std::get_if<LinearFamily>(&kind)) {
    return RewardFunction::linear(lin->features, lin->A * theta + lin->b);
  }
  if (auto* tab = std::get_if<TabularFamily>(&kind)) {
    Table t(tab->n_states, tab->n_actions);
    for (int s = 0; s < tab->n_states; ++s)
      for (int a = 0; a < tab->n_actions; ++a) t(s, a) = theta(s * tab->n_actions + a);
    return RewardFunction::tabular(std::move(t));
  }
  const auto& fin = std::get<FiniteFamily>(kind);
  const long i = std::lround(theta(0));
  if (i < 0 || i >= static_cast<long>(fin.members.size())) throw DomainError("finite family index out of range");
  return fin.members[static_cast<std::size_t>(i)];
}

RewardFamily convex_pair(const Table& r1, const Table& r2, double lo, double hi) {
  LinearFamily f;
  f.features = {r1, r2};
  f.A = Eigen::MatrixXd(2, 1);
  f.A << 1.0, -1.0;
  f.b = Eigen::Vector2d(0.0, 1.0);
  f.lo = Eigen::VectorXd::Constant(1, lo);
  f.hi = Eigen::VectorXd::Constant(1, hi);
  return RewardFamily{f};
}

void RewardSet::validate(double delta_star) const {
  if (delta > delta_star + 1e-9)
    throw EmptyRewardSet("delta " + std::to_string(delta) + " exceeds the best achievable loss " +
                         std::to_string(delta_star));
}

double demo_utility(const Mdp& mdp, const DemonstrationSet& demos, const Table& r) {
  demos.check();
  const auto w = demos.effective_weights();
  double u = 0.0;
  for (std::size_t i = 0; i < demos.trajectories.size(); ++i)
    u += w[i] * trajectory_return(mdp, r, demos.trajectories[i]);
  return u;
}

LikelihoodModel::LikelihoodModel(const Mdp& mdp, const DemonstrationSet& demos, int max_len,
                                 BaseMeasure base)
    : mdp_(&mdp) {
  demos.check();
  for (const auto& tau : demos.trajectories) check_feasible(mdp, tau);
  for (auto& w : enumerate_trajectories(mdp, max_len)) {
    double lb = 0.0;
    switch (base) {
      case BaseMeasure::Uniform:
        lb = std::log(w.prob) - static_cast<double>(w.tau.steps.size()) * std::log(mdp.n_actions());
        break;
      case BaseMeasure::Dynamics:
        lb = std::log(w.prob);
        break;
      case BaseMeasure::Counting:
        break;
    }
    log_base_.push_back(lb);
    paths_.push_back(std::move(w.tau));
  }
  demos_ = demos.trajectories;
  // likelihood sums over demonstrations; weights rescale to the count
  const auto w = demos.effective_weights();
  for (double x : w) demo_mult_.push_back(x * static_cast<double>(w.size()));
}

double LikelihoodModel::loss(const Table& r) const {
  std::vector<double> terms(paths_.size());
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < paths_.size(); ++i) {
    terms[i] = log_base_[i] + trajectory_return(*mdp_, r, paths_[i]);
    m = std::max(m, terms[i]);
  }
  double z = 0.0;
  for (double t : terms) z += std::exp(t - m);
  const double log_z = m + std::log(z);
  double out = 0.0;
  for (std::size_t i = 0; i < demos_.size(); ++i)
    out += demo_mult_[i] * (trajectory_return(*mdp_, r, demos_[i]) - log_z);
  return out;
}

double irl_loss(const Mdp& mdp, const DemonstrationSet& demos, const Table& r, const IrlLoss& kind) {
  switch (kind.kind) {
    case LossKind::MaxMargin:
      return demo_utility(mdp, demos, r) - solve_standard(mdp, r).value;
    case LossKind::MaxEnt:
      return demo_utility(mdp, demos, r) - mdp.initial().dot(solve_soft(mdp, r).v);
    case LossKind::Ziebart:
      return LikelihoodModel(mdp, demos, kind.max_len, kind.base).loss(r);
  }
  throw DomainError("unknown loss kind");
}

double irl_loss(const Mdp& mdp, const DemonstrationSet& demos, const RewardFunction& r,
                const IrlLoss& kind) {
  return irl_loss(mdp, demos, r.table(), kind);
}

namespace {

std::vector<Eigen::VectorXd> box_grid(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, double step,
                                      std::size_t budget) {
  if (!(step > 0.0)) throw DomainError("grid step must be positive");
  const int d = static_cast<int>(lo.size());
  std::vector<std::vector<double>> axes(d);
  std::size_t total = 1;
  for (int k = 0; k < d; ++k) {
    if (hi(k) < lo(k)) throw DomainError("empty parameter box");
    const long n = static_cast<long>(std::floor((hi(k) - lo(k)) / step + 1e-9));
    for (long i = 0; i <= n; ++i) axes[k].push_back(std::min(hi(k), lo(k) + static_cast<double>(i) * step));
    if (axes[k].back() < hi(k) - 1e-12) axes[k].push_back(hi(k));
    total *= axes[k].size();
    if (total > budget) throw BudgetExceeded("reward grid exceeds " + std::to_string(budget) + " points");
  }
  std::vector<Eigen::VectorXd> out;
  out.reserve(total);
  std::vector<std::size_t> idx(d, 0);
  for (std::size_t n = 0; n < total; ++n) {
    Eigen::VectorXd p(d);
    for (int k = 0; k < d; ++k) p(k) = axes[k][idx[k]];
    out.push_back(std::move(p));
    // the last coordinate varies fastest
    for (int k = d - 1; k >= 0; --k) {
      if (++idx[k] < axes[k].size()) break;
      idx[k] = 0;
    }
  }
  return out;
}

// loss evaluator shared across a sweep; the likelihood keeps its enumeration
struct Evaluator {
  const Mdp& mdp;
  const DemonstrationSet& demos;
  IrlLoss kind;
  std::optional<LikelihoodModel> like;

  Evaluator(const Mdp& m, const DemonstrationSet& d, const IrlLoss& k) : mdp(m), demos(d), kind(k) {
    if (k.kind == LossKind::Ziebart) like.emplace(m, d, k.max_len, k.base);
  }
  double operator()(const Table& r) const { return like ? like->loss(r) : irl_loss(mdp, demos, r, kind); }
};

// returns the index of the first maximum
std::size_t best_of(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

std::vector<double> sweep(const Evaluator& ev, const RewardFamily& family,
                          const std::vector<Eigen::VectorXd>& pts) {
  std::vector<double> val(pts.size());
  parallel_for(pts.size(), [&](std::size_t i) { val[i] = ev(family.make(pts[i]).table()); });
  return val;
}

}  // namespace

std::vector<Eigen::VectorXd> family_grid(const RewardFamily& family, double step, std::size_t budget) {
  if (as_finite(family)) return box_grid(family.lower(), family.upper(), 1.0, budget);
  return box_grid(family.lower(), family.upper(), step, budget);
}

DeltaStar delta_star(const Mdp& mdp, const DemonstrationSet& demos, const RewardFamily& family,
                     const IrlLoss& kind, double grid_step, int refinements) {
  Evaluator ev(mdp, demos, kind);
  if (const auto* fin = as_finite(family); fin && fin->members.empty())
    throw EmptyRewardSet("finite reward family is empty");

  std::vector<Eigen::VectorXd> pts;
  bool gridded = true;
  try {
    pts = family_grid(family, grid_step);
  } catch (const BudgetExceeded&) {
    if (!std::holds_alternative<TabularFamily>(family.kind)) throw;
    gridded = false;
  }

  Eigen::VectorXd theta;
  double best = -std::numeric_limits<double>::infinity();
  double step = grid_step;
  const Eigen::VectorXd lo = family.lower(), hi = family.upper();

  if (gridded) {
    auto val = sweep(ev, family, pts);
    const std::size_t i = best_of(val);
    theta = pts[i];
    best = val[i];
  } else {
    // coordinate ascent over the box, starting at its centre
    theta = 0.5 * (lo + hi);
    best = ev(family.make(theta).table());
    for (bool improved = true; improved;) {
      improved = false;
      for (int k = 0; k < theta.size(); ++k) {
        auto axis = box_grid(lo.segment(k, 1), hi.segment(k, 1), step, 1'000'000);
        std::vector<Eigen::VectorXd> cand;
        for (const auto& x : axis) {
          Eigen::VectorXd t = theta;
          t(k) = x(0);
          cand.push_back(std::move(t));
        }
        auto val = sweep(ev, family, cand);
        const std::size_t i = best_of(val);
        if (val[i] > best + 1e-14) {
          best = val[i];
          theta = cand[i];
          improved = true;
        }
      }
    }
  }

  if (!as_finite(family)) {
    for (int round = 0; round < refinements; ++round) {
      const Eigen::VectorXd llo = (theta.array() - step).max(lo.array());
      const Eigen::VectorXd lhi = (theta.array() + step).min(hi.array());
      step /= 10.0;
      std::vector<Eigen::VectorXd> local;
      try {
        local = box_grid(llo, lhi, step, 2'000'000);
      } catch (const BudgetExceeded&) {
        break;
      }
      auto val = sweep(ev, family, local);
      const std::size_t i = best_of(val);
      if (val[i] > best) {
        best = val[i];
        theta = local[i];
      }
    }
  }
  return DeltaStar{best, family.make(theta), theta};
}

std::vector<double> sweep_losses(const Mdp& mdp, const DemonstrationSet& demos, const RewardFamily& family,
                                 const IrlLoss& kind, const std::vector<Eigen::VectorXd>& points) {
  return sweep(Evaluator(mdp, demos, kind), family, points);
}

bool in_reward_set(const RewardSet& set, const Mdp& mdp, const DemonstrationSet& demos,
                   const RewardFunction& r) {
  if (set.delta == kUnconstrained) return true;
  return irl_loss(mdp, demos, r, set.loss) >= set.delta - 1e-12;
}

RewardFunction gan_reward_from_discriminator(const Table& d, const TabularPolicy& pi_a) {
  if (d.rows() != pi_a.n_states() || d.cols() != pi_a.n_actions())
    throw DomainError("discriminator shape does not match the policy");
  Table r(d.rows(), d.cols());
  for (int s = 0; s < d.rows(); ++s)
    for (int a = 0; a < d.cols(); ++a) {
      const double x = d(s, a);
      if (!(x > 0.0 && x < 1.0)) throw DomainError("discriminator value outside (0,1)");
      const double p = std::max(pi_a(s, a), kLogFloor);
      r(s, a) = std::log(std::max(p / x - p, kLogFloor));
    }
  return RewardFunction::tabular(std::move(r));
}

}  // namespace pagar
