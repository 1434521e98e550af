#include "pagar/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "pagar/errors.hpp"

namespace pagar {

namespace {

constexpr double kSimplexTol = 1e-12;

std::string at(int s, int a) {
  return "(" + std::to_string(s) + "," + std::to_string(a) + ")";
}

}  // namespace

Mdp::Mdp(int n_states, int n_actions, std::vector<Eigen::MatrixXd> transition,
         Eigen::VectorXd initial, std::vector<int> terminals, double gamma,
         std::optional<int> horizon, std::vector<NamedFeature> features)
    : n_states_(n_states),
      n_actions_(n_actions),
      transition_(std::move(transition)),
      initial_(std::move(initial)),
      terminals_(std::move(terminals)),
      terminal_mask_(n_states > 0 ? n_states : 0, false),
      gamma_(gamma),
      horizon_(horizon),
      features_(std::move(features)) {
  if (n_states_ <= 0 || n_actions_ <= 0) throw DomainError("mdp needs at least one state and one action");
  if (static_cast<int>(transition_.size()) != n_actions_)
    throw DomainError("transition must hold one matrix per action");
  if (initial_.size() != n_states_) throw DomainError("initial distribution has wrong size");
  if (!(gamma_ > 0.0 && gamma_ <= 1.0)) throw DomainError("gamma must lie in (0,1]");
  if (!horizon_ && gamma_ >= 1.0) throw DomainError("gamma < 1 is required without a horizon");
  if (horizon_ && *horizon_ < 0) throw DomainError("horizon must be non-negative");

  std::sort(terminals_.begin(), terminals_.end());
  terminals_.erase(std::unique(terminals_.begin(), terminals_.end()), terminals_.end());
  for (int s : terminals_) {
    if (s < 0 || s >= n_states_) throw DomainError("terminal state out of range");
    terminal_mask_[s] = true;
  }

  for (int a = 0; a < n_actions_; ++a) {
    const auto& P = transition_[a];
    if (P.rows() != n_states_ || P.cols() != n_states_)
      throw DomainError("transition matrix has wrong shape");
    for (int s = 0; s < n_states_; ++s) {
      double row = 0.0;
      for (int s2 = 0; s2 < n_states_; ++s2) {
        if (P(s, s2) < 0.0 || !std::isfinite(P(s, s2)))
          throw DomainError("negative or non-finite transition probability at " + at(s, a));
        row += P(s, s2);
      }
      if (std::fabs(row - 1.0) > kSimplexTol)
        throw DomainError("transition row " + at(s, a) + " does not sum to 1");
      if (terminal_mask_[s] && std::fabs(P(s, s) - 1.0) > kSimplexTol)
        throw DomainError("terminal state " + std::to_string(s) + " must self-loop");
    }
  }
  double mass = 0.0;
  for (int s = 0; s < n_states_; ++s) {
    if (initial_(s) < 0.0) throw DomainError("negative initial probability");
    mass += initial_(s);
  }
  if (std::fabs(mass - 1.0) > kSimplexTol) throw DomainError("initial distribution does not sum to 1");

  for (const auto& f : features_)
    if (f.values.rows() != n_states_ || f.values.cols() != n_actions_)
      throw DomainError("feature '" + f.name + "' has wrong shape");

  successors_.resize(static_cast<std::size_t>(n_states_) * n_actions_);
  for (int s = 0; s < n_states_; ++s)
    for (int a = 0; a < n_actions_; ++a)
      for (int s2 = 0; s2 < n_states_; ++s2)
        if (transition_[a](s, s2) > 0.0) successors_[s * n_actions_ + a].emplace_back(s2, transition_[a](s, s2));
}

const Table& Mdp::feature(const std::string& name) const {
  for (const auto& f : features_)
    if (f.name == name) return f.values;
  throw InputError("unknown feature '" + name + "'");
}

Mdp Mdp::with_gamma(double gamma) const {
  return Mdp(n_states_, n_actions_, transition_, initial_, terminals_, gamma, horizon_, features_);
}

Mdp Mdp::with_horizon(std::optional<int> horizon) const {
  return Mdp(n_states_, n_actions_, transition_, initial_, terminals_, gamma_, horizon, features_);
}

bool Trajectory::visits(int s) const {
  if (final_state == s) return true;
  return std::any_of(steps.begin(), steps.end(), [s](const auto& st) { return st.first == s; });
}

TabularPolicy::TabularPolicy(Table p) : probs(std::move(p)) {
  for (int s = 0; s < probs.rows(); ++s) {
    double row = 0.0;
    for (int a = 0; a < probs.cols(); ++a) {
      if (probs(s, a) < -kSimplexTol || !std::isfinite(probs(s, a)))
        throw DomainError("policy has a negative or non-finite entry in state " + std::to_string(s));
      row += probs(s, a);
    }
    if (std::fabs(row - 1.0) > kSimplexTol)
      throw DomainError("policy row " + std::to_string(s) + " does not sum to 1");
  }
}

TabularPolicy TabularPolicy::uniform(int n_states, int n_actions) {
  return TabularPolicy(Table::Constant(n_states, n_actions, 1.0 / n_actions));
}

TabularPolicy TabularPolicy::deterministic(const std::vector<int>& actions, int n_actions) {
  Table p = Table::Zero(static_cast<int>(actions.size()), n_actions);
  for (std::size_t s = 0; s < actions.size(); ++s) p(static_cast<int>(s), actions[s]) = 1.0;
  return TabularPolicy(std::move(p));
}

RewardFunction RewardFunction::tabular(Table values, double lipschitz) {
  for (int s = 0; s < values.rows(); ++s)
    for (int a = 0; a < values.cols(); ++a)
      if (!std::isfinite(values(s, a))) throw DomainError("tabular reward must be finite");
  RewardFunction r;
  r.table_ = std::move(values);
  r.lipschitz = lipschitz;
  return r;
}

RewardFunction RewardFunction::linear(std::vector<Table> features, Eigen::VectorXd weights,
                                      double lipschitz) {
  if (static_cast<int>(features.size()) != weights.size())
    throw DomainError("linear reward needs one weight per feature");
  if (features.empty()) throw DomainError("linear reward needs at least one feature");
  RewardFunction r;
  r.linear_ = true;
  r.table_ = Table::Zero(features[0].rows(), features[0].cols());
  for (std::size_t k = 0; k < features.size(); ++k) {
    if (features[k].rows() != r.table_.rows() || features[k].cols() != r.table_.cols())
      throw DomainError("features differ in shape");
    r.table_ += weights(static_cast<int>(k)) * features[k];
  }
  r.features_ = std::move(features);
  r.weights_ = std::move(weights);
  r.lipschitz = lipschitz;
  return r;
}

std::vector<double> DemonstrationSet::effective_weights() const {
  const std::size_t n = trajectories.size();
  if (weights) return *weights;
  return std::vector<double>(n, n ? 1.0 / static_cast<double>(n) : 0.0);
}

void DemonstrationSet::check() const {
  if (trajectories.empty()) throw DomainError("demonstration set is empty");
  if (weights) {
    if (weights->size() != trajectories.size())
      throw DomainError("demonstration weights do not match the trajectory count");
    double sum = 0.0;
    for (double w : *weights) {
      if (w < 0.0) throw DomainError("negative demonstration weight");
      sum += w;
    }
    if (std::fabs(sum - 1.0) > 1e-9) throw DomainError("demonstration weights must sum to 1");
  }
}

double terminal_reward(const Table& r, int s) { return r.row(s).mean(); }

double trajectory_return(const Mdp& mdp, const Table& r, const Trajectory& tau) {
  double ret = 0.0, disc = 1.0;
  for (const auto& [s, a] : tau.steps) {
    ret += disc * r(s, a);
    disc *= mdp.gamma();
  }
  // arriving exactly at the horizon is past the last rewarded time step
  const bool in_time = !mdp.horizon() || static_cast<int>(tau.steps.size()) < *mdp.horizon();
  if (in_time && mdp.is_terminal(tau.final_state)) ret += disc * terminal_reward(r, tau.final_state);
  return ret;
}

std::vector<WeightedTrajectory> enumerate_trajectories(const Mdp& mdp, int max_len,
                                                       std::size_t node_budget) {
  if (max_len < 1) throw DomainError("max_len must be at least 1");
  int cap = max_len;
  if (mdp.horizon()) cap = std::min(cap, *mdp.horizon() + 1);
  cap = std::max(cap, 1);

  std::vector<WeightedTrajectory> out;
  std::size_t nodes = 0;
  Trajectory cur;

  std::function<void(int, double)> grow = [&](int s, double prob) {
    if (++nodes > node_budget)
      throw BudgetExceeded("trajectory enumeration exceeded " + std::to_string(node_budget) + " nodes");
    if (mdp.is_terminal(s) || cur.length() >= cap) {
      cur.final_state = s;
      out.push_back({cur, prob});
      return;
    }
    for (int a = 0; a < mdp.n_actions(); ++a) {
      for (const auto& [s2, p] : mdp.successors(s, a)) {
        cur.steps.emplace_back(s, a);
        grow(s2, prob * p);
        cur.steps.pop_back();
      }
    }
  };

  for (int s = 0; s < mdp.n_states(); ++s)
    if (mdp.initial()(s) > 0.0) grow(s, mdp.initial()(s));
  return out;
}

void check_policy(const Mdp& mdp, const TabularPolicy& pi) {
  if (pi.n_states() != mdp.n_states() || pi.n_actions() != mdp.n_actions())
    throw DomainError("policy shape does not match the mdp");
}

void check_feasible(const Mdp& mdp, const Trajectory& tau) {
  auto bad = [](const std::string& why) { throw InfeasibleTrajectory(why); };
  auto in_range = [&](int s) { return s >= 0 && s < mdp.n_states(); };
  if (!in_range(tau.final_state)) bad("final state out of range");
  for (std::size_t t = 0; t < tau.steps.size(); ++t) {
    auto [s, a] = tau.steps[t];
    if (!in_range(s) || a < 0 || a >= mdp.n_actions()) bad("step " + std::to_string(t) + " out of range");
    if (mdp.is_terminal(s)) bad("trajectory continues past terminal state " + std::to_string(s));
    int s2 = tau.state_at(static_cast<int>(t) + 1);
    if (mdp.p(s, a, s2) <= 0.0) bad("transition " + at(s, a) + "->" + std::to_string(s2) + " has zero probability");
  }
  if (mdp.initial()(tau.state_at(0)) <= 0.0) bad("trajectory starts outside the initial support");
  if (mdp.horizon() && static_cast<int>(tau.steps.size()) > *mdp.horizon())
    bad("trajectory longer than the horizon");
}

double trajectory_probability(const Mdp& mdp, const TabularPolicy& pi, const Trajectory& tau) {
  check_policy(mdp, pi);
  check_feasible(mdp, tau);
  double prob = mdp.initial()(tau.state_at(0));
  for (std::size_t t = 0; t < tau.steps.size(); ++t) {
    auto [s, a] = tau.steps[t];
    prob *= pi(s, a) * mdp.p(s, a, tau.state_at(static_cast<int>(t) + 1));
  }
  return prob;
}

namespace {

// forward pass over the not-yet-visited mass; works for double and Rational
template <typename Scalar, typename PFn, typename PiFn, typename D0Fn>
Scalar visit_probability(const Mdp& mdp, int target, int max_len, PFn P, PiFn pi, D0Fn d0) {
  if (max_len < 1) throw DomainError("max_len must be at least 1");
  if (target < 0 || target >= mdp.n_states()) throw DomainError("target state out of range");
  int cap = max_len;
  if (mdp.horizon()) cap = std::min(cap, *mdp.horizon() + 1);
  const int S = mdp.n_states(), A = mdp.n_actions();

  std::vector<Scalar> mass(S, Scalar(0));
  for (int s = 0; s < S; ++s) mass[s] = d0(s);
  Scalar hit = mass[target];
  mass[target] = Scalar(0);
  for (int t = 1; t < cap; ++t) {
    std::vector<Scalar> next(S, Scalar(0));
    for (int s = 0; s < S; ++s) {
      if (mass[s] == Scalar(0) || mdp.is_terminal(s)) continue;
      for (int a = 0; a < A; ++a) {
        Scalar w = mass[s] * pi(s, a);
        if (w == Scalar(0)) continue;
        for (const auto& [s2, p] : mdp.successors(s, a)) {
          (void)p;
          next[s2] += w * P(s, a, s2);
        }
      }
    }
    hit += next[target];
    next[target] = Scalar(0);
    mass = std::move(next);
  }
  return hit;
}

}  // namespace

double event_probability(const Mdp& mdp, const TabularPolicy& pi, int target, int max_len) {
  check_policy(mdp, pi);
  return visit_probability<double>(
      mdp, target, max_len, [&](int s, int a, int s2) { return mdp.p(s, a, s2); },
      [&](int s, int a) { return pi(s, a); }, [&](int s) { return mdp.initial()(s); });
}

Rational event_probability_exact(const Mdp& mdp, const TabularPolicy& pi, int target,
                                 int max_len) {
  check_policy(mdp, pi);
  const int S = mdp.n_states(), A = mdp.n_actions();
  std::vector<Rational> P(static_cast<std::size_t>(S) * A * S), Pi(static_cast<std::size_t>(S) * A), D0(S);
  for (int s = 0; s < S; ++s) {
    D0[s] = rationalize(mdp.initial()(s));
    for (int a = 0; a < A; ++a) {
      Pi[s * A + a] = rationalize(pi(s, a));
      for (int s2 = 0; s2 < S; ++s2) P[(s * A + a) * S + s2] = rationalize(mdp.p(s, a, s2));
    }
  }
  return visit_probability<Rational>(
      mdp, target, max_len, [&](int s, int a, int s2) { return P[(s * A + a) * S + s2]; },
      [&](int s, int a) { return Pi[s * A + a]; }, [&](int s) { return D0[s]; });
}

}  // namespace pagar
