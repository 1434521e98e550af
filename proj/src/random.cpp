#include "pagar/random.hpp"

#include <algorithm>
#include <numeric>

namespace pagar {

namespace {

Eigen::VectorXd simplex_point(Rng& rng, int n) {
  std::exponential_distribution<double> e(1.0);
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x(i) = e(rng) + 1e-3;
  return x / x.sum();
}

}  // namespace

Mdp random_mdp(Rng& rng, const RandomMdpOptions& opt) {
  const int S = opt.n_states, A = opt.n_actions;
  std::vector<Eigen::MatrixXd> P(A, Eigen::MatrixXd::Zero(S, S));
  std::vector<int> terminals;
  for (int i = 0; i < opt.n_terminals && i < S - 1; ++i) terminals.push_back(S - 1 - i);
  auto terminal = [&](int s) { return std::find(terminals.begin(), terminals.end(), s) != terminals.end(); };

  for (int a = 0; a < A; ++a) {
    for (int s = 0; s < S; ++s) {
      if (terminal(s)) {
        P[a](s, s) = 1.0;
        continue;
      }
      std::vector<int> succ(S);
      std::iota(succ.begin(), succ.end(), 0);
      int k = S;
      if (opt.max_successors > 0 && opt.max_successors < S) {
        std::shuffle(succ.begin(), succ.end(), rng);
        k = opt.max_successors;
      }
      Eigen::VectorXd w = simplex_point(rng, k);
      for (int i = 0; i < k; ++i) P[a](s, succ[i]) = w(i);
      P[a].row(s) /= P[a].row(s).sum();
    }
  }
  Eigen::VectorXd d0 = Eigen::VectorXd::Zero(S);
  const int live = S - static_cast<int>(terminals.size());
  d0.head(live) = simplex_point(rng, live);
  return Mdp(S, A, std::move(P), std::move(d0), terminals, opt.gamma, opt.horizon);
}

Mdp layered_mdp(Rng& rng, int n_layers, int width, int n_actions, double gamma) {
  const int S = 1 + n_layers * width;
  std::vector<Eigen::MatrixXd> P(n_actions, Eigen::MatrixXd::Zero(S, S));
  auto first = [&](int layer) { return layer == 0 ? 0 : 1 + (layer - 1) * width; };
  auto size = [&](int layer) { return layer == 0 ? 1 : width; };
  std::vector<int> terminals;
  for (int i = 0; i < width; ++i) terminals.push_back(first(n_layers) + i);
  for (int layer = 0; layer < n_layers; ++layer)
    for (int s = first(layer); s < first(layer) + size(layer); ++s)
      for (int a = 0; a < n_actions; ++a) {
        Eigen::VectorXd w = simplex_point(rng, width);
        for (int i = 0; i < width; ++i) P[a](s, first(layer + 1) + i) = w(i);
      }
  for (int s : terminals)
    for (int a = 0; a < n_actions; ++a) P[a](s, s) = 1.0;
  Eigen::VectorXd d0 = Eigen::VectorXd::Zero(S);
  d0(0) = 1.0;
  return Mdp(S, n_actions, std::move(P), std::move(d0), terminals, gamma);
}

TabularPolicy random_policy(Rng& rng, int n_states, int n_actions) {
  Table p(n_states, n_actions);
  for (int s = 0; s < n_states; ++s) p.row(s) = simplex_point(rng, n_actions).transpose();
  for (int s = 0; s < n_states; ++s) p.row(s) /= p.row(s).sum();
  return TabularPolicy(std::move(p));
}

Table random_table(Rng& rng, int rows, int cols, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Table t(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) t(i, j) = u(rng);
  return t;
}

}  // namespace pagar
