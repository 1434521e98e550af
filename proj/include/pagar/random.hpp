#pragma once

#include <optional>
#include <random>

#include "pagar/mdp.hpp"

namespace pagar {

using Rng = std::mt19937_64;

struct RandomMdpOptions {
  int n_states = 5;
  int n_actions = 3;
  double gamma = 0.9;
  std::optional<int> horizon;
  int n_terminals = 0;  // the last states become terminal
  int max_successors = 0;  // 0 keeps every successor
};

Mdp random_mdp(Rng& rng, const RandomMdpOptions& opt);
// a start state, then layers of the given width, the last one terminal;
// every episode ends within n_layers steps
Mdp layered_mdp(Rng& rng, int n_layers, int width, int n_actions, double gamma);

TabularPolicy random_policy(Rng& rng, int n_states, int n_actions);
Table random_table(Rng& rng, int rows, int cols, double lo = -1.0, double hi = 1.0);

}  // namespace pagar
