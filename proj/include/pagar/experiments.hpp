#pragma once

#include <vector>

#include "pagar/irl.hpp"
#include "pagar/mdp.hpp"
#include "pagar/rational.hpp"

namespace pagar::example1 {

// Ziebart likelihood along r = omega r1 + (1 - omega) r2
struct IrlCurve {
  std::vector<double> omega, likelihood;
  double omega_star = 0.0;
  double delta_star = 0.0;  // best likelihood, refined around the grid maximum
};

IrlCurve irl_curve(double step = 1e-3, int max_len = 5);

// pi_P(a2|s0) of the minimax-regret protagonist over the reward set whose
// likelihood is at least delta
double protagonist_a2(double delta, double grid_step = 1e-3);

struct DeltaSweep {
  std::vector<double> delta, p_a2;
};

DeltaSweep delta_sweep(const std::vector<double>& deltas, double grid_step = 1e-3);

// the smallest likelihood over the family; any delta at or below it admits everything
double likelihood_floor();

// the largest delta with pi_P(a2|s0) <= success_upper(), by bisection on
// the monotone sweep
double success_threshold(double tol = 1e-4, double grid_step = 1e-3);

}  // namespace pagar::example1
