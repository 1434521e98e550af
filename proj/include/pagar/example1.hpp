#pragma once

#include "pagar/mdp.hpp"
#include "pagar/rational.hpp"

namespace pagar::example1 {

// states s0..s6 are indices 0..6; a1 is action 0 and a2 is action 1
constexpr int kStart = 0;
constexpr int kA1 = 0;
constexpr int kA2 = 1;
constexpr int kS2 = 2;
constexpr int kS6 = 6;
constexpr int kTaskLen = 5;  // the task is judged over the first five states
constexpr double kGamma = 0.99;

// s0 -a1-> s1 -> s4 -> s5 -> s6, s0 -a2-> s2; s2 stays w.p. 0.2, reaches
// s6 w.p. 0.2 and s3 w.p. 0.6. s3 and s6 are terminal. Features r1 and r2
// indicate s2 and s6.
Mdp mdp();

// three expert rollouts that take a2 and reach s6 through s2
DemonstrationSet demos();

// the policy that takes a2 at s0 with probability p
TabularPolicy policy(double p);

// P(reach s6 within five states | a2 at s0), exactly
Rational reach_s6_via_a2();
// largest p with P(s6) >= 1/2, exactly
Rational success_upper();
Rational success_lower();

}  // namespace pagar::example1
