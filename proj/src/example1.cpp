#include "pagar/example1.hpp"

namespace pagar::example1 {

Mdp mdp() {
  const int S = 7, A = 2;
  std::vector<Eigen::MatrixXd> P(A, Eigen::MatrixXd::Zero(S, S));
  for (int a = 0; a < A; ++a) {
    P[a](1, 4) = 1.0;
    P[a](4, 5) = 1.0;
    P[a](5, 6) = 1.0;
    P[a](2, 2) = 0.2;
    P[a](2, 6) = 0.2;
    P[a](2, 3) = 0.6;
    P[a](3, 3) = 1.0;
    P[a](6, 6) = 1.0;
  }
  P[kA1](0, 1) = 1.0;
  P[kA2](0, 2) = 1.0;

  Eigen::VectorXd d0 = Eigen::VectorXd::Zero(S);
  d0(kStart) = 1.0;

  Table r1 = Table::Zero(S, A), r2 = Table::Zero(S, A);
  r1.row(kS2).setOnes();
  r2.row(kS6).setOnes();
  return Mdp(S, A, std::move(P), std::move(d0), {3, 6}, kGamma, std::nullopt,
             {{"r1", r1}, {"r2", r2}});
}

DemonstrationSet demos() {
  DemonstrationSet e;
  e.trajectories.push_back({{{0, kA2}, {2, kA2}}, 6});
  e.trajectories.push_back({{{0, kA2}, {2, kA2}, {2, kA2}}, 6});
  e.trajectories.push_back({{{0, kA2}, {2, kA2}, {2, kA2}, {2, kA2}}, 6});
  return e;
}

TabularPolicy policy(double p) {
  Table t = Table::Constant(7, 2, 0.5);
  t(kStart, kA1) = 1.0 - p;
  t(kStart, kA2) = p;
  return TabularPolicy(std::move(t));
}

Rational reach_s6_via_a2() {
  return event_probability_exact(mdp(), policy(1.0), kS6, kTaskLen);
}

Rational success_upper() {
  // P(s6) = (1 - p) + q p with q the a2 branch probability; solve P = 1/2
  const Rational q = reach_s6_via_a2();
  return Rational(1, 2) / (Rational(1) - q);
}

Rational success_lower() {
  // P(s2) = p
  return Rational(1, 2);
}

}  // namespace pagar::example1
