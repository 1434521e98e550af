// pagar_lab: command-line front end over the library
//
// exit codes: 0 success, 1 a verification failed, 2 bad input, 3 numeric divergence

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "pagar/adversarial.hpp"
#include "pagar/analysis.hpp"
#include "pagar/errors.hpp"
#include "pagar/example1.hpp"
#include "pagar/experiments.hpp"
#include "pagar/io.hpp"
#include "pagar/random.hpp"
#include "pagar/soft_rl.hpp"
#include "pagar/solver.hpp"

#include "svg.hpp"

using namespace pagar;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0, kVerifyFailed = 1, kBadInput = 2, kDiverged = 3;

struct Common {
  std::string out = ".";
  std::uint64_t seed = 1;
  bool svg = false;
};

fs::path out_dir(const Common& c) {
  fs::path p(c.out);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec || !fs::is_directory(p)) throw InputError("cannot create output directory " + c.out);
  return p;
}

Json interval_json(const std::optional<Interval>& iv) {
  if (!iv) return nullptr;
  return {{"lo", iv->lo}, {"hi", iv->hi}};
}

Json alignment_json(const AlignmentResult& a) {
  return {{"aligned", a.aligned},
          {"success_interval", interval_json(a.s_interval)},
          {"failure_interval", interval_json(a.f_interval)},
          {"utility_range", {{"lo", a.u_range.lo}, {"hi", a.u_range.hi}}},
          {"grid_size", a.grid_size}};
}

// --mdp or the built-in example
Mdp mdp_or_example(const std::string& path) { return path.empty() ? example1::mdp() : load_mdp(path); }
DemonstrationSet demos_or_example(const std::string& path) {
  return path.empty() ? example1::demos() : load_demos(path);
}

std::vector<Table> feature_tables(const Mdp& m, const std::vector<std::string>& names) {
  std::vector<Table> out;
  if (names.empty())
    for (const auto& f : m.features()) out.push_back(f.values);
  else
    for (const auto& n : names) out.push_back(m.feature(n));
  if (out.empty()) throw InputError("no reward features: the mdp defines none and none were named");
  return out;
}

TabularPolicy policy_arg(const Mdp& m, const std::string& file, std::optional<double> p, const char* what) {
  if (!file.empty()) return policy_from_json(read_json_file(file), m.n_states(), m.n_actions());
  if (p) {
    if (m.n_states() != 7 || m.n_actions() != 2) throw InputError(fmt::format("{}: --p applies to example 1 only", what));
    if (*p < 0.0 || *p > 1.0) throw InputError(fmt::format("{}: probability outside [0, 1]", what));
    return example1::policy(*p);
  }
  throw InputError(fmt::format("{}: give a policy file or a probability", what));
}

// ---- example1 --------------------------------------------------------------

struct Example1Args {
  Common common;
  double grid_step = 1e-3;
  double sweep_step = 0.05;
  bool exact_rational = false;
};

int cmd_example1(const Example1Args& a) {
  const fs::path dir = out_dir(a.common);
  const Json cfg = {{"verb", "example1"}, {"grid_step", a.grid_step}, {"sweep_step", a.sweep_step}};
  const CsvMeta meta{a.common.seed, config_hash(cfg)};

  const auto curve = example1::irl_curve(a.grid_step);
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < curve.omega.size(); ++i)
    rows.push_back({format_double(curve.omega[i]), format_double(curve.likelihood[i])});
  write_csv(dir / "irl_loss_vs_omega.csv", {"omega", "likelihood"}, rows, meta);

  const double floor = example1::likelihood_floor();
  std::vector<double> deltas;
  for (double d = floor - 1.0; d < curve.delta_star; d += a.sweep_step) deltas.push_back(d);
  deltas.push_back(curve.delta_star);
  const auto sweep = example1::delta_sweep(deltas);
  rows.clear();
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    std::vector<std::string> row{format_double(deltas[i]), format_double(sweep.p_a2[i])};
    if (a.exact_rational) row.push_back(to_string(rationalize(sweep.p_a2[i])));
    rows.push_back(row);
  }
  std::vector<std::string> header{"delta", "pi_p_a2_s0"};
  if (a.exact_rational) header.push_back("pi_p_a2_s0_rational");
  write_csv(dir / "protagonist_vs_delta.csv", header, rows, meta);

  const double threshold = example1::success_threshold();
  const Rational q = example1::reach_s6_via_a2(), up = example1::success_upper();
  Json summary = {{"omega_star", curve.omega_star},
                  {"delta_star", curve.delta_star},
                  {"likelihood_floor", floor},
                  {"reach_s6_via_a2", to_string(q)},
                  {"success_lower", to_string(example1::success_lower())},
                  {"success_upper", to_string(up)},
                  {"success_upper_value", to_double(up)},
                  {"success_upper_alternative_125_178_matches", up == Rational(125, 178)},
                  {"delta_success_threshold", threshold},
                  {"unconstrained_pi_p_a2_s0", sweep.p_a2.front()},
                  {"grid_step", a.grid_step}};
  write_json_file(dir / "summary.json", summary);
  if (a.common.svg) {
    pagar_lab::line_chart(dir / "irl_loss_vs_omega.svg", "likelihood along omega", "omega", "likelihood", curve.omega,
                          curve.likelihood);
    pagar_lab::line_chart(dir / "protagonist_vs_delta.svg", "protagonist choice of a2 at s0", "delta",
                          "pi_P(a2|s0)", deltas, sweep.p_a2);
  }
  std::printf("omega* = %.4f  delta* = %.6f  threshold = %.4f  success interval [%s, %s]\n", curve.omega_star,
              curve.delta_star, threshold, to_string(example1::success_lower()).c_str(), to_string(up).c_str());
  return kOk;
}

// ---- delta-sweep -----------------------------------------------------------

struct SweepArgs {
  Common common;
  std::optional<double> from, to;
  double step = 0.05;
  double grid_step = 1e-3;
};

int cmd_delta_sweep(const SweepArgs& a) {
  if (!(a.step > 0.0)) throw InputError("--step must be positive");
  const fs::path dir = out_dir(a.common);
  const double lo = a.from ? *a.from : example1::likelihood_floor() - 1.0;
  const double hi = a.to ? *a.to : example1::irl_curve(1e-3).delta_star;
  std::vector<double> deltas;
  for (double d = lo; d <= hi + 1e-12; d += a.step) deltas.push_back(d);
  const auto sweep = example1::delta_sweep(deltas, a.grid_step);
  const Json cfg = {{"verb", "delta-sweep"}, {"from", lo}, {"to", hi}, {"step", a.step}, {"grid_step", a.grid_step}};
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < deltas.size(); ++i)
    rows.push_back({format_double(deltas[i]), format_double(sweep.p_a2[i])});
  write_csv(dir / "protagonist_vs_delta.csv", {"delta", "pi_p_a2_s0"}, rows, {a.common.seed, config_hash(cfg)});
  if (a.common.svg)
    pagar_lab::line_chart(dir / "protagonist_vs_delta.svg", "protagonist choice of a2 at s0", "delta", "pi_P(a2|s0)",
                          deltas, sweep.p_a2);
  return kOk;
}

// ---- minimax ---------------------------------------------------------------

struct MinimaxArgs {
  Common common;
  std::string mdp, demos, config, trace;
  std::optional<double> delta;
  bool unconstrained = false;
  double grid_step = 0.25;
};

int cmd_minimax(const MinimaxArgs& a) {
  const fs::path dir = out_dir(a.common);
  const Mdp m = mdp_or_example(a.mdp);
  const auto demos = demos_or_example(a.demos);
  const RunConfig rc = a.config.empty() ? RunConfig{} : load_config(a.config);
  RewardSet set{make_family(m, rc.family), rc.train.delta, rc.train.irl};
  if (a.delta) set.delta = *a.delta;
  if (a.unconstrained) set.delta = kUnconstrained;
  PolicySpace space;
  if (a.mdp.empty()) {
    space = DecisionPoint{example1::policy(0.5), example1::kStart, example1::kA1, example1::kA2};
  } else {
    FullTabular ft;
    ft.grid_step = a.grid_step;
    ft.seed = a.common.seed;
    space = ft;
  }
  const auto res = minimax_regret(m, set, demos, space);
  Json cfg = config_to_json(rc);
  cfg["verb"] = "minimax";
  cfg["set_delta"] = std::isfinite(set.delta) ? Json(set.delta) : Json("-inf");
  cfg["grid_step"] = a.grid_step;
  Json report = {{"regret", res.report.regret},
                 {"policy", policy_to_json(res.policy)},
                 {"witness_reward", table_to_json(res.report.witness_reward.table())},
                 {"antagonist", policy_to_json(res.report.antagonist)},
                 {"protagonist_utility", res.report.protagonist_utility},
                 {"antagonist_utility", res.report.antagonist_utility},
                 {"subgradient_regret", res.subgradient_regret},
                 {"delta", cfg["set_delta"]}};
  if (res.param) report["decision_probability"] = *res.param;
  write_json_file(dir / "minimax.json", report);
  if (!a.trace.empty()) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& t : res.trace) {
      std::string params;
      for (std::size_t i = 0; i < t.params.size(); ++i) params += (i ? ";" : "") + format_double(t.params[i]);
      rows.push_back({std::to_string(t.iteration), params, format_double(t.regret)});
    }
    write_csv(a.trace, {"iteration", "params", "regret"}, rows, {a.common.seed, config_hash(cfg)});
  }
  std::printf("minimax regret %.6g\n", res.report.regret);
  return kOk;
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
  Common common;
  std::string mdp, demos, config, variant, trace;
  std::optional<int> iterations;
};

int cmd_train(const TrainArgs& a) {
  const Mdp m = mdp_or_example(a.mdp);
  const auto demos = demos_or_example(a.demos);
  RunConfig rc = a.config.empty() ? RunConfig{} : load_config(a.config);
  if (!a.variant.empty()) {
    Json j = config_to_json(rc);
    j["variant"] = a.variant;
    rc = config_from_json(j);
  }
  if (a.iterations) rc.train.iterations = *a.iterations;
  const fs::path dir = out_dir(a.common);
  const TrainResult res = rc.variant == Variant::Plain
                              ? train_pagar(m, demos, make_family(m, rc.family), rc.train, a.common.seed)
                              : train_gail_pagar(m, demos, rc.train, a.common.seed, rc.variant);
  const Json cfg = config_to_json(rc);
  const fs::path trace = a.trace.empty() ? dir / "trace.csv" : fs::path(a.trace);
  write_trace_csv(trace, res.trace, {a.common.seed, config_hash(cfg)});
  Json final = {{"policy", policy_to_json(res.policy)},
                {"lambda", res.state.lambda},
                {"iterations", res.state.iteration},
                {"seed", a.common.seed},
                {"config", cfg}};
  if (!res.trace.empty()) final["exact_regret"] = res.trace.back().exact_regret;
  write_json_file(dir / "policy.json", final);
  if (a.common.svg && !res.trace.empty()) {
    std::vector<double> x, y;
    for (const auto& r : res.trace) {
      x.push_back(r.iteration);
      y.push_back(r.exact_regret);
    }
    pagar_lab::line_chart(dir / "regret.svg", "exact regret of the protagonist", "iteration", "regret", x, y);
  }
  return kOk;
}

// ---- verify-bounds -----------------------------------------------------------

struct VerifyArgs {
  Common common;
  int instances = 100;
  bool corrupt = false;
};

int cmd_verify(const VerifyArgs& a) {
  if (a.instances < 0) throw InputError("--instances must be non-negative");
  const fs::path dir = out_dir(a.common);
  Rng rng(a.common.seed);
  std::uniform_int_distribution<int> ns(2, 6), na(2, 3), nt(0, 1);
  Json checks = Json::array();
  std::optional<Json> counterexample;
  int failed = 0;
  for (int k = 0; k < a.instances; ++k) {
    RandomMdpOptions o;
    o.n_states = ns(rng);
    o.n_actions = na(rng);
    o.n_terminals = nt(rng);
    const Mdp m = random_mdp(rng, o);
    const Table r = random_table(rng, o.n_states, o.n_actions);
    const auto p1 = random_policy(rng, o.n_states, o.n_actions), p2 = random_policy(rng, o.n_states, o.n_actions);

    const auto e2 = evaluate_soft(m, p2, r);
    const double lhs = utility(m, p1, r) - utility(m, p2, r);
    const double rhs = utility(m, p1, e2.adv) + entropy(m, p2);
    const bool diff_ok = std::abs(lhs - rhs) <= 1e-8 * (1.0 + std::abs(lhs));
    const auto opt = solve_soft(m, r);
    const double own = utility(m, opt.policy, opt.adv);
    const bool own_ok = std::abs(own + opt.entropy_total) <= 1e-8 * (1.0 + opt.entropy_total);
    BoundsReport b = verify_bounds(m, r, p1);
    if (a.corrupt) b.bound_own = b.lhs_own - 1.0;  // negative control
    const bool bounds_ok = b.slack_own() >= 0.0 && b.slack_other() >= 0.0;
    const bool ok = diff_ok && own_ok && bounds_ok;
    checks.push_back({{"instance", k},
                      {"performance_difference", diff_ok},
                      {"own_advantage_is_minus_entropy", own_ok},
                      {"bounds", bounds_ok},
                      {"slack_own", b.slack_own()},
                      {"slack_other", b.slack_other()}});
    if (!ok) {
      ++failed;
      if (!counterexample)
        counterexample = Json{{"instance", k},
                              {"mdp", mdp_to_json(m)},
                              {"reward", table_to_json(r)},
                              {"pi1", policy_to_json(p1)},
                              {"pi2", policy_to_json(p2)},
                              {"difference_lhs", lhs},
                              {"difference_rhs", rhs},
                              {"bound_own", b.bound_own},
                              {"lhs_own", b.lhs_own},
                              {"bound_other", b.bound_other},
                              {"lhs_other", b.lhs_other}};
    }
  }
  Json report = {{"instances", a.instances}, {"seed", a.common.seed}, {"failed", failed}, {"passed", failed == 0},
                 {"checks", checks}};
  if (counterexample) report["first_counterexample"] = *counterexample;
  write_json_file(dir / "verify_report.json", report);
  std::printf("%d of %d instances failed\n", failed, a.instances);
  return failed ? kVerifyFailed : kOk;
}

// ---- check-alignment, domination, wasserstein --------------------------------

struct AlignArgs {
  Common common;
  std::string mdp, feature;
  std::optional<double> omega;
  std::vector<std::string> visits;
  double grid_step = 0.01;
};

TaskPredicate parse_task(const std::vector<std::string>& visits) {
  if (visits.empty())
    return TaskPredicate::visit_threshold({{example1::kS6, 0.5, example1::kTaskLen}});
  std::vector<VisitTarget> targets;
  for (const auto& v : visits) {
    VisitTarget t;
    if (std::sscanf(v.c_str(), "%d:%lf:%d", &t.state, &t.min_prob, &t.max_len) != 3)
      throw InputError("--visit expects state:probability:length, got '" + v + "'");
    targets.push_back(t);
  }
  return TaskPredicate::visit_threshold(targets);
}

std::vector<TabularPolicy> policy_grid(const Mdp& m, bool example, double step) {
  if (!example) return simplex_grid_policies(m, step);
  std::vector<TabularPolicy> out;
  const int n = static_cast<int>(std::lround(1.0 / step));
  for (int i = 0; i <= n; ++i) out.push_back(example1::policy(static_cast<double>(i) / n));
  return out;
}

int cmd_alignment(const AlignArgs& a) {
  const fs::path dir = out_dir(a.common);
  const Mdp m = mdp_or_example(a.mdp);
  Table r;
  if (a.omega) {
    if (!a.mdp.empty()) throw InputError("--omega applies to example 1 only");
    r = *a.omega * m.feature("r1") + (1.0 - *a.omega) * m.feature("r2");
  } else if (!a.feature.empty()) {
    r = m.feature(a.feature);
  } else {
    throw InputError("give --feature or --omega");
  }
  const auto res = classify_alignment(m, r, parse_task(a.visits), policy_grid(m, a.mdp.empty(), a.grid_step));
  write_json_file(dir / "alignment.json", alignment_json(res));
  std::printf("%s\n", res.aligned ? "aligned" : "not aligned");
  return kOk;
}

struct DominationArgs {
  Common common;
  std::string mdp, pi1, pi2;
  std::optional<double> p1, p2;
  std::vector<std::string> features;
};

int cmd_domination(const DominationArgs& a) {
  const fs::path dir = out_dir(a.common);
  const Mdp m = mdp_or_example(a.mdp);
  std::vector<RewardFunction> rs;
  for (auto& t : feature_tables(m, a.features)) rs.push_back(RewardFunction::tabular(t));
  const auto v = domination(m, policy_arg(m, a.pi1, a.p1, "pi1"), policy_arg(m, a.pi2, a.p2, "pi2"), rs);
  const char* name = v == DominationVerdict::TotallyDominates         ? "totally_dominates"
                     : v == DominationVerdict::WeaklyTotallyDominates ? "weakly_totally_dominates"
                                                                      : "incomparable";
  write_json_file(dir / "domination.json", {{"pi2_over_pi1", name}, {"n_rewards", rs.size()}});
  std::printf("pi2 over pi1: %s\n", name);
  return kOk;
}

struct WassersteinArgs {
  Common common;
  std::string mdp, demos, pi;
  std::optional<double> p;
  std::vector<std::string> features;
  int max_len = 6;
};

int cmd_wasserstein(const WassersteinArgs& a) {
  const fs::path dir = out_dir(a.common);
  const Mdp m = mdp_or_example(a.mdp);
  const auto demos = demos_or_example(a.demos);
  const auto pi = policy_arg(m, a.pi, a.p, "policy");
  const auto metric = feature_expectation_metric(m, feature_tables(m, a.features));
  const auto pd = TrajectoryDistribution::of_policy(m, pi, a.max_len);
  const auto rep = wasserstein1(pd, TrajectoryDistribution::of_demos(demos), metric);
  write_json_file(dir / "wasserstein.json", {{"w1", rep.w1},
                                             {"metric", rep.metric_name},
                                             {"policy_support", pd.support.size()},
                                             {"max_len", a.max_len},
                                             {"coupling", table_to_json(rep.coupling)}});
  std::printf("W1 = %.6g\n", rep.w1);
  return kOk;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--out", c.out, "output directory");
  sub->add_option("--seed", c.seed, "random seed");
  sub->add_flag("--svg", c.svg, "also render line charts");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tabular PAGAR experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  Example1Args ex;
  auto* s_ex = app.add_subcommand("example1", "worked example: likelihood curve, delta sweep and summary");
  add_common(s_ex, ex.common);
  s_ex->add_option("--grid-step", ex.grid_step, "omega grid step");
  s_ex->add_option("--sweep-step", ex.sweep_step, "delta step of the protagonist sweep");
  s_ex->add_flag("--exact-rational", ex.exact_rational, "add rational forms of the swept probabilities");

  SweepArgs sw;
  auto* s_sw = app.add_subcommand("delta-sweep", "protagonist choice at s0 across delta on the worked example");
  add_common(s_sw, sw.common);
  s_sw->add_option("--from", sw.from);
  s_sw->add_option("--to", sw.to);
  s_sw->add_option("--step", sw.step);
  s_sw->add_option("--grid-step", sw.grid_step, "decision probability grid step");

  MinimaxArgs mm;
  auto* s_mm = app.add_subcommand("minimax", "minimax-regret protagonist over a delta reward set");
  add_common(s_mm, mm.common);
  s_mm->add_option("--mdp", mm.mdp, "mdp file (default: worked example)");
  s_mm->add_option("--demos", mm.demos, "demonstrations file");
  s_mm->add_option("--config", mm.config, "config file with family, loss and delta");
  s_mm->add_option("--delta", mm.delta, "override the reward-set delta");
  s_mm->add_flag("--unconstrained", mm.unconstrained, "admit every family member");
  s_mm->add_option("--grid-step", mm.grid_step, "policy simplex grid step");
  s_mm->add_option("--trace", mm.trace, "write the search transcript here");

  TrainArgs tr;
  auto* s_tr = app.add_subcommand("train", "adversarial training (plain, gail or vail)");
  add_common(s_tr, tr.common);
  s_tr->add_option("--mdp", tr.mdp, "mdp file (default: worked example)");
  s_tr->add_option("--demos", tr.demos, "demonstrations file");
  s_tr->add_option("--config", tr.config, "config file");
  s_tr->add_option("--variant", tr.variant)->check(CLI::IsMember({"plain", "gail", "vail"}));
  s_tr->add_option("--iterations", tr.iterations);
  s_tr->add_option("--trace", tr.trace, "trace csv path (default: <out>/trace.csv)");

  VerifyArgs vb;
  auto* s_vb = app.add_subcommand("verify-bounds", "identity and bound checks on random mdps");
  add_common(s_vb, vb.common);
  s_vb->add_option("--instances", vb.instances);
  s_vb->add_flag("--inject-corrupted-bound", vb.corrupt, "test mode: break the first bound on purpose");

  AlignArgs al;
  auto* s_al = app.add_subcommand("check-alignment", "classify a reward as task-aligned over a policy grid");
  add_common(s_al, al.common);
  s_al->add_option("--mdp", al.mdp);
  s_al->add_option("--feature", al.feature, "reward = this named feature");
  s_al->add_option("--omega", al.omega, "worked example: omega r1 + (1 - omega) r2");
  s_al->add_option("--visit", al.visits, "task target state:probability:length (repeatable)");
  s_al->add_option("--grid-step", al.grid_step);

  DominationArgs dm;
  auto* s_dm = app.add_subcommand("domination", "utility-range domination of pi2 over pi1");
  add_common(s_dm, dm.common);
  s_dm->add_option("--mdp", dm.mdp);
  s_dm->add_option("--pi1", dm.pi1, "policy file");
  s_dm->add_option("--pi2", dm.pi2, "policy file");
  s_dm->add_option("--p1", dm.p1, "worked example: probability of a2 at s0");
  s_dm->add_option("--p2", dm.p2);
  s_dm->add_option("--feature", dm.features, "reward features (default: all)");

  WassersteinArgs ws;
  auto* s_ws = app.add_subcommand("wasserstein", "W1 between a policy's trajectories and the demonstrations");
  add_common(s_ws, ws.common);
  s_ws->add_option("--mdp", ws.mdp);
  s_ws->add_option("--demos", ws.demos);
  s_ws->add_option("--pi", ws.pi, "policy file");
  s_ws->add_option("--p", ws.p, "worked example: probability of a2 at s0");
  s_ws->add_option("--feature", ws.features, "metric features (default: all)");
  s_ws->add_option("--max-len", ws.max_len);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kBadInput;
  }

  try {
    if (*s_ex) return cmd_example1(ex);
    if (*s_sw) return cmd_delta_sweep(sw);
    if (*s_mm) return cmd_minimax(mm);
    if (*s_tr) return cmd_train(tr);
    if (*s_vb) return cmd_verify(vb);
    if (*s_al) return cmd_alignment(al);
    if (*s_dm) return cmd_domination(dm);
    if (*s_ws) return cmd_wasserstein(ws);
  } catch (const NonFinite& e) {
    std::fprintf(stderr, "diverged: %s\n", e.what());
    return kDiverged;
  } catch (const RatioOverflow& e) {
    std::fprintf(stderr, "diverged: %s\n", e.what());
    return kDiverged;
  } catch (const NonConvergence& e) {
    std::fprintf(stderr, "diverged: %s\n", e.what());
    return kDiverged;
  } catch (const SolveFailure& e) {
    std::fprintf(stderr, "solver failed: %s\n", e.what());
    return kDiverged;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kBadInput;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kBadInput;
  }
  return kBadInput;
}
