#include "pagar/io.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "pagar/errors.hpp"

namespace pagar {
namespace {

template <class T>
T get(const Json& j, const char* key, const std::string& what) {
  if (!j.contains(key)) throw InputError(fmt::format("{}: missing key '{}'", what, key));
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw InputError(fmt::format("{}: bad value for '{}': {}", what, key, e.what()));
  }
}

template <class T>
void read_opt(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw InputError(fmt::format("config: bad value for '{}': {}", key, e.what()));
  }
}

void reject_unknown(const Json& j, const std::set<std::string>& known, const std::string& what) {
  if (!j.is_object()) throw InputError(what + ": expected an object");
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw InputError(fmt::format("{}: unknown key '{}'", what, k));
}

int index_in(const Json& v, int n, const std::string& what) {
  if (!v.is_number_integer()) throw InputError(what + ": expected an integer index");
  const int i = v.get<int>();
  if (i < 0 || i >= n) throw InputError(fmt::format("{}: index {} out of range [0, {})", what, i, n));
  return i;
}

Trajectory trajectory_from_json(const Json& j, std::size_t k) {
  const std::string what = fmt::format("demos: trajectory {}", k);
  reject_unknown(j, {"steps", "final_state"}, what);
  Trajectory tau;
  for (const auto& st : get<Json>(j, "steps", what)) {
    if (!st.is_array() || st.size() != 2) throw InputError(what + ": each step is a [state, action] pair");
    tau.steps.emplace_back(st[0].get<int>(), st[1].get<int>());
  }
  tau.final_state = get<int>(j, "final_state", what);
  return tau;
}

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::Plain: return "plain";
    case Variant::Gail: return "gail";
    case Variant::Vail: return "vail";
  }
  return "plain";
}

Variant variant_from(const std::string& s) {
  if (s == "plain") return Variant::Plain;
  if (s == "gail") return Variant::Gail;
  if (s == "vail") return Variant::Vail;
  throw InputError("config: variant must be plain, gail or vail, got '" + s + "'");
}

Json irl_to_json(const IrlLoss& l) {
  static const char* kinds[] = {"max_margin", "max_ent", "ziebart"};
  static const char* bases[] = {"uniform", "dynamics", "counting"};
  return {{"kind", kinds[static_cast<int>(l.kind)]},
          {"max_len", l.max_len},
          {"base", bases[static_cast<int>(l.base)]}};
}

IrlLoss irl_from_json(const Json& j) {
  reject_unknown(j, {"kind", "max_len", "base"}, "config.irl");
  IrlLoss l = IrlLoss::ziebart(5);
  std::string kind = "ziebart", base = "uniform";
  read_opt(j, "kind", kind);
  read_opt(j, "base", base);
  read_opt(j, "max_len", l.max_len);
  if (kind == "ziebart") l.kind = LossKind::Ziebart;
  else if (kind == "max_margin") l.kind = LossKind::MaxMargin;
  else if (kind == "max_ent") l.kind = LossKind::MaxEnt;
  else throw InputError("config.irl: unknown kind '" + kind + "'");
  if (base == "uniform") l.base = BaseMeasure::Uniform;
  else if (base == "dynamics") l.base = BaseMeasure::Dynamics;
  else if (base == "counting") l.base = BaseMeasure::Counting;
  else throw InputError("config.irl: unknown base '" + base + "'");
  if (l.max_len < 1) throw InputError("config.irl: max_len must be at least 1");
  return l;
}

}  // namespace

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw InputError(fmt::format("{}: parse error: {}", path.string(), e.what()));
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

Json table_to_json(const Table& t) {
  Json rows = Json::array();
  for (int s = 0; s < t.rows(); ++s) {
    Json row = Json::array();
    for (int a = 0; a < t.cols(); ++a) row.push_back(t(s, a));
    rows.push_back(row);
  }
  return rows;
}

Table table_from_json(const Json& j, int rows, int cols, const std::string& what) {
  if (!j.is_array() || static_cast<int>(j.size()) != rows)
    throw InputError(fmt::format("{}: expected {} rows", what, rows));
  Table t(rows, cols);
  for (int s = 0; s < rows; ++s) {
    if (!j[s].is_array() || static_cast<int>(j[s].size()) != cols)
      throw InputError(fmt::format("{}: row {} needs {} entries", what, s, cols));
    for (int a = 0; a < cols; ++a) {
      if (!j[s][a].is_number()) throw InputError(fmt::format("{}: entry ({}, {}) is not a number", what, s, a));
      t(s, a) = j[s][a].get<double>();
    }
  }
  return t;
}

Json policy_to_json(const TabularPolicy& pi) { return {{"probs", table_to_json(pi.probs)}}; }

TabularPolicy policy_from_json(const Json& j, int n_states, int n_actions) {
  reject_unknown(j, {"probs"}, "policy");
  if (!j.contains("probs")) throw InputError("policy: missing key 'probs'");
  try {
    return TabularPolicy(table_from_json(j.at("probs"), n_states, n_actions, "policy"));
  } catch (const DomainError& e) {
    throw InputError(std::string("policy: ") + e.what());
  }
}

Mdp mdp_from_json(const Json& j) {
  const std::string what = "mdp";
  reject_unknown(j, {"n_states", "n_actions", "transitions", "initial", "terminals", "gamma", "horizon", "features"},
                 what);
  const int S = get<int>(j, "n_states", what), A = get<int>(j, "n_actions", what);
  if (S <= 0 || A <= 0) throw InputError("mdp: n_states and n_actions must be positive");
  std::vector<Eigen::MatrixXd> P(A, Eigen::MatrixXd::Zero(S, S));
  std::vector<std::vector<bool>> given(S, std::vector<bool>(A, false));
  for (const auto& e : get<Json>(j, "transitions", what)) {
    if (!e.is_array() || e.size() != 4) throw InputError("mdp: each transition is [s, a, s', p]");
    const int s = index_in(e[0], S, "mdp transition state"), a = index_in(e[1], A, "mdp transition action");
    const int s2 = index_in(e[2], S, "mdp transition successor");
    if (!e[3].is_number()) throw InputError("mdp: transition probability is not a number");
    P[a](s, s2) += e[3].get<double>();
    given[s][a] = true;
  }
  Eigen::VectorXd d0 = Eigen::VectorXd::Zero(S);
  for (const auto& e : get<Json>(j, "initial", what)) {
    if (!e.is_array() || e.size() != 2 || !e[1].is_number()) throw InputError("mdp: each initial entry is [s, p]");
    d0(index_in(e[0], S, "mdp initial state")) += e[1].get<double>();
  }
  std::vector<int> terminals;
  for (const auto& t : get<Json>(j, "terminals", what)) terminals.push_back(index_in(t, S, "mdp terminal"));
  for (int s : terminals)
    for (int a = 0; a < A; ++a)
      if (!given[s][a]) P[a](s, s) = 1.0;
  std::optional<int> horizon;
  if (j.contains("horizon") && !j["horizon"].is_null()) horizon = get<int>(j, "horizon", what);
  std::vector<NamedFeature> features;
  if (j.contains("features")) {
    for (const auto& f : j["features"]) {
      reject_unknown(f, {"name", "values"}, "mdp feature");
      const auto name = get<std::string>(f, "name", "mdp feature");
      features.push_back({name, table_from_json(f.at("values"), S, A, "mdp feature " + name)});
    }
  }
  try {
    return Mdp(S, A, std::move(P), d0, terminals, get<double>(j, "gamma", what), horizon, std::move(features));
  } catch (const DomainError& e) {
    throw InputError(std::string("mdp: ") + e.what());
  }
}

Json mdp_to_json(const Mdp& mdp) {
  Json tr = Json::array(), init = Json::array(), feats = Json::array();
  for (int s = 0; s < mdp.n_states(); ++s)
    for (int a = 0; a < mdp.n_actions(); ++a)
      for (const auto& [s2, p] : mdp.successors(s, a)) tr.push_back({s, a, s2, p});
  for (int s = 0; s < mdp.n_states(); ++s)
    if (mdp.initial()(s) > 0.0) init.push_back({s, mdp.initial()(s)});
  for (const auto& f : mdp.features()) feats.push_back({{"name", f.name}, {"values", table_to_json(f.values)}});
  Json j = {{"n_states", mdp.n_states()}, {"n_actions", mdp.n_actions()}, {"transitions", tr},
            {"initial", init},           {"terminals", mdp.terminals()}, {"gamma", mdp.gamma()}};
  if (mdp.horizon()) j["horizon"] = *mdp.horizon();
  if (!feats.empty()) j["features"] = feats;
  return j;
}

Mdp load_mdp(const std::filesystem::path& path) {
  try {
    return mdp_from_json(read_json_file(path));
  } catch (const InputError& e) {
    const std::string msg = e.what();
    if (msg.rfind(path.string(), 0) == 0 || msg.rfind("cannot open", 0) == 0) throw;
    throw InputError(path.string() + ": " + msg);
  }
}

DemonstrationSet demos_from_json(const Json& j) {
  DemonstrationSet d;
  const Json* list = &j;
  if (j.is_object()) {
    reject_unknown(j, {"trajectories", "weights"}, "demos");
    if (!j.contains("trajectories")) throw InputError("demos: missing key 'trajectories'");
    list = &j.at("trajectories");
    if (j.contains("weights")) d.weights = get<std::vector<double>>(j, "weights", "demos");
  }
  if (!list->is_array()) throw InputError("demos: expected a list of trajectories");
  for (std::size_t k = 0; k < list->size(); ++k) d.trajectories.push_back(trajectory_from_json((*list)[k], k));
  try {
    d.check();
  } catch (const Error& e) {
    throw InputError(std::string("demos: ") + e.what());
  }
  return d;
}

Json demos_to_json(const DemonstrationSet& demos) {
  Json list = Json::array();
  for (const auto& tau : demos.trajectories) {
    Json steps = Json::array();
    for (const auto& [s, a] : tau.steps) steps.push_back({s, a});
    list.push_back({{"steps", steps}, {"final_state", tau.final_state}});
  }
  if (!demos.weights) return list;
  return {{"trajectories", list}, {"weights", *demos.weights}};
}

DemonstrationSet load_demos(const std::filesystem::path& path) {
  try {
    return demos_from_json(read_json_file(path));
  } catch (const InputError& e) {
    const std::string msg = e.what();
    if (msg.rfind(path.string(), 0) == 0 || msg.rfind("cannot open", 0) == 0) throw;
    throw InputError(path.string() + ": " + msg);
  }
}

RewardFamily make_family(const Mdp& mdp, const FamilySpec& spec) {
  auto bound = [&](const std::vector<double>& v, std::size_t i, double dflt) { return i < v.size() ? v[i] : dflt; };
  if (spec.kind == "convex_pair") {
    if (spec.features.size() != 2) throw InputError("family: convex_pair takes exactly two features");
    return convex_pair(mdp.feature(spec.features[0]), mdp.feature(spec.features[1]), bound(spec.lo, 0, 0.0),
                       bound(spec.hi, 0, 1.0));
  }
  if (spec.kind == "linear") {
    LinearFamily f;
    const int k = static_cast<int>(spec.features.size());
    if (k == 0) throw InputError("family: linear needs at least one feature");
    for (const auto& name : spec.features) f.features.push_back(mdp.feature(name));
    f.A = Eigen::MatrixXd::Identity(k, k);
    f.b = Eigen::VectorXd::Zero(k);
    f.lo.resize(k);
    f.hi.resize(k);
    for (int i = 0; i < k; ++i) {
      f.lo(i) = bound(spec.lo, i, -1.0);
      f.hi(i) = bound(spec.hi, i, 1.0);
    }
    return {f};
  }
  if (spec.kind == "tabular")
    return {TabularFamily{mdp.n_states(), mdp.n_actions(), bound(spec.lo, 0, -1.0), bound(spec.hi, 0, 1.0)}};
  throw InputError("family: kind must be convex_pair, linear or tabular, got '" + spec.kind + "'");
}

RunConfig config_from_json(const Json& j) {
  reject_unknown(j,
                 {"variant", "iterations", "batch_size", "max_steps", "clip", "lambda0", "mu", "lambda_floor", "delta",
                  "delta_star_mode", "entropy_weight", "policy_lr", "antagonist_lr", "policy_epochs", "reward_lr",
                  "fd_step", "c_scale", "ratio_cap", "average_reward", "objective", "irl", "beta0", "i_c", "beta_lr",
                  "initial_theta", "family"},
                 "config");
  RunConfig rc;
  TrainConfig& c = rc.train;
  std::string variant = "plain", objective = "pagar_mc";
  read_opt(j, "variant", variant);
  rc.variant = variant_from(variant);
  read_opt(j, "iterations", c.iterations);
  read_opt(j, "batch_size", c.batch_size);
  read_opt(j, "max_steps", c.max_steps);
  read_opt(j, "clip", c.clip);
  read_opt(j, "lambda0", c.lambda0);
  read_opt(j, "mu", c.mu);
  read_opt(j, "lambda_floor", c.lambda_floor);
  read_opt(j, "delta", c.delta);
  read_opt(j, "delta_star_mode", c.delta_star_mode);
  read_opt(j, "entropy_weight", c.entropy_weight);
  read_opt(j, "policy_lr", c.policy_lr);
  if (j.contains("antagonist_lr") && !j["antagonist_lr"].is_null()) c.antagonist_lr = j["antagonist_lr"].get<double>();
  read_opt(j, "policy_epochs", c.policy_epochs);
  read_opt(j, "reward_lr", c.reward_lr);
  read_opt(j, "fd_step", c.fd_step);
  read_opt(j, "c_scale", c.c_scale);
  read_opt(j, "ratio_cap", c.ratio_cap);
  read_opt(j, "average_reward", c.average_reward);
  read_opt(j, "objective", objective);
  if (objective == "pagar") c.objective = RewardObjective::Pagar;
  else if (objective == "pagar_mc") c.objective = RewardObjective::PagarMc;
  else throw InputError("config: objective must be pagar or pagar_mc, got '" + objective + "'");
  if (j.contains("irl")) c.irl = irl_from_json(j["irl"]);
  read_opt(j, "beta0", c.beta0);
  read_opt(j, "i_c", c.i_c);
  read_opt(j, "beta_lr", c.beta_lr);
  if (j.contains("initial_theta") && !j["initial_theta"].is_null()) {
    const auto v = j["initial_theta"].get<std::vector<double>>();
    c.initial_theta = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  if (j.contains("family")) {
    const Json& f = j["family"];
    reject_unknown(f, {"kind", "features", "lo", "hi"}, "config.family");
    read_opt(f, "kind", rc.family.kind);
    read_opt(f, "features", rc.family.features);
    read_opt(f, "lo", rc.family.lo);
    read_opt(f, "hi", rc.family.hi);
  }
  if (c.iterations < 0) throw InputError("config: iterations must be non-negative");
  if (c.batch_size <= 0) throw InputError("config: batch_size must be positive");
  return rc;
}

Json config_to_json(const RunConfig& rc) {
  const TrainConfig& c = rc.train;
  Json j = {{"variant", variant_name(rc.variant)},
            {"iterations", c.iterations},
            {"batch_size", c.batch_size},
            {"max_steps", c.max_steps},
            {"clip", c.clip},
            {"lambda0", c.lambda0},
            {"mu", c.mu},
            {"lambda_floor", c.lambda_floor},
            {"delta", c.delta},
            {"delta_star_mode", c.delta_star_mode},
            {"entropy_weight", c.entropy_weight},
            {"policy_lr", c.policy_lr},
            {"antagonist_lr", c.antagonist_lr ? Json(*c.antagonist_lr) : Json(nullptr)},
            {"policy_epochs", c.policy_epochs},
            {"reward_lr", c.reward_lr},
            {"fd_step", c.fd_step},
            {"c_scale", c.c_scale},
            {"ratio_cap", c.ratio_cap},
            {"average_reward", c.average_reward},
            {"objective", c.objective == RewardObjective::Pagar ? "pagar" : "pagar_mc"},
            {"irl", irl_to_json(c.irl)},
            {"beta0", c.beta0},
            {"i_c", c.i_c},
            {"beta_lr", c.beta_lr},
            {"family", {{"kind", rc.family.kind}, {"features", rc.family.features}, {"lo", rc.family.lo}, {"hi", rc.family.hi}}}};
  if (c.initial_theta) j["initial_theta"] = std::vector<double>(c.initial_theta->data(), c.initial_theta->data() + c.initial_theta->size());
  return j;
}

RunConfig load_config(const std::filesystem::path& path) {
  try {
    return config_from_json(read_json_file(path));
  } catch (const InputError& e) {
    const std::string msg = e.what();
    if (msg.rfind(path.string(), 0) == 0 || msg.rfind("cannot open", 0) == 0) throw;
    throw InputError(path.string() + ": " + msg);
  } catch (const Json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

std::string config_hash(const Json& j) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows, const CsvMeta& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << "# pagar_lab " << kToolVersion << " seed=" << meta.seed << " config=" << meta.config_hash << '\n';
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
}

void write_trace_csv(const std::filesystem::path& path, const std::vector<TrainRow>& trace, const CsvMeta& meta) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(trace.size());
  for (const auto& r : trace)
    rows.push_back({std::to_string(r.iteration), format_double(r.j_irl), format_double(r.j_pagar),
                    format_double(r.lambda), format_double(r.exact_regret), r.pi_p_summary});
  write_csv(path, {"iteration", "j_irl", "j_pagar", "lambda", "exact_regret", "pi_p_param_summary"}, rows, meta);
}

}  // namespace pagar
