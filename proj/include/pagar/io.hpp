#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pagar/adversarial.hpp"
#include "pagar/irl.hpp"
#include "pagar/mdp.hpp"

namespace pagar {

using Json = nlohmann::json;

inline constexpr const char* kToolVersion = "0.1.0";

// file helpers; any read or parse failure is an InputError naming the path
Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);

// mdp files: n_states, n_actions, transitions [[s, a, s', p], ...],
// initial [[s, p], ...], terminals, gamma, optional horizon and
// features [{name, values: S x A rows}]. Terminal rows left empty are
// filled with their self-loop.
Mdp mdp_from_json(const Json& j);
Json mdp_to_json(const Mdp& mdp);
Mdp load_mdp(const std::filesystem::path& path);

// demo files: a list of {steps: [[s, a], ...], final_state}, or an object
// {trajectories: [...], weights: [...]}
DemonstrationSet demos_from_json(const Json& j);
Json demos_to_json(const DemonstrationSet& demos);
DemonstrationSet load_demos(const std::filesystem::path& path);

// how the reward family is built from the mdp's named features
struct FamilySpec {
  std::string kind = "convex_pair";  // convex_pair, linear or tabular
  std::vector<std::string> features{"r1", "r2"};
  std::vector<double> lo, hi;  // per parameter; convex_pair and tabular use the first entry only
};

RewardFamily make_family(const Mdp& mdp, const FamilySpec& spec);

struct RunConfig {
  TrainConfig train;
  Variant variant = Variant::Plain;
  FamilySpec family;
};

RunConfig config_from_json(const Json& j);
Json config_to_json(const RunConfig& config);
RunConfig load_config(const std::filesystem::path& path);

// 64-bit FNV-1a of the canonical dump, as 16 hex digits
std::string config_hash(const Json& j);

struct CsvMeta {
  std::uint64_t seed = 0;
  std::string config_hash;
};

// a metadata comment line, then the header, then the rows
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows, const CsvMeta& meta);
void write_trace_csv(const std::filesystem::path& path, const std::vector<TrainRow>& trace, const CsvMeta& meta);

// shortest text that reads back to the same double
std::string format_double(double v);

Json policy_to_json(const TabularPolicy& pi);
// {probs: S x A rows}, each row on the simplex
TabularPolicy policy_from_json(const Json& j, int n_states, int n_actions);
Json table_to_json(const Table& t);
Table table_from_json(const Json& j, int rows, int cols, const std::string& what);

}  // namespace pagar
