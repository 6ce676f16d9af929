#ifndef PHYLOCP_CONFIG_HPP
#define PHYLOCP_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "phylocp/abc.hpp"
#include "phylocp/changepoint.hpp"
#include "phylocp/pmmh.hpp"

namespace phylocp {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct TruthSpec {
  int m = 0;
  ChangePointState state;
  std::uint64_t seed = 1;
};

struct BenchConfig {
  std::vector<int> g{1, 4};
  int runs = 50;
  /// Dimensions to estimate; empty means every k in the prior support.
  std::vector<int> k;
};

/// One JSON document describing a run. `pmmh.prior` and `pmmh.proposals`
/// mirror the top-level `prior` and `proposals`.
struct RunConfig {
  std::string name;
  std::string tree; // Newick text; empty when the tree comes from a file
  std::optional<TruthSpec> simulation;
  PriorSpec prior;
  ProposalSpec proposals;
  std::string method = "pmmh";
  PmmhConfig pmmh;
  AbcConfig abc;
  int burn_in = 0;
  BenchConfig bench;

  void validate() const;
};

/// Missing keys keep their defaults; unknown keys are rejected.
RunConfig run_config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const RunConfig& config);

/// 64-bit FNV-1a of the canonical JSON dump, as 16 hex digits.
std::string config_hash(const RunConfig& config);
std::string fnv1a_hex(const std::string& text);

} // namespace phylocp

#endif
