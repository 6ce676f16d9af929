#include "phylocp/presets.hpp"

#include <map>

namespace phylocp {

namespace {

constexpr const char* kEightTaxa = "(((Taxon0:1.0,Taxon1:1.0):1.0,(Taxon2:1.0,Taxon3:1.0):1.0):1.0,"
                                   "((Taxon4:1.0,Taxon5:1.0):1.0,(Taxon6:1.0,Taxon7:1.0):1.0):1.0):1.0;";

// Synthetic stand-in for the six-taxon ACT1 tree; no real sequences ship.
constexpr const char* kSixTaxa = "((((Taxon0:0.12,Taxon1:0.15):0.08,Taxon2:0.30):0.10,Taxon3:0.42):0.06,"
                                 "(Taxon4:0.21,Taxon5:0.25):0.18);";

std::string eight_taxa(const std::string& name, const std::string& simulation, const std::string& support,
                       int steps)
{
  return std::string(R"({
  "name": ")") + name + R"(",
  "tree": ")" + kEightTaxa + R"(",
  "simulation": )" + simulation + R"(,
  "prior": {"k_support": )" + support + R"(, "gamma_shape": 2.0, "gamma_scale": 0.4},
  "proposals": {"k_window": 3, "s_window": 3, "rate_sigma": 0.25},
  "method": "pmmh",
  "pmmh": {"iterations": 4000, "particles": 20, "steps": )" + std::to_string(steps) + R"(,
           "schedule_exponent": 2.0, "kernel_sweeps": 1, "g": 4, "seed": 1},
  "abc": {"pseudo_datasets": 20, "particles": 20, "steps": 10, "terminal_divisor": 3.0},
  "burn_in": 500,
  "bench": {"g": [1, 4], "runs": 50}
})";
}

const std::map<std::string, std::string>& presets()
{
  static const std::map<std::string, std::string> table{
      {"base-dataset",
       eight_taxa("base-dataset", R"({"m": 50, "s": [25], "theta": [0.75, 0.85], "seed": 1})", "[0, 1]", 10)},
      {"two-changepoints",
       eight_taxa("two-changepoints", R"({"m": 50, "s": [15, 35], "theta": [0.75, 0.85, 0.75], "seed": 2})",
                  "[1, 2]", 10)},
      {"subtle-changepoint",
       eight_taxa("subtle-changepoint", R"({"m": 50, "s": [25], "theta": [0.75, 0.8], "seed": 3})", "[0, 1]", 10)},
      {"more-sites",
       eight_taxa("more-sites", R"({"m": 80, "s": [40], "theta": [0.75, 0.85], "seed": 4})", "[0, 1]", 50)},
      {"act1-workflow", std::string(R"({
  "name": "act1-workflow",
  "tree": ")") + kSixTaxa + R"(",
  "simulation": {"m": 540, "s": [195], "theta": [0.4, 0.9], "seed": 5},
  "prior": {"k_support": [0, 1, 2], "gamma_shape": 1.0, "gamma_scale": 0.3},
  "proposals": {"k_window": 3, "s_window": 3, "rate_sigma": 0.25},
  "method": "pmmh",
  "pmmh": {"iterations": 1000, "particles": 50, "steps": 150,
           "schedule_exponent": 2.0, "kernel_sweeps": 1, "g": 4, "seed": 1},
  "abc": {"pseudo_datasets": 20, "particles": 20, "steps": 10, "terminal_divisor": 3.0},
  "burn_in": 100,
  "bench": {"g": [1, 4], "runs": 10}
})"},
  };
  return table;
}

} // namespace

std::vector<std::string> preset_names()
{
  std::vector<std::string> names;
  for (const auto& [name, text] : presets())
    names.push_back(name);
  return names;
}

std::optional<std::string> preset_json(const std::string& name)
{
  const auto it = presets().find(name);
  if (it == presets().end())
    return std::nullopt;
  return it->second;
}

} // namespace phylocp
