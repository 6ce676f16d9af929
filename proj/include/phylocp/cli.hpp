#ifndef PHYLOCP_CLI_HPP
#define PHYLOCP_CLI_HPP

#include <string>
#include <vector>

#include <json.hpp>

#include "phylocp/diagnostics.hpp"

namespace phylocp::cli {

enum ExitCode : int {
  kSuccess = 0,
  kValidationError = 2,
  kInputError = 3,
  kEngineError = 4,
};

/// Entry point of the phylocp executable. `args` excludes the program name.
int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

nlohmann::json summary_to_json(const ChainSummary& summary);

} // namespace phylocp::cli

#endif
