#ifndef PHYLOCP_PRESETS_HPP
#define PHYLOCP_PRESETS_HPP

#include <optional>
#include <string>
#include <vector>

namespace phylocp {

/// Names of the bundled run configurations.
std::vector<std::string> preset_names();

/// JSON text of a bundled run configuration, or nullopt for an unknown name.
std::optional<std::string> preset_json(const std::string& name);

} // namespace phylocp

#endif
