#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ergolab/config.hpp"

namespace ergo {

// Dispatches a validated config to its module, writes artifacts under the
// output directory as <command>-<system>-<confighash>.<ext>, and prints one
// summary line per result. On any failure, files written so far are removed.
// Returns the artifact paths.
std::vector<std::string> run(const RunConfig& cfg, std::ostream& log);

// Full front end: parse + override + validate + run. Returns the process
// exit code (0 ok, 1 invalid config, 2 computational error).
int run_cli(const std::string& config_path, const std::vector<std::string>& overrides,
            std::ostream& out, std::ostream& err);

}  // namespace ergo
