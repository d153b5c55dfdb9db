// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace isirx {

/// Runs the command-line interface. argv excludes the program name.
/// Returns the process exit code; errors print a single line to stderr.
int cli_run(const std::vector<std::string>& argv);

}  // namespace isirx
