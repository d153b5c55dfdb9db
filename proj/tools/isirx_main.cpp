// SPDX-License-Identifier: Apache-2.0
#include "isirx/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return isirx::cli_run(args);
}
