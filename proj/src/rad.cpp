// SPDX-License-Identifier: Apache-2.0
#include "isirx/rad.hpp"

namespace isirx::rad {

Tape*& active_tape() {
    thread_local Tape* current = nullptr;
    return current;
}

}  // namespace isirx::rad
