#pragma once

#include <string>
#include <vector>

namespace dstg {

// Subcommand dispatch for {gen, train, eval, ground, ablate, report}.
// Returns 0 on success, 1 on validation/runtime failure, 2 on usage errors.
int cmd_dispatch(const std::vector<std::string>& args);

}  // namespace dstg
