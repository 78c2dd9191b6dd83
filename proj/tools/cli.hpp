#pragma once

#include <iosfwd>

namespace kflow {

/// `kflow {gaussian|gmm|morph|quiver|validate} --config <path> [--seed N] [--iters N] [--out DIR]`
/// Returns 0 on success, 1 on a runtime failure, 2 on a usage or config error.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace kflow
