#pragma once

namespace poleloc {

/// Entry point of the `poleloc` binary, exposed so tests can drive it
/// in-process. Exit codes: 0 success, 1 usage error, 2 data/format error.
int run_cli(int argc, const char* const* argv);

}  // namespace poleloc
