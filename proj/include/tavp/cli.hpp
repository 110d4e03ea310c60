#pragma once

#include <string>
#include <vector>

namespace tavp {

/// Command-line entry point (train / eval / predict / datagen).
/// Exit codes: 0 success, 2 configuration error, 3 numerical abort,
/// 1 any other failure.
int run_cli(const std::vector<std::string>& args);

} // namespace tavp
