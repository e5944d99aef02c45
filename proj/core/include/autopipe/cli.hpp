#pragma once

#include <string>
#include <vector>

namespace autopipe {

/// Full command-line front end. Exit codes: 0 success, 1 configuration
/// error (nothing written), 2 runtime failure.
int cli_main(const std::vector<std::string>& args);
int cli_main(int argc, const char* const* argv);

} // namespace autopipe
