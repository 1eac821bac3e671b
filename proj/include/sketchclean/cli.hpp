#pragma once

#include <string>
#include <vector>

namespace sketchclean {

/// Runs one CLI invocation. Returns 0 on success, 2 on argument errors, 1 on runtime errors.
int cli_dispatch(int argc, const char* const* argv);
int cli_dispatch(const std::vector<std::string>& args);

/// Applies SKETCHCLEAN_LOG (error | info | debug) to the default logger.
void configure_logging_from_env();

}  // namespace sketchclean
