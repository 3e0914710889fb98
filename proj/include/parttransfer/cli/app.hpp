#pragma once

#include <iosfwd>

namespace pt::cli {

/// Parses arguments, resolves the run config (flags over --config file over
/// defaults), writes it to <output-dir>/effective_config.json and runs the
/// chosen command. Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pt::cli
