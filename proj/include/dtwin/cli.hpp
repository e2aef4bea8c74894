#pragma once

#include <ostream>

namespace dtwin {

/// Entry point behind the `dtwin` executable: serve, ingest, simulate, replay, stats.
/// Data goes to `out`, diagnostics to `err`; returns the process exit status.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace dtwin
