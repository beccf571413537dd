#pragma once

#include <ostream>

namespace contpol::cli {

/// Exit codes: 0 ok, 2 configuration or validation error, 3 I/O error, 4 numerical failure.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace contpol::cli
