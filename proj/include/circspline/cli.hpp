#pragma once

#include <iosfwd>

namespace circspline {

/// Command-line entry point. Returns 0 ok, 1 usage, 2 data validation, 3 numerical failure.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace circspline
