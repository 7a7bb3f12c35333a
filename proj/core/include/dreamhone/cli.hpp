#pragma once

#include <iosfwd>

namespace dreamhone {

/// Entry point of the `dreamhone` command line tool.
/// Returns 0 on success, 2 on a usage error and 1 on a runtime error.
int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int cli_dispatch(int argc, const char* const* argv);

}  // namespace dreamhone
