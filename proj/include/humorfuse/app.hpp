#pragma once

#include <iosfwd>

namespace humorfuse {

// Entry point of the `humorfuse` command. Returns the process exit code:
// 0 on success, 2 on any input or runtime error (reported on err as
// {"error": {"category", "message", "line"?}}).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace humorfuse
