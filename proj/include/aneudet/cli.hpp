#pragma once

#include <iosfwd>

namespace aneudet {

// Exit codes: 0 ok, 1 internal error, 2 configuration, 3 data, 4 consistency.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace aneudet
