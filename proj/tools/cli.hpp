#pragma once

#include <ostream>

namespace sosc {

// Exit status: 0 ok, 1 check failed, 2 usage, IO or parse error.
int cliMain(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sosc
