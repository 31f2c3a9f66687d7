#ifndef VRA_CLI_HPP
#define VRA_CLI_HPP

#include <iosfwd>

namespace vra {

/// Exit codes: 0 success, 1 library error, 2 usage error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace vra

#endif  // VRA_CLI_HPP
