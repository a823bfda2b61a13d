#ifndef BOTSIFT_CLI_HPP
#define BOTSIFT_CLI_HPP

#include <iosfwd>
#include <span>
#include <string>

namespace botsift {

inline constexpr int exit_ok = 0;
inline constexpr int exit_usage = 1;
inline constexpr int exit_data = 2;

/// Runs one subcommand. `args` excludes the program name. Returns 0 on
/// success, 1 on a usage error, 2 on a data error; diagnostics go to `err`
/// as a single line.
int run_cli(std::span<const std::string> args, std::ostream &out, std::ostream &err);

} // namespace botsift

#endif
