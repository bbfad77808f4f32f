#ifndef MTP_CLI_HPP
#define MTP_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "mtp/core.hpp"

namespace mtp::cli {

// Exit codes: 0 success, 2 usage/validation error, 3 I/O failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitIo = 3;

// Parses a `id,pvalue` CSV file. Throws std::invalid_argument with a
// line-numbered message on malformed content, std::runtime_error when the
// file cannot be opened.
PValueVector read_input_table(const std::string& path);

// Runs the command line given argv-style arguments (without the program
// name), writing results to out and diagnostics to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mtp::cli

#endif
