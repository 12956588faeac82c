#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bbb::cli {

/// Runs one subcommand. Returns 0 on success, 1 on a domain or runtime error,
/// 2 on a usage error (usage text goes to `err`).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Convenience form; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bbb::cli
