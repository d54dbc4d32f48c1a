#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace linfvar::cli {

/// Exit codes: 0 all verdicts pass, 1 a verdict failed, 2 input or parse error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(const std::string& data);

}  // namespace linfvar::cli
