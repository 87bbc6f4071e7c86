#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace jdpinn::cli {

/// Runs the command line tool. Returns 0 on success, 1 on usage or
/// validation errors, 2 on runtime errors.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace jdpinn::cli
