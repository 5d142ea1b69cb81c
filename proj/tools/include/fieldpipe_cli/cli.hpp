#pragma once

#include <filesystem>
#include <iosfwd>

namespace fieldpipe::cli {

/// Exit codes of the fieldpipe command.
enum ExitCode : int { kOk = 0, kValidationFailure = 1, kRuntimeFailure = 2 };

/// Entry point shared by the executable and the tests. Reports go to `out`,
/// logging to standard error.
int main(int argc, char** argv, std::ostream& out);

/// Writes the text report of `fieldpipe info`. Throws on unreadable input.
void info_report(const std::filesystem::path& container, std::ostream& out);

/// Writes a geometry-only container built from a native container or an
/// Ensight case file.
void strip_mesh(const std::filesystem::path& input, const std::filesystem::path& output);

}  // namespace fieldpipe::cli
