#pragma once

#include <filesystem>
#include <string>

namespace smd {

// %.17g; empty string for NaN
std::string format_double(double v);

// Writes to a sibling temporary and renames it over `path`, so readers never
// see a partial file. Setting SMD_INJECT_CRASH=before_rename aborts the
// process after the temporary is written (used by the crash tests).
void atomic_write(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

}  // namespace smd
