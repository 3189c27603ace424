#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace glucosindy {

/// Writes `text` to `<path>.tmp` and renames it over `path`, so readers never
/// see a partial file. Throws IoError on failure.
void write_file_atomic(const std::filesystem::path& path, std::string_view text);

/// Whole-file read. Throws IoError when the file cannot be opened.
std::string read_file(const std::filesystem::path& path);

}  // namespace glucosindy
