#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace vinfer {

std::string sha256_hex(std::string_view bytes);

// Hash of the raw file bytes. Throws DataError if the file cannot be read.
std::string sha256_file_hex(const std::filesystem::path& path);

std::string base64_encode(std::string_view bytes);

// Whole-file read; throws DataError with the path on failure.
std::string read_file(const std::filesystem::path& path);

// Write via temp file + rename so readers never see partial content.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace vinfer
