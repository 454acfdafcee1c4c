#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace artisan {

enum class ArchiveKind { None, Zip, Tar, TarGz };

/// Detect by magic bytes, falling back to the file extension.
ArchiveKind detect_archive(const std::filesystem::path& file);

/// Normalized entry paths of regular files in the archive (directories are
/// omitted). Throws ArchiveError on malformed input.
std::vector<std::string> archive_entries(const std::filesystem::path& file);

/// Extract all regular files into dest. Entry paths are sanitized: absolute
/// paths and ".." components are rejected.
void archive_extract(const std::filesystem::path& file, const std::filesystem::path& dest);

} // namespace artisan
