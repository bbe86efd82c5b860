#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace leakscan {

/// Fatal, user-facing failure (bad input file, missing stage artifact, ...).
struct FatalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// 128-bit FNV-1a over `data`, rendered as 32 hex chars. Used to
/// content-address cache entries and stage artifacts; not cryptographic.
std::string content_digest(std::string_view data);

std::string read_file(const std::filesystem::path& path);
std::optional<std::string> read_file_if_exists(const std::filesystem::path& path);

/// Writes via a temp file + rename so readers never see partial content.
void write_file_atomic(const std::filesystem::path& path, std::string_view data);

/// write_file_atomic, skipped when the file already holds `data` byte for
/// byte. Returns true when the file changed.
bool write_file_if_changed(const std::filesystem::path& path, std::string_view data);

std::string trim(std::string_view s);
bool contains_ci(std::string_view haystack, std::string_view needle);

/// Runs fn(i) for i in [0, n) on up to `jobs` threads (0 = hardware
/// concurrency). Results must be written to per-index slots by the caller;
/// iteration order is unspecified but the index space is covered exactly once.
void parallel_for_index(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace leakscan
