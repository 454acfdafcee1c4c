#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace artisan {

// --- hashing ---

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& file);

/// Order-independent digest of a directory tree: relative paths plus file
/// contents. Two trees with identical layout and bytes hash identically.
std::string tree_digest(const std::filesystem::path& root);

// --- files ---

std::string read_file(const std::filesystem::path& file);
void write_file(const std::filesystem::path& file, std::string_view content);
/// Write-temp-then-rename; safe against concurrent writers of the same key.
void write_file_atomic(const std::filesystem::path& file, std::string_view content);
void copy_tree(const std::filesystem::path& from, const std::filesystem::path& to);
/// Sorted relative paths of all regular files under root.
std::vector<std::string> list_files_recursive(const std::filesystem::path& root);

/// RAII temp directory under the system temp dir (or a given parent).
class TempDir {
public:
    explicit TempDir(const std::string& prefix = "artisan-",
                     const std::filesystem::path& parent = {});
    TempDir(TempDir&&) noexcept;
    TempDir& operator=(TempDir&&) noexcept;
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    ~TempDir();

    const std::filesystem::path& path() const { return path_; }
    void keep() { keep_ = true; }
    void remove_now();

private:
    std::filesystem::path path_;
    bool keep_ = false;
};

// --- strings ---

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
bool starts_with_ci(std::string_view s, std::string_view prefix);
std::vector<std::string> split_lines(std::string_view text);
std::string replace_all(std::string s, std::string_view from, std::string_view to);
std::string shell_quote(std::string_view s);

/// Keep the head and tail of an over-long text, eliding the middle with a
/// byte-count marker. `head_fraction` of `cap` goes to the head.
std::string truncate_middle(std::string_view text, std::size_t cap,
                            double head_fraction = 0.6);

/// Online head/tail capture with bounded memory, for process output streams.
class StreamCapture {
public:
    StreamCapture(std::size_t cap, double head_fraction = 0.6);
    void feed(const char* data, std::size_t n);
    std::uint64_t total_bytes() const { return total_; }
    bool truncated() const;
    std::string str() const;

private:
    std::size_t head_cap_;
    std::size_t tail_cap_;
    std::string head_;
    std::string tail_;
    std::uint64_t total_ = 0;
};

// --- URLs and durations ---

struct Url {
    std::string scheme;
    std::string host;
    int port = -1; // -1: scheme default
    std::string path; // includes query, starts with '/' when non-empty

    /// scheme://host[:port]
    std::string origin() const;
};

Url parse_url(std::string_view url);

/// Accepts "8h", "30m", "45s", "1500ms", or a bare number of seconds.
std::chrono::milliseconds parse_duration(std::string_view text);
std::string format_duration(std::chrono::milliseconds ms);

/// Short random hex token for session / run ids.
std::string random_token(std::size_t bytes = 6);

} // namespace artisan
