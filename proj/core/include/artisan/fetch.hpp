#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace artisan {

enum class Provider { Zenodo, Figshare, GitHub, LocalFile };

std::string provider_name(Provider p);

struct RemoteFile {
    std::string name;          // remote name, may contain '/'
    std::uint64_t size = 0;    // 0 = unknown
    std::string download_url;  // direct download URL, or local path for file:
};

struct Listing {
    std::string source_url;
    Provider provider = Provider::Zenodo;
    std::vector<RemoteFile> files;

    /// Digest of the source listing; keys the cache index.
    std::string cache_key() const;
};

struct BundleFile {
    std::string remote_name;
    std::uint64_t byte_size = 0;
    std::filesystem::path local_path; // content-addressed cache object
    std::string content_digest;
};

struct FileFailure {
    std::string name;
    std::string reason;
};

struct ArtifactBundle {
    std::string source_url;
    std::string cache_key;
    std::vector<BundleFile> files;
    std::vector<FileFailure> failures;
    bool complete = true;
    std::optional<std::filesystem::path> readme_path; // local, possibly extracted
    std::string readme_name; // logical, e.g. "artifact.zip!/doc/README.txt"
};

struct ReadmeHit {
    std::filesystem::path local_path;
    std::string logical_name;
};

struct FetchConfig {
    std::filesystem::path cache_dir;
    /// Host-suffix to provider mapping; extend it to point a fixture server
    /// at a provider implementation.
    std::vector<std::pair<std::string, Provider>> host_providers = {
        {"zenodo.org", Provider::Zenodo},
        {"figshare.com", Provider::Figshare},
        {"github.com", Provider::GitHub},
    };
    /// Figshare's listing API lives on a different host than its record
    /// pages; override for fixtures.
    std::string figshare_api_base = "https://api.figshare.com";
    std::chrono::milliseconds http_timeout{60'000};
};

struct TransferStats {
    std::uint64_t listing_requests = 0;
    std::uint64_t file_requests = 0;
    std::uint64_t file_bytes = 0; // bytes actually transferred (cache misses)
};

/// Resolves artifact URLs against Zenodo / Figshare / GitHub (plus file: for
/// local fixtures), downloads files into a content-addressed cache, and
/// locates the README, including inside ZIP/TAR archives. Safe to share
/// across concurrent episodes: cache writes are atomic and concurrent
/// fetches of the same URL coalesce to one transfer.
class Fetcher {
public:
    explicit Fetcher(FetchConfig config);

    /// Query the provider for the artifact's downloadable files. Relative
    /// file: URLs resolve against base_dir.
    Listing resolve_listing(const std::string& url,
                            const std::filesystem::path& base_dir = {});

    /// Ensure every listed file is present in the cache, verifying digests of
    /// cached entries and refetching corrupt ones once. Per-file failures
    /// mark the bundle incomplete instead of throwing.
    ArtifactBundle fetch_files(const Listing& listing);

    /// Search bundle files and archive entries for a basename starting with
    /// "README" (case-insensitive). Shallowest logical path wins, ties break
    /// lexicographically; the winning archive is extracted lazily.
    std::optional<ReadmeHit> locate_readme(const ArtifactBundle& bundle);

    /// resolve_listing + fetch_files + locate_readme.
    ArtifactBundle fetch(const std::string& url,
                         const std::filesystem::path& base_dir = {});

    /// Copy bundle files into dest under their remote names.
    static void materialize(const ArtifactBundle& bundle,
                            const std::filesystem::path& dest);

    TransferStats stats() const;
    const std::filesystem::path& cache_dir() const { return config_.cache_dir; }

private:
    struct Download {
        std::string digest;
        std::uint64_t size = 0;
    };

    Provider provider_for(const std::string& url) const;
    Listing list_zenodo(const std::string& url);
    Listing list_figshare(const std::string& url);
    Listing list_github(const std::string& url);
    Listing list_local(const std::string& url, const std::filesystem::path& base_dir);
    Download download_to_cache(const RemoteFile& file);
    std::filesystem::path object_path(const std::string& digest) const;
    std::filesystem::path extract_dir(const std::string& digest) const;

    FetchConfig config_;
    mutable std::mutex mutex_;
    std::condition_variable inflight_cv_;
    std::set<std::string> inflight_;
    /// URL -> completed download, so concurrent and repeated fetches within
    /// one process coalesce to a single transfer.
    std::map<std::string, Download> url_memo_;
    TransferStats stats_;
};

} // namespace artisan
