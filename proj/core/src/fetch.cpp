#include "artisan/fetch.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "httplib.h"
#include "json.hpp"

#include "artisan/archive.hpp"
#include "artisan/errors.hpp"
#include "artisan/util.hpp"

namespace fs = std::filesystem;

namespace artisan {

namespace {

using nlohmann::json;

bool host_matches(const std::string& host, const std::string& suffix) {
    if (host == suffix) return true;
    return host.size() > suffix.size() &&
           host.compare(host.size() - suffix.size() - 1, suffix.size() + 1, "." + suffix) == 0;
}

std::vector<std::string> path_segments(const std::string& path) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    std::string clean = path;
    auto q = clean.find('?');
    if (q != std::string::npos) clean.resize(q);
    while (pos < clean.size()) {
        std::size_t next = clean.find('/', pos);
        std::string seg = clean.substr(pos, next == std::string::npos ? std::string::npos
                                                                      : next - pos);
        if (!seg.empty()) out.push_back(seg);
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    return out;
}

bool all_digits(const std::string& s) {
    return !s.empty() && std::all_of(s.begin(), s.end(),
                                     [](char c) { return c >= '0' && c <= '9'; });
}

bool looks_like_archive_name(const std::string& name) {
    std::string n = to_lower(name);
    return n.ends_with(".zip") || n.ends_with(".tar") || n.ends_with(".tar.gz") ||
           n.ends_with(".tgz");
}

std::string basename_of(const std::string& path) {
    auto slash = path.find_last_of('/');
    return slash == std::string::npos ? path : path.substr(slash + 1);
}

bool is_readme_name(const std::string& path) {
    return starts_with_ci(basename_of(path), "README");
}

std::size_t logical_depth(const std::string& logical) {
    // Components of the logical path, counting the archive itself as one.
    std::size_t depth = 0;
    for (char c : logical)
        if (c == '/') ++depth;
    return depth;
}

struct HttpResponse {
    int status = 0;
    std::string body;
    std::string content_type;
};

HttpResponse http_get(const std::string& url, std::chrono::milliseconds timeout) {
    Url parsed = parse_url(url);
    httplib::Client cli(parsed.origin());
    cli.set_follow_location(true);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    cli.set_connection_timeout(30);
    cli.set_read_timeout(static_cast<time_t>(std::max<long long>(secs.count(), 1)), 0);
    auto res = cli.Get(parsed.path.empty() ? "/" : parsed.path);
    if (!res)
        throw FetchError("request to " + url + " failed: " + httplib::to_string(res.error()),
                         /*retryable=*/true);
    HttpResponse out;
    out.status = res->status;
    out.body = res->body;
    if (res->has_header("Content-Type")) out.content_type = res->get_header_value("Content-Type");
    return out;
}

json get_json(const std::string& url, std::chrono::milliseconds timeout) {
    HttpResponse res = http_get(url, timeout);
    if (res.status == 404)
        throw FetchError("record not found at " + url, /*retryable=*/true);
    if (res.status != 200)
        throw FetchError("listing request to " + url + " returned status " +
                             std::to_string(res.status),
                         /*retryable=*/true);
    try {
        return json::parse(res.body);
    } catch (const json::exception& e) {
        throw FetchError("listing at " + url + " is not valid JSON: " + e.what(),
                         /*retryable=*/true);
    }
}

} // namespace

std::string provider_name(Provider p) {
    switch (p) {
    case Provider::Zenodo: return "zenodo";
    case Provider::Figshare: return "figshare";
    case Provider::GitHub: return "github";
    case Provider::LocalFile: return "file";
    }
    return "unknown";
}

std::string Listing::cache_key() const {
    std::string canon = source_url;
    canon += '\x1e';
    for (const auto& f : files) {
        canon += f.name;
        canon += '\x1f';
        canon += std::to_string(f.size);
        canon += '\x1f';
        canon += f.download_url;
        canon += '\x1e';
    }
    return sha256_hex(canon);
}

Fetcher::Fetcher(FetchConfig config) : config_(std::move(config)) {
    if (config_.cache_dir.empty())
        throw ConfigError("fetch cache directory is not configured");
    fs::create_directories(config_.cache_dir / "objects");
    fs::create_directories(config_.cache_dir / "listings");
    fs::create_directories(config_.cache_dir / "tmp");
}

Provider Fetcher::provider_for(const std::string& url) const {
    Url parsed = parse_url(url);
    if (parsed.scheme == "file") return Provider::LocalFile;
    if (parsed.scheme != "http" && parsed.scheme != "https")
        throw FetchError("unsupported URL scheme: " + parsed.scheme);
    for (const auto& [suffix, provider] : config_.host_providers)
        if (host_matches(parsed.host, suffix)) return provider;
    throw FetchError("unsupported provider host: " + parsed.host);
}

Listing Fetcher::resolve_listing(const std::string& url, const fs::path& base_dir) {
    Provider provider = provider_for(url);
    switch (provider) {
    case Provider::Zenodo: return list_zenodo(url);
    case Provider::Figshare: return list_figshare(url);
    case Provider::GitHub: return list_github(url);
    case Provider::LocalFile: return list_local(url, base_dir);
    }
    throw FetchError("unreachable provider");
}

Listing Fetcher::list_zenodo(const std::string& url) {
    Url parsed = parse_url(url);
    auto segs = path_segments(parsed.path);
    std::string record_id;
    for (std::size_t i = 0; i + 1 < segs.size(); ++i) {
        if ((segs[i] == "records" || segs[i] == "record") && all_digits(segs[i + 1])) {
            record_id = segs[i + 1];
            break;
        }
    }
    if (record_id.empty())
        throw FetchError("cannot find a record id in Zenodo URL: " + url);

    {
        std::lock_guard lock(mutex_);
        ++stats_.listing_requests;
    }
    std::string api_url = parsed.origin() + "/api/records/" + record_id;
    json rec = get_json(api_url, config_.http_timeout);

    Listing out;
    out.source_url = url;
    out.provider = Provider::Zenodo;
    if (!rec.contains("files") || !rec["files"].is_array())
        throw FetchError("Zenodo record " + record_id + " has no file listing",
                         /*retryable=*/true);
    for (const auto& f : rec["files"]) {
        RemoteFile rf;
        rf.name = f.value("key", f.value("filename", std::string()));
        rf.size = f.value("size", std::uint64_t{0});
        if (f.contains("links")) {
            const auto& links = f["links"];
            if (links.contains("content"))
                rf.download_url = links["content"].get<std::string>();
            else if (links.contains("download"))
                rf.download_url = links["download"].get<std::string>();
            else if (links.contains("self"))
                rf.download_url = links["self"].get<std::string>();
        }
        if (rf.download_url.empty())
            rf.download_url =
                parsed.origin() + "/api/records/" + record_id + "/files/" + rf.name + "/content";
        if (rf.name.empty())
            throw FetchError("Zenodo record " + record_id + " lists a file without a name");
        out.files.push_back(std::move(rf));
    }
    return out;
}

Listing Fetcher::list_figshare(const std::string& url) {
    Url parsed = parse_url(url);
    auto segs = path_segments(parsed.path);
    std::string article_id;
    for (std::size_t i = 0; i < segs.size(); ++i) {
        if (all_digits(segs[i]) && !(i > 0 && segs[i - 1] == "versions")) article_id = segs[i];
    }
    if (article_id.empty())
        throw FetchError("cannot find an article id in Figshare URL: " + url);

    {
        std::lock_guard lock(mutex_);
        ++stats_.listing_requests;
    }
    json rec = get_json(config_.figshare_api_base + "/v2/articles/" + article_id,
                        config_.http_timeout);

    Listing out;
    out.source_url = url;
    out.provider = Provider::Figshare;
    if (!rec.contains("files") || !rec["files"].is_array())
        throw FetchError("Figshare article " + article_id + " has no file listing",
                         /*retryable=*/true);
    for (const auto& f : rec["files"]) {
        RemoteFile rf;
        rf.name = f.value("name", std::string());
        rf.size = f.value("size", std::uint64_t{0});
        rf.download_url = f.value("download_url", std::string());
        if (rf.name.empty() || rf.download_url.empty())
            throw FetchError("Figshare article " + article_id + " lists an incomplete file");
        out.files.push_back(std::move(rf));
    }
    return out;
}

Listing Fetcher::list_github(const std::string& url) {
    // Default-branch snapshot: a one-file listing by construction, no API
    // round-trip needed.
    Url parsed = parse_url(url);
    auto segs = path_segments(parsed.path);
    if (segs.size() < 2)
        throw FetchError("GitHub URL must name owner and repository: " + url);
    std::string owner = segs[0];
    std::string repo = segs[1];
    if (repo.ends_with(".git")) repo.resize(repo.size() - 4);

    Listing out;
    out.source_url = url;
    out.provider = Provider::GitHub;
    RemoteFile rf;
    rf.name = repo + "-HEAD.tar.gz";
    rf.size = 0; // unknown until downloaded
    rf.download_url = parsed.origin() + "/" + owner + "/" + repo + "/archive/HEAD.tar.gz";
    out.files.push_back(std::move(rf));
    return out;
}

Listing Fetcher::list_local(const std::string& url, const fs::path& base_dir) {
    Url parsed = parse_url(url);
    fs::path target(parsed.path);
    if (target.is_relative() && !base_dir.empty()) target = base_dir / target;
    if (!fs::exists(target))
        throw FetchError("local artifact path does not exist: " + target.string());

    Listing out;
    out.source_url = url;
    out.provider = Provider::LocalFile;
    if (fs::is_directory(target)) {
        for (const auto& rel : list_files_recursive(target)) {
            RemoteFile rf;
            rf.name = rel;
            rf.size = fs::file_size(target / rel);
            rf.download_url = (target / rel).string();
            out.files.push_back(std::move(rf));
        }
    } else {
        RemoteFile rf;
        rf.name = target.filename().string();
        rf.size = fs::file_size(target);
        rf.download_url = target.string();
        out.files.push_back(std::move(rf));
    }
    return out;
}

fs::path Fetcher::object_path(const std::string& digest) const {
    return config_.cache_dir / "objects" / digest;
}

fs::path Fetcher::extract_dir(const std::string& digest) const {
    return config_.cache_dir / "extract" / digest;
}

Fetcher::Download Fetcher::download_to_cache(const RemoteFile& file) {
    // Coalesce concurrent downloads of the same URL.
    {
        std::unique_lock lock(mutex_);
        inflight_cv_.wait(lock, [&] { return inflight_.count(file.download_url) == 0; });
        inflight_.insert(file.download_url);
    }
    struct InflightGuard {
        Fetcher& f;
        const std::string& url;
        ~InflightGuard() {
            std::lock_guard lock(f.mutex_);
            f.inflight_.erase(url);
            f.inflight_cv_.notify_all();
        }
    } guard{*this, file.download_url};

    // A thread that waited out an in-flight download finds it memoized here.
    {
        std::lock_guard lock(mutex_);
        auto it = url_memo_.find(file.download_url);
        if (it != url_memo_.end() && fs::exists(object_path(it->second.digest)))
            return it->second;
    }

    std::string body;
    if (file.download_url.find("://") == std::string::npos ||
        file.download_url.rfind("file://", 0) == 0) {
        std::string path = file.download_url;
        if (path.rfind("file://", 0) == 0) path = path.substr(7);
        body = read_file(path);
    } else {
        HttpResponse res = http_get(file.download_url, config_.http_timeout);
        if (res.status != 200)
            throw FetchError("download of " + file.name + " returned status " +
                                 std::to_string(res.status),
                             /*retryable=*/true);
        // An HTML body where an archive was expected means the provider
        // served an error page (the classic "not a zipfile" trap).
        if (looks_like_archive_name(file.name) &&
            to_lower(res.content_type).rfind("text/html", 0) == 0)
            throw FetchError("provider returned HTML instead of archive content for " +
                             file.name);
        body = std::move(res.body);
    }

    std::string digest = sha256_hex(body);
    fs::path object = object_path(digest);
    if (!fs::exists(object)) write_file_atomic(object, body);
    Download done{digest, body.size()};
    {
        std::lock_guard lock(mutex_);
        ++stats_.file_requests;
        stats_.file_bytes += body.size();
        url_memo_[file.download_url] = done;
    }
    return done;
}

ArtifactBundle Fetcher::fetch_files(const Listing& listing) {
    if (listing.files.empty()) throw FetchError("listing is empty");

    ArtifactBundle bundle;
    bundle.source_url = listing.source_url;
    bundle.cache_key = listing.cache_key();

    // Known digests from a previous fetch of the same listing.
    std::map<std::string, std::string> recorded;
    fs::path index_file = config_.cache_dir / "listings" / (bundle.cache_key + ".json");
    if (fs::exists(index_file)) {
        try {
            json idx = json::parse(read_file(index_file));
            for (const auto& f : idx.at("files"))
                recorded[f.at("name").get<std::string>()] = f.at("digest").get<std::string>();
        } catch (const std::exception&) {
            recorded.clear(); // corrupt index: refetch everything
        }
    }

    for (const auto& file : listing.files) {
        try {
            std::string digest;
            std::uint64_t size = 0;
            auto it = recorded.find(file.name);
            bool need_fetch = true;
            if (it != recorded.end() && fs::exists(object_path(it->second))) {
                // Verify the cached object; a corrupt entry is invalidated and
                // refetched once.
                std::string actual = sha256_file(object_path(it->second));
                if (actual == it->second) {
                    digest = it->second;
                    size = fs::file_size(object_path(digest));
                    need_fetch = false;
                } else {
                    fs::remove(object_path(it->second));
                }
            }
            if (need_fetch) {
                Download d = download_to_cache(file);
                digest = d.digest;
                size = d.size;
            }
            bundle.files.push_back({file.name, size, object_path(digest), digest});
        } catch (const std::exception& e) {
            bundle.failures.push_back({file.name, e.what()});
            bundle.complete = false;
        }
    }

    if (!bundle.files.empty()) {
        json idx;
        idx["url"] = listing.source_url;
        json files = json::array();
        for (const auto& f : bundle.files)
            files.push_back({{"name", f.remote_name},
                             {"size", f.byte_size},
                             {"digest", f.content_digest}});
        idx["files"] = std::move(files);
        write_file_atomic(index_file, idx.dump(2));
    }
    return bundle;
}

std::optional<ReadmeHit> Fetcher::locate_readme(const ArtifactBundle& bundle) {
    struct Candidate {
        std::string logical;
        std::size_t depth;
        const BundleFile* archive = nullptr; // set when inside an archive
        std::string entry;
    };
    std::vector<Candidate> candidates;

    for (const auto& file : bundle.files) {
        if (is_readme_name(file.remote_name))
            candidates.push_back({file.remote_name, logical_depth(file.remote_name)});
        if (looks_like_archive_name(file.remote_name) ||
            detect_archive(file.local_path) != ArchiveKind::None) {
            std::vector<std::string> entries;
            try {
                entries = archive_entries(file.local_path);
            } catch (const ArchiveError&) {
                continue; // unreadable archive: not fatal for README search
            }
            for (const auto& entry : entries) {
                if (!is_readme_name(entry)) continue;
                std::string logical = file.remote_name + "!/" + entry;
                candidates.push_back({logical,
                                      logical_depth(file.remote_name) + 1 + logical_depth(entry),
                                      &file, entry});
            }
        }
    }
    if (candidates.empty()) return std::nullopt;

    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.depth != b.depth) return a.depth < b.depth;
        return a.logical < b.logical;
    });
    const Candidate& best = candidates.front();

    if (!best.archive) {
        for (const auto& file : bundle.files)
            if (file.remote_name == best.logical)
                return ReadmeHit{file.local_path, best.logical};
        return std::nullopt;
    }
    // Lazy extraction: only the archive holding the winning hit is opened.
    fs::path dest = extract_dir(best.archive->content_digest);
    if (!fs::exists(dest / ".done")) {
        archive_extract(best.archive->local_path, dest);
        write_file(dest / ".done", "");
    }
    return ReadmeHit{dest / best.entry, best.logical};
}

ArtifactBundle Fetcher::fetch(const std::string& url, const fs::path& base_dir) {
    Listing listing = resolve_listing(url, base_dir);
    ArtifactBundle bundle = fetch_files(listing);
    if (bundle.complete) {
        if (auto hit = locate_readme(bundle)) {
            bundle.readme_path = hit->local_path;
            bundle.readme_name = hit->logical_name;
        }
    }
    return bundle;
}

void Fetcher::materialize(const ArtifactBundle& bundle, const fs::path& dest) {
    fs::create_directories(dest);
    for (const auto& file : bundle.files) {
        fs::path target = dest / file.remote_name;
        if (target.has_parent_path()) fs::create_directories(target.parent_path());
        fs::copy_file(file.local_path, target, fs::copy_options::overwrite_existing);
    }
}

TransferStats Fetcher::stats() const {
    std::lock_guard lock(mutex_);
    return stats_;
}

} // namespace artisan
