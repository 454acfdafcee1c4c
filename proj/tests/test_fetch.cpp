#include <fstream>
#include <thread>

#include "doctest.h"

#include "artisan/errors.hpp"
#include "artisan/fetch.hpp"
#include "artisan/util.hpp"
#include "test_support.hpp"

using namespace artisan;
namespace at = artisan::testing;
namespace fs = std::filesystem;

namespace {

/// A fixture server that mimics the Zenodo records endpoint with two files.
struct ZenodoFixture {
    at::FixtureServer server;
    std::string data_a = "alpha-bytes-alpha-bytes";
    std::string data_b = "beta\nbeta\n";

    void start() {
        server.server().Get("/api/records/55", [this](const httplib::Request&,
                                                      httplib::Response& res) {
            std::string base = server.base_url();
            res.set_content(
                "{\"files\":["
                "{\"key\":\"a.txt\",\"size\":" + std::to_string(data_a.size()) +
                    ",\"links\":{\"download\":\"" + base + "/files/a.txt\"}},"
                "{\"key\":\"b.txt\",\"size\":" + std::to_string(data_b.size()) +
                    ",\"links\":{\"download\":\"" + base + "/files/b.txt\"}}"
                "]}",
                "application/json");
        });
        server.server().Get("/files/a.txt", [this](const httplib::Request&, httplib::Response& res) {
            res.set_content(data_a, "text/plain");
        });
        server.server().Get("/files/b.txt", [this](const httplib::Request&, httplib::Response& res) {
            res.set_content(data_b, "text/plain");
        });
        server.start();
    }

    FetchConfig config(const fs::path& cache) {
        FetchConfig fc;
        fc.cache_dir = cache;
        fc.host_providers.push_back({"127.0.0.1", Provider::Zenodo});
        return fc;
    }
};

} // namespace

TEST_SUITE_BEGIN("fetch");

TEST_CASE("unsupported provider host is a named error") {
    TempDir cache("artisan-fetch-");
    Fetcher fetcher(FetchConfig{.cache_dir = cache.path()});
    CHECK_THROWS_WITH_AS(fetcher.resolve_listing("https://example.com/artifact"),
                         doctest::Contains("example.com"), FetchError);
}

TEST_CASE("zenodo listing equals the fixture manifest") {
    ZenodoFixture fx;
    fx.start();
    TempDir cache("artisan-fetch-");
    Fetcher fetcher(fx.config(cache.path()));

    Listing listing = fetcher.resolve_listing(fx.server.base_url() + "/records/55");
    CHECK(listing.provider == Provider::Zenodo);
    REQUIRE(listing.files.size() == 2);
    CHECK(listing.files[0].name == "a.txt");
    CHECK(listing.files[0].size == fx.data_a.size());
    CHECK(listing.files[1].name == "b.txt");
}

TEST_CASE("missing record is a retryable fetch error") {
    ZenodoFixture fx;
    fx.start();
    TempDir cache("artisan-fetch-");
    Fetcher fetcher(fx.config(cache.path()));
    try {
        fetcher.resolve_listing(fx.server.base_url() + "/records/404404");
        FAIL("expected FetchError");
    } catch (const FetchError& e) {
        CHECK(e.retryable);
    }
}

TEST_CASE("second fetch of the same listing transfers zero bytes") {
    ZenodoFixture fx;
    fx.start();
    TempDir cache("artisan-fetch-");
    Fetcher fetcher(fx.config(cache.path()));

    Listing listing = fetcher.resolve_listing(fx.server.base_url() + "/records/55");
    ArtifactBundle first = fetcher.fetch_files(listing);
    CHECK(first.complete);
    REQUIRE(first.files.size() == 2);
    CHECK(fetcher.stats().file_bytes == fx.data_a.size() + fx.data_b.size());

    auto before = fetcher.stats().file_bytes;
    ArtifactBundle second = fetcher.fetch_files(listing);
    CHECK(second.complete);
    CHECK(fetcher.stats().file_bytes == before); // zero new transfers

    // Determinism: identical bundles.
    REQUIRE(second.files.size() == first.files.size());
    for (std::size_t i = 0; i < first.files.size(); ++i) {
        CHECK(first.files[i].content_digest == second.files[i].content_digest);
        CHECK(first.files[i].local_path == second.files[i].local_path);
    }
}

TEST_CASE("cache soundness: digests verified, corruption repaired by refetch") {
    ZenodoFixture fx;
    fx.start();
    TempDir cache("artisan-fetch-");
    Fetcher fetcher(fx.config(cache.path()));

    Listing listing = fetcher.resolve_listing(fx.server.base_url() + "/records/55");
    ArtifactBundle bundle = fetcher.fetch_files(listing);
    REQUIRE(bundle.complete);

    // Flip a byte inside the cached object.
    fs::path object = bundle.files[0].local_path;
    std::string bytes = read_file(object);
    bytes[0] = bytes[0] == 'x' ? 'y' : 'x';
    write_file(object, bytes);

    ArtifactBundle repaired = fetcher.fetch_files(listing);
    REQUIRE(repaired.complete);
    CHECK(repaired.files[0].content_digest == sha256_hex(fx.data_a));
    CHECK(read_file(repaired.files[0].local_path) == fx.data_a);
    for (const auto& f : repaired.files)
        CHECK(sha256_file(f.local_path) == f.content_digest);
}

TEST_CASE("single-file listing lands in the cache with its digest") {
    TempDir dir("artisan-fetch-");
    write_file(dir.path() / "src" / "only.dat", "payload");
    TempDir cache("artisan-fetch-cache-");
    Fetcher fetcher(FetchConfig{.cache_dir = cache.path()});

    ArtifactBundle bundle =
        fetcher.fetch("file://" + (dir.path() / "src" / "only.dat").string());
    REQUIRE(bundle.files.size() == 1);
    CHECK(bundle.files[0].remote_name == "only.dat");
    CHECK(bundle.files[0].content_digest == sha256_hex("payload"));
    CHECK(bundle.complete);
}

TEST_CASE("github listing is a single archive descriptor by construction") {
    TempDir cache("artisan-fetch-");
    Fetcher fetcher(FetchConfig{.cache_dir = cache.path()});
    Listing listing = fetcher.resolve_listing("https://github.com/alice/proj");
    CHECK(listing.provider == Provider::GitHub);
    REQUIRE(listing.files.size() == 1);
    CHECK(listing.files[0].name == "proj-HEAD.tar.gz");
    CHECK(listing.files[0].download_url ==
          "https://github.com/alice/proj/archive/HEAD.tar.gz");
}

TEST_CASE("figshare listing via the api base override") {
    at::FixtureServer server;
    server.server().Get("/v2/articles/998877",
                        [](const httplib::Request&, httplib::Response& res) {
                            res.set_content("{\"files\":[{\"name\":\"results.csv\",\"size\":9,"
                                            "\"download_url\":\"http://unused.invalid/x\"}]}",
                                            "application/json");
                        });
    server.start();

    TempDir cache("artisan-fetch-");
    FetchConfig fc;
    fc.cache_dir = cache.path();
    fc.figshare_api_base = server.base_url();
    Fetcher fetcher(fc);
    Listing listing =
        fetcher.resolve_listing("https://figshare.com/articles/software/demo/998877");
    REQUIRE(listing.files.size() == 1);
    CHECK(listing.files[0].name == "results.csv");

    // A trailing version segment does not get mistaken for the article id.
    Listing versioned = fetcher.resolve_listing(
        "https://figshare.com/articles/software/demo/998877/versions/2");
    REQUIRE(versioned.files.size() == 1);
    CHECK(versioned.files[0].name == "results.csv");
}

TEST_CASE("github snapshot downloads and surfaces the archived readme") {
    TempDir work("artisan-fetch-");
    at::write_tar(work.path() / "snapshot.tar",
                  {{"proj-HEAD/README.md", "github readme"},
                   {"proj-HEAD/src/main.py", "print(1)\n"}});
    std::string targz = at::gzip_bytes(read_file(work.path() / "snapshot.tar"));

    at::FixtureServer server;
    server.server().Get("/alice/proj/archive/HEAD.tar.gz",
                        [&](const httplib::Request&, httplib::Response& res) {
                            res.set_content(targz, "application/gzip");
                        });
    server.start();

    TempDir cache("artisan-fetch-cache-");
    FetchConfig fc;
    fc.cache_dir = cache.path();
    fc.host_providers.push_back({"127.0.0.1", Provider::GitHub});
    Fetcher fetcher(fc);

    ArtifactBundle bundle = fetcher.fetch(server.base_url() + "/alice/proj");
    REQUIRE(bundle.complete);
    REQUIRE(bundle.files.size() == 1);
    CHECK(bundle.files[0].remote_name == "proj-HEAD.tar.gz");
    CHECK(bundle.files[0].byte_size == targz.size());
    REQUIRE(bundle.readme_path);
    CHECK(bundle.readme_name == "proj-HEAD.tar.gz!/proj-HEAD/README.md");
    CHECK(read_file(*bundle.readme_path) == "github readme");
}

TEST_CASE("html response where an archive was expected is a provider error") {
    at::FixtureServer server;
    server.server().Get("/api/records/9", [&](const httplib::Request&, httplib::Response& res) {
        res.set_content("{\"files\":[{\"key\":\"artifact.zip\",\"size\":10,\"links\":{"
                        "\"download\":\"" +
                            server.base_url() + "/broken.zip\"}}]}",
                        "application/json");
    });
    server.server().Get("/broken.zip", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("<html>Page not found</html>", "text/html");
    });
    server.start();

    TempDir cache("artisan-fetch-");
    FetchConfig fc;
    fc.cache_dir = cache.path();
    fc.host_providers.push_back({"127.0.0.1", Provider::Zenodo});
    Fetcher fetcher(fc);
    Listing listing = fetcher.resolve_listing(server.base_url() + "/records/9");
    ArtifactBundle bundle = fetcher.fetch_files(listing);
    CHECK_FALSE(bundle.complete);
    REQUIRE(bundle.failures.size() == 1);
    CHECK(bundle.failures[0].reason.find("HTML") != std::string::npos);
}

TEST_CASE("readme: direct hit, archived hit, and depth ordering") {
    TempDir dir("artisan-fetch-");
    TempDir cache("artisan-fetch-cache-");
    Fetcher fetcher(FetchConfig{.cache_dir = cache.path()});

    SUBCASE("top-level readme wins over a deeper one") {
        write_file(dir.path() / "art" / "README.md", "top");
        write_file(dir.path() / "art" / "src" / "readme.rst", "deep");
        ArtifactBundle bundle = fetcher.fetch("file://" + (dir.path() / "art").string());
        REQUIRE(bundle.readme_path);
        CHECK(bundle.readme_name == "README.md");
        CHECK(read_file(*bundle.readme_path) == "top");
    }

    SUBCASE("readme inside a zip is found and extracted") {
        at::write_zip(dir.path() / "art2" / "artifact.zip",
                      {{"doc/README.txt", "zipped readme"}, {"doc/data.bin", "xx"}});
        ArtifactBundle bundle = fetcher.fetch("file://" + (dir.path() / "art2").string());
        REQUIRE(bundle.readme_path);
        CHECK(bundle.readme_name == "artifact.zip!/doc/README.txt");
        CHECK(read_file(*bundle.readme_path) == "zipped readme");
    }

    SUBCASE("case-insensitive prefix, absence is not an error") {
        write_file(dir.path() / "art3" / "notes.txt", "no readme here");
        ArtifactBundle bundle = fetcher.fetch("file://" + (dir.path() / "art3").string());
        CHECK_FALSE(bundle.readme_path);
        CHECK(bundle.readme_name.empty());
    }
}

TEST_CASE("lexicographic tie-break at equal depth") {
    TempDir dir("artisan-fetch-");
    TempDir cache("artisan-fetch-cache-");
    write_file(dir.path() / "art" / "Readme.rst", "b");
    write_file(dir.path() / "art" / "README.md", "a");
    Fetcher fetcher(FetchConfig{.cache_dir = cache.path()});
    ArtifactBundle bundle = fetcher.fetch("file://" + (dir.path() / "art").string());
    REQUIRE(bundle.readme_path);
    CHECK(bundle.readme_name == "README.md"); // "README.md" < "Readme.rst"
}

TEST_CASE("concurrent fetches of one listing coalesce to one transfer") {
    ZenodoFixture fx;
    fx.start();
    TempDir cache("artisan-fetch-");
    Fetcher fetcher(fx.config(cache.path()));
    Listing listing = fetcher.resolve_listing(fx.server.base_url() + "/records/55");

    std::vector<std::thread> workers;
    std::vector<ArtifactBundle> bundles(4);
    for (int i = 0; i < 4; ++i)
        workers.emplace_back([&, i] { bundles[i] = fetcher.fetch_files(listing); });
    for (auto& w : workers) w.join();

    for (const auto& b : bundles) {
        CHECK(b.complete);
        CHECK(b.files.size() == 2);
    }
    // Coalescing: one transfer per file across all four threads.
    CHECK(fetcher.stats().file_bytes == fx.data_a.size() + fx.data_b.size());
}

TEST_CASE("materialize copies files under their remote names") {
    TempDir dir("artisan-fetch-");
    TempDir cache("artisan-fetch-cache-");
    write_file(dir.path() / "art" / "a.txt", "A");
    write_file(dir.path() / "art" / "nested" / "b.txt", "B");
    Fetcher fetcher(FetchConfig{.cache_dir = cache.path()});
    ArtifactBundle bundle = fetcher.fetch("file://" + (dir.path() / "art").string());

    TempDir dest("artisan-fetch-dest-");
    Fetcher::materialize(bundle, dest.path());
    CHECK(read_file(dest.path() / "a.txt") == "A");
    CHECK(read_file(dest.path() / "nested" / "b.txt") == "B");
}

TEST_SUITE_END();
