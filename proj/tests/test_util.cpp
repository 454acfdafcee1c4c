#include "doctest.h"

#include "artisan/errors.hpp"
#include "artisan/util.hpp"

using namespace artisan;

TEST_SUITE_BEGIN("util");

TEST_CASE("sha256 of known vector") {
    CHECK(sha256_hex("") ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("truncate_middle keeps head and tail with a byte marker") {
    std::string text(1000, 'a');
    for (std::size_t i = 0; i < 100; ++i) text[i] = 'H';
    for (std::size_t i = 900; i < 1000; ++i) text[i] = 'T';

    std::string out = truncate_middle(text, 200, 0.6);
    CHECK(out.substr(0, 100) == std::string(100, 'H'));
    CHECK(out.substr(out.size() - 80) == std::string(80, 'T'));
    CHECK(out.find("[... 800 bytes elided ...]") != std::string::npos);

    CHECK(truncate_middle("short", 200) == "short");
}

TEST_CASE("StreamCapture matches truncate_middle semantics") {
    StreamCapture cap(100, 0.6);
    std::string text;
    for (int i = 0; i < 100; ++i) text += "chunk" + std::to_string(i) + "\n";
    // Feed in awkward chunk sizes.
    for (std::size_t pos = 0; pos < text.size(); pos += 7)
        cap.feed(text.data() + pos, std::min<std::size_t>(7, text.size() - pos));

    CHECK(cap.total_bytes() == text.size());
    CHECK(cap.truncated());
    std::string out = cap.str();
    CHECK(out.substr(0, 60) == text.substr(0, 60));
    CHECK(out.substr(out.size() - 40) == text.substr(text.size() - 40));

    StreamCapture small(100, 0.6);
    small.feed("hello", 5);
    CHECK_FALSE(small.truncated());
    CHECK(small.str() == "hello");
}

TEST_CASE("url parsing") {
    Url u = parse_url("https://zenodo.org/records/10529665");
    CHECK(u.scheme == "https");
    CHECK(u.host == "zenodo.org");
    CHECK(u.port == -1);
    CHECK(u.path == "/records/10529665");
    CHECK(u.origin() == "https://zenodo.org");

    Url v = parse_url("http://127.0.0.1:8080/api/records/5");
    CHECK(v.port == 8080);
    CHECK(v.origin() == "http://127.0.0.1:8080");

    Url w = parse_url("file:relative/dir");
    CHECK(w.scheme == "file");
    CHECK(w.path == "relative/dir");

    CHECK_THROWS_AS(parse_url("not a url"), Error);
}

TEST_CASE("duration parsing") {
    CHECK(parse_duration("8h") == std::chrono::milliseconds(8LL * 3600 * 1000));
    CHECK(parse_duration("30m") == std::chrono::milliseconds(30LL * 60 * 1000));
    CHECK(parse_duration("45s") == std::chrono::milliseconds(45'000));
    CHECK(parse_duration("1500ms") == std::chrono::milliseconds(1500));
    CHECK(parse_duration("90") == std::chrono::milliseconds(90'000));
    CHECK_THROWS_AS(parse_duration("soon"), Error);
}

TEST_CASE("atomic write and tree digest") {
    TempDir dir("artisan-util-test-");
    write_file_atomic(dir.path() / "a.txt", "alpha");
    write_file(dir.path() / "sub" / "b.txt", "beta");
    CHECK(read_file(dir.path() / "a.txt") == "alpha");

    std::string d1 = tree_digest(dir.path());
    TempDir copy("artisan-util-test-");
    copy_tree(dir.path(), copy.path());
    CHECK(tree_digest(copy.path()) == d1);

    write_file(copy.path() / "a.txt", "changed");
    CHECK(tree_digest(copy.path()) != d1);
}

TEST_CASE("shell_quote survives single quotes") {
    CHECK(shell_quote("plain") == "'plain'");
    CHECK(shell_quote("it's") == "'it'\\''s'");
}

TEST_SUITE_END();
