#include "artisan/util.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <random>
#include <system_error>

#include "artisan/errors.hpp"

namespace fs = std::filesystem;

namespace artisan {

namespace {

std::string to_hex(const unsigned char* data, std::size_t n) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(n * 2);
    for (std::size_t i = 0; i < n; ++i) {
        out += digits[data[i] >> 4];
        out += digits[data[i] & 0xf];
    }
    return out;
}

class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new()) {
        if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1)
            throw Error("sha256 init failed");
    }
    ~Sha256() { EVP_MD_CTX_free(ctx_); }
    void update(std::string_view data) {
        if (EVP_DigestUpdate(ctx_, data.data(), data.size()) != 1)
            throw Error("sha256 update failed");
    }
    std::string hex() {
        unsigned char md[EVP_MAX_MD_SIZE];
        unsigned int len = 0;
        if (EVP_DigestFinal_ex(ctx_, md, &len) != 1)
            throw Error("sha256 final failed");
        return to_hex(md, len);
    }

private:
    EVP_MD_CTX* ctx_;
};

} // namespace

std::string sha256_hex(std::string_view data) {
    Sha256 h;
    h.update(data);
    return h.hex();
}

std::string sha256_file(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw Error("cannot read file: " + file.string());
    Sha256 h;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof(buf));
        h.update(std::string_view(buf, static_cast<std::size_t>(in.gcount())));
    }
    return h.hex();
}

std::string tree_digest(const fs::path& root) {
    Sha256 h;
    for (const auto& rel : list_files_recursive(root)) {
        h.update(rel);
        h.update(std::string_view("\0", 1));
        h.update(sha256_file(root / rel));
        h.update(std::string_view("\0", 1));
    }
    return h.hex();
}

std::string read_file(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw Error("cannot read file: " + file.string());
    std::string out;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof(buf));
        out.append(buf, static_cast<std::size_t>(in.gcount()));
    }
    return out;
}

void write_file(const fs::path& file, std::string_view content) {
    if (file.has_parent_path()) fs::create_directories(file.parent_path());
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write file: " + file.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("short write: " + file.string());
}

void write_file_atomic(const fs::path& file, std::string_view content) {
    if (file.has_parent_path()) fs::create_directories(file.parent_path());
    fs::path tmp = file;
    tmp += ".tmp-" + random_token();
    write_file(tmp, content);
    std::error_code ec;
    fs::rename(tmp, file, ec);
    if (ec) {
        fs::remove(tmp);
        throw Error("atomic rename failed for " + file.string() + ": " + ec.message());
    }
}

void copy_tree(const fs::path& from, const fs::path& to) {
    fs::create_directories(to);
    fs::copy(from, to,
             fs::copy_options::recursive | fs::copy_options::copy_symlinks |
                 fs::copy_options::overwrite_existing);
}

std::vector<std::string> list_files_recursive(const fs::path& root) {
    std::vector<std::string> out;
    if (!fs::exists(root)) return out;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        out.push_back(fs::relative(entry.path(), root).generic_string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

TempDir::TempDir(const std::string& prefix, const fs::path& parent) {
    fs::path base = parent.empty() ? fs::temp_directory_path() : parent;
    fs::create_directories(base);
    for (int attempt = 0; attempt < 16; ++attempt) {
        fs::path candidate = base / (prefix + random_token());
        std::error_code ec;
        if (fs::create_directory(candidate, ec)) {
            path_ = candidate;
            return;
        }
    }
    throw Error("cannot create temp directory under " + base.string());
}

TempDir::TempDir(TempDir&& other) noexcept : path_(std::move(other.path_)), keep_(other.keep_) {
    other.path_.clear();
}

TempDir& TempDir::operator=(TempDir&& other) noexcept {
    if (this != &other) {
        remove_now();
        path_ = std::move(other.path_);
        keep_ = other.keep_;
        other.path_.clear();
    }
    return *this;
}

TempDir::~TempDir() { remove_now(); }

void TempDir::remove_now() {
    if (path_.empty() || keep_) return;
    std::error_code ec;
    fs::remove_all(path_, ec);
    path_.clear();
}

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool starts_with_ci(std::string_view s, std::string_view prefix) {
    if (s.size() < prefix.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(s[i])) !=
            std::tolower(static_cast<unsigned char>(prefix[i])))
            return false;
    }
    return true;
}

std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) {
            if (pos < text.size()) out.emplace_back(text.substr(pos));
            break;
        }
        std::string_view line = text.substr(pos, nl - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        out.emplace_back(line);
        pos = nl + 1;
    }
    return out;
}

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
    if (from.empty()) return s;
    std::size_t i = 0;
    while ((i = s.find(from, i)) != std::string::npos) {
        s.replace(i, from.size(), to);
        i += to.size();
    }
    return s;
}

std::string shell_quote(std::string_view s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'')
            out += "'\\''";
        else
            out += c;
    }
    out += "'";
    return out;
}

std::string truncate_middle(std::string_view text, std::size_t cap, double head_fraction) {
    if (text.size() <= cap) return std::string(text);
    auto head = static_cast<std::size_t>(static_cast<double>(cap) * head_fraction);
    if (head > cap) head = cap;
    std::size_t tail = cap - head;
    std::size_t elided = text.size() - head - tail;
    std::string out;
    out.reserve(cap + 48);
    out.append(text.substr(0, head));
    out += "\n[... ";
    out += std::to_string(elided);
    out += " bytes elided ...]\n";
    out.append(text.substr(text.size() - tail));
    return out;
}

StreamCapture::StreamCapture(std::size_t cap, double head_fraction) {
    head_cap_ = static_cast<std::size_t>(static_cast<double>(cap) * head_fraction);
    if (head_cap_ > cap) head_cap_ = cap;
    tail_cap_ = cap - head_cap_;
}

void StreamCapture::feed(const char* data, std::size_t n) {
    total_ += n;
    if (head_.size() < head_cap_) {
        std::size_t take = std::min(n, head_cap_ - head_.size());
        head_.append(data, take);
        data += take;
        n -= take;
    }
    if (n == 0) return;
    tail_.append(data, n);
    if (tail_.size() > tail_cap_ * 2 + 4096)
        tail_.erase(0, tail_.size() - tail_cap_);
}

bool StreamCapture::truncated() const { return total_ > head_cap_ + tail_cap_; }

std::string StreamCapture::str() const {
    std::string tail = tail_;
    if (tail.size() > tail_cap_) tail.erase(0, tail.size() - tail_cap_);
    if (!truncated()) return head_ + tail;
    std::uint64_t elided = total_ - head_.size() - tail.size();
    std::string out;
    out.reserve(head_.size() + tail.size() + 48);
    out += head_;
    out += "\n[... ";
    out += std::to_string(elided);
    out += " bytes elided ...]\n";
    out += tail;
    return out;
}

std::string Url::origin() const {
    std::string out = scheme + "://" + host;
    if (port >= 0) out += ":" + std::to_string(port);
    return out;
}

Url parse_url(std::string_view url) {
    Url out;
    auto scheme_end = url.find("://");
    if (scheme_end == std::string_view::npos) {
        // "file:relative/path" form, used by task manifests.
        auto colon = url.find(':');
        if (colon == std::string_view::npos)
            throw Error("not a URL: " + std::string(url));
        out.scheme = to_lower(url.substr(0, colon));
        out.path = std::string(url.substr(colon + 1));
        return out;
    }
    out.scheme = to_lower(url.substr(0, scheme_end));
    std::string_view rest = url.substr(scheme_end + 3);
    auto path_start = rest.find('/');
    std::string_view authority =
        path_start == std::string_view::npos ? rest : rest.substr(0, path_start);
    out.path = path_start == std::string_view::npos
                   ? std::string()
                   : std::string(rest.substr(path_start));
    auto colon = authority.rfind(':');
    if (colon != std::string_view::npos) {
        out.host = std::string(authority.substr(0, colon));
        std::string port_text(authority.substr(colon + 1));
        try {
            out.port = std::stoi(port_text);
        } catch (const std::exception&) {
            throw Error("bad port in URL: " + std::string(url));
        }
    } else {
        out.host = std::string(authority);
    }
    out.host = to_lower(out.host);
    return out;
}

std::chrono::milliseconds parse_duration(std::string_view text) {
    std::string t = trim(text);
    if (t.empty()) throw Error("empty duration");
    double scale = 1000.0; // default unit: seconds
    if (t.size() >= 2 && t.substr(t.size() - 2) == "ms") {
        scale = 1.0;
        t.resize(t.size() - 2);
    } else {
        switch (t.back()) {
        case 's': scale = 1000.0; t.pop_back(); break;
        case 'm': scale = 60.0 * 1000.0; t.pop_back(); break;
        case 'h': scale = 3600.0 * 1000.0; t.pop_back(); break;
        default: break;
        }
    }
    std::size_t consumed = 0;
    double value = 0;
    try {
        value = std::stod(t, &consumed);
    } catch (const std::exception&) {
        throw Error("bad duration: " + std::string(text));
    }
    if (consumed != t.size() || value < 0)
        throw Error("bad duration: " + std::string(text));
    return std::chrono::milliseconds(static_cast<std::int64_t>(value * scale));
}

std::string format_duration(std::chrono::milliseconds ms) {
    auto total = ms.count();
    if (total < 1000) return std::to_string(total) + "ms";
    if (total < 60 * 1000) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.1fs", static_cast<double>(total) / 1000.0);
        return buf;
    }
    if (total < 3600 * 1000) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.1fm", static_cast<double>(total) / 60000.0);
        return buf;
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1fh", static_cast<double>(total) / 3600000.0);
    return buf;
}

std::string random_token(std::size_t bytes) {
    static thread_local std::mt19937_64 rng{std::random_device{}()};
    std::string out;
    out.reserve(bytes * 2);
    static const char* digits = "0123456789abcdef";
    for (std::size_t i = 0; i < bytes; ++i) {
        auto v = static_cast<unsigned>(rng() & 0xff);
        out += digits[v >> 4];
        out += digits[v & 0xf];
    }
    return out;
}

} // namespace artisan
