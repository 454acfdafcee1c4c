#include "artisan/archive.hpp"

#include <zlib.h>

#include <cstdint>
#include <fstream>
#include <cstring>

#include "artisan/errors.hpp"
#include "artisan/util.hpp"

namespace fs = std::filesystem;

namespace artisan {

namespace {

std::uint16_t le16(const std::string& s, std::size_t off) {
    return static_cast<std::uint16_t>(static_cast<unsigned char>(s[off]) |
                                      (static_cast<unsigned char>(s[off + 1]) << 8));
}

std::uint32_t le32(const std::string& s, std::size_t off) {
    return static_cast<std::uint32_t>(static_cast<unsigned char>(s[off])) |
           (static_cast<std::uint32_t>(static_cast<unsigned char>(s[off + 1])) << 8) |
           (static_cast<std::uint32_t>(static_cast<unsigned char>(s[off + 2])) << 16) |
           (static_cast<std::uint32_t>(static_cast<unsigned char>(s[off + 3])) << 24);
}

bool safe_entry_path(const std::string& name) {
    if (name.empty() || name.front() == '/') return false;
    std::size_t pos = 0;
    while (pos < name.size()) {
        std::size_t next = name.find('/', pos);
        std::string_view part(name.data() + pos,
                              (next == std::string::npos ? name.size() : next) - pos);
        if (part == "..") return false;
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    return true;
}

std::string inflate_raw(std::string_view compressed, std::size_t expected_size) {
    z_stream strm{};
    if (inflateInit2(&strm, -MAX_WBITS) != Z_OK) throw ArchiveError("inflateInit failed");
    std::string out;
    out.resize(expected_size);
    strm.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(compressed.data()));
    strm.avail_in = static_cast<uInt>(compressed.size());
    strm.next_out = reinterpret_cast<Bytef*>(out.data());
    strm.avail_out = static_cast<uInt>(out.size());
    int rc = inflate(&strm, Z_FINISH);
    inflateEnd(&strm);
    if (rc != Z_STREAM_END)
        throw ArchiveError("deflate stream did not decode cleanly (rc=" + std::to_string(rc) + ")");
    out.resize(out.size() - strm.avail_out);
    return out;
}

std::string gunzip_all(const std::string& data) {
    z_stream strm{};
    if (inflateInit2(&strm, 16 + MAX_WBITS) != Z_OK) throw ArchiveError("inflateInit failed");
    std::string out;
    strm.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
    strm.avail_in = static_cast<uInt>(data.size());
    char buf[1 << 16];
    int rc = Z_OK;
    do {
        strm.next_out = reinterpret_cast<Bytef*>(buf);
        strm.avail_out = sizeof(buf);
        rc = inflate(&strm, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&strm);
            throw ArchiveError("gzip stream did not decode cleanly (rc=" + std::to_string(rc) + ")");
        }
        out.append(buf, sizeof(buf) - strm.avail_out);
    } while (rc != Z_STREAM_END);
    inflateEnd(&strm);
    return out;
}

// --- ZIP ---

struct ZipEntry {
    std::string name;
    std::uint16_t method = 0;
    std::uint32_t compressed_size = 0;
    std::uint32_t uncompressed_size = 0;
    std::uint32_t local_offset = 0;
};

constexpr std::uint32_t kEocdSig = 0x06054b50;
constexpr std::uint32_t kCentralSig = 0x02014b50;
constexpr std::uint32_t kLocalSig = 0x04034b50;

std::vector<ZipEntry> zip_central_directory(const std::string& data) {
    if (data.size() < 22) throw ArchiveError("not a zip file: too small");
    // EOCD sits within the last 64k + 22 bytes (comment may follow it).
    std::size_t scan_start = data.size() >= (65536 + 22) ? data.size() - 65536 - 22 : 0;
    std::size_t eocd = std::string::npos;
    for (std::size_t i = data.size() - 22 + 1; i-- > scan_start;) {
        if (le32(data, i) == kEocdSig) {
            eocd = i;
            break;
        }
    }
    if (eocd == std::string::npos) throw ArchiveError("zip: end-of-central-directory not found");
    std::uint16_t count = le16(data, eocd + 10);
    std::uint32_t cd_size = le32(data, eocd + 12);
    std::uint32_t cd_off = le32(data, eocd + 16);
    if (count == 0xFFFF || cd_off == 0xFFFFFFFF)
        throw ArchiveError("zip64 archives are not supported");
    if (static_cast<std::size_t>(cd_off) + cd_size > data.size())
        throw ArchiveError("zip: central directory out of range");

    std::vector<ZipEntry> entries;
    std::size_t pos = cd_off;
    for (std::uint16_t i = 0; i < count; ++i) {
        if (pos + 46 > data.size() || le32(data, pos) != kCentralSig)
            throw ArchiveError("zip: bad central directory entry");
        ZipEntry e;
        e.method = le16(data, pos + 10);
        e.compressed_size = le32(data, pos + 20);
        e.uncompressed_size = le32(data, pos + 24);
        std::uint16_t name_len = le16(data, pos + 28);
        std::uint16_t extra_len = le16(data, pos + 30);
        std::uint16_t comment_len = le16(data, pos + 32);
        e.local_offset = le32(data, pos + 42);
        e.name = data.substr(pos + 46, name_len);
        pos += 46 + static_cast<std::size_t>(name_len) + extra_len + comment_len;
        entries.push_back(std::move(e));
    }
    return entries;
}

std::string zip_read_entry(const std::string& data, const ZipEntry& e) {
    if (static_cast<std::size_t>(e.local_offset) + 30 > data.size() ||
        le32(data, e.local_offset) != kLocalSig)
        throw ArchiveError("zip: bad local header for " + e.name);
    std::uint16_t name_len = le16(data, e.local_offset + 26);
    std::uint16_t extra_len = le16(data, e.local_offset + 28);
    std::size_t data_off = e.local_offset + 30 + name_len + extra_len;
    if (data_off + e.compressed_size > data.size())
        throw ArchiveError("zip: entry data out of range for " + e.name);
    std::string_view raw(data.data() + data_off, e.compressed_size);
    if (e.method == 0) return std::string(raw);
    if (e.method == 8) return inflate_raw(raw, e.uncompressed_size);
    throw ArchiveError("zip: unsupported compression method " + std::to_string(e.method) +
                       " for " + e.name);
}

// --- TAR ---

struct TarEntry {
    std::string name;
    std::string content;
};

std::uint64_t parse_octal(const char* field, std::size_t len) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < len; ++i) {
        char c = field[i];
        if (c == '\0' || c == ' ') break;
        if (c < '0' || c > '7') throw ArchiveError("tar: bad octal field");
        v = v * 8 + static_cast<std::uint64_t>(c - '0');
    }
    return v;
}

std::vector<TarEntry> tar_read_all(const std::string& data) {
    std::vector<TarEntry> out;
    std::size_t pos = 0;
    std::string pending_long_name;
    while (pos + 512 <= data.size()) {
        const char* hdr = data.data() + pos;
        bool all_zero = true;
        for (std::size_t i = 0; i < 512; ++i)
            if (hdr[i] != '\0') { all_zero = false; break; }
        if (all_zero) break;

        std::string name(hdr, strnlen(hdr, 100));
        std::uint64_t size = parse_octal(hdr + 124, 12);
        char type = hdr[156];
        std::string prefix(hdr + 345, strnlen(hdr + 345, 155));
        if (!prefix.empty()) name = prefix + "/" + name;
        if (!pending_long_name.empty()) {
            name = pending_long_name;
            pending_long_name.clear();
        }

        std::size_t data_start = pos + 512;
        std::size_t padded = (static_cast<std::size_t>(size) + 511) / 512 * 512;
        if (data_start + size > data.size()) throw ArchiveError("tar: truncated entry " + name);

        if (type == 'L') {
            // GNU long-name record: payload is the name of the next entry.
            pending_long_name = data.substr(data_start, size);
            while (!pending_long_name.empty() && pending_long_name.back() == '\0')
                pending_long_name.pop_back();
        } else if (type == '0' || type == '\0') {
            out.push_back({name, data.substr(data_start, size)});
        }
        // Directories, links and other types are skipped.
        pos = data_start + padded;
    }
    return out;
}

std::string load_tar_bytes(const fs::path& file, ArchiveKind kind) {
    std::string raw = read_file(file);
    if (kind == ArchiveKind::TarGz) return gunzip_all(raw);
    return raw;
}

} // namespace

ArchiveKind detect_archive(const fs::path& file) {
    // Magic bytes live in the first 512 bytes; no need to load the file.
    std::string head;
    {
        std::ifstream in(file, std::ios::binary);
        if (in) {
            char buf[512];
            in.read(buf, sizeof(buf));
            head.assign(buf, static_cast<std::size_t>(in.gcount()));
        }
    }
    if (head.size() >= 4 && le32(head, 0) == kLocalSig) return ArchiveKind::Zip;
    if (head.size() >= 2 && static_cast<unsigned char>(head[0]) == 0x1f &&
        static_cast<unsigned char>(head[1]) == 0x8b)
        return ArchiveKind::TarGz;
    if (head.size() >= 262 && head.compare(257, 5, "ustar") == 0) return ArchiveKind::Tar;

    std::string name = to_lower(file.filename().string());
    if (name.ends_with(".zip")) return ArchiveKind::Zip;
    if (name.ends_with(".tar.gz") || name.ends_with(".tgz")) return ArchiveKind::TarGz;
    if (name.ends_with(".tar")) return ArchiveKind::Tar;
    return ArchiveKind::None;
}

std::vector<std::string> archive_entries(const fs::path& file) {
    ArchiveKind kind = detect_archive(file);
    std::vector<std::string> out;
    if (kind == ArchiveKind::Zip) {
        std::string data = read_file(file);
        for (const auto& e : zip_central_directory(data)) {
            if (e.name.empty() || e.name.back() == '/') continue;
            out.push_back(e.name);
        }
        return out;
    }
    if (kind == ArchiveKind::Tar || kind == ArchiveKind::TarGz) {
        for (const auto& e : tar_read_all(load_tar_bytes(file, kind))) out.push_back(e.name);
        return out;
    }
    throw ArchiveError("not a supported archive: " + file.string());
}

void archive_extract(const fs::path& file, const fs::path& dest) {
    ArchiveKind kind = detect_archive(file);
    fs::create_directories(dest);
    if (kind == ArchiveKind::Zip) {
        std::string data = read_file(file);
        for (const auto& e : zip_central_directory(data)) {
            if (e.name.empty() || e.name.back() == '/') continue;
            if (!safe_entry_path(e.name))
                throw ArchiveError("zip: refusing unsafe entry path " + e.name);
            write_file(dest / e.name, zip_read_entry(data, e));
        }
        return;
    }
    if (kind == ArchiveKind::Tar || kind == ArchiveKind::TarGz) {
        for (const auto& e : tar_read_all(load_tar_bytes(file, kind))) {
            if (!safe_entry_path(e.name))
                throw ArchiveError("tar: refusing unsafe entry path " + e.name);
            write_file(dest / e.name, e.content);
        }
        return;
    }
    throw ArchiveError("not a supported archive: " + file.string());
}

} // namespace artisan
