#include "test_support.hpp"

#include <zlib.h>

#include <cstring>

#include "json.hpp"

#include "artisan/util.hpp"

namespace fs = std::filesystem;

namespace artisan::testing {

// Obfuscation example: a caption, a 3-column header, and four body rows
// whose digit cells get masked in place.
const char* kObfuscationSource =
    "**Table 3: Evaluation Results**\n"
    "\n"
    "| Project Name | A+ | TW |\n"
    "| ------------ | -- | -- |\n"
    "| MarginSwap   |  6 |  1 |\n"
    "| PoolTogether | 15 |  1 |\n"
    "| Tracer       | 10 |  1 |\n"
    "| Yield Micro  |  4 |  1 |\n";

const char* kObfuscationMasked =
    "**Table 3: Evaluation Results**\n"
    "\n"
    "| Project Name | A+ | TW |\n"
    "| ------------ | -- | -- |\n"
    "| MarginSwap   |  ? |  ? |\n"
    "| PoolTogether | ?? |  ? |\n"
    "| Tracer       | ?? |  ? |\n"
    "| Yield Micro  |  ? |  ? |\n";

const char* kObfuscationLog =
    "Switched global version to 0.8.3\n"
    "'solc --version' running\n"
    "Reference: ScType\n"
    "Annotation count: 6\n"
    "Function count: 20\n"
    "Executing Group 1\n"
    "[*] Tested 1 warning for MarginSwap\n";

// Mismatch-feedback example: one count cell differs; the feedback shows the
// matched cells verbatim and masks the digits of the wrong one.
const char* kFeedbackExpected =
    "|   | Calls      | Count     |\n"
    "|---|:-----------|----------:|\n"
    "|   | Resolved   | 7,799,929 |\n"
    "|   | Unresolved |   260,249 |\n";

const char* kFeedbackActual =
    "|   | Calls      | Count     |\n"
    "|---|:-----------|----------:|\n"
    "|   | Resolved   | 7,799,929 |\n"
    "|   | Unresolved |   168,482 |\n";

const char* kFeedbackMasked =
    "|   | Calls      | Count     |\n"
    "|---|:-----------|----------:|\n"
    "|   | Resolved   | 7,799,929 |\n"
    "|   | Unresolved |   ???,??? |\n";

Table random_table(std::mt19937& rng, const RandomTableOptions& options) {
    auto pick = [&](std::size_t lo, std::size_t hi) {
        return lo + static_cast<std::size_t>(rng() % (hi - lo + 1));
    };
    // No '|', '\n', '`' or '\\': those interact with row splitting. The
    // first cell of every row starts with a letter so no generated row can
    // look like an alignment row.
    static const std::string charset = "abcXYZ 0123456789,.%+- ";
    static const std::string letters = "abcdefXYZ";

    auto random_cell = [&](bool force_letter) {
        std::size_t len = pick(force_letter ? 1 : 0, 8);
        std::string cell;
        for (std::size_t i = 0; i < len; ++i) {
            if (i == 0 && force_letter)
                cell += letters[rng() % letters.size()];
            else
                cell += charset[rng() % charset.size()];
        }
        return cell;
    };

    Table t;
    std::size_t cols = pick(1, options.max_cols);
    std::size_t body_rows = pick(0, options.max_body_rows);

    if (options.allow_caption && rng() % 2 == 0)
        t.caption = "Table " + std::to_string(pick(1, 9)) + ": sample " + random_cell(true);

    auto make_row = [&] {
        std::vector<std::string> row;
        for (std::size_t j = 0; j < cols; ++j) row.push_back(random_cell(j == 0));
        return row;
    };

    t.rows.push_back(make_row()); // header
    t.header_rows = 1;
    if (rng() % 2 == 0) {
        t.alignment_row_present = true;
        static const char* aligns[] = {"---", ":--", "--:", ":-:"};
        for (std::size_t j = 0; j < cols; ++j)
            t.alignment_cells.push_back(aligns[rng() % 4]);
    }
    for (std::size_t i = 0; i < body_rows; ++i) t.rows.push_back(make_row());
    return t;
}

bool same_grid(const Table& a, const Table& b) {
    return a.caption == b.caption && a.header_rows == b.header_rows &&
           a.alignment_row_present == b.alignment_row_present &&
           a.alignment_cells == b.alignment_cells && a.rows == b.rows;
}

FixtureServer::FixtureServer() = default;

void FixtureServer::start() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
}

FixtureServer::~FixtureServer() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
}

std::string FixtureServer::base_url() const {
    return "http://127.0.0.1:" + std::to_string(port_);
}

namespace {

void put16(std::string& out, std::uint16_t v) {
    out += static_cast<char>(v & 0xff);
    out += static_cast<char>((v >> 8) & 0xff);
}

void put32(std::string& out, std::uint32_t v) {
    out += static_cast<char>(v & 0xff);
    out += static_cast<char>((v >> 8) & 0xff);
    out += static_cast<char>((v >> 16) & 0xff);
    out += static_cast<char>((v >> 24) & 0xff);
}

} // namespace

void write_zip(const fs::path& path,
               const std::vector<std::pair<std::string, std::string>>& entries) {
    std::string out;
    struct Central {
        std::string name;
        std::uint32_t crc, size, offset;
    };
    std::vector<Central> centrals;

    for (const auto& [name, data] : entries) {
        auto crc = static_cast<std::uint32_t>(
            crc32(0L, reinterpret_cast<const Bytef*>(data.data()),
                  static_cast<uInt>(data.size())));
        centrals.push_back({name, crc, static_cast<std::uint32_t>(data.size()),
                            static_cast<std::uint32_t>(out.size())});
        put32(out, 0x04034b50);
        put16(out, 20);                                   // version needed
        put16(out, 0);                                    // flags
        put16(out, 0);                                    // method: stored
        put16(out, 0);                                    // mod time
        put16(out, 0);                                    // mod date
        put32(out, crc);
        put32(out, static_cast<std::uint32_t>(data.size())); // compressed
        put32(out, static_cast<std::uint32_t>(data.size())); // uncompressed
        put16(out, static_cast<std::uint16_t>(name.size()));
        put16(out, 0); // extra len
        out += name;
        out += data;
    }

    std::uint32_t cd_offset = static_cast<std::uint32_t>(out.size());
    for (const auto& c : centrals) {
        put32(out, 0x02014b50);
        put16(out, 20); // version made by
        put16(out, 20); // version needed
        put16(out, 0);  // flags
        put16(out, 0);  // method
        put16(out, 0);  // time
        put16(out, 0);  // date
        put32(out, c.crc);
        put32(out, c.size);
        put32(out, c.size);
        put16(out, static_cast<std::uint16_t>(c.name.size()));
        put16(out, 0); // extra
        put16(out, 0); // comment
        put16(out, 0); // disk
        put16(out, 0); // internal attrs
        put32(out, 0); // external attrs
        put32(out, c.offset);
        out += c.name;
    }
    std::uint32_t cd_size = static_cast<std::uint32_t>(out.size()) - cd_offset;
    put32(out, 0x06054b50);
    put16(out, 0);
    put16(out, 0);
    put16(out, static_cast<std::uint16_t>(centrals.size()));
    put16(out, static_cast<std::uint16_t>(centrals.size()));
    put32(out, cd_size);
    put32(out, cd_offset);
    put16(out, 0);

    write_file(path, out);
}

void write_tar(const fs::path& path,
               const std::vector<std::pair<std::string, std::string>>& entries) {
    std::string out;
    for (const auto& [name, data] : entries) {
        char hdr[512];
        std::memset(hdr, 0, sizeof(hdr));
        std::snprintf(hdr + 0, 100, "%s", name.c_str());
        std::snprintf(hdr + 100, 8, "%07o", 0644);
        std::snprintf(hdr + 108, 8, "%07o", 0);
        std::snprintf(hdr + 116, 8, "%07o", 0);
        std::snprintf(hdr + 124, 12, "%011llo",
                      static_cast<unsigned long long>(data.size()));
        std::snprintf(hdr + 136, 12, "%011o", 0);
        std::memset(hdr + 148, ' ', 8); // checksum placeholder
        hdr[156] = '0';
        std::memcpy(hdr + 257, "ustar", 5);
        hdr[262] = '\0';
        hdr[263] = '0';
        hdr[264] = '0';
        unsigned sum = 0;
        for (unsigned char c : hdr) sum += c;
        std::snprintf(hdr + 148, 8, "%06o", sum);
        hdr[155] = ' ';
        out.append(hdr, 512);
        out += data;
        std::size_t pad = (512 - data.size() % 512) % 512;
        out.append(pad, '\0');
    }
    out.append(1024, '\0');
    write_file(path, out);
}

std::string gzip_bytes(const std::string& data) {
    z_stream strm{};
    deflateInit2(&strm, Z_DEFAULT_COMPRESSION, Z_DEFLATED, 16 + MAX_WBITS, 8,
                 Z_DEFAULT_STRATEGY);
    std::string out;
    out.resize(deflateBound(&strm, static_cast<uLong>(data.size())) + 32);
    strm.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
    strm.avail_in = static_cast<uInt>(data.size());
    strm.next_out = reinterpret_cast<Bytef*>(out.data());
    strm.avail_out = static_cast<uInt>(out.size());
    deflate(&strm, Z_FINISH);
    out.resize(out.size() - strm.avail_out);
    deflateEnd(&strm);
    return out;
}

std::string agent_reply(const std::string& thought, const std::string& action) {
    return "THOUGHT: " + thought + "\n\n```bash\n" + action + "\n```\n";
}

std::string write_toy_artifact(const fs::path& dir) {
    write_file(dir / "README.md",
               "# Toy analyzer\n\nRun `sh analyze.sh` from this directory to count test "
               "outcomes across data/*.log.\n");
    write_file(dir / "analyze.sh",
               "#!/bin/sh\n"
               "p=$(cat data/*.log | grep -c PASS)\n"
               "f=$(cat data/*.log | grep -c FAIL)\n"
               "echo \"passed: $p\"\n"
               "echo \"failed: $f\"\n");
    write_file(dir / "data" / "run1.log",
               "case alpha PASS\ncase beta PASS\ncase gamma FAIL\ncase delta PASS\n");
    write_file(dir / "data" / "run2.log", "case epsilon PASS\ncase zeta FAIL\ncase eta PASS\n");
    return "**Table 1: Test outcomes**\n"
           "\n"
           "| Outcome | Count |\n"
           "|---------|-------|\n"
           "| Passed  | 5     |\n"
           "| Failed  | 2     |\n";
}

void write_task_manifest(const fs::path& task_dir, const std::string& table_md,
                         const std::string& url, const std::string& extra_toml) {
    write_file(task_dir / "table.md", table_md);
    write_file(task_dir / "paper.txt",
               "We analyze recorded test runs and report the number of passing and failing "
               "cases. The analyzer script aggregates the raw logs shipped with the "
               "artifact.\n");
    write_file(task_dir / "task.toml", "url = \"" + url + "\"\n" + extra_toml);
}

std::vector<std::string> toy_success_turns() {
    const char* write_script =
        "cat > repro.sh <<'EOF'\n"
        "#!/bin/sh\n"
        "cd artifact\n"
        "p=$(cat data/*.log | grep -c PASS)\n"
        "f=$(cat data/*.log | grep -c FAIL)\n"
        "cd ..\n"
        "{\n"
        "  printf '**Table 1: Test outcomes**\\n\\n'\n"
        "  printf '| Outcome | Count |\\n'\n"
        "  printf '|---------|-------|\\n'\n"
        "  printf '| Passed  | %s     |\\n' \"$p\"\n"
        "  printf '| Failed  | %s     |\\n' \"$f\"\n"
        "} > repro_output.md\n"
        "EOF";
    return {
        agent_reply("Read the README first.", "cat artifact/README.md"),
        agent_reply("Run the analyzer as documented.", "cd artifact && sh analyze.sh && cd .."),
        agent_reply("Write a standalone reproduction script.", write_script),
        agent_reply("Test the script end to end.", "sh repro.sh && cat repro_output.md"),
        agent_reply("Output matches; submit.", "echo COMPLETE_TASK_AND_SUBMIT_FINAL_OUTPUT"),
        // Method judge reply (same client, next call in order).
        "VERDICT: FullReproduction\nRATIONALE: The script reruns the analyzer over the raw "
        "logs and formats the counts itself.\n",
    };
}

void write_wildcard_replay(const fs::path& file, const std::vector<std::string>& turns) {
    std::string out;
    int turn = 0;
    for (const auto& t : turns) {
        nlohmann::json j;
        j["turn"] = turn++;
        j["prompt_digest"] = "*";
        j["response"] = t;
        j["usage"] = {{"prompt_tokens", 1000}, {"completion_tokens", 100}};
        out += j.dump();
        out += "\n";
    }
    write_file(file, out);
}

std::string transcript_signature(const Episode& episode) {
    std::string out;
    for (const auto& step : episode.transcript) {
        out += std::to_string(step.index);
        out += '\x1f';
        out += step.thought;
        out += '\x1f';
        out += step.action;
        out += '\x1f';
        out += step.observation;
        out += '\x1f';
        out += std::to_string(step.cost_delta);
        if (step.output_verdict) out += "|out=" + output_verdict_name(*step.output_verdict);
        if (step.method_verdict) out += "|method=" + method_verdict_name(*step.method_verdict);
        out += '\x1e';
    }
    out += "status=" + std::to_string(static_cast<int>(episode.status));
    out += "|reason=" + episode.exhausted_reason;
    out += "|submissions=" + std::to_string(episode.submissions);
    return out;
}

} // namespace artisan::testing
