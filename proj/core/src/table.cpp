#include "artisan/table.hpp"

#include <cctype>
#include <cstdlib>

#include "artisan/errors.hpp"
#include "artisan/util.hpp"

namespace artisan {

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool is_table_line(std::string_view line) {
    return line.find('|') != std::string_view::npos;
}

/// Split one table row into verbatim cells. A leading/trailing pipe is
/// consumed; "\|" inside a cell is kept as-is and does not split.
std::vector<std::string> split_row(std::string_view line) {
    std::string_view s = line;
    // Trailing whitespace after the last pipe is not cell content.
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    bool leading_pipe = !s.empty() && s.front() == '|';
    if (leading_pipe) s.remove_prefix(1);
    bool trailing_pipe = !s.empty() && s.back() == '|';
    if (trailing_pipe) {
        // Only if it is a real delimiter, not an escaped pipe.
        std::size_t bs = 0;
        while (bs + 1 < s.size() && s[s.size() - 2 - bs] == '\\') ++bs;
        if (bs % 2 == 0) s.remove_suffix(1);
    }
    std::vector<std::string> cells;
    std::string current;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\\' && i + 1 < s.size() && s[i + 1] == '|') {
            current += "\\|";
            ++i;
            continue;
        }
        if (s[i] == '|') {
            cells.push_back(std::move(current));
            current.clear();
            continue;
        }
        current += s[i];
    }
    cells.push_back(std::move(current));
    return cells;
}

bool is_alignment_cell(std::string_view cell) {
    std::size_t i = 0, e = cell.size();
    while (i < e && (cell[i] == ' ' || cell[i] == '\t')) ++i;
    while (e > i && (cell[e - 1] == ' ' || cell[e - 1] == '\t')) --e;
    if (i >= e) return false;
    if (cell[i] == ':') ++i;
    std::size_t dashes = 0;
    while (i < e && cell[i] == '-') {
        ++i;
        ++dashes;
    }
    if (i < e && cell[i] == ':') ++i;
    return dashes > 0 && i == e;
}

bool is_alignment_row(const std::vector<std::string>& cells) {
    if (cells.empty()) return false;
    for (const auto& c : cells)
        if (!is_alignment_cell(c)) return false;
    return true;
}

std::string mask_digits(const std::string& cell) {
    std::string out = cell;
    for (char& c : out)
        if (is_digit(c)) c = '?';
    return out;
}

std::optional<double> parse_numeric(std::string_view cell) {
    std::string t;
    t.reserve(cell.size());
    for (char c : cell) {
        if (c == ',') continue; // thousands separator
        t += c;
    }
    std::string v = trim(t);
    if (!v.empty() && v.back() == '%') v.pop_back();
    v = trim(v);
    if (v.empty()) return std::nullopt;
    char* end = nullptr;
    double d = std::strtod(v.c_str(), &end);
    if (end != v.c_str() + v.size()) return std::nullopt;
    return d;
}

bool cells_equal(const std::string& expected, const std::string& actual,
                 const CompareOptions& opt) {
    std::string ne = normalize_cell(expected);
    std::string na = normalize_cell(actual);
    if (ne == na) return true;
    if (!opt.numeric()) return false;
    auto ve = parse_numeric(ne);
    auto va = parse_numeric(na);
    if (!ve || !va) return false;
    double abs_eps = opt.abs_eps.value_or(0.0);
    double rel_eps = opt.rel_eps.value_or(0.0);
    double diff = *ve > *va ? *ve - *va : *va - *ve;
    double mag = *ve < 0 ? -*ve : *ve;
    return diff <= abs_eps + rel_eps * mag;
}

} // namespace

bool MatchMap::all_matched() const {
    if (structural_mismatch) return false;
    return matched_count() == cell_count();
}

std::size_t MatchMap::matched_count() const {
    std::size_t n = 0;
    for (const auto& row : matched)
        for (bool m : row)
            if (m) ++n;
    return n;
}

Table parse_table(std::string_view source) {
    auto lines = split_lines(source);
    std::size_t first = 0;
    while (first < lines.size() && !is_table_line(lines[first])) ++first;
    if (first == lines.size())
        throw ParseError("no table found: input contains no pipe-delimited row");

    Table table;
    // Caption: non-blank text preceding the table.
    {
        std::string caption;
        for (std::size_t i = 0; i < first; ++i) {
            std::string t = trim(lines[i]);
            if (t.empty()) continue;
            if (!caption.empty()) caption += "\n";
            caption += lines[i];
        }
        table.caption = std::move(caption);
    }

    std::size_t cols = 0;
    bool alignment_seen = false;
    for (std::size_t i = first; i < lines.size(); ++i) {
        if (!is_table_line(lines[i])) break; // table ends at the first non-pipe line
        auto cells = split_row(lines[i]);
        if (cols == 0) cols = cells.size();
        if (cells.size() != cols)
            throw ParseError("ragged table row at line " + std::to_string(i + 1) + ": \"" +
                             lines[i] + "\" has " + std::to_string(cells.size()) +
                             " columns, expected " + std::to_string(cols));
        if (!alignment_seen && is_alignment_row(cells)) {
            alignment_seen = true;
            table.alignment_row_present = true;
            table.alignment_cells = std::move(cells);
            table.header_rows = table.rows.size();
            continue;
        }
        table.rows.push_back(std::move(cells));
    }
    if (!table.alignment_row_present)
        table.header_rows = table.rows.empty() ? 0 : 1;
    return table;
}

std::string render_table(const Table& table) {
    std::string out;
    if (!table.caption.empty()) {
        out += table.caption;
        out += "\n\n";
    }
    auto emit_row = [&out](const std::vector<std::string>& cells) {
        out += '|';
        for (const auto& c : cells) {
            out += c;
            out += '|';
        }
        out += '\n';
    };
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        if (table.alignment_row_present && i == table.header_rows)
            emit_row(table.alignment_cells);
        emit_row(table.rows[i]);
    }
    // Alignment row of a header-only table still has to be emitted.
    if (table.alignment_row_present && table.header_rows == table.rows.size())
        emit_row(table.alignment_cells);
    return out;
}

std::string render_table(const MaskedTable& masked) { return render_table(masked.base); }

MaskedTable obfuscate_table(const Table& table) {
    MaskedTable out{table};
    for (std::size_t i = table.header_rows; i < out.base.rows.size(); ++i)
        for (auto& cell : out.base.rows[i]) cell = mask_digits(cell);
    return out;
}

std::string normalize_cell(std::string_view cell) {
    std::string out;
    out.reserve(cell.size());
    bool in_ws = true; // leading whitespace is dropped
    for (char c : cell) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!in_ws) out += ' ';
            in_ws = true;
        } else {
            out += c;
            in_ws = false;
        }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

MatchMap compare_tables(const Table& expected, const Table& actual,
                        const CompareOptions& options) {
    MatchMap map;
    map.rows = expected.row_count();
    map.cols = expected.col_count();
    map.matched.assign(map.rows, std::vector<bool>(map.cols, false));
    if (expected.row_count() != actual.row_count() ||
        expected.col_count() != actual.col_count()) {
        map.structural_mismatch = true;
        return map;
    }
    for (std::size_t i = 0; i < map.rows; ++i)
        for (std::size_t j = 0; j < map.cols; ++j)
            map.matched[i][j] = cells_equal(expected.rows[i][j], actual.rows[i][j], options);
    return map;
}

MaskedTable render_feedback(const Table& expected, const MatchMap& map) {
    if (map.structural_mismatch || map.rows != expected.row_count() ||
        map.cols != expected.col_count())
        return obfuscate_table(expected);
    MaskedTable out{expected};
    for (std::size_t i = expected.header_rows; i < expected.rows.size(); ++i)
        for (std::size_t j = 0; j < expected.rows[i].size(); ++j)
            if (!map.matched[i][j]) out.base.rows[i][j] = mask_digits(expected.rows[i][j]);
    return out;
}

} // namespace artisan
