#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace artisan {

/// A parsed markdown pipe table.
///
/// Cell text is stored verbatim, including the padding between the pipes, so
/// that rendering a parsed table reproduces the source bytes and digit
/// masking can preserve cell widths exactly. `rows` holds header rows
/// followed by body rows; the alignment row is kept separately and is not
/// part of the grid.
struct Table {
    std::string caption; // text preceding the table, may be empty
    std::size_t header_rows = 0;
    bool alignment_row_present = false;
    std::vector<std::string> alignment_cells; // verbatim, empty if absent
    std::vector<std::vector<std::string>> rows;

    std::size_t row_count() const { return rows.size(); }
    std::size_t col_count() const { return rows.empty() ? 0 : rows.front().size(); }
    std::size_t body_row_count() const { return rows.size() - header_rows; }
    bool empty() const { return rows.empty(); }
};

/// A table whose body-cell digits have been replaced by '?'. Same dimensions
/// and cell widths as its source; headers, caption and the alignment row are
/// untouched.
struct MaskedTable {
    Table base;
};

/// Per-cell comparison result over the full grid (headers + body). When the
/// grids have different dimensions the comparison is a structural mismatch
/// and every cell counts as unmatched; `matched` then covers the expected
/// table's dimensions.
struct MatchMap {
    std::size_t rows = 0;
    std::size_t cols = 0;
    bool structural_mismatch = false;
    std::vector<std::vector<bool>> matched;

    bool all_matched() const;
    std::size_t matched_count() const;
    std::size_t cell_count() const { return rows * cols; }
};

/// Optional numeric tolerance for cell comparison. Off by default: cells are
/// compared as whitespace-normalized strings, with commas and units
/// significant.
struct CompareOptions {
    std::optional<double> abs_eps;
    std::optional<double> rel_eps;

    bool numeric() const { return abs_eps.has_value() || rel_eps.has_value(); }
};

/// Parse the first pipe table in `source`. Non-table lines before it become
/// the caption; an alignment row (|---|:--|--:|) is recorded but excluded
/// from the grid. Throws ParseError on ragged rows (naming the offending
/// line) or when no pipe-delimited row exists.
Table parse_table(std::string_view source);

/// Inverse of parse_table: caption, blank line, then rows with leading and
/// trailing pipes. Rendering a parsed table reproduces its grid exactly.
std::string render_table(const Table& table);
std::string render_table(const MaskedTable& masked);

/// Replace every ASCII digit in the body cells with '?'. Header rows, the
/// caption, and the alignment row pass through untouched; idempotent because
/// '?' is not a digit.
MaskedTable obfuscate_table(const Table& table);

/// Trim outer whitespace and collapse internal whitespace runs to one space.
std::string normalize_cell(std::string_view cell);

/// Cell-by-cell equality of the two grids after normalization. Dimension
/// mismatch is reported as a structural mismatch, not an error.
MatchMap compare_tables(const Table& expected, const Table& actual,
                        const CompareOptions& options = {});

/// Mismatch feedback: matched cells keep the expected text verbatim, the
/// digits of unmatched body cells are masked as obfuscate_table would mask
/// them. A structural mismatch yields the fully obfuscated expected table.
MaskedTable render_feedback(const Table& expected, const MatchMap& map);

} // namespace artisan
