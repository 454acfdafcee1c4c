#include <random>

#include "doctest.h"

#include "artisan/errors.hpp"
#include "artisan/table.hpp"
#include "test_support.hpp"

using namespace artisan;
namespace at = artisan::testing;

TEST_SUITE_BEGIN("table");

TEST_CASE("parse: obfuscation example shape") {
    Table t = parse_table(at::kObfuscationSource);
    CHECK(t.caption == "**Table 3: Evaluation Results**");
    CHECK(t.col_count() == 3);
    CHECK(t.header_rows == 1);
    CHECK(t.body_row_count() == 4);
    CHECK(t.alignment_row_present);
    CHECK(normalize_cell(t.rows[0][0]) == "Project Name");
    CHECK(normalize_cell(t.rows[0][1]) == "A+");
    CHECK(normalize_cell(t.rows[0][2]) == "TW");
    CHECK(normalize_cell(t.rows[1][0]) == "MarginSwap");
}

TEST_CASE("parse: header-only table has zero body rows") {
    Table t = parse_table("| A | B |\n|---|---|\n");
    CHECK(t.header_rows == 1);
    CHECK(t.body_row_count() == 0);

    Table bare = parse_table("| A | B |");
    CHECK(bare.header_rows == 1);
    CHECK(bare.body_row_count() == 0);
}

TEST_CASE("parse: optional outer pipes and errors") {
    Table t = parse_table("A | B\n1 | 2\n");
    CHECK(t.col_count() == 2);
    CHECK(t.header_rows == 1);
    CHECK_FALSE(t.alignment_row_present);

    CHECK_THROWS_WITH_AS(parse_table("no pipes here\nat all\n"),
                         doctest::Contains("no table found"), ParseError);
    CHECK_THROWS_WITH_AS(parse_table("| a | b |\n| c |\n"), doctest::Contains("line 2"),
                         ParseError);
}

TEST_CASE("render: byte-stable round trip for piped input") {
    std::string source(at::kObfuscationSource);
    CHECK(render_table(parse_table(source)) == source);
    std::string feedback(at::kFeedbackExpected);
    CHECK(render_table(parse_table(feedback)) == feedback);
}

TEST_CASE("obfuscate: golden masking") {
    Table t = parse_table(at::kObfuscationSource);
    MaskedTable masked = obfuscate_table(t);
    CHECK(render_table(masked) == at::kObfuscationMasked);
}

TEST_CASE("obfuscate: comma-grouped values keep their punctuation") {
    Table t = parse_table("| K |\n|---|\n| 260,249 |\n");
    CHECK(obfuscate_table(t).base.rows[1][0] == " ???,??? ");
}

TEST_CASE("obfuscate: digit-free body passes through") {
    std::string source = "| Name | Tag |\n|------|-----|\n| alpha | x |\n";
    Table t = parse_table(source);
    CHECK(render_table(obfuscate_table(t)) == source);
}

TEST_CASE("obfuscate: idempotent and only-digit masking (property)") {
    std::mt19937 rng(20260810);
    for (int iter = 0; iter < 200; ++iter) {
        Table t = at::random_table(rng);
        MaskedTable once = obfuscate_table(t);
        MaskedTable twice = obfuscate_table(once.base);
        CHECK(at::same_grid(once.base, twice.base));

        REQUIRE(once.base.row_count() == t.row_count());
        REQUIRE(once.base.col_count() == t.col_count());
        for (std::size_t i = 0; i < t.rows.size(); ++i) {
            for (std::size_t j = 0; j < t.rows[i].size(); ++j) {
                const std::string& orig = t.rows[i][j];
                const std::string& masked = once.base.rows[i][j];
                REQUIRE(orig.size() == masked.size());
                bool is_header = i < t.header_rows;
                for (std::size_t k = 0; k < orig.size(); ++k) {
                    if (is_header || !std::isdigit(static_cast<unsigned char>(orig[k])))
                        CHECK(masked[k] == orig[k]);
                    else
                        CHECK(masked[k] == '?');
                }
            }
        }
    }
}

TEST_CASE("round trip: parse(render(t)) preserves the grid (property)") {
    std::mt19937 rng(42);
    for (int iter = 0; iter < 200; ++iter) {
        Table t = at::random_table(rng);
        Table back = parse_table(render_table(t));
        CHECK(at::same_grid(t, back));
    }
}

TEST_CASE("compare: feedback example matches per cell") {
    Table expected = parse_table(at::kFeedbackExpected);
    Table actual = parse_table(at::kFeedbackActual);
    MatchMap map = compare_tables(expected, actual);
    CHECK_FALSE(map.structural_mismatch);
    CHECK(map.matched[1][1]); // Resolved
    CHECK(map.matched[1][2]); // 7,799,929
    CHECK(map.matched[2][1]); // Unresolved (label)
    CHECK_FALSE(map.matched[2][2]); // 260,249 vs 168,482
    CHECK(map.matched_count() == map.cell_count() - 1);
}

TEST_CASE("compare: identity matches everything") {
    Table expected = parse_table(at::kFeedbackExpected);
    MatchMap map = compare_tables(expected, expected);
    CHECK(map.all_matched());
}

TEST_CASE("compare: dimension mismatch is structural, zero matched") {
    Table expected = parse_table("| A | B | C |\n|--|--|--|\n| 1 | 2 | 3 |\n");
    Table actual = parse_table("| A | B |\n|--|--|\n| 1 | 2 |\n");
    MatchMap map = compare_tables(expected, actual);
    CHECK(map.structural_mismatch);
    CHECK_FALSE(map.all_matched());
    // Brute-force: every cell reports unmatched.
    for (const auto& row : map.matched)
        for (bool m : row) CHECK_FALSE(m);
}

TEST_CASE("compare: whitespace normalized, commas significant") {
    Table a = parse_table("| K |\n|---|\n|  7,799,929 |\n");
    Table b = parse_table("| K |\n|---|\n| 7,799,929   |\n");
    CHECK(compare_tables(a, b).all_matched());

    Table c = parse_table("| K |\n|---|\n| 7799929 |\n");
    CHECK_FALSE(compare_tables(a, c).all_matched());
}

TEST_CASE("compare: opt-in numeric tolerance") {
    Table a = parse_table("| K |\n|---|\n| 0.501 |\n");
    Table b = parse_table("| K |\n|---|\n| 0.499 |\n");
    CHECK_FALSE(compare_tables(a, b).all_matched());

    CompareOptions opt;
    opt.abs_eps = 0.01;
    CHECK(compare_tables(a, b, opt).all_matched());

    CompareOptions rel;
    rel.rel_eps = 0.001;
    CHECK_FALSE(compare_tables(a, b, rel).all_matched());
    rel.rel_eps = 0.05;
    CHECK(compare_tables(a, b, rel).all_matched());

    // Comma-grouped numbers parse in tolerance mode.
    Table x = parse_table("| K |\n|---|\n| 1,000 |\n");
    Table y = parse_table("| K |\n|---|\n| 1000.2 |\n");
    CompareOptions loose;
    loose.abs_eps = 0.5;
    CHECK(compare_tables(x, y, loose).all_matched());
}

TEST_CASE("feedback: golden output") {
    Table expected = parse_table(at::kFeedbackExpected);
    Table actual = parse_table(at::kFeedbackActual);
    MaskedTable feedback = render_feedback(expected, compare_tables(expected, actual));
    CHECK(render_table(feedback) == at::kFeedbackMasked);
}

TEST_CASE("feedback: all-matched equals expected, none-matched equals obfuscation") {
    Table expected = parse_table(at::kObfuscationSource);
    MatchMap all = compare_tables(expected, expected);
    CHECK(render_table(render_feedback(expected, all)) == at::kObfuscationSource);

    MatchMap none;
    none.rows = expected.row_count();
    none.cols = expected.col_count();
    none.matched.assign(none.rows, std::vector<bool>(none.cols, false));
    CHECK(render_table(render_feedback(expected, none)) ==
          render_table(obfuscate_table(expected)));
}

TEST_CASE("feedback: unmatched cells never leak digits (property)") {
    std::mt19937 rng(777);
    for (int iter = 0; iter < 200; ++iter) {
        Table expected = at::random_table(rng);
        Table actual = expected;
        // Mutate a random subset of body cells.
        for (std::size_t i = expected.header_rows; i < actual.rows.size(); ++i)
            for (auto& cell : actual.rows[i])
                if (rng() % 3 == 0) cell = "z" + cell;

        MatchMap map = compare_tables(expected, actual);
        MaskedTable feedback = render_feedback(expected, map);
        for (std::size_t i = expected.header_rows; i < expected.rows.size(); ++i) {
            for (std::size_t j = 0; j < expected.rows[i].size(); ++j) {
                const std::string& out = feedback.base.rows[i][j];
                if (map.matched[i][j]) {
                    CHECK(out == expected.rows[i][j]);
                } else {
                    for (char c : out) CHECK_FALSE(std::isdigit(static_cast<unsigned char>(c)));
                }
            }
        }
    }
}

TEST_CASE("compare: symmetric matched counts (property)") {
    std::mt19937 rng(1234);
    for (int iter = 0; iter < 100; ++iter) {
        Table a = at::random_table(rng);
        Table b = a;
        for (auto& row : b.rows)
            for (auto& cell : row)
                if (rng() % 2 == 0) cell += "x";
        CHECK(compare_tables(a, b).matched_count() == compare_tables(b, a).matched_count());
    }
}

TEST_SUITE_END();
