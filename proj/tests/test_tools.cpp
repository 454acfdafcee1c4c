#include "doctest.h"

#include "artisan/errors.hpp"
#include "artisan/tools.hpp"
#include "artisan/util.hpp"
#include "test_support.hpp"

using namespace artisan;
namespace at = artisan::testing;

TEST_SUITE_BEGIN("tools");

TEST_CASE("bash_tool renders exit code plus output") {
    SandboxConfig cfg;
    Session s(cfg);
    write_file(s.workspace() / "hello.txt", "x");

    std::string obs = bash_tool(s, "ls");
    CHECK(obs.find("exit code: 0") != std::string::npos);
    CHECK(obs.find("hello.txt") != std::string::npos);

    std::string fail = bash_tool(s, "ls /nonexistent-path-zz");
    CHECK(fail.find("exit code: 0") == std::string::npos);
    CHECK(fail.find("exit code:") != std::string::npos);
    CHECK(fail.find("nonexistent-path-zz") != std::string::npos); // stderr included

    std::string slow = bash_tool(s, "sleep 20", std::chrono::milliseconds(200));
    CHECK(slow.find("timed out") != std::string::npos);
}

TEST_CASE("format command grammar") {
    CHECK(is_format_command("format --table t.md --log l.txt"));
    CHECK_FALSE(is_format_command("grep format file"));

    std::string error;
    auto ok = parse_format_command("format --table t.md --log l.txt --out o.md", &error);
    REQUIRE(ok);
    CHECK(ok->table_path == "t.md");
    CHECK(ok->log_path == "l.txt");
    CHECK(ok->out_path == "o.md");

    CHECK_FALSE(parse_format_command("format --table t.md", &error));
    CHECK(error.find("usage:") != std::string::npos);
    CHECK_FALSE(parse_format_command("format --table t.md --log l.txt --bogus x", &error));
    CHECK(error.find("--bogus") != std::string::npos);
}

TEST_CASE("validate_fill enforces the shape contract") {
    MaskedTable masked{parse_table("| P | N |\n|---|---|\n| a | ?? |\n")};

    CHECK_FALSE(validate_fill(masked, parse_table("| P | N |\n|---|---|\n| a | 42 |\n")));
    // Unfilled placeholders are allowed.
    CHECK_FALSE(validate_fill(masked, parse_table("| P | N |\n|---|---|\n| a | ?? |\n")));

    auto width = validate_fill(masked, parse_table("| P | N |\n|---|---|\n| a | 423 |\n"));
    REQUIRE(width);
    CHECK(width->find("width") != std::string::npos);

    auto letters = validate_fill(masked, parse_table("| P | N |\n|---|---|\n| a | xy |\n"));
    REQUIRE(letters);
    CHECK(letters->find("non-digit") != std::string::npos);

    auto altered = validate_fill(masked, parse_table("| P | N |\n|---|---|\n| b | 42 |\n"));
    REQUIRE(altered);
    CHECK(altered->find("outside") != std::string::npos);
}

TEST_CASE("format tool fills the masked example from the raw log") {
    Table source = parse_table(at::kObfuscationSource);
    MaskedTable masked = obfuscate_table(source);

    // The scripted model fills only the row whose values appear in the log.
    std::string filled_text =
        "**Table 3: Evaluation Results**\n\n"
        "| Project Name | A+ | TW |\n"
        "| ------------ | -- | -- |\n"
        "| MarginSwap   |  6 |  1 |\n"
        "| PoolTogether | ?? |  ? |\n"
        "| Tracer       | ?? |  ? |\n"
        "| Yield Micro  |  ? |  ? |\n";
    ScriptedChatClient client;
    client.push("```\n" + filled_text + "```\n");

    TempDir cache("artisan-tools-");
    FormatTool tool(client, {cache.path(), "test-model", true});
    FormatRequest req{masked, at::kObfuscationLog, "test-model"};

    auto outcome = tool.run(req);
    REQUIRE(outcome.ok);
    CHECK(render_table(outcome.table) == filled_text);
    CHECK(outcome.table.rows[1][1] == "  6 ");
    CHECK(outcome.table.rows[1][2] == "  1 ");
    CHECK(tool.llm_calls() == 1);

    // The prompt carried both the masked table and the raw output.
    REQUIRE(client.seen().size() == 1);
    const std::string& prompt = client.seen()[0][1].content;
    CHECK(prompt.find("| MarginSwap   |  ? |  ? |") != std::string::npos);
    CHECK(prompt.find("Annotation count: 6") != std::string::npos);
}

TEST_CASE("format tool: identical requests are served from cache") {
    Table source = parse_table(at::kObfuscationSource);
    MaskedTable masked = obfuscate_table(source);
    std::string filled_text(at::kObfuscationSource); // fully filled is also valid

    ScriptedChatClient client;
    client.push("```\n" + filled_text + "```\n");

    TempDir cache("artisan-tools-");
    FormatTool tool(client, {cache.path(), "test-model", true});
    FormatRequest req{masked, "Annotation count: 6", "test-model"};

    auto first = tool.run(req);
    REQUIRE(first.ok);
    CHECK(tool.llm_calls() == 1);

    auto second = tool.run(req);
    REQUIRE(second.ok);
    CHECK(tool.llm_calls() == 1); // call counter unchanged
    CHECK(render_table(second.table) == render_table(first.table));
}

TEST_CASE("format tool: no placeholders means no LLM call") {
    Table plain = parse_table("| K | V |\n|---|---|\n| a | b |\n");
    ScriptedChatClient client; // would throw if called
    TempDir cache("artisan-tools-");
    FormatTool tool(client, {cache.path(), "test-model", true});
    auto outcome = tool.run({MaskedTable{plain}, "whatever log", "test-model"});
    REQUIRE(outcome.ok);
    CHECK(client.calls() == 0);
    CHECK(render_table(outcome.table) == render_table(plain));
}

TEST_CASE("format tool: one corrective re-prompt, then a tool error") {
    MaskedTable masked{parse_table("| P | N |\n|---|---|\n| a | ?? |\n")};

    SUBCASE("second response repairs the violation") {
        ScriptedChatClient client;
        client.push("```\n| P | N |\n|---|---|\n| a | 423 |\n```"); // width violation
        client.push("```\n| P | N |\n|---|---|\n| a | 42 |\n```");
        TempDir cache("artisan-tools-");
        FormatTool tool(client, {cache.path(), "m", true});
        auto outcome = tool.run({masked, "value is 42", "m"});
        REQUIRE(outcome.ok);
        CHECK(tool.llm_calls() == 2);
        // The corrective prompt named the violation.
        CHECK(client.seen()[1].back().content.find("shape contract") != std::string::npos);
    }

    SUBCASE("two violations surface as a tool error") {
        ScriptedChatClient client;
        client.push("not a table at all");
        client.push("still not | a table"); // parses as 2 cols, shape changed
        TempDir cache("artisan-tools-");
        FormatTool tool(client, {cache.path(), "m", true});
        auto outcome = tool.run({masked, "value is 42", "m"});
        CHECK_FALSE(outcome.ok);
        CHECK(outcome.error.find("shape contract") != std::string::npos);
    }
}

TEST_CASE("format request cache key is a pure function of its inputs") {
    MaskedTable masked{parse_table("| P |\n|---|\n| ? |\n")};
    FormatRequest a{masked, "log", "m1"};
    FormatRequest b{masked, "log", "m1"};
    FormatRequest c{masked, "log", "m2"};
    FormatRequest d{masked, "other log", "m1"};
    CHECK(a.cache_key() == b.cache_key());
    CHECK(a.cache_key() != c.cache_key());
    CHECK(a.cache_key() != d.cache_key());
}

TEST_SUITE_END();
