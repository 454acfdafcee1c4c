#include <benchmark/benchmark.h>

#include <random>
#include <string>

#include "artisan/table.hpp"

namespace {

using namespace artisan;

std::string synthetic_table(std::size_t rows, std::size_t cols) {
    std::mt19937 rng(12345);
    std::string out = "**Table 1: Synthetic**\n\n";
    auto row = [&](bool align) {
        std::string line = "|";
        for (std::size_t j = 0; j < cols; ++j) {
            if (align) {
                line += "---|";
            } else {
                line += " v" + std::to_string(rng() % 100000) + "," +
                        std::to_string(rng() % 1000) + " |";
            }
        }
        return line + "\n";
    };
    out += row(false);
    out += row(true);
    for (std::size_t i = 0; i < rows; ++i) out += row(false);
    return out;
}

void BM_ParseTable(benchmark::State& state) {
    std::string source = synthetic_table(static_cast<std::size_t>(state.range(0)), 8);
    for (auto _ : state) benchmark::DoNotOptimize(parse_table(source));
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * source.size()));
}
BENCHMARK(BM_ParseTable)->Arg(16)->Arg(128)->Arg(1024);

void BM_Obfuscate(benchmark::State& state) {
    Table t = parse_table(synthetic_table(static_cast<std::size_t>(state.range(0)), 8));
    for (auto _ : state) benchmark::DoNotOptimize(obfuscate_table(t));
}
BENCHMARK(BM_Obfuscate)->Arg(16)->Arg(128)->Arg(1024);

void BM_CompareAndFeedback(benchmark::State& state) {
    Table expected = parse_table(synthetic_table(static_cast<std::size_t>(state.range(0)), 8));
    Table actual = expected;
    for (std::size_t i = actual.header_rows; i < actual.rows.size(); i += 3)
        actual.rows[i][2] += "x";
    for (auto _ : state) {
        MatchMap map = compare_tables(expected, actual);
        benchmark::DoNotOptimize(render_feedback(expected, map));
    }
}
BENCHMARK(BM_CompareAndFeedback)->Arg(16)->Arg(128)->Arg(1024);

void BM_RenderTable(benchmark::State& state) {
    Table t = parse_table(synthetic_table(static_cast<std::size_t>(state.range(0)), 8));
    for (auto _ : state) benchmark::DoNotOptimize(render_table(t));
}
BENCHMARK(BM_RenderTable)->Arg(16)->Arg(1024);

} // namespace
