#include <benchmark/benchmark.h>

#include <string>

#include "artisan/util.hpp"

namespace {

using namespace artisan;

void BM_Sha256(benchmark::State& state) {
    std::string data(static_cast<std::size_t>(state.range(0)), 'x');
    for (auto _ : state) benchmark::DoNotOptimize(sha256_hex(data));
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * data.size()));
}
BENCHMARK(BM_Sha256)->Arg(1 << 10)->Arg(1 << 16)->Arg(1 << 20);

void BM_TruncateMiddle(benchmark::State& state) {
    std::string data(static_cast<std::size_t>(state.range(0)), 'y');
    for (auto _ : state) benchmark::DoNotOptimize(truncate_middle(data, 20'000));
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * data.size()));
}
BENCHMARK(BM_TruncateMiddle)->Arg(1 << 14)->Arg(1 << 20)->Arg(10 << 20);

void BM_StreamCapture(benchmark::State& state) {
    std::string chunk(4096, 'z');
    auto total = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        StreamCapture cap(20'000, 0.6);
        for (std::size_t fed = 0; fed < total; fed += chunk.size())
            cap.feed(chunk.data(), chunk.size());
        benchmark::DoNotOptimize(cap.str());
    }
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * total));
}
BENCHMARK(BM_StreamCapture)->Arg(1 << 16)->Arg(10 << 20);

} // namespace
