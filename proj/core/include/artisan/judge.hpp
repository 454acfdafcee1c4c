#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "artisan/llm.hpp"
#include "artisan/sandbox.hpp"
#include "artisan/table.hpp"

namespace artisan {

// --- execution-based output judge ---

enum class OutputVerdictKind { StaticError, RuntimeError, Mismatch, Success };

std::string output_verdict_name(OutputVerdictKind kind);

struct OutputVerdict {
    OutputVerdictKind kind;
    std::string detail;
    std::optional<MaskedTable> feedback; // Mismatch only
    std::optional<Table> actual;         // Success only
    std::optional<MatchMap> matches;     // Mismatch only
};

struct JudgeConfig {
    std::chrono::milliseconds run_timeout{3'600'000};
    CompareOptions compare;
};

/// Four-way verdict over the submitted script, run in a fresh environment
/// seeded from the snapshot. Mismatch feedback reveals matched cells
/// verbatim and masks the digits of everything else; no digit of an
/// unmatched expected cell ever appears in the verdict.
OutputVerdict judge_output(const Snapshot& snapshot, const Table& expected,
                           ExecutionEngine& engine, const JudgeConfig& config = {});

// --- LLM-based method judge ---

enum class MethodVerdictKind { CopiedResults, LastMile, FullReproduction };

std::string method_verdict_name(MethodVerdictKind kind);

struct MethodVerdict {
    MethodVerdictKind kind;
    std::string rationale;
};

struct FileProvenance {
    std::string path;
    bool pre_existing; // present before the episode's first command
};

struct MethodJudgeConfig {
    std::filesystem::path cache_dir;
    bool cache_enabled = true;
    /// The provenance signal is an extension over a bare file listing;
    /// disable for a judge that sees names only.
    bool include_provenance = true;
};

/// Three-way verdict over how the results were produced. The judge LLM sees
/// the script, the workspace file inventory (with per-file provenance), and
/// the category definitions. An unparseable reply gets one corrective
/// re-prompt and then fails closed to CopiedResults: rejecting is
/// recoverable, accepting a copy is not. Responses are cached keyed by
/// (script digest, inventory digest).
MethodVerdict judge_method(const std::string& script_text,
                           const std::vector<FileProvenance>& inventory,
                           const std::string& context, ChatClient& client,
                           const MethodJudgeConfig& config = {});

} // namespace artisan
