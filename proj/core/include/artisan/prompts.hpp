#pragma once

#include <string>

namespace artisan {

// Prompt templates live under core/assets/ as versioned text files and are
// embedded at build time.
inline constexpr int kPromptVersion = 1;

const std::string& agent_system_prompt();
const std::string& format_tool_prompt();
const std::string& method_judge_prompt();

} // namespace artisan
