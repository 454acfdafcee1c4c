#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace artisan {

enum class Role { System, User, Assistant };

struct Message {
    Role role;
    std::string content;
};

struct Usage {
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
    bool estimated = false; // set when the provider omitted usage
};

struct Completion {
    std::string text;
    Usage usage;
};

/// Validates the shape every backend expects: non-empty, starts with a
/// system message, and no two consecutive assistant turns. Throws Error.
void validate_history(const std::vector<Message>& messages);

/// Digest of a prompt history, used to key replay fixtures.
std::string prompt_digest(const std::vector<Message>& messages);

class ChatClient {
public:
    virtual ~ChatClient() = default;
    virtual Completion complete(const std::vector<Message>& messages) = 0;
    virtual std::string backend_name() const = 0;
};

// --- cost metering ---

/// Prices in currency units per million tokens.
struct ModelRates {
    double prompt_per_mtok = 0.0;
    double completion_per_mtok = 0.0;
};

double completion_cost(const Usage& usage, const ModelRates& rates);

/// Estimate for providers that omit usage: about 4 characters per token.
std::int64_t estimate_tokens(std::string_view text);

class CostMeter {
public:
    explicit CostMeter(double limit) : limit_(limit) {}
    void add(double cost);
    double total() const;
    double limit() const { return limit_; }
    bool exhausted() const;

private:
    mutable std::mutex mutex_;
    double total_ = 0.0;
    double limit_;
};

/// Wraps a backend with cost accounting and budget enforcement: once the
/// meter reaches its limit no further provider call is issued.
class MeteredClient : public ChatClient {
public:
    MeteredClient(ChatClient& inner, ModelRates rates, CostMeter& meter)
        : inner_(inner), rates_(rates), meter_(meter) {}

    Completion complete(const std::vector<Message>& messages) override;
    std::string backend_name() const override { return inner_.backend_name(); }
    int calls() const { return calls_; }

private:
    ChatClient& inner_;
    ModelRates rates_;
    CostMeter& meter_;
    int calls_ = 0;
};

// --- backends ---

/// Simple shared limiter that spaces out provider calls.
class RateLimiter {
public:
    explicit RateLimiter(std::chrono::milliseconds min_interval)
        : min_interval_(min_interval) {}
    void acquire();

private:
    std::mutex mutex_;
    std::chrono::milliseconds min_interval_;
    std::chrono::steady_clock::time_point last_{};
};

/// OpenAI-style chat completions over HTTPS. Transient failures are retried
/// up to 3 times with backoff; anything that survives becomes LlmError.
class HttpChatClient : public ChatClient {
public:
    struct Config {
        std::string base_url = "https://api.openai.com";
        std::string path = "/v1/chat/completions";
        std::string api_key;     // from environment unless set explicitly
        std::string model;
        double temperature = 0.0;
        int max_retries = 3;
        std::chrono::milliseconds retry_backoff{500};
        std::chrono::milliseconds request_timeout{120'000};
        std::shared_ptr<RateLimiter> rate_limiter; // optional
    };

    explicit HttpChatClient(Config config);
    Completion complete(const std::vector<Message>& messages) override;
    std::string backend_name() const override { return "http"; }

private:
    Config config_;
};

/// Deterministic offline backend. Fixture format: one JSON record per line
/// with fields {turn, prompt_digest, response, usage:{prompt_tokens,
/// completion_tokens}}. Records are matched by turn index and, unless the
/// recorded digest is "*", the prompt digest must match, so fixture drift
/// fails loudly.
class ReplayChatClient : public ChatClient {
public:
    explicit ReplayChatClient(const std::filesystem::path& fixture);
    Completion complete(const std::vector<Message>& messages) override;
    std::string backend_name() const override { return "replay"; }
    std::size_t remaining() const { return records_.size() - next_; }

private:
    struct Record {
        std::string digest;
        std::string response;
        Usage usage;
    };
    std::vector<Record> records_;
    std::size_t next_ = 0;
    std::filesystem::path fixture_;
};

/// Wraps a backend and writes a replay fixture of everything that passes
/// through it.
class RecordingChatClient : public ChatClient {
public:
    RecordingChatClient(ChatClient& inner, const std::filesystem::path& fixture);
    ~RecordingChatClient();
    Completion complete(const std::vector<Message>& messages) override;
    std::string backend_name() const override { return inner_.backend_name() + "+record"; }

private:
    ChatClient& inner_;
    std::filesystem::path fixture_;
    std::vector<std::string> lines_;
    int turn_ = 0;
};

/// In-memory backend for tests: returns queued responses in order and keeps
/// every prompt history it has seen.
class ScriptedChatClient : public ChatClient {
public:
    void push(std::string response, Usage usage = {10, 10, false});
    Completion complete(const std::vector<Message>& messages) override;
    std::string backend_name() const override { return "scripted"; }
    int calls() const { return calls_; }
    const std::vector<std::vector<Message>>& seen() const { return seen_; }

private:
    std::vector<Completion> queue_;
    std::size_t next_ = 0;
    int calls_ = 0;
    std::vector<std::vector<Message>> seen_;
};

// --- agent step parsing ---

inline constexpr std::string_view kSubmitToken = "COMPLETE_TASK_AND_SUBMIT_FINAL_OUTPUT";
inline constexpr std::string_view kSubmitSentinel = "echo COMPLETE_TASK_AND_SUBMIT_FINAL_OUTPUT";

struct ParsedStep {
    std::string thought;
    std::string action;

    bool is_submit() const;
};

/// Either a step or a format violation the agent loop turns into a
/// corrective observation.
struct StepParseResult {
    std::optional<ParsedStep> step;
    std::string violation;
};

/// Extract the single action from an assistant response: one fenced code
/// block, or one "ACTION: <cmd>" line, or a bare submit-sentinel line. Zero
/// or multiple candidates are a format violation, never a crash.
StepParseResult parse_step(std::string_view assistant_text);

/// Canonical rendering of a step; parse_step(render_step(s)) == s for
/// well-formed steps.
std::string render_step(const ParsedStep& step);

} // namespace artisan
