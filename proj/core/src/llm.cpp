#include "artisan/llm.hpp"

#include <cmath>
#include <fstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "artisan/errors.hpp"
#include "artisan/util.hpp"

namespace artisan {

namespace {

using nlohmann::json;

const char* role_name(Role role) {
    switch (role) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
    }
    return "user";
}

} // namespace

void validate_history(const std::vector<Message>& messages) {
    if (messages.empty()) throw Error("chat history is empty");
    if (messages.front().role != Role::System)
        throw Error("chat history must start with a system message");
    for (std::size_t i = 1; i < messages.size(); ++i) {
        if (messages[i].role == Role::Assistant && messages[i - 1].role == Role::Assistant)
            throw Error("chat history has two consecutive assistant turns");
    }
}

std::string prompt_digest(const std::vector<Message>& messages) {
    std::string canon;
    for (const auto& m : messages) {
        canon += role_name(m.role);
        canon += '\x1f';
        canon += m.content;
        canon += '\x1e';
    }
    return sha256_hex(canon);
}

double completion_cost(const Usage& usage, const ModelRates& rates) {
    return static_cast<double>(usage.prompt_tokens) * rates.prompt_per_mtok / 1e6 +
           static_cast<double>(usage.completion_tokens) * rates.completion_per_mtok / 1e6;
}

std::int64_t estimate_tokens(std::string_view text) {
    return static_cast<std::int64_t>((text.size() + 3) / 4);
}

void CostMeter::add(double cost) {
    std::lock_guard lock(mutex_);
    total_ += cost;
}

double CostMeter::total() const {
    std::lock_guard lock(mutex_);
    return total_;
}

bool CostMeter::exhausted() const {
    std::lock_guard lock(mutex_);
    return total_ >= limit_;
}

Completion MeteredClient::complete(const std::vector<Message>& messages) {
    if (meter_.exhausted())
        throw BudgetExhausted("cost limit reached: " + std::to_string(meter_.total()) + " of " +
                              std::to_string(meter_.limit()));
    Completion c = inner_.complete(messages);
    meter_.add(completion_cost(c.usage, rates_));
    ++calls_;
    return c;
}

void RateLimiter::acquire() {
    std::lock_guard lock(mutex_);
    auto now = std::chrono::steady_clock::now();
    if (last_.time_since_epoch().count() != 0) {
        auto next = last_ + min_interval_;
        if (now < next) {
            std::this_thread::sleep_for(next - now);
            now = std::chrono::steady_clock::now();
        }
    }
    last_ = now;
}

// --- HTTP backend ---

HttpChatClient::HttpChatClient(Config config) : config_(std::move(config)) {
    if (config_.model.empty()) throw ConfigError("http chat client needs a model id");
    if (config_.api_key.empty()) {
        const char* key = std::getenv("ARTISAN_API_KEY");
        if (key) config_.api_key = key;
    }
    if (config_.api_key.empty())
        throw ConfigError("no API key: set ARTISAN_API_KEY or pass one explicitly");
}

Completion HttpChatClient::complete(const std::vector<Message>& messages) {
    validate_history(messages);

    json body;
    body["model"] = config_.model;
    body["temperature"] = config_.temperature;
    json jmsgs = json::array();
    std::size_t prompt_chars = 0;
    for (const auto& m : messages) {
        jmsgs.push_back({{"role", role_name(m.role)}, {"content", m.content}});
        prompt_chars += m.content.size();
    }
    body["messages"] = std::move(jmsgs);
    const std::string payload = body.dump();

    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0)
            std::this_thread::sleep_for(config_.retry_backoff * (1 << (attempt - 1)));
        if (config_.rate_limiter) config_.rate_limiter->acquire();

        httplib::Client cli(config_.base_url);
        cli.set_connection_timeout(30);
        auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.request_timeout);
        cli.set_read_timeout(static_cast<time_t>(secs.count()), 0);
        cli.set_follow_location(true);
        httplib::Headers headers{{"Authorization", "Bearer " + config_.api_key}};

        auto res = cli.Post(config_.path, headers, payload, "application/json");
        if (!res) {
            last_error = "connection failure: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "provider returned status " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200)
            throw LlmError("provider returned status " + std::to_string(res->status) + ": " +
                           res->body.substr(0, 500));

        json parsed;
        try {
            parsed = json::parse(res->body);
        } catch (const json::exception& e) {
            throw LlmError(std::string("unparseable provider response: ") + e.what());
        }
        Completion out;
        try {
            out.text = parsed.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const json::exception& e) {
            throw LlmError(std::string("provider response missing content: ") + e.what());
        }
        if (parsed.contains("usage")) {
            const auto& u = parsed["usage"];
            out.usage.prompt_tokens = u.value("prompt_tokens", std::int64_t{0});
            out.usage.completion_tokens = u.value("completion_tokens", std::int64_t{0});
        } else {
            out.usage.prompt_tokens = estimate_tokens(std::string(prompt_chars, ' '));
            out.usage.completion_tokens = estimate_tokens(out.text);
            out.usage.estimated = true;
        }
        return out;
    }
    throw LlmError("provider failed after " + std::to_string(config_.max_retries + 1) +
                   " attempts: " + last_error);
}

// --- replay / record ---

ReplayChatClient::ReplayChatClient(const std::filesystem::path& fixture) : fixture_(fixture) {
    std::ifstream in(fixture);
    if (!in) throw ConfigError("cannot open replay fixture: " + fixture.string());
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError("replay fixture " + fixture.string() + " line " +
                             std::to_string(line_no) + ": " + e.what());
        }
        Record r;
        r.digest = j.value("prompt_digest", std::string("*"));
        r.response = j.at("response").get<std::string>();
        if (j.contains("usage")) {
            r.usage.prompt_tokens = j["usage"].value("prompt_tokens", std::int64_t{0});
            r.usage.completion_tokens = j["usage"].value("completion_tokens", std::int64_t{0});
        }
        records_.push_back(std::move(r));
    }
}

Completion ReplayChatClient::complete(const std::vector<Message>& messages) {
    validate_history(messages);
    if (next_ >= records_.size())
        throw LlmError("replay fixture exhausted after " + std::to_string(records_.size()) +
                       " turns (" + fixture_.string() + ")");
    const Record& r = records_[next_];
    if (r.digest != "*") {
        std::string got = prompt_digest(messages);
        if (got != r.digest)
            throw LlmError("replay fixture drift at turn " + std::to_string(next_) +
                           ": prompt digest " + got + " does not match recorded " + r.digest);
    }
    ++next_;
    return {r.response, r.usage};
}

RecordingChatClient::RecordingChatClient(ChatClient& inner, const std::filesystem::path& fixture)
    : inner_(inner), fixture_(fixture) {}

RecordingChatClient::~RecordingChatClient() {
    std::string all;
    for (const auto& l : lines_) {
        all += l;
        all += '\n';
    }
    try {
        write_file(fixture_, all);
    } catch (...) {
        // Destructor must not throw; a failed fixture write surfaces as a
        // missing file when the fixture is replayed.
    }
}

Completion RecordingChatClient::complete(const std::vector<Message>& messages) {
    Completion c = inner_.complete(messages);
    json j;
    j["turn"] = turn_++;
    j["prompt_digest"] = prompt_digest(messages);
    j["response"] = c.text;
    j["usage"] = {{"prompt_tokens", c.usage.prompt_tokens},
                  {"completion_tokens", c.usage.completion_tokens}};
    lines_.push_back(j.dump());
    return c;
}

void ScriptedChatClient::push(std::string response, Usage usage) {
    queue_.push_back({std::move(response), usage});
}

Completion ScriptedChatClient::complete(const std::vector<Message>& messages) {
    validate_history(messages);
    seen_.push_back(messages);
    ++calls_;
    if (next_ >= queue_.size())
        throw LlmError("scripted responses exhausted after " + std::to_string(queue_.size()) +
                       " turns");
    return queue_[next_++];
}

// --- step parsing ---

bool ParsedStep::is_submit() const { return trim(action) == kSubmitSentinel; }

StepParseResult parse_step(std::string_view assistant_text) {
    auto lines = split_lines(assistant_text);

    struct Candidate {
        std::string action;
        std::string preview;
    };
    std::vector<Candidate> candidates;

    bool in_fence = false;
    std::string fence_buf;
    std::size_t first_marker_line = lines.size();

    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string t = trim(lines[i]);
        if (t.rfind("```", 0) == 0) {
            if (!in_fence) {
                in_fence = true;
                fence_buf.clear();
                first_marker_line = std::min(first_marker_line, i);
            } else {
                in_fence = false;
                std::string action = fence_buf;
                while (!action.empty() && action.back() == '\n') action.pop_back();
                candidates.push_back({action, split_lines(action).empty()
                                                  ? std::string()
                                                  : split_lines(action).front()});
            }
            continue;
        }
        if (in_fence) {
            fence_buf += lines[i];
            fence_buf += '\n';
            continue;
        }
        if (t.rfind("ACTION:", 0) == 0) {
            std::string rest = trim(t.substr(7));
            if (!rest.empty()) {
                candidates.push_back({rest, rest});
                first_marker_line = std::min(first_marker_line, i);
            } else {
                first_marker_line = std::min(first_marker_line, i);
            }
            continue;
        }
        // Bare submit sentinel on its own line (as seen in raw trajectories).
        if (t == kSubmitSentinel) {
            candidates.push_back({t, t});
            first_marker_line = std::min(first_marker_line, i);
        }
    }

    if (in_fence)
        return {std::nullopt, "unterminated fenced code block"};
    if (candidates.empty())
        return {std::nullopt,
                "no action found; reply with THOUGHT followed by exactly one command in a "
                "fenced code block"};
    if (candidates.size() > 1) {
        std::string msg = "expected exactly one action, found " +
                          std::to_string(candidates.size()) + ":";
        for (const auto& c : candidates) msg += "\n  - " + c.preview;
        return {std::nullopt, msg};
    }

    ParsedStep step;
    step.action = trim(candidates.front().action);
    if (step.action.empty()) return {std::nullopt, "action is empty"};

    // Thought: the text before the action marker, with an optional THOUGHT:
    // prefix stripped.
    std::string thought;
    for (std::size_t i = 0; i < first_marker_line && i < lines.size(); ++i) {
        if (!thought.empty()) thought += "\n";
        thought += lines[i];
    }
    thought = trim(thought);
    if (starts_with_ci(thought, "THOUGHT:")) thought = trim(std::string_view(thought).substr(8));
    step.thought = std::move(thought);
    return {step, ""};
}

std::string render_step(const ParsedStep& step) {
    std::string out = "THOUGHT: " + step.thought + "\n\n```bash\n" + step.action + "\n```\n";
    return out;
}

} // namespace artisan
