#pragma once

#include <string>

#include "backends.hpp"
#include "router.hpp"

namespace steproute {

// Transport settings shared by the completion and scoring clients.
struct HttpSettings {
    std::string completion_path = "/v1/completions";
    std::string score_path = "/score";
    int connect_timeout_ms = 5000;
    int read_timeout_ms = 60000;
    int retries = 3;          // total attempts
    int retry_backoff_ms = 250; // doubled after each failed attempt
};

// Completion-with-stop-sequences client. Request JSON:
//   {"prompt": ..., "stop": [sep], "max_tokens": N, "temperature": T, "seed": S}
// Response: {"text": ..., "units": N} or the common
// {"choices":[{"text": ...}], "usage":{"completion_tokens": N}} layout.
// The auth token, when configured, is read from the named environment
// variable and sent as a bearer header.
class HttpGenerator final : public StepGenerator {
public:
    HttpGenerator(GeneratorRef ref, HttpSettings settings, std::string auth_env);

    StepGeneration generate(const std::string& context, int sample_index) override;
    const GeneratorRef& ref() const override { return ref_; }

private:
    GeneratorRef ref_;
    HttpSettings settings_;
    std::string auth_env_;
};

// PRM scoring client. Request: {"context": ..., "step": ...};
// response: {"score": raw}. Raw scores pass through the configured bounds.
class HttpScorer final : public StepScorer {
public:
    HttpScorer(std::string endpoint, ScoreBounds bounds, HttpSettings settings,
               std::string auth_env);

    double score(const std::string& context, const StepText& step) override;

private:
    std::string endpoint_;
    ScoreBounds bounds_;
    HttpSettings settings_;
    std::string auth_env_;
};

// POSTs `body` to endpoint+path with retry/backoff; returns the response
// body. Throws BackendError carrying the attempt count after exhaustion.
std::string http_post_json(const std::string& endpoint, const std::string& path,
                           const std::string& body, const HttpSettings& settings,
                           const std::string& auth_env);

// A router served behind the same scoring wire contract as the PRM: the
// endpoint receives (context, draft step) and returns y_hat as its score.
RouterFn http_router_fn(const std::string& endpoint, const HttpSettings& settings,
                        const std::string& auth_env);

} // namespace steproute
