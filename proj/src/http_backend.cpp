#include "http_backend.hpp"

#include <chrono>
#include <cstdlib>
#include <memory>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "errors.hpp"

namespace steproute {

using nlohmann::json;

std::string http_post_json(const std::string& endpoint, const std::string& path,
                           const std::string& body, const HttpSettings& settings,
                           const std::string& auth_env) {
    httplib::Client client(endpoint);
    client.set_connection_timeout(0, settings.connect_timeout_ms * 1000);
    client.set_read_timeout(settings.read_timeout_ms / 1000,
                            (settings.read_timeout_ms % 1000) * 1000);

    httplib::Headers headers;
    if (!auth_env.empty()) {
        const char* token = std::getenv(auth_env.c_str());
        if (!token)
            throw ConfigError("auth environment variable '" + auth_env + "' is not set");
        headers.emplace("Authorization", std::string("Bearer ") + token);
    }

    std::string last_error;
    int backoff_ms = settings.retry_backoff_ms;
    const int attempts = std::max(1, settings.retries);
    for (int attempt = 1; attempt <= attempts; ++attempt) {
        auto res = client.Post(path, headers, body, "application/json");
        if (res && res->status >= 200 && res->status < 300) return res->body;
        if (res) {
            last_error = "HTTP " + std::to_string(res->status) + " from " + endpoint + path;
        } else {
            last_error = "transport error (" + httplib::to_string(res.error()) + ") contacting " +
                         endpoint + path;
        }
        if (attempt < attempts) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
            backoff_ms *= 2;
        }
    }
    throw BackendError(last_error + " after " + std::to_string(attempts) + " attempts", attempts);
}

HttpGenerator::HttpGenerator(GeneratorRef ref, HttpSettings settings, std::string auth_env)
    : ref_(std::move(ref)), settings_(std::move(settings)), auth_env_(std::move(auth_env)) {
    ref_.validate();
    if (ref_.endpoint.empty())
        throw ConfigError(std::string(role_name(ref_.role)) + ".endpoint must be set for http backends");
}

StepGeneration HttpGenerator::generate(const std::string& context, int sample_index) {
    json req{
        {"prompt", context},
        {"stop", json::array({ref_.stop})},
        {"max_tokens", ref_.max_units},
        {"temperature", ref_.sampling.temperature},
        {"seed", ref_.sampling.seed + static_cast<uint64_t>(sample_index)},
    };

    auto t0 = std::chrono::steady_clock::now();
    std::string body =
        http_post_json(ref_.endpoint, settings_.completion_path, req.dump(), settings_, auth_env_);
    double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    json res;
    try {
        res = json::parse(body);
    } catch (const json::exception& e) {
        throw BackendError("unparseable completion response from " + ref_.endpoint + ": " + e.what(),
                           1);
    }

    std::string text;
    long units = -1;
    if (res.contains("text")) {
        text = res.at("text").get<std::string>();
        if (res.contains("units")) units = res.at("units").get<long>();
    } else if (res.contains("choices") && res.at("choices").is_array() &&
               !res.at("choices").empty()) {
        text = res.at("choices").at(0).value("text", std::string());
        if (res.contains("usage") && res.at("usage").contains("completion_tokens"))
            units = res.at("usage").at("completion_tokens").get<long>();
    } else {
        throw BackendError("completion response from " + ref_.endpoint +
                               " carries neither 'text' nor 'choices'",
                           1);
    }

    LengthUnit unit = units >= 0 ? LengthUnit::tokens : LengthUnit::chars;
    return finalize_generation(std::move(text), ref_, unit, units, wall);
}

HttpScorer::HttpScorer(std::string endpoint, ScoreBounds bounds, HttpSettings settings,
                       std::string auth_env)
    : endpoint_(std::move(endpoint)),
      bounds_(bounds),
      settings_(std::move(settings)),
      auth_env_(std::move(auth_env)) {
    bounds_.validate();
    if (endpoint_.empty()) throw ConfigError("scorer.endpoint must be set for http scorers");
}

RouterFn http_router_fn(const std::string& endpoint, const HttpSettings& settings,
                        const std::string& auth_env) {
    // y_hat is already a probability; identity bounds, clamped.
    auto scorer = std::make_shared<HttpScorer>(endpoint, ScoreBounds{0.0, 1.0}, settings, auth_env);
    return [scorer](const RouterInput& in) {
        StepText step;
        step.content = in.draft_text;
        step.is_terminal = in.draft_terminal;
        return scorer->score(in.context, step);
    };
}

double HttpScorer::score(const std::string& context, const StepText& step) {
    json req{{"context", context}, {"step", step.content}};
    std::string body =
        http_post_json(endpoint_, settings_.score_path, req.dump(), settings_, auth_env_);
    json res;
    try {
        res = json::parse(body);
    } catch (const json::exception& e) {
        throw BackendError("unparseable score response from " + endpoint_ + ": " + e.what(), 1);
    }
    if (!res.contains("score"))
        throw BackendError("score response from " + endpoint_ + " missing 'score'", 1);
    double raw = res.at("score").get<double>();
    bool clamped = false;
    double v = bounds_.normalize(raw, &clamped);
    if (clamped) clamp_warnings_.fetch_add(1);
    return v;
}

} // namespace steproute
