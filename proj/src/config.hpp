#pragma once

#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "backends.hpp"
#include "engine.hpp"
#include "http_backend.hpp"
#include "scripted_world.hpp"

namespace steproute {

struct BackendConfig {
    std::string kind = "scripted"; // scripted | http
    std::string endpoint;
    std::string auth_env;
    long max_units = 4096;
    double temperature = 0.0;
    uint64_t seed = 0;
    double unit_price = 1.0;
};

struct ScriptedWorldConfig {
    std::string path;
    std::string key_mode = "exact"; // exact | hash
    bool fallback = false;
    uint64_t fallback_seed = 0;
};

struct TrainSettings {
    int epochs = 200;
    double learning_rate = 0.5;
    uint64_t seed = 7;
    double eval_fraction = 0.2;
    bool balance = true;
    double eval_tau = 0.5;
    std::string corpus;    // defaults to <output_dir>/corpus.jsonl
    std::string model_out; // defaults to <output_dir>/router.json
};

struct EvalSettings {
    double tau = 0.5;
    std::vector<double> taus; // optional grid: emits a per-tau accuracy table
    std::string corpus;
    std::string model;
};

struct SweepSettings {
    std::string mode = "frozen"; // frozen | live
    std::vector<std::string> policies{"rsd", "oracle"};
    std::vector<double> taus;
    int deferral_grid = 0; // frozen budget sweep when > 0
    int samples = 1;       // k for the frozen collection pass
};

struct ReportSettings {
    std::string traces; // defaults to <output_dir>/traces.jsonl
    double tau = 0.5;
    int tau_grid = 0; // waste curve resolution; 0 disables
};

// The full operator-facing configuration: one structured file, environment
// variables for secrets, everything else explicit. Outputs embed
// config_hash (computed with output_dir excluded, so identical pipelines
// into different directories stay byte-identical) and the seed.
struct RunConfig {
    uint64_t seed = 0;
    std::string output_dir = "out";
    std::string questions;
    int parallelism = 1;

    SegmentationConfig seg;
    ScriptedWorldConfig world;
    BackendConfig draft;
    BackendConfig target;
    BackendConfig scorer;
    ScoreBounds score_bounds;

    PolicyConfig policy;
    std::string router_model_path;
    std::string router_endpoint; // router served over the PRM scoring wire contract
    bool collect_counterfactuals = false;
    int collect_samples = 1;
    int collect_sample_questions = 0; // stratified question subsample; 0 = all
    bool annotate_history = false;

    TrainSettings train;
    EvalSettings eval;
    SweepSettings sweep;
    ReportSettings report;
    HttpSettings http;

    std::string config_hash;

    static RunConfig parse(const std::string& json_text);
    static RunConfig load(const std::string& path);

    // Applies a dotted-path override ("policy.tau" = "0.7") onto the raw
    // config and re-derives everything, including the hash.
    void apply_override(const std::string& dotted_key, const std::string& json_value);

    EngineConfig engine_config() const;

    // Per-command validation: referenced input paths must resolve and the
    // fields the command consumes must be coherent. Throws ConfigError
    // naming the offending field. Runs before any backend call.
    void validate_for(const std::string& command) const;

    std::string corpus_path() const;
    std::string model_path() const;
    std::string traces_path() const;

    const nlohmann::json& raw() const { return raw_; }

private:
    nlohmann::json raw_;
    void derive();
};

// Instantiated backends behind the generator/scorer contracts; the scripted
// world, when used, is shared by every scripted backend.
struct BackendSet {
    std::shared_ptr<const ScriptedWorld> world;
    std::unique_ptr<StepGenerator> draft;
    std::unique_ptr<StepGenerator> target;
    std::unique_ptr<StepScorer> scorer;
};

BackendSet make_backends(const RunConfig& cfg);

// Line-delimited question corpus: {"id", "question", "gold_answer"}.
std::vector<Problem> load_problems(const std::string& path);

} // namespace steproute
