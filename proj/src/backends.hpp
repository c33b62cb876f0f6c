#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>

#include "step_model.hpp"

namespace steproute {

enum class Role { draft, target };

const char* role_name(Role r);
Role role_from_name(const std::string& name); // throws ConfigError on unknown

// History annotation written in front of a step when annotate_history is
// on: "Model 0: " for kept drafts, "Model 1: " for escalated steps. Both
// the engine (when building contexts) and the router features (when
// reading them back) use these.
const char* annotation_tag(Role chosen);                 // "Model 0" / "Model 1"
std::string annotation_prefix(Role chosen);              // tag + ": "

struct SamplingParams {
    double temperature = 0.0;
    uint64_t seed = 0;
};

// Opaque reference to a step generator: which role it plays, where it lives
// (HTTP endpoint or scripted world), and how generation is bounded.
struct GeneratorRef {
    Role role = Role::draft;
    std::string endpoint;        // URL for http backends; label for scripted ones
    std::string stop;            // step separator, passed as a stop sequence
    std::string eos_marker;
    long max_units = 4096;       // per-step generation cap
    SamplingParams sampling;
    double unit_price = 1.0;     // configured per-unit cost for this role

    void validate() const;
};

struct GenerationCost {
    double wall_time = 0.0; // seconds; exactly 0 for scripted backends (replay determinism)
    long units = 0;
    LengthUnit unit = LengthUnit::chars;
    double unit_price = 0.0;

    double total() const { return static_cast<double>(units) * unit_price; }
};

struct StepGeneration {
    StepText step;
    Role producer = Role::draft;
    GenerationCost cost;
    bool truncated = false; // hit max_units before a separator or eos
};

class StepGenerator {
public:
    virtual ~StepGenerator() = default;
    // One candidate step continuing `context`. sample_index distinguishes
    // repeated samples from the same prefix (multi-sample target scoring);
    // it perturbs the backend seed / scripted key, never the context.
    virtual StepGeneration generate(const std::string& context, int sample_index) = 0;
    virtual const GeneratorRef& ref() const = 0;
};

// Affine normalization applied to every raw reward before it leaves a
// scorer. Draft and target scores go through the same bounds so the
// advantage is computed on a common scale.
struct ScoreBounds {
    double lo = 0.0;
    double hi = 1.0;

    void validate() const;
    // (raw - lo) / (hi - lo), clamped to [0,1]. `clamped` reports whether
    // the raw value fell outside the configured bounds.
    double normalize(double raw, bool* clamped = nullptr) const;
};

class StepScorer {
public:
    virtual ~StepScorer() = default;
    // Normalized reward in [0,1] for `step` in `context`.
    virtual double score(const std::string& context, const StepText& step) = 0;
    // Count of raw scores that fell outside the configured bounds and were
    // clamped; surfaced in run summaries.
    long clamp_warnings() const { return clamp_warnings_.load(); }

protected:
    std::atomic<long> clamp_warnings_{0};
};

// Shared post-processing for raw generated text: cut at the first stop
// occurrence, strip a trailing eos marker (setting the terminal flag), then
// enforce the unit cap. Used by the scripted and HTTP backends alike so the
// step contract has one implementation.
StepGeneration finalize_generation(std::string text, const GeneratorRef& ref,
                                   LengthUnit unit, long backend_units, double wall_time);

} // namespace steproute
