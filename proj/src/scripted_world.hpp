#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <tuple>

#include "backends.hpp"

namespace steproute {

// Deterministic generation/reward tables keyed by context. Identical inputs
// always produce identical outputs, which is what makes full engine runs
// byte-replayable. Immutable after load; safe to share across threads.
//
// File format: one JSON record per line.
//   {"context": K, "role": "draft"|"target", "text": T}            generator entry
//   {"context": K, "role": "target", "sample": 2, "text": T}       per-sample entry
//   {"context": K, "step": S, "reward": R}                         reward entry
// K is the exact context text or its stable 64-bit hash in hex, selected by
// key_mode. Duplicate keys are rejected at load.
class ScriptedWorld {
public:
    enum class KeyMode { exact, hash };

    ScriptedWorld() = default;

    static ScriptedWorld load(const std::string& path, KeyMode mode);

    void set_key_mode(KeyMode mode) { key_mode_ = mode; }
    KeyMode key_mode() const { return key_mode_; }

    // Deterministic pseudo-random fallback for keys not in the tables.
    void enable_fallback(uint64_t seed) {
        fallback_ = true;
        fallback_seed_ = seed;
    }
    bool fallback_enabled() const { return fallback_; }

    void add_generation(const std::string& context_key, Role role, int sample,
                        const std::string& text);
    void add_reward(const std::string& context_key, const std::string& step_text, double reward);

    // Raw step text for (context, role, sample); tries the sample-specific
    // entry, then the sample-agnostic one, then the fallback. Throws
    // ConfigError naming the missing key when nothing applies.
    // fallback_eos is the marker appended when a fallback step terminates.
    std::string generation_for(const std::string& context, Role role, int sample,
                               const std::string& fallback_eos = "<eos>") const;

    // Raw (un-normalized) reward for (context, step text).
    double reward_for(const std::string& context, const std::string& step_text) const;

    // Table lookups without fallback; used by programmatic world builders.
    std::optional<double> find_reward(const std::string& context_key,
                                      const std::string& step_text) const;
    bool has_generation(const std::string& context_key, Role role, int sample) const;

    std::string key_for(const std::string& context) const;

    size_t generation_count() const { return generations_.size(); }
    size_t reward_count() const { return rewards_.size(); }

private:
    // sample -1 = any sample
    using GenKey = std::tuple<std::string, int, int>; // (context_key, role, sample)

    KeyMode key_mode_ = KeyMode::exact;
    std::map<GenKey, std::string> generations_;
    std::map<std::pair<std::string, std::string>, double> rewards_;
    bool fallback_ = false;
    uint64_t fallback_seed_ = 0;
};

// Generator view over a shared world.
class ScriptedGenerator final : public StepGenerator {
public:
    ScriptedGenerator(std::shared_ptr<const ScriptedWorld> world, GeneratorRef ref);

    StepGeneration generate(const std::string& context, int sample_index) override;
    const GeneratorRef& ref() const override { return ref_; }

private:
    std::shared_ptr<const ScriptedWorld> world_;
    GeneratorRef ref_;
};

class ScriptedScorer final : public StepScorer {
public:
    ScriptedScorer(std::shared_ptr<const ScriptedWorld> world, ScoreBounds bounds);

    double score(const std::string& context, const StepText& step) override;

private:
    std::shared_ptr<const ScriptedWorld> world_;
    ScoreBounds bounds_;
};

} // namespace steproute
