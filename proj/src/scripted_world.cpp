#include "scripted_world.hpp"

#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "util.hpp"

namespace steproute {

using nlohmann::json;

ScriptedWorld ScriptedWorld::load(const std::string& path, KeyMode mode) {
    ScriptedWorld world;
    world.key_mode_ = mode;
    auto lines = read_lines(path);
    for (size_t i = 0; i < lines.size(); ++i) {
        const std::string& line = lines[i];
        if (trim(line).empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::exception& e) {
            throw IoError(path + ":" + std::to_string(i + 1) + ": parse error: " + e.what());
        }
        auto at_line = [&](const std::string& msg) {
            return IoError(path + ":" + std::to_string(i + 1) + ": " + msg);
        };
        if (!rec.contains("context")) throw at_line("missing field 'context'");
        std::string context_key = rec.at("context").get<std::string>();
        if (rec.contains("role")) {
            Role role = role_from_name(rec.at("role").get<std::string>());
            if (!rec.contains("text")) throw at_line("generator record missing field 'text'");
            int sample = rec.value("sample", -1);
            GenKey key{context_key, static_cast<int>(role), sample};
            if (world.generations_.count(key))
                throw at_line("duplicate generator key (context='" + context_key + "', role=" +
                              role_name(role) + ", sample=" + std::to_string(sample) + ")");
            world.generations_.emplace(std::move(key), rec.at("text").get<std::string>());
        } else if (rec.contains("reward")) {
            if (!rec.contains("step")) throw at_line("reward record missing field 'step'");
            std::pair<std::string, std::string> key{context_key, rec.at("step").get<std::string>()};
            if (world.rewards_.count(key))
                throw at_line("duplicate reward key (context='" + context_key + "')");
            world.rewards_.emplace(std::move(key), rec.at("reward").get<double>());
        } else {
            throw at_line("record is neither a generator entry (role) nor a reward entry");
        }
    }
    return world;
}

void ScriptedWorld::add_generation(const std::string& context_key, Role role, int sample,
                                   const std::string& text) {
    GenKey key{context_key, static_cast<int>(role), sample};
    if (generations_.count(key))
        throw ConfigError("duplicate generator key (context='" + context_key + "')");
    generations_.emplace(std::move(key), text);
}

void ScriptedWorld::add_reward(const std::string& context_key, const std::string& step_text,
                               double reward) {
    std::pair<std::string, std::string> key{context_key, step_text};
    if (rewards_.count(key)) throw ConfigError("duplicate reward key (context='" + context_key + "')");
    rewards_.emplace(std::move(key), reward);
}

std::string ScriptedWorld::key_for(const std::string& context) const {
    return key_mode_ == KeyMode::exact ? context : stable_hash_hex(context);
}

std::string ScriptedWorld::generation_for(const std::string& context, Role role, int sample,
                                          const std::string& fallback_eos) const {
    const std::string key = key_for(context);
    auto it = generations_.find(GenKey{key, static_cast<int>(role), sample});
    if (it == generations_.end())
        it = generations_.find(GenKey{key, static_cast<int>(role), -1});
    if (it != generations_.end()) return it->second;

    if (fallback_) {
        uint64_t h = fnv1a(key);
        h = fnv1a_mix(static_cast<uint64_t>(role), h);
        h = fnv1a_mix(static_cast<uint64_t>(sample), h);
        h = fnv1a_mix(fallback_seed_, h);
        std::string text = "step " + hex64(h).substr(0, 8);
        // One in four fallback steps ends the sequence so fuzzed problems
        // terminate before max_steps.
        if ((h & 3u) == 0) text += fallback_eos;
        return text;
    }
    throw ConfigError("scripted world has no generator entry for (context='" + key +
                      "', role=" + role_name(role) + ", sample=" + std::to_string(sample) + ")");
}

double ScriptedWorld::reward_for(const std::string& context, const std::string& step_text) const {
    const std::string key = key_for(context);
    auto it = rewards_.find({key, step_text});
    if (it != rewards_.end()) return it->second;

    if (fallback_) {
        uint64_t h = fnv1a(step_text, fnv1a(key));
        h = fnv1a_mix(fallback_seed_ ^ 0x9e3779b97f4a7c15ull, h);
        return static_cast<double>((h >> 11) % 10000u) / 9999.0;
    }
    throw ConfigError("scripted world has no reward entry for (context='" + key + "', step='" +
                      step_text + "')");
}

std::optional<double> ScriptedWorld::find_reward(const std::string& context_key,
                                                 const std::string& step_text) const {
    auto it = rewards_.find({context_key, step_text});
    if (it == rewards_.end()) return std::nullopt;
    return it->second;
}

bool ScriptedWorld::has_generation(const std::string& context_key, Role role, int sample) const {
    return generations_.count(GenKey{context_key, static_cast<int>(role), sample}) > 0;
}

ScriptedGenerator::ScriptedGenerator(std::shared_ptr<const ScriptedWorld> world, GeneratorRef ref)
    : world_(std::move(world)), ref_(std::move(ref)) {
    ref_.validate();
}

StepGeneration ScriptedGenerator::generate(const std::string& context, int sample_index) {
    std::string text = world_->generation_for(context, ref_.role, sample_index, ref_.eos_marker);
    // wall_time stays 0 so scripted runs serialize byte-identically.
    return finalize_generation(std::move(text), ref_, LengthUnit::chars, -1, 0.0);
}

ScriptedScorer::ScriptedScorer(std::shared_ptr<const ScriptedWorld> world, ScoreBounds bounds)
    : world_(std::move(world)), bounds_(bounds) {
    bounds_.validate();
}

double ScriptedScorer::score(const std::string& context, const StepText& step) {
    double raw = world_->reward_for(context, step.content);
    bool clamped = false;
    double v = bounds_.normalize(raw, &clamped);
    if (clamped) clamp_warnings_.fetch_add(1);
    return v;
}

} // namespace steproute
