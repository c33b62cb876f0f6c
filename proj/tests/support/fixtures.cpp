#include "support/fixtures.hpp"

#include <cmath>
#include <functional>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "util.hpp"

namespace steproute::testing {

using nlohmann::json;

SegmentationConfig default_seg() {
    SegmentationConfig seg;
    seg.separator = "\n\n";
    seg.eos_marker = "<eos>";
    seg.max_steps = 32;
    return seg;
}

namespace {

struct EntrySink {
    std::function<void(const std::string&, Role, int, const std::string&)> generation;
    std::function<void(const std::string&, const std::string&, double)> reward;
};

struct Finalized {
    std::string content;
    bool terminal;
};

Finalized finalize(const std::string& text, const SegmentationConfig& seg) {
    if (text.find(seg.separator) != std::string::npos)
        throw std::logic_error("fixture step text contains the separator: " + text);
    if (ends_with(text, seg.eos_marker))
        return {text.substr(0, text.size() - seg.eos_marker.size()), true};
    return {text, false};
}

// Walks the decision tree exactly the way the engine builds contexts,
// emitting generator and reward entries for every reachable prefix.
void emit_question(const QuestionSpec& q, const SegmentationConfig& seg, bool annotate,
                   const EntrySink& sink) {
    std::set<std::string> visited;
    std::set<std::pair<std::string, std::string>> rewarded;

    std::function<void(size_t, const std::string&)> walk = [&](size_t i,
                                                               const std::string& prefix) {
        if (i >= q.steps.size()) return;
        if (!visited.insert(prefix).second) return;
        const StepSpec& st = q.steps[i];
        if (st.target_texts.size() != st.target_rewards.size())
            throw std::logic_error("fixture step has mismatched target texts/rewards");

        auto emit_reward = [&](const std::string& content, double value) {
            if (content.empty()) return; // empty steps are never scored
            auto key = std::make_pair(prefix, content);
            if (!rewarded.insert(key).second) return;
            sink.reward(prefix, content, value);
        };

        Finalized draft = finalize(st.draft_text, seg);
        sink.generation(prefix, Role::draft, -1, st.draft_text);
        emit_reward(draft.content, st.draft_reward);

        // Sample 0 doubles as the wildcard entry: collecting more samples
        // than were scripted deterministically repeats it, the way a
        // deterministic generator would.
        for (size_t s = 0; s < st.target_texts.size(); ++s) {
            sink.generation(prefix, Role::target, s == 0 ? -1 : static_cast<int>(s),
                            st.target_texts[s]);
            Finalized t = finalize(st.target_texts[s], seg);
            emit_reward(t.content, st.target_rewards[s]);
        }

        auto descend = [&](const Finalized& chosen, Role role) {
            if (chosen.terminal) return;
            std::string next = prefix + seg.separator +
                               (annotate ? annotation_prefix(role) : std::string()) +
                               chosen.content;
            walk(i + 1, next);
        };
        descend(draft, Role::draft);
        descend(finalize(st.target_texts[0], seg), Role::target);
    };
    walk(0, q.question);
}

} // namespace

void register_question(ScriptedWorld& world, const QuestionSpec& q, const SegmentationConfig& seg,
                       bool annotate_history) {
    EntrySink sink;
    sink.generation = [&](const std::string& key, Role role, int sample, const std::string& text) {
        if (!world.has_generation(key, role, sample)) world.add_generation(key, role, sample, text);
    };
    sink.reward = [&](const std::string& key, const std::string& step, double value) {
        if (auto existing = world.find_reward(key, step)) {
            if (std::abs(*existing - value) > 1e-12)
                throw std::logic_error("fixture assigns two rewards to one (context, step): " + step);
            return;
        }
        world.add_reward(key, step, value);
    };
    emit_question(q, seg, annotate_history, sink);
}

std::shared_ptr<ScriptedWorld> build_world(const std::vector<QuestionSpec>& questions,
                                           const SegmentationConfig& seg, bool annotate_history) {
    auto world = std::make_shared<ScriptedWorld>();
    world->set_key_mode(ScriptedWorld::KeyMode::exact);
    for (const auto& q : questions) register_question(*world, q, seg, annotate_history);
    return world;
}

std::vector<Problem> problems_of(const std::vector<QuestionSpec>& questions) {
    std::vector<Problem> out;
    for (const auto& q : questions) out.push_back({q.id, q.question, q.gold_answer, ""});
    return out;
}

ScriptedBackends make_scripted_backends(std::shared_ptr<ScriptedWorld> world,
                                        const SegmentationConfig& seg, double target_unit_price) {
    ScriptedBackends b;
    b.world = std::move(world);

    GeneratorRef draft_ref;
    draft_ref.role = Role::draft;
    draft_ref.endpoint = "scripted";
    draft_ref.stop = seg.separator;
    draft_ref.eos_marker = seg.eos_marker;
    draft_ref.unit_price = 1.0;

    GeneratorRef target_ref = draft_ref;
    target_ref.role = Role::target;
    target_ref.unit_price = target_unit_price;

    b.draft = std::make_unique<ScriptedGenerator>(b.world, draft_ref);
    b.target = std::make_unique<ScriptedGenerator>(b.world, target_ref);
    b.scorer = std::make_unique<ScriptedScorer>(b.world, ScoreBounds{0.0, 1.0});
    return b;
}

std::string world_to_jsonl(const std::vector<QuestionSpec>& questions,
                           const SegmentationConfig& seg, bool annotate_history) {
    std::string out;
    std::set<std::string> seen_gen;
    std::set<std::pair<std::string, std::string>> seen_reward;
    EntrySink sink;
    sink.generation = [&](const std::string& key, Role role, int sample, const std::string& text) {
        std::string dedupe = key + "\x01" + role_name(role) + "\x01" + std::to_string(sample);
        if (!seen_gen.insert(dedupe).second) return;
        json rec{{"context", key}, {"role", role_name(role)}, {"text", text}};
        if (sample >= 0) rec["sample"] = sample;
        out += rec.dump();
        out += '\n';
    };
    sink.reward = [&](const std::string& key, const std::string& step, double value) {
        if (!seen_reward.insert({key, step}).second) return;
        json rec{{"context", key}, {"step", step}, {"reward", value}};
        out += rec.dump();
        out += '\n';
    };
    for (const auto& q : questions) emit_question(q, seg, annotate_history, sink);
    return out;
}

std::string problems_to_jsonl(const std::vector<Problem>& problems) {
    std::string out;
    for (const auto& p : problems) {
        json rec{{"id", p.id}, {"question", p.question}, {"gold_answer", p.gold_answer}};
        out += rec.dump();
        out += '\n';
    }
    return out;
}

} // namespace steproute::testing
