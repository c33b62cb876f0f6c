#pragma once

#include <memory>
#include <string>
#include <vector>

#include "config.hpp"
#include "engine.hpp"
#include "scripted_world.hpp"

namespace steproute::testing {

// Declarative spec for one step of a scripted question: the draft side and
// k target samples, each with its raw reward. Texts must not contain the
// separator; a trailing eos marker marks the terminal step.
struct StepSpec {
    std::string draft_text;
    double draft_reward = 0.5;
    std::vector<std::string> target_texts{""};
    std::vector<double> target_rewards{0.5};

    static StepSpec simple(std::string draft, double s_d, std::string target, double s_t) {
        StepSpec s;
        s.draft_text = std::move(draft);
        s.draft_reward = s_d;
        s.target_texts = {std::move(target)};
        s.target_rewards = {s_t};
        return s;
    }
};

struct QuestionSpec {
    std::string id;
    std::string question;
    std::string gold_answer;
    std::vector<StepSpec> steps;
};

// Registers every context the engine can reach on `q` (the full decision
// tree over draft-vs-target choices, target sample 0 continuing escalated
// branches), mirroring the engine's context construction byte for byte.
void register_question(ScriptedWorld& world, const QuestionSpec& q, const SegmentationConfig& seg,
                       bool annotate_history);

std::shared_ptr<ScriptedWorld> build_world(const std::vector<QuestionSpec>& questions,
                                           const SegmentationConfig& seg, bool annotate_history);

std::vector<Problem> problems_of(const std::vector<QuestionSpec>& questions);

// Scripted backends over a prebuilt world with unit character pricing
// (draft 1, target `target_unit_price`).
struct ScriptedBackends {
    std::shared_ptr<ScriptedWorld> world;
    std::unique_ptr<StepGenerator> draft;
    std::unique_ptr<StepGenerator> target;
    std::unique_ptr<StepScorer> scorer;
};

ScriptedBackends make_scripted_backends(std::shared_ptr<ScriptedWorld> world,
                                        const SegmentationConfig& seg,
                                        double target_unit_price = 8.0);

SegmentationConfig default_seg();

// Serializes the world's entries for a set of questions into the scripted
// world file format (used by pipeline/CLI tests).
std::string world_to_jsonl(const std::vector<QuestionSpec>& questions,
                           const SegmentationConfig& seg, bool annotate_history);

std::string problems_to_jsonl(const std::vector<Problem>& problems);

} // namespace steproute::testing
