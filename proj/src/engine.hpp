#pragma once

#include <optional>
#include <string>
#include <vector>

#include "backends.hpp"
#include "routing.hpp"
#include "router.hpp"
#include "step_model.hpp"

namespace steproute {

struct Problem {
    std::string id;
    std::string question;
    std::string gold_answer;
    std::string stratum; // optional difficulty/topic bucket for sampling
};

enum class PolicyKind { rsd, oracle, router };

const char* policy_name(PolicyKind k);
PolicyKind policy_from_name(const std::string& name);

struct PolicyConfig {
    PolicyKind kind = PolicyKind::rsd;
    double tau = 0.5;
};

struct EngineConfig {
    SegmentationConfig seg;
    PolicyConfig policy;
    bool collect_counterfactuals = false;
    int counterfactual_samples = 1; // k target samples per step when collecting
    bool annotate_history = false;
    uint64_t seed = 0;

    // Throws ConfigError; the oracle policy needs counterfactuals and the
    // router policy needs a score source.
    void validate(bool has_router) const;
};

// Everything recorded about one decoded step: the draft side, the target
// side when it was generated, the decision, and which step was kept.
struct StepRecord {
    int index = 0;
    std::string context_hash;
    std::optional<std::string> context_text; // retained when collecting counterfactuals

    StepGeneration draft;
    std::optional<double> s_d;

    std::vector<StepGeneration> target_samples;
    std::vector<double> target_scores; // one per scored sample
    std::optional<double> s_t;         // mean of target_scores
    std::optional<double> delta;       // s_t - s_d when both present

    EscalationDecision decision;
    Role chosen = Role::draft;
    std::optional<double> y_hat;
    std::string annotation_tag; // "Model 0" / "Model 1" for the chosen step
    bool truncated = false;     // chosen generation hit the unit cap

    bool counterfactual_complete() const { return s_d.has_value() && s_t.has_value(); }
    double chosen_score() const; // realized score when available
};

enum class TerminalReason { eos, max_steps, length_cap, failure };

const char* terminal_reason_name(TerminalReason r);
TerminalReason terminal_reason_from_name(const std::string& name);

struct TraceTotals {
    double acceptance_rate = 0.0; // (1/n) sum(1 - a_i)
    double cost = 0.0;            // sum of units * unit_price over all generations
    double wall_time = 0.0;
    size_t steps = 0;
};

struct StepTrace {
    std::string problem_id;
    std::string question;
    std::vector<StepRecord> records;
    std::string final_text;
    TerminalReason terminal_reason = TerminalReason::max_steps;
    std::string failure_message;
    TraceTotals totals;

    bool failed() const { return terminal_reason == TerminalReason::failure; }
};

// The per-problem decoding loop: draft proposal -> routing decision ->
// optional target regeneration -> append, until eos, the step cap, or the
// unit cap. With collect_counterfactuals the target side is sampled k times
// from the same prefix every step regardless of the decision.
class Engine {
public:
    Engine(EngineConfig cfg, StepGenerator& draft, StepGenerator& target, StepScorer& scorer,
           RouterFn router = {});

    StepTrace run_problem(const Problem& problem) const;

    // One collection step from an explicit prefix: draft + k target samples,
    // averaged target reward, advantage. Used by the decoding loop and
    // directly by tests.
    StepRecord collect_step(const std::string& context, int step_index, int k) const;

    const EngineConfig& config() const { return cfg_; }

private:
    StepRecord decide_step(const std::string& work_context, int step_index) const;

    EngineConfig cfg_;
    StepGenerator& draft_;
    StepGenerator& target_;
    StepScorer& scorer_;
    RouterFn router_;
};

// Runs problems independently, optionally across threads, returning traces
// in input order regardless of scheduling.
std::vector<StepTrace> run_problems(const std::vector<Problem>& problems, const EngineConfig& cfg,
                                    StepGenerator& draft, StepGenerator& target, StepScorer& scorer,
                                    const RouterFn& router, int parallelism);

} // namespace steproute
