#pragma once

#include <optional>
#include <string>
#include <vector>

#include "engine.hpp"

namespace steproute {

// Acceptance rate recomputed from the raw decisions of one trace:
// (1/n) sum(1 - a_i). Throws InvariantError on an empty trace.
double acceptance_rate(const StepTrace& trace);

// One step with both counterfactual scores, the input to waste diagnostics.
struct CounterfactualStep {
    double s_d = 0.0;
    double s_t = 0.0;
    double target_cost = 0.0;
};

// Waste diagnostics of the absolute-threshold rule at threshold tau:
//   reject_rate        = Pr(s_d <= tau)
//   improvement_rate   = Pr(s_t > s_d | rejected)
//   wasted_deferral_rate = reject_rate * (1 - improvement_rate)
//   expected_wasted_cost = mean over all steps of C_t * I{rejected} * I{s_t <= s_d}
struct WasteReport {
    double tau = 0.0;
    double reject_rate = 0.0;
    double improvement_rate = 0.0;
    double wasted_deferral_rate = 0.0;
    double expected_wasted_cost = 0.0;
    size_t records_used = 0;
    size_t records_excluded = 0;
};

WasteReport waste_report(const std::vector<CounterfactualStep>& steps, double tau);

// Pulls counterfactual steps out of collected traces; records without both
// scores are excluded and counted.
std::vector<CounterfactualStep> counterfactuals_from_traces(const std::vector<StepTrace>& traces,
                                                            size_t* excluded_out = nullptr);
WasteReport waste_report_from_traces(const std::vector<StepTrace>& traces, double tau);

// Default answer extraction: the last boxed expression or the last
// "Answer:"-prefixed line, whichever appears later; a trailing eos marker
// is stripped first. Normalization collapses whitespace and strips leading
// zeros from integer parts.
std::string normalize_answer(const std::string& raw);
std::optional<std::string> extract_answer(const std::string& final_text,
                                          const std::string& eos_marker = "");

// Corpora with other answer conventions plug in their own extractor.
using AnswerExtractor = std::function<std::optional<std::string>(const std::string& final_text)>;

struct AccuracyReport {
    double accuracy = 0.0; // correct / evaluated; failed problems excluded
    size_t correct = 0;
    size_t evaluated = 0;
    size_t failed = 0;        // excluded from the denominator
    size_t unextractable = 0; // counted incorrect, flagged here
};

AccuracyReport answer_accuracy(const std::vector<StepTrace>& traces,
                               const std::vector<Problem>& problems,
                               const std::string& eos_marker = "",
                               const AnswerExtractor& extractor = {});

// One operating point of a threshold/budget sweep.
struct SweepPoint {
    std::string policy;
    std::string mode;        // "live" | "frozen"
    double grid_value = 0.0; // tau, or target deferral fraction for budget sweeps
    bool is_budget = false;
    double acceptance_rate = 0.0; // pooled over all steps
    double deferral_rate = 0.0;   // 1 - acceptance_rate
    double answer_accuracy = 0.0;
    double mean_cost = 0.0; // per problem
    double mean_wall_time = 0.0;
    std::optional<double> wasted_deferral_rate; // needs counterfactuals
    std::optional<double> mean_realized_score;  // frozen mode only
    size_t failed_problems = 0;
};

// Frozen counterfactual data: both steps collected once per prefix; policies
// are re-scored without re-decoding. Evaluation is step-local by
// construction — contexts and the step sequence stay those of the
// collection run.
struct FrozenStep {
    double s_d = 0.0;
    double s_t = 0.0;
    double delta = 0.0;
    std::optional<double> y_hat; // router score on the frozen history
    std::string draft_text;
    std::string target_text; // sample 0
    double draft_cost = 0.0;
    double target_cost = 0.0;
    double draft_wall = 0.0;
    double target_wall = 0.0;
};

struct FrozenProblem {
    std::string id;
    std::string question;
    std::string gold_answer;
    std::vector<FrozenStep> steps;
};

// Builds frozen data from collected traces (records missing counterfactuals
// are dropped). When a router is given, y_hat is computed per step from the
// collection trajectory.
std::vector<FrozenProblem> freeze(const std::vector<StepTrace>& traces,
                                  const std::vector<Problem>& problems,
                                  const RouterFn& router = {});

struct SweepRequest {
    std::vector<PolicyKind> policies{PolicyKind::rsd};
    std::vector<double> taus;        // threshold grid
    int deferral_grid_points = 0;    // > 0 selects a budget sweep over deferral fractions
};

// Frozen-mode sweep. Threshold grids re-score each policy's trigger; budget
// grids escalate exactly m = round(f * total_steps) pooled steps in
// policy-preference order (ties by position), so acceptance rates match
// exactly across policies. Points are sorted by acceptance rate.
std::vector<SweepPoint> sweep_frozen(const std::vector<FrozenProblem>& data,
                                     const SweepRequest& req, const SegmentationConfig& seg);

// Live-mode sweep: one full engine pass per (policy, tau).
std::vector<SweepPoint> sweep_live(const std::vector<Problem>& problems, const EngineConfig& base,
                                   StepGenerator& draft, StepGenerator& target, StepScorer& scorer,
                                   const RouterFn& router, const SweepRequest& req,
                                   int parallelism);

// Non-dominated subset under (cost down, accuracy up); a point survives iff
// no other point has cost <= and accuracy >= with one strict.
std::vector<size_t> pareto_indices(const std::vector<std::pair<double, double>>& cost_accuracy);
std::vector<SweepPoint> pareto_frontier(const std::vector<SweepPoint>& points);

} // namespace steproute
