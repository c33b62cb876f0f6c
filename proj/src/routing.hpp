#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace steproute {

// Advantage of the target over the draft on one step: delta = s_t - s_d.
// When the target score is an average over k samples, k is recorded.
struct Advantage {
    double delta = 0.0;
    double s_d = 0.0;
    double s_t = 0.0;
    int sample_count = 1;
};

Advantage advantage(double s_d, double s_t, int sample_count = 1);

// Score of the step actually kept under decision a: s_d + a * delta.
double realized_score(double s_d, double delta, int a);

// Binary route-or-accept outcome. a = 1 escalates to the target,
// a = 0 keeps the draft. trigger_value is the quantity the policy compared
// against the threshold: s_d for the absolute-threshold rule, delta for the
// advantage oracle, y_hat for the router.
struct EscalationDecision {
    int a = 0;
    std::string policy;
    double trigger_value = 0.0;
    double threshold = 0.0;
};

// Absolute-threshold baseline: accept the draft iff s_d > tau (strict);
// otherwise escalate.
EscalationDecision rsd_decide(double s_d, double tau);

// Advantage oracle: escalate iff delta > tau (strict).
EscalationDecision oracle_decide(double delta, double tau);

// Learned router: escalate iff y_hat > tau; accept on y_hat <= tau.
EscalationDecision router_decide(double y_hat, double tau);

// Escalation plan over one problem's steps under a budget B on the number
// of escalations.
struct BudgetedPlan {
    std::vector<int> decisions;   // a_i per step
    std::size_t budget = 0;
    double achieved_gain = 0.0;   // sum of a_i * delta_i
};

// Selects the k = min(B, #{delta_i > 0}) largest strictly positive
// advantages; never escalates delta <= 0. Ties among equal deltas at the
// budget boundary go to the lowest index. Maximizes sum(a_i * delta_i)
// subject to sum(a_i) <= B. Throws InvariantError when B > N.
BudgetedPlan budgeted_select(const std::vector<double>& deltas, std::size_t budget);

// A threshold tau whose elementwise rule I{delta > tau} reproduces
// budgeted_select's plan, up to lowest-index tie filling at delta == tau.
// When nothing is selected (B = 0 or all deltas <= 0) returns a tau that
// yields all-accept; in the all-nonpositive case that is tau = 0.
double plan_to_threshold(const std::vector<double>& deltas, std::size_t budget);

// Elementwise threshold rule plus the deterministic boundary fill: selects
// every delta > tau, then lowest-index steps with delta == tau > 0 until the
// budget is exhausted. Reproduces budgeted_select exactly.
std::vector<int> apply_threshold_plan(const std::vector<double>& deltas, double tau,
                                      std::size_t budget);

} // namespace steproute
