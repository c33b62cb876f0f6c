#include "routing.hpp"

#include <algorithm>
#include <numeric>

#include "errors.hpp"

namespace steproute {

Advantage advantage(double s_d, double s_t, int sample_count) {
    Advantage adv;
    adv.s_d = s_d;
    adv.s_t = s_t;
    adv.delta = s_t - s_d;
    adv.sample_count = sample_count;
    return adv;
}

double realized_score(double s_d, double delta, int a) {
    if (a != 0 && a != 1) throw InvariantError("realized_score: decision must be 0 or 1");
    return s_d + a * delta;
}

EscalationDecision rsd_decide(double s_d, double tau) {
    EscalationDecision d;
    d.a = (s_d > tau) ? 0 : 1;
    d.policy = "rsd";
    d.trigger_value = s_d;
    d.threshold = tau;
    return d;
}

EscalationDecision oracle_decide(double delta, double tau) {
    EscalationDecision d;
    d.a = (delta > tau) ? 1 : 0;
    d.policy = "oracle";
    d.trigger_value = delta;
    d.threshold = tau;
    return d;
}

EscalationDecision router_decide(double y_hat, double tau) {
    EscalationDecision d;
    d.a = (y_hat > tau) ? 1 : 0;
    d.policy = "router";
    d.trigger_value = y_hat;
    d.threshold = tau;
    return d;
}

namespace {

// Indices ordered by descending delta, ties by ascending index. This is the
// selection order for the budgeted plan and for boundary tie filling.
std::vector<std::size_t> desc_order(const std::vector<double>& deltas) {
    std::vector<std::size_t> order(deltas.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return deltas[a] > deltas[b]; });
    return order;
}

} // namespace

BudgetedPlan budgeted_select(const std::vector<double>& deltas, std::size_t budget) {
    if (budget > deltas.size())
        throw InvariantError("budgeted_select: budget " + std::to_string(budget) +
                             " exceeds step count " + std::to_string(deltas.size()));
    BudgetedPlan plan;
    plan.budget = budget;
    plan.decisions.assign(deltas.size(), 0);

    const auto order = desc_order(deltas);
    std::size_t taken = 0;
    for (std::size_t idx : order) {
        if (taken == budget) break;
        if (deltas[idx] <= 0.0) break; // order is descending: nothing positive remains
        plan.decisions[idx] = 1;
        plan.achieved_gain += deltas[idx];
        ++taken;
    }
    return plan;
}

double plan_to_threshold(const std::vector<double>& deltas, std::size_t budget) {
    if (budget > deltas.size())
        throw InvariantError("plan_to_threshold: budget exceeds step count");
    if (deltas.empty()) return 0.0;

    std::vector<double> sorted = deltas;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const std::size_t positives =
        static_cast<std::size_t>(std::count_if(sorted.begin(), sorted.end(),
                                               [](double d) { return d > 0.0; }));
    const std::size_t k = std::min(budget, positives);
    if (k == 0) return std::max(sorted.front(), 0.0);
    if (k == sorted.size()) return 0.0;
    return std::max(sorted[k], 0.0);
}

std::vector<int> apply_threshold_plan(const std::vector<double>& deltas, double tau,
                                      std::size_t budget) {
    std::vector<int> decisions(deltas.size(), 0);
    const auto order = desc_order(deltas);
    std::size_t taken = 0;
    // Strictly-above-threshold steps first, in plan order.
    for (std::size_t idx : order) {
        if (taken == budget) return decisions;
        if (deltas[idx] <= tau) break;
        decisions[idx] = 1;
        ++taken;
    }
    // Boundary ties at delta == tau fill remaining budget, lowest index
    // first; delta <= 0 is never escalated.
    for (std::size_t idx = 0; idx < deltas.size() && taken < budget; ++idx) {
        if (deltas[idx] == tau && deltas[idx] > 0.0) {
            decisions[idx] = 1;
            ++taken;
        }
    }
    return decisions;
}

} // namespace steproute
