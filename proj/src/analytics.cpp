#include "analytics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "errors.hpp"
#include "routing.hpp"
#include "util.hpp"

namespace steproute {

double acceptance_rate(const StepTrace& trace) {
    if (trace.records.empty()) throw InvariantError("acceptance_rate: empty trace");
    double accepted = 0.0;
    for (const auto& r : trace.records) accepted += 1.0 - r.decision.a;
    return accepted / static_cast<double>(trace.records.size());
}

WasteReport waste_report(const std::vector<CounterfactualStep>& steps, double tau) {
    WasteReport rep;
    rep.tau = tau;
    rep.records_used = steps.size();
    if (steps.empty()) return rep;

    size_t rejected = 0, improved = 0, wasted = 0;
    double wasted_cost = 0.0;
    for (const auto& s : steps) {
        const bool reject = rsd_decide(s.s_d, tau).a == 1;
        if (!reject) continue;
        ++rejected;
        if (s.s_t > s.s_d) {
            ++improved;
        } else {
            ++wasted;
            wasted_cost += s.target_cost;
        }
    }
    const double n = static_cast<double>(steps.size());
    rep.reject_rate = static_cast<double>(rejected) / n;
    rep.improvement_rate =
        rejected ? static_cast<double>(improved) / static_cast<double>(rejected) : 0.0;
    rep.wasted_deferral_rate = static_cast<double>(wasted) / n;
    rep.expected_wasted_cost = wasted_cost / n;
    return rep;
}

std::vector<CounterfactualStep> counterfactuals_from_traces(const std::vector<StepTrace>& traces,
                                                            size_t* excluded_out) {
    std::vector<CounterfactualStep> steps;
    size_t excluded = 0;
    for (const auto& t : traces) {
        for (const auto& r : t.records) {
            if (!r.counterfactual_complete()) {
                ++excluded;
                continue;
            }
            CounterfactualStep s;
            s.s_d = *r.s_d;
            s.s_t = *r.s_t;
            s.target_cost =
                r.target_samples.empty() ? 0.0 : r.target_samples.front().cost.total();
            steps.push_back(s);
        }
    }
    if (excluded_out) *excluded_out = excluded;
    return steps;
}

WasteReport waste_report_from_traces(const std::vector<StepTrace>& traces, double tau) {
    size_t excluded = 0;
    auto steps = counterfactuals_from_traces(traces, &excluded);
    auto rep = waste_report(steps, tau);
    rep.records_excluded = excluded;
    return rep;
}

namespace {

// "007" -> "7", "-007" -> "-7", "0" -> "0", "0.5" -> "0.5"; non-numeric
// strings pass through unchanged.
std::string strip_leading_zeros(const std::string& s) {
    size_t i = 0;
    bool negative = false;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) {
        negative = s[i] == '-';
        ++i;
    }
    size_t digits_begin = i;
    while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i;
    if (i == digits_begin) return s; // no integer part: not numeric
    if (i < s.size() && s[i] == '.') {
        ++i;
        size_t frac_begin = i;
        while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i;
        if (i == frac_begin) return s;
    }
    if (i != s.size()) return s; // trailing junk: not a plain number

    std::string_view body(s);
    body.remove_prefix(digits_begin);
    size_t nz = 0;
    while (nz + 1 < body.size() && body[nz] == '0' && body[nz + 1] != '.') ++nz;
    std::string out = negative ? "-" : "";
    out += std::string(body.substr(nz));
    return out;
}

} // namespace

std::string normalize_answer(const std::string& raw) {
    return strip_leading_zeros(collapse_spaces(trim(raw)));
}

std::optional<std::string> extract_answer(const std::string& final_text,
                                          const std::string& eos_marker) {
    std::string text = final_text;
    if (!eos_marker.empty() && ends_with(text, eos_marker))
        text.resize(text.size() - eos_marker.size());

    const std::string boxed_marker = "\\boxed{";
    size_t boxed_pos = text.rfind(boxed_marker);
    size_t answer_pos = text.rfind("Answer:");

    if (boxed_pos != std::string::npos &&
        (answer_pos == std::string::npos || boxed_pos > answer_pos)) {
        size_t start = boxed_pos + boxed_marker.size();
        int depth = 1;
        size_t i = start;
        for (; i < text.size(); ++i) {
            if (text[i] == '{') ++depth;
            else if (text[i] == '}' && --depth == 0) break;
        }
        return text.substr(start, i - start);
    }
    if (answer_pos != std::string::npos) {
        size_t start = answer_pos + std::string("Answer:").size();
        size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        std::string candidate = trim(text.substr(start, end - start));
        if (!candidate.empty()) return candidate;
    }
    return std::nullopt;
}

AccuracyReport answer_accuracy(const std::vector<StepTrace>& traces,
                               const std::vector<Problem>& problems,
                               const std::string& eos_marker, const AnswerExtractor& extractor) {
    std::map<std::string, const Problem*> by_id;
    for (const auto& p : problems) by_id[p.id] = &p;

    AccuracyReport rep;
    for (const auto& t : traces) {
        if (t.failed()) {
            ++rep.failed;
            continue;
        }
        auto it = by_id.find(t.problem_id);
        if (it == by_id.end())
            throw ConfigError("answer_accuracy: no gold answer for problem '" + t.problem_id + "'");
        ++rep.evaluated;
        auto extracted =
            extractor ? extractor(t.final_text) : extract_answer(t.final_text, eos_marker);
        if (!extracted) {
            ++rep.unextractable;
            continue; // counts as incorrect
        }
        if (normalize_answer(*extracted) == normalize_answer(it->second->gold_answer))
            ++rep.correct;
    }
    rep.accuracy =
        rep.evaluated ? static_cast<double>(rep.correct) / static_cast<double>(rep.evaluated) : 0.0;
    return rep;
}

std::vector<FrozenProblem> freeze(const std::vector<StepTrace>& traces,
                                  const std::vector<Problem>& problems,
                                  const RouterFn& router) {
    std::map<std::string, const Problem*> by_id;
    for (const auto& p : problems) by_id[p.id] = &p;

    std::vector<FrozenProblem> out;
    for (const auto& t : traces) {
        if (t.failed()) continue;
        FrozenProblem fp;
        fp.id = t.problem_id;
        fp.question = t.question;
        if (auto it = by_id.find(t.problem_id); it != by_id.end())
            fp.gold_answer = it->second->gold_answer;
        for (const auto& r : t.records) {
            if (!r.counterfactual_complete() || r.target_samples.empty()) continue;
            FrozenStep fs;
            fs.s_d = *r.s_d;
            fs.s_t = *r.s_t;
            fs.delta = *r.delta;
            fs.draft_text = r.draft.step.content;
            fs.target_text = r.target_samples.front().step.content;
            fs.draft_cost = r.draft.cost.total();
            fs.draft_wall = r.draft.cost.wall_time;
            fs.target_cost = r.target_samples.front().cost.total();
            fs.target_wall = r.target_samples.front().cost.wall_time;
            if (router) {
                RouterInput in;
                in.context = r.context_text.value_or("");
                in.draft_text = r.draft.step.content;
                in.s_d = *r.s_d;
                in.step_index = r.index;
                in.draft_terminal = r.draft.step.is_terminal;
                fs.y_hat = router(in);
            }
            fp.steps.push_back(std::move(fs));
        }
        if (!fp.steps.empty()) out.push_back(std::move(fp));
    }
    return out;
}

namespace {

// Evaluates one frozen operating point given per-step escalation decisions
// aligned with `data`'s flattened step order.
SweepPoint evaluate_frozen_point(const std::vector<FrozenProblem>& data,
                                 const std::vector<std::vector<int>>& decisions,
                                 const SegmentationConfig& seg) {
    SweepPoint pt;
    pt.mode = "frozen";

    size_t total_steps = 0, escalated = 0, wasted = 0;
    double realized = 0.0, cost = 0.0, wall = 0.0;
    size_t correct = 0, evaluated = 0;

    for (size_t pi = 0; pi < data.size(); ++pi) {
        const auto& fp = data[pi];
        std::string text = fp.question;
        for (size_t si = 0; si < fp.steps.size(); ++si) {
            const auto& fs = fp.steps[si];
            const int a = decisions[pi][si];
            ++total_steps;
            escalated += static_cast<size_t>(a);
            if (a == 1 && fs.s_t <= fs.s_d) ++wasted;
            realized += realized_score(fs.s_d, fs.delta, a);
            cost += fs.draft_cost + (a ? fs.target_cost : 0.0);
            wall += fs.draft_wall + (a ? fs.target_wall : 0.0);
            text += seg.separator + (a ? fs.target_text : fs.draft_text);
        }
        ++evaluated;
        auto extracted = extract_answer(text, seg.eos_marker);
        if (extracted &&
            normalize_answer(*extracted) == normalize_answer(fp.gold_answer))
            ++correct;
    }

    const double n = static_cast<double>(total_steps);
    pt.deferral_rate = total_steps ? static_cast<double>(escalated) / n : 0.0;
    pt.acceptance_rate = 1.0 - pt.deferral_rate;
    pt.answer_accuracy = evaluated ? static_cast<double>(correct) / static_cast<double>(evaluated)
                                   : 0.0;
    pt.mean_cost = data.empty() ? 0.0 : cost / static_cast<double>(data.size());
    pt.mean_wall_time = data.empty() ? 0.0 : wall / static_cast<double>(data.size());
    pt.wasted_deferral_rate = total_steps ? static_cast<double>(wasted) / n : 0.0;
    pt.mean_realized_score = total_steps ? realized / n : 0.0;
    return pt;
}

double frozen_trigger(const FrozenStep& fs, PolicyKind policy) {
    switch (policy) {
        case PolicyKind::rsd: return fs.s_d;
        case PolicyKind::oracle: return fs.delta;
        case PolicyKind::router:
            if (!fs.y_hat)
                throw ConfigError("frozen router sweep requires a router model at freeze time");
            return *fs.y_hat;
    }
    return 0.0;
}

int frozen_tau_decision(const FrozenStep& fs, PolicyKind policy, double tau) {
    switch (policy) {
        case PolicyKind::rsd: return rsd_decide(fs.s_d, tau).a;
        case PolicyKind::oracle: return oracle_decide(fs.delta, tau).a;
        case PolicyKind::router: return router_decide(frozen_trigger(fs, policy), tau).a;
    }
    return 0;
}

} // namespace

std::vector<SweepPoint> sweep_frozen(const std::vector<FrozenProblem>& data,
                                     const SweepRequest& req, const SegmentationConfig& seg) {
    std::vector<SweepPoint> points;

    size_t total_steps = 0;
    for (const auto& fp : data) total_steps += fp.steps.size();

    for (PolicyKind policy : req.policies) {
        for (double tau : req.taus) {
            std::vector<std::vector<int>> decisions(data.size());
            for (size_t pi = 0; pi < data.size(); ++pi) {
                decisions[pi].resize(data[pi].steps.size());
                for (size_t si = 0; si < data[pi].steps.size(); ++si)
                    decisions[pi][si] = frozen_tau_decision(data[pi].steps[si], policy, tau);
            }
            auto pt = evaluate_frozen_point(data, decisions, seg);
            pt.policy = policy_name(policy);
            pt.grid_value = tau;
            pt.is_budget = false;
            points.push_back(std::move(pt));
        }

        if (req.deferral_grid_points > 1 && total_steps > 0) {
            // Policy-preference order over the pooled steps: the m most
            // escalation-worthy steps under the policy's own trigger.
            struct Key {
                double pref;
                size_t pi, si;
            };
            std::vector<Key> order;
            order.reserve(total_steps);
            for (size_t pi = 0; pi < data.size(); ++pi)
                for (size_t si = 0; si < data[pi].steps.size(); ++si) {
                    double trig = frozen_trigger(data[pi].steps[si], policy);
                    // rsd escalates lowest s_d first; oracle/router highest trigger first
                    double pref = policy == PolicyKind::rsd ? -trig : trig;
                    order.push_back({pref, pi, si});
                }
            std::stable_sort(order.begin(), order.end(),
                             [](const Key& a, const Key& b) { return a.pref > b.pref; });

            for (int g = 0; g < req.deferral_grid_points; ++g) {
                const double fraction =
                    static_cast<double>(g) / static_cast<double>(req.deferral_grid_points - 1);
                const size_t m = static_cast<size_t>(
                    std::lround(fraction * static_cast<double>(total_steps)));
                std::vector<std::vector<int>> decisions(data.size());
                for (size_t pi = 0; pi < data.size(); ++pi)
                    decisions[pi].assign(data[pi].steps.size(), 0);
                for (size_t r = 0; r < m; ++r) decisions[order[r].pi][order[r].si] = 1;
                auto pt = evaluate_frozen_point(data, decisions, seg);
                pt.policy = policy_name(policy);
                pt.grid_value = fraction;
                pt.is_budget = true;
                points.push_back(std::move(pt));
            }
        }
    }

    std::stable_sort(points.begin(), points.end(), [](const SweepPoint& a, const SweepPoint& b) {
        return a.acceptance_rate < b.acceptance_rate;
    });
    return points;
}

std::vector<SweepPoint> sweep_live(const std::vector<Problem>& problems, const EngineConfig& base,
                                   StepGenerator& draft, StepGenerator& target, StepScorer& scorer,
                                   const RouterFn& router, const SweepRequest& req,
                                   int parallelism) {
    if (req.taus.empty()) throw ConfigError("sweep_live: threshold grid is empty");
    std::vector<SweepPoint> points;
    for (PolicyKind policy : req.policies) {
        for (double tau : req.taus) {
            EngineConfig cfg = base;
            cfg.policy.kind = policy;
            cfg.policy.tau = tau;
            if (policy == PolicyKind::oracle) cfg.collect_counterfactuals = true;
            auto traces =
                run_problems(problems, cfg, draft, target, scorer, router, parallelism);

            SweepPoint pt;
            pt.policy = policy_name(policy);
            pt.mode = "live";
            pt.grid_value = tau;

            size_t total = 0, escalated = 0, failed = 0;
            double cost = 0.0, wall = 0.0;
            size_t counted_problems = 0;
            std::vector<StepTrace> ok;
            for (auto& t : traces) {
                if (t.failed()) {
                    ++failed;
                    continue;
                }
                for (const auto& r : t.records) {
                    ++total;
                    escalated += static_cast<size_t>(r.decision.a);
                }
                cost += t.totals.cost;
                wall += t.totals.wall_time;
                ++counted_problems;
                ok.push_back(std::move(t));
            }
            pt.failed_problems = failed;
            pt.deferral_rate = total ? static_cast<double>(escalated) / static_cast<double>(total)
                                     : 0.0;
            pt.acceptance_rate = 1.0 - pt.deferral_rate;
            pt.answer_accuracy = answer_accuracy(ok, problems, base.seg.eos_marker).accuracy;
            pt.mean_cost = counted_problems ? cost / static_cast<double>(counted_problems) : 0.0;
            pt.mean_wall_time =
                counted_problems ? wall / static_cast<double>(counted_problems) : 0.0;
            if (cfg.collect_counterfactuals) {
                // Waste of this policy's own decisions, pooled over the
                // counterfactual-complete records.
                size_t wasted = 0, n = 0;
                for (const auto& t : ok)
                    for (const auto& r : t.records) {
                        if (!r.counterfactual_complete()) continue;
                        ++n;
                        if (r.decision.a == 1 && *r.s_t <= *r.s_d) ++wasted;
                    }
                if (n)
                    pt.wasted_deferral_rate = static_cast<double>(wasted) / static_cast<double>(n);
            }
            points.push_back(std::move(pt));
        }
    }
    std::stable_sort(points.begin(), points.end(), [](const SweepPoint& a, const SweepPoint& b) {
        return a.acceptance_rate < b.acceptance_rate;
    });
    return points;
}

std::vector<size_t> pareto_indices(const std::vector<std::pair<double, double>>& cost_accuracy) {
    const size_t n = cost_accuracy.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (cost_accuracy[a].first != cost_accuracy[b].first)
            return cost_accuracy[a].first < cost_accuracy[b].first;
        return cost_accuracy[a].second > cost_accuracy[b].second;
    });

    std::vector<size_t> kept;
    double best_cheaper_acc = -std::numeric_limits<double>::infinity();
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        double group_max = -std::numeric_limits<double>::infinity();
        while (j < n && cost_accuracy[order[j]].first == cost_accuracy[order[i]].first) {
            group_max = std::max(group_max, cost_accuracy[order[j]].second);
            ++j;
        }
        for (size_t k = i; k < j; ++k) {
            double acc = cost_accuracy[order[k]].second;
            if (acc <= best_cheaper_acc) continue; // dominated by a strictly cheaper point
            if (acc < group_max) continue;         // dominated within the cost group
            kept.push_back(order[k]);
        }
        best_cheaper_acc = std::max(best_cheaper_acc, group_max);
        i = j;
    }
    std::sort(kept.begin(), kept.end());
    return kept;
}

std::vector<SweepPoint> pareto_frontier(const std::vector<SweepPoint>& points) {
    std::vector<std::pair<double, double>> ca;
    ca.reserve(points.size());
    for (const auto& p : points) ca.emplace_back(p.mean_cost, p.answer_accuracy);
    std::vector<SweepPoint> out;
    for (size_t idx : pareto_indices(ca)) out.push_back(points[idx]);
    return out;
}

} // namespace steproute
