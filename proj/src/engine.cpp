#include "engine.hpp"

#include <atomic>
#include <numeric>
#include <thread>

#include "errors.hpp"
#include "util.hpp"

namespace steproute {

const char* policy_name(PolicyKind k) {
    switch (k) {
        case PolicyKind::rsd: return "rsd";
        case PolicyKind::oracle: return "oracle";
        case PolicyKind::router: return "router";
    }
    return "?";
}

PolicyKind policy_from_name(const std::string& name) {
    if (name == "rsd") return PolicyKind::rsd;
    if (name == "oracle") return PolicyKind::oracle;
    if (name == "router") return PolicyKind::router;
    throw ConfigError("unknown policy '" + name + "' (expected rsd|oracle|router)");
}

const char* terminal_reason_name(TerminalReason r) {
    switch (r) {
        case TerminalReason::eos: return "eos";
        case TerminalReason::max_steps: return "max_steps";
        case TerminalReason::length_cap: return "length_cap";
        case TerminalReason::failure: return "failure";
    }
    return "?";
}

TerminalReason terminal_reason_from_name(const std::string& name) {
    if (name == "eos") return TerminalReason::eos;
    if (name == "max_steps") return TerminalReason::max_steps;
    if (name == "length_cap") return TerminalReason::length_cap;
    if (name == "failure") return TerminalReason::failure;
    throw IoError("unknown terminal reason '" + name + "'");
}

void EngineConfig::validate(bool has_router) const {
    seg.validate();
    if (policy.kind == PolicyKind::router && !has_router)
        throw ConfigError("router policy requires a router model or endpoint");
    if (policy.kind == PolicyKind::oracle && !collect_counterfactuals)
        throw ConfigError("oracle policy requires collect_counterfactuals (it consumes s_t)");
    if (counterfactual_samples < 1)
        throw ConfigError("counterfactual_samples must be >= 1");
}

double StepRecord::chosen_score() const {
    if (chosen == Role::draft) return s_d.value_or(0.0);
    return s_t.value_or(0.0);
}

Engine::Engine(EngineConfig cfg, StepGenerator& draft, StepGenerator& target, StepScorer& scorer,
               RouterFn router)
    : cfg_(std::move(cfg)), draft_(draft), target_(target), scorer_(scorer),
      router_(std::move(router)) {
    cfg_.validate(static_cast<bool>(router_));
}

StepRecord Engine::collect_step(const std::string& context, int step_index, int k) const {
    if (k < 1) throw ConfigError("collect_step: k must be >= 1");
    StepRecord rec;
    rec.index = step_index;
    rec.context_hash = stable_hash_hex(context);
    rec.context_text = context;

    rec.draft = draft_.generate(context, 0);
    if (!rec.draft.step.content.empty())
        rec.s_d = scorer_.score(context, rec.draft.step);

    for (int s = 0; s < k; ++s) {
        rec.target_samples.push_back(target_.generate(context, s));
        const auto& gen = rec.target_samples.back();
        if (!gen.step.content.empty())
            rec.target_scores.push_back(scorer_.score(context, gen.step));
    }
    if (rec.s_d && rec.target_scores.size() == static_cast<size_t>(k)) {
        double mean = std::accumulate(rec.target_scores.begin(), rec.target_scores.end(), 0.0) /
                      static_cast<double>(k);
        rec.s_t = mean;
        rec.delta = mean - *rec.s_d;
    }
    return rec;
}

StepRecord Engine::decide_step(const std::string& work_context, int step_index) const {
    StepRecord rec;
    if (cfg_.collect_counterfactuals) {
        rec = collect_step(work_context, step_index, cfg_.counterfactual_samples);
    } else {
        rec.index = step_index;
        rec.context_hash = stable_hash_hex(work_context);
        rec.draft = draft_.generate(work_context, 0);
        if (!rec.draft.step.content.empty())
            rec.s_d = scorer_.score(work_context, rec.draft.step);
    }

    // Empty draft steps are never scored and never escalated; the step cap
    // guarantees progress.
    if (!rec.s_d.has_value()) {
        rec.decision.a = 0;
        rec.decision.policy = policy_name(cfg_.policy.kind);
        rec.decision.threshold = cfg_.policy.tau;
        rec.decision.trigger_value = 0.0;
        return rec;
    }

    switch (cfg_.policy.kind) {
        case PolicyKind::rsd:
            rec.decision = rsd_decide(*rec.s_d, cfg_.policy.tau);
            break;
        case PolicyKind::oracle:
            if (!rec.delta.has_value()) {
                // Target side incomplete (all samples empty): accept.
                rec.decision.a = 0;
                rec.decision.policy = "oracle";
                rec.decision.threshold = cfg_.policy.tau;
            } else {
                rec.decision = oracle_decide(*rec.delta, cfg_.policy.tau);
            }
            break;
        case PolicyKind::router: {
            RouterInput in;
            in.context = work_context;
            in.draft_text = rec.draft.step.content;
            in.s_d = *rec.s_d;
            in.step_index = step_index;
            in.draft_terminal = rec.draft.step.is_terminal;
            rec.y_hat = router_(in);
            rec.decision = router_decide(*rec.y_hat, cfg_.policy.tau);
            break;
        }
    }

    if (rec.decision.a == 1 && rec.target_samples.empty())
        rec.target_samples.push_back(target_.generate(work_context, 0));
    return rec;
}

StepTrace Engine::run_problem(const Problem& problem) const {
    if (problem.question.empty()) throw ConfigError("run_problem: empty question");

    StepTrace trace;
    trace.problem_id = problem.id;
    trace.question = problem.question;
    trace.terminal_reason = TerminalReason::max_steps;

    std::string plain = problem.question; // untagged; becomes final_text
    std::string work = problem.question;  // what generators, PRM and router see

    for (int i = 0; i < cfg_.seg.max_steps; ++i) {
        StepRecord rec;
        try {
            rec = decide_step(work, i);
        } catch (const BackendError& e) {
            trace.terminal_reason = TerminalReason::failure;
            trace.failure_message = e.what();
            break;
        }

        const bool escalated = rec.decision.a == 1;
        const StepGeneration& chosen =
            escalated ? rec.target_samples.front() : rec.draft;
        rec.chosen = escalated ? Role::target : Role::draft;
        rec.annotation_tag = annotation_tag(rec.chosen);
        rec.truncated = chosen.truncated;

        plain += cfg_.seg.separator + chosen.step.content;
        work += cfg_.seg.separator +
                (cfg_.annotate_history ? annotation_prefix(rec.chosen) : std::string()) +
                chosen.step.content;

        const bool terminal = chosen.step.is_terminal;
        const bool capped = chosen.truncated;
        trace.records.push_back(std::move(rec));

        if (terminal) {
            trace.terminal_reason = TerminalReason::eos;
            break;
        }
        if (capped) {
            // Unit cap mid-step ends the problem; flagged on the record.
            trace.terminal_reason = TerminalReason::length_cap;
            break;
        }
    }

    trace.final_text = plain;
    if (trace.terminal_reason == TerminalReason::eos) trace.final_text += cfg_.seg.eos_marker;

    const size_t n = trace.records.size();
    trace.totals.steps = n;
    if (n > 0) {
        double accepted = 0.0;
        for (const auto& r : trace.records) accepted += 1.0 - r.decision.a;
        trace.totals.acceptance_rate = accepted / static_cast<double>(n);
    }
    for (const auto& r : trace.records) {
        trace.totals.cost += r.draft.cost.total();
        trace.totals.wall_time += r.draft.cost.wall_time;
        for (const auto& t : r.target_samples) {
            trace.totals.cost += t.cost.total();
            trace.totals.wall_time += t.cost.wall_time;
        }
    }
    return trace;
}

std::vector<StepTrace> run_problems(const std::vector<Problem>& problems, const EngineConfig& cfg,
                                    StepGenerator& draft, StepGenerator& target, StepScorer& scorer,
                                    const RouterFn& router, int parallelism) {
    Engine engine(cfg, draft, target, scorer, router);
    std::vector<StepTrace> traces(problems.size());
    if (problems.empty()) return traces;

    const int workers = std::max(1, std::min<int>(parallelism, static_cast<int>(problems.size())));
    if (workers == 1) {
        for (size_t i = 0; i < problems.size(); ++i) traces[i] = engine.run_problem(problems[i]);
        return traces;
    }

    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                while (true) {
                    size_t i = next.fetch_add(1);
                    if (i >= problems.size()) break;
                    traces[i] = engine.run_problem(problems[i]);
                }
            } catch (...) {
                errors[static_cast<size_t>(w)] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return traces;
}

} // namespace steproute
