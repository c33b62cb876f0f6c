#include "pipeline.hpp"

#include <filesystem>

#include "analytics.hpp"
#include "dataset.hpp"
#include "errors.hpp"
#include "router.hpp"
#include "trace.hpp"
#include "util.hpp"

namespace steproute {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void ensure_output_dir(const RunConfig& cfg) { fs::create_directories(cfg.output_dir); }

json provenance(const RunConfig& cfg) {
    return json{{"config_hash", cfg.config_hash}, {"seed", cfg.seed}};
}

void write_summary(const RunConfig& cfg, const std::string& name, const json& summary) {
    write_file(cfg.output_dir + "/" + name, summary.dump(2) + "\n");
}

// Output paths are reported relative to output_dir so identical runs into
// different directories stay byte-identical.
std::string display_path(const RunConfig& cfg, const std::string& path) {
    const std::string prefix = cfg.output_dir + "/";
    if (path.size() > prefix.size() && path.compare(0, prefix.size(), prefix) == 0)
        return path.substr(prefix.size());
    return path;
}

json sweep_point_to_json(const SweepPoint& p) {
    json j{
        {"policy", p.policy},
        {"mode", p.mode},
        {"grid_value", p.grid_value},
        {"is_budget", p.is_budget},
        {"acceptance_rate", p.acceptance_rate},
        {"deferral_rate", p.deferral_rate},
        {"answer_accuracy", p.answer_accuracy},
        {"mean_cost", p.mean_cost},
        {"mean_wall_time", p.mean_wall_time},
        {"failed_problems", p.failed_problems},
    };
    j["wasted_deferral_rate"] =
        p.wasted_deferral_rate ? json(*p.wasted_deferral_rate) : json(nullptr);
    j["mean_realized_score"] =
        p.mean_realized_score ? json(*p.mean_realized_score) : json(nullptr);
    return j;
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

// Plot-ready columnar export: x = acceptance rate or cost, y = accuracy.
std::string sweep_points_csv(const RunConfig& cfg, const std::vector<SweepPoint>& points) {
    std::string out = "# config_hash=" + cfg.config_hash + " seed=" + std::to_string(cfg.seed) +
                      "\n"
                      "policy,mode,grid_value,is_budget,acceptance_rate,deferral_rate,"
                      "answer_accuracy,"
                      "mean_cost,mean_wall_time,wasted_deferral_rate,mean_realized_score\n";
    for (const auto& p : points) {
        json row = sweep_point_to_json(p);
        out += csv_escape(p.policy) + "," + p.mode + "," + row["grid_value"].dump() + "," +
               (p.is_budget ? "1" : "0") + "," + row["acceptance_rate"].dump() + "," +
               row["deferral_rate"].dump() + "," + row["answer_accuracy"].dump() + "," +
               row["mean_cost"].dump() + "," + row["mean_wall_time"].dump() + "," +
               (p.wasted_deferral_rate ? json(*p.wasted_deferral_rate).dump() : "") + "," +
               (p.mean_realized_score ? json(*p.mean_realized_score).dump() : "") + "\n";
    }
    return out;
}

void write_points_file(const RunConfig& cfg, const std::string& name,
                       const std::vector<SweepPoint>& points, const char* schema) {
    std::string out;
    json header{{"schema", schema}, {"config_hash", cfg.config_hash}, {"seed", cfg.seed}};
    out += header.dump();
    out += '\n';
    for (const auto& p : points) {
        out += sweep_point_to_json(p).dump();
        out += '\n';
    }
    write_file(cfg.output_dir + "/" + name, out);
}

json eval_to_json(const RouterEval& ev) {
    json j{{"tau", ev.tau}, {"eval_size", ev.eval_size}};
    j["spearman_rho"] = ev.spearman_rho ? json(*ev.spearman_rho) : json(nullptr);
    j["acc_class0"] = ev.acc_class0 ? json(*ev.acc_class0) : json(nullptr);
    j["acc_class1"] = ev.acc_class1 ? json(*ev.acc_class1) : json(nullptr);
    return j;
}

// The engine-facing router: a served endpoint when configured, otherwise
// the reference model file.
RouterFn load_router_for(const RunConfig& cfg) {
    if (!cfg.router_endpoint.empty())
        return http_router_fn(cfg.router_endpoint, cfg.http, cfg.scorer.auth_env);
    std::string path = cfg.router_model_path.empty() ? cfg.model_path() : cfg.router_model_path;
    return router_fn(RouterModel::load(path));
}

} // namespace

json cmd_run(const RunConfig& cfg) {
    cfg.validate_for("run");
    ensure_output_dir(cfg);

    auto problems = load_problems(cfg.questions);
    auto backends = make_backends(cfg);
    RouterFn router;
    if (cfg.policy.kind == PolicyKind::router) router = load_router_for(cfg);

    auto traces = run_problems(problems, cfg.engine_config(), *backends.draft, *backends.target,
                               *backends.scorer, router, cfg.parallelism);
    write_traces(traces, cfg.traces_path(), cfg.config_hash, cfg.seed);

    size_t total_steps = 0, accepted = 0, failed = 0;
    double cost = 0.0, wall = 0.0, trace_alpha_sum = 0.0;
    size_t alpha_count = 0;
    for (const auto& t : traces) {
        if (t.failed()) {
            ++failed;
            continue;
        }
        for (const auto& r : t.records) {
            ++total_steps;
            accepted += 1 - r.decision.a;
        }
        if (!t.records.empty()) {
            trace_alpha_sum += t.totals.acceptance_rate;
            ++alpha_count;
        }
        cost += t.totals.cost;
        wall += t.totals.wall_time;
    }
    auto acc = answer_accuracy(traces, problems, cfg.seg.eos_marker);

    json summary = provenance(cfg);
    summary["command"] = "run";
    summary["policy"] = policy_name(cfg.policy.kind);
    summary["tau"] = cfg.policy.tau;
    summary["problems"] = problems.size();
    summary["failed_problems"] = failed;
    summary["acceptance_rate_pooled"] =
        total_steps ? static_cast<double>(accepted) / static_cast<double>(total_steps) : 0.0;
    summary["acceptance_rate_mean_trace"] =
        alpha_count ? trace_alpha_sum / static_cast<double>(alpha_count) : 0.0;
    summary["answer_accuracy"] = acc.accuracy;
    summary["unextractable_answers"] = acc.unextractable;
    summary["total_cost"] = cost;
    summary["total_wall_time"] = wall;
    summary["score_clamp_warnings"] = backends.scorer->clamp_warnings();
    summary["traces"] = display_path(cfg, cfg.traces_path());
    write_summary(cfg, "run_summary.json", summary);
    return summary;
}

json cmd_collect(const RunConfig& cfg) {
    cfg.validate_for("collect");
    ensure_output_dir(cfg);

    auto problems = sample_questions(load_problems(cfg.questions),
                                     static_cast<size_t>(cfg.collect_sample_questions), cfg.seed);
    auto backends = make_backends(cfg);

    CorpusStats stats;
    auto corpus = build_corpus(problems, cfg.engine_config(), *backends.draft, *backends.target,
                               *backends.scorer, &stats, cfg.parallelism);
    write_corpus(corpus, cfg.corpus_path(), cfg.config_hash, cfg.seed);

    json summary = provenance(cfg);
    summary["command"] = "collect";
    summary["k"] = cfg.collect_samples;
    summary["questions_sampled"] = problems.size();
    summary["examples"] = corpus.size();
    summary["count_y0"] = stats.count_y0;
    summary["count_y1"] = stats.count_y1;
    summary["ratio_y0"] = stats.ratio_y0();
    summary["dropped_incomplete"] = stats.dropped_incomplete;
    summary["corpus"] = display_path(cfg, cfg.corpus_path());
    write_summary(cfg, "collect_summary.json", summary);
    return summary;
}

json cmd_train(const RunConfig& cfg) {
    cfg.validate_for("train");
    ensure_output_dir(cfg);

    auto corpus = read_corpus(cfg.corpus_path());
    std::vector<RoutingExample> train_split, eval_split;
    split_corpus(corpus, cfg.train.eval_fraction, cfg.train.seed, &train_split, &eval_split);
    if (train_split.empty()) throw ConfigError("train split is empty; lower eval_fraction");

    size_t before_balance = train_split.size();
    if (cfg.train.balance) train_split = balance(train_split, cfg.train.seed);

    TrainOptions opts;
    opts.epochs = cfg.train.epochs;
    opts.learning_rate = cfg.train.learning_rate;
    opts.seed = cfg.train.seed;
    RouterModel model = train_router(train_split, opts);
    model.config_hash = cfg.config_hash;
    model.save(cfg.model_path());

    json summary = provenance(cfg);
    summary["command"] = "train";
    summary["corpus"] = display_path(cfg, cfg.corpus_path());
    summary["model"] = display_path(cfg, cfg.model_path());
    summary["train_examples"] = train_split.size();
    summary["train_examples_before_balance"] = before_balance;
    summary["eval_examples"] = eval_split.size();
    summary["epochs"] = opts.epochs;
    summary["learning_rate"] = opts.learning_rate;
    summary["train_seed"] = opts.seed;
    summary["final_loss"] = model.final_loss;
    if (!eval_split.empty())
        summary["eval"] = eval_to_json(evaluate_router(model, eval_split, cfg.train.eval_tau));
    write_summary(cfg, "train_summary.json", summary);
    return summary;
}

json cmd_eval(const RunConfig& cfg) {
    cfg.validate_for("eval");
    ensure_output_dir(cfg);

    auto corpus = read_corpus(cfg.eval.corpus.empty() ? cfg.corpus_path() : cfg.eval.corpus);
    auto model = RouterModel::load(cfg.eval.model.empty() ? cfg.model_path() : cfg.eval.model);
    auto ev = evaluate_router(model, corpus, cfg.eval.tau);

    json summary = provenance(cfg);
    summary["command"] = "eval";
    summary["router_quality"] = eval_to_json(ev); // Spearman rho / Acc 0 / Acc 1 layout
    if (!cfg.eval.taus.empty()) {
        json table = json::array();
        for (double tau : cfg.eval.taus) table.push_back(eval_to_json(evaluate_router(model, corpus, tau)));
        summary["tau_table"] = std::move(table);
    }
    write_summary(cfg, "eval_summary.json", summary);
    return summary;
}

json cmd_sweep(const RunConfig& cfg) {
    cfg.validate_for("sweep");
    ensure_output_dir(cfg);

    auto problems = load_problems(cfg.questions);
    auto backends = make_backends(cfg);

    RouterFn router;
    bool wants_router = false;
    for (const auto& p : cfg.sweep.policies) wants_router |= (p == "router");
    if (wants_router) router = load_router_for(cfg);

    SweepRequest req;
    req.policies.clear();
    for (const auto& p : cfg.sweep.policies) req.policies.push_back(policy_from_name(p));
    req.taus = cfg.sweep.taus;
    req.deferral_grid_points = cfg.sweep.deferral_grid;

    std::vector<SweepPoint> points;
    if (cfg.sweep.mode == "frozen") {
        EngineConfig collect_cfg = cfg.engine_config();
        collect_cfg.collect_counterfactuals = true;
        collect_cfg.counterfactual_samples = cfg.sweep.samples;
        if (collect_cfg.policy.kind == PolicyKind::router)
            collect_cfg.policy.kind = PolicyKind::oracle;
        auto traces = run_problems(problems, collect_cfg, *backends.draft, *backends.target,
                                   *backends.scorer, {}, cfg.parallelism);
        auto frozen = freeze(traces, problems, router);
        points = sweep_frozen(frozen, req, cfg.seg);
    } else {
        points = sweep_live(problems, cfg.engine_config(), *backends.draft, *backends.target,
                            *backends.scorer, router, req, cfg.parallelism);
    }

    auto frontier = pareto_frontier(points);
    write_points_file(cfg, "sweep_points.jsonl", points, "steproute.sweep.v1");
    write_points_file(cfg, "frontier.jsonl", frontier, "steproute.frontier.v1");
    write_file(cfg.output_dir + "/sweep_export.csv", sweep_points_csv(cfg, points));

    json summary = provenance(cfg);
    summary["command"] = "sweep";
    summary["mode"] = cfg.sweep.mode;
    summary["policies"] = cfg.sweep.policies;
    summary["points"] = points.size();
    summary["frontier_points"] = frontier.size();
    summary["points_file"] = "sweep_points.jsonl";
    summary["frontier_file"] = "frontier.jsonl";
    summary["export_file"] = "sweep_export.csv";
    write_summary(cfg, "sweep_summary.json", summary);
    return summary;
}

json cmd_report(const RunConfig& cfg) {
    cfg.validate_for("report");
    ensure_output_dir(cfg);

    auto traces = read_traces(cfg.traces_path());
    auto rep = waste_report_from_traces(traces, cfg.report.tau);

    json summary = provenance(cfg);
    summary["command"] = "report";
    summary["traces"] = display_path(cfg, cfg.traces_path());
    summary["waste"] = {
        {"tau", rep.tau},
        {"reject_rate", rep.reject_rate},
        {"improvement_rate", rep.improvement_rate},
        {"wasted_deferral_rate", rep.wasted_deferral_rate},
        {"expected_wasted_cost", rep.expected_wasted_cost},
        {"records_used", rep.records_used},
        {"records_excluded", rep.records_excluded},
    };

    if (cfg.report.tau_grid > 1) {
        size_t excluded = 0;
        auto steps = counterfactuals_from_traces(traces, &excluded);
        json curve = json::array();
        for (int g = 0; g < cfg.report.tau_grid; ++g) {
            double tau = static_cast<double>(g) / static_cast<double>(cfg.report.tau_grid - 1);
            auto r = waste_report(steps, tau);
            curve.push_back({{"tau", tau},
                             {"reject_rate", r.reject_rate},
                             {"improvement_rate", r.improvement_rate},
                             {"wasted_deferral_rate", r.wasted_deferral_rate}});
        }
        summary["waste_curve"] = std::move(curve);
    }

    size_t total_steps = 0, accepted = 0, failed = 0;
    double cost = 0.0;
    for (const auto& t : traces) {
        if (t.failed()) ++failed;
        for (const auto& r : t.records) {
            ++total_steps;
            accepted += 1 - r.decision.a;
        }
        cost += t.totals.cost;
    }
    summary["problems"] = traces.size();
    summary["failed_problems"] = failed;
    summary["acceptance_rate_pooled"] =
        total_steps ? static_cast<double>(accepted) / static_cast<double>(total_steps) : 0.0;
    summary["total_cost"] = cost;

    if (!cfg.questions.empty() && fs::exists(cfg.questions)) {
        auto problems = load_problems(cfg.questions);
        summary["answer_accuracy"] = answer_accuracy(traces, problems, cfg.seg.eos_marker).accuracy;
    }
    write_summary(cfg, "report_summary.json", summary);
    return summary;
}

json run_command(const std::string& command, const RunConfig& cfg) {
    if (command == "run") return cmd_run(cfg);
    if (command == "collect") return cmd_collect(cfg);
    if (command == "train") return cmd_train(cfg);
    if (command == "eval") return cmd_eval(cfg);
    if (command == "sweep") return cmd_sweep(cfg);
    if (command == "report") return cmd_report(cfg);
    throw ConfigError("unknown command '" + command + "'");
}

} // namespace steproute
