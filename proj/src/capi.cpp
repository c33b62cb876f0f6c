#include "steproute.h"

#include <cstring>
#include <new>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "config.hpp"
#include "errors.hpp"
#include "pipeline.hpp"
#include "router.hpp"
#include "routing.hpp"
#include "step_model.hpp"

using namespace steproute;

struct sr_config {
    RunConfig cfg;
};

struct sr_router {
    RouterModel model;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
    char* out = new char[s.size() + 1];
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

sr_status fail(sr_status status, const std::string& message) {
    g_last_error = message;
    return status;
}

// Maps the C++ error taxonomy onto status codes; everything else is an
// invariant violation (a bug, not an input problem).
template <typename Fn>
sr_status guarded(Fn&& fn) {
    try {
        fn();
        return SR_OK;
    } catch (const ConfigError& e) {
        return fail(SR_ERR_CONFIG, e.what());
    } catch (const IoError& e) {
        return fail(SR_ERR_IO, e.what());
    } catch (const BackendError& e) {
        return fail(SR_ERR_BACKEND, e.what());
    } catch (const InvariantError& e) {
        return fail(SR_ERR_INVARIANT, e.what());
    } catch (const std::exception& e) {
        return fail(SR_ERR_INVARIANT, e.what());
    }
}

sr_status run_pipeline_command(const sr_config* cfg, char** summary_out,
                               nlohmann::json (*command)(const RunConfig&)) {
    if (!cfg) return fail(SR_ERR_INVALID_ARG, "config handle is null");
    return guarded([&] {
        nlohmann::json summary = command(cfg->cfg);
        if (summary_out) *summary_out = dup_string(summary.dump(2));
    });
}

} // namespace

extern "C" {

const char* sr_status_name(sr_status status) {
    switch (status) {
        case SR_OK: return "ok";
        case SR_ERR_INVALID_ARG: return "invalid_argument";
        case SR_ERR_CONFIG: return "config_error";
        case SR_ERR_IO: return "io_error";
        case SR_ERR_BACKEND: return "backend_error";
        case SR_ERR_INVARIANT: return "invariant_violation";
    }
    return "unknown";
}

const char* sr_version(void) { return "0.1.0"; }

const char* sr_last_error(void) { return g_last_error.c_str(); }

void sr_string_free(char* s) { delete[] s; }

sr_status sr_config_load(const char* path, sr_config** out) {
    if (!path || !out) return fail(SR_ERR_INVALID_ARG, "path and out must be non-null");
    return guarded([&] { *out = new sr_config{RunConfig::load(path)}; });
}

sr_status sr_config_parse(const char* json_text, sr_config** out) {
    if (!json_text || !out) return fail(SR_ERR_INVALID_ARG, "json_text and out must be non-null");
    return guarded([&] { *out = new sr_config{RunConfig::parse(json_text)}; });
}

sr_status sr_config_override(sr_config* cfg, const char* dotted_key, const char* json_value) {
    if (!cfg || !dotted_key || !json_value)
        return fail(SR_ERR_INVALID_ARG, "cfg, key and value must be non-null");
    return guarded([&] { cfg->cfg.apply_override(dotted_key, json_value); });
}

sr_status sr_config_hash(const sr_config* cfg, char** hash_out) {
    if (!cfg || !hash_out) return fail(SR_ERR_INVALID_ARG, "cfg and hash_out must be non-null");
    *hash_out = dup_string(cfg->cfg.config_hash);
    return SR_OK;
}

sr_status sr_config_dump(const sr_config* cfg, char** json_out) {
    if (!cfg || !json_out) return fail(SR_ERR_INVALID_ARG, "cfg and json_out must be non-null");
    return guarded([&] { *json_out = dup_string(cfg->cfg.raw().dump(2)); });
}

void sr_config_free(sr_config* cfg) { delete cfg; }

sr_status sr_cmd_run(const sr_config* cfg, char** out) {
    return run_pipeline_command(cfg, out, &cmd_run);
}
sr_status sr_cmd_collect(const sr_config* cfg, char** out) {
    return run_pipeline_command(cfg, out, &cmd_collect);
}
sr_status sr_cmd_train(const sr_config* cfg, char** out) {
    return run_pipeline_command(cfg, out, &cmd_train);
}
sr_status sr_cmd_eval(const sr_config* cfg, char** out) {
    return run_pipeline_command(cfg, out, &cmd_eval);
}
sr_status sr_cmd_sweep(const sr_config* cfg, char** out) {
    return run_pipeline_command(cfg, out, &cmd_sweep);
}
sr_status sr_cmd_report(const sr_config* cfg, char** out) {
    return run_pipeline_command(cfg, out, &cmd_report);
}

double sr_advantage(double s_d, double s_t) { return advantage(s_d, s_t).delta; }

double sr_realized_score(double s_d, double delta, int a) {
    return s_d + (a ? delta : 0.0);
}

int sr_rsd_decide(double s_d, double tau) { return rsd_decide(s_d, tau).a; }
int sr_oracle_decide(double delta, double tau) { return oracle_decide(delta, tau).a; }
int sr_router_decide(double y_hat, double tau) { return router_decide(y_hat, tau).a; }

sr_status sr_budgeted_select(const double* deltas, size_t n, size_t budget, int* decisions_out,
                             double* gain_out) {
    if ((!deltas && n > 0) || !decisions_out)
        return fail(SR_ERR_INVALID_ARG, "deltas and decisions_out must be non-null");
    if (budget > n) return fail(SR_ERR_INVALID_ARG, "budget exceeds step count");
    return guarded([&] {
        auto plan = budgeted_select(std::vector<double>(deltas, deltas + n), budget);
        for (size_t i = 0; i < n; ++i) decisions_out[i] = plan.decisions[i];
        if (gain_out) *gain_out = plan.achieved_gain;
    });
}

sr_status sr_plan_to_threshold(const double* deltas, size_t n, size_t budget, double* tau_out) {
    if ((!deltas && n > 0) || !tau_out)
        return fail(SR_ERR_INVALID_ARG, "deltas and tau_out must be non-null");
    if (budget > n) return fail(SR_ERR_INVALID_ARG, "budget exceeds step count");
    return guarded(
        [&] { *tau_out = plan_to_threshold(std::vector<double>(deltas, deltas + n), budget); });
}

sr_status sr_spearman(const double* a, const double* b, size_t n, double* rho_out) {
    if (!a || !b || !rho_out) return fail(SR_ERR_INVALID_ARG, "a, b and rho_out must be non-null");
    return guarded([&] {
        auto rho = spearman(std::vector<double>(a, a + n), std::vector<double>(b, b + n));
        if (!rho) throw ConfigError("spearman undefined for constant input");
        *rho_out = *rho;
    });
}

sr_status sr_segment_steps(const char* text, const char* separator, const char* eos_marker,
                           char** steps_json_out) {
    if (!text || !separator || !steps_json_out)
        return fail(SR_ERR_INVALID_ARG, "text, separator and steps_json_out must be non-null");
    return guarded([&] {
        SegmentationConfig cfg;
        cfg.separator = separator;
        cfg.eos_marker = eos_marker ? eos_marker : "";
        auto steps = segment_steps(text, cfg);
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& s : steps)
            arr.push_back({{"content", s.content}, {"terminal", s.is_terminal}});
        *steps_json_out = dup_string(arr.dump());
    });
}

sr_status sr_router_load(const char* path, sr_router** out) {
    if (!path || !out) return fail(SR_ERR_INVALID_ARG, "path and out must be non-null");
    return guarded([&] { *out = new sr_router{RouterModel::load(path)}; });
}

sr_status sr_router_predict(const sr_router* router, const char* context, const char* draft_step,
                            double s_d, int step_index, int draft_terminal, double* y_hat_out) {
    if (!router || !context || !draft_step || !y_hat_out)
        return fail(SR_ERR_INVALID_ARG, "router, context, draft_step and y_hat_out must be non-null");
    return guarded([&] {
        RouterInput in;
        in.context = context;
        in.draft_text = draft_step;
        in.s_d = s_d;
        in.step_index = step_index;
        in.draft_terminal = draft_terminal != 0;
        *y_hat_out = router->model.predict(in);
    });
}

void sr_router_free(sr_router* router) { delete router; }

} // extern "C"
