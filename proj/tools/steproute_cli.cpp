// Command-line front end over the steproute C API. Everything here goes
// through steproute.h; the core library stays behind the shared-library
// boundary.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "steproute.h"

namespace {

int exit_code_for(sr_status status) { return static_cast<int>(status); }

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides; // key=json_value
    std::string output_dir;
    bool quiet = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("-c,--config", args.config_path, "Config file (JSON)")->required();
    cmd->add_option("--set", args.overrides,
                    "Override a config field, dotted path: --set policy.tau=0.7");
    cmd->add_option("-o,--output-dir", args.output_dir, "Override output_dir");
    cmd->add_flag("-q,--quiet", args.quiet, "Suppress the summary printout");
}

int apply_overrides(sr_config* cfg, const CommonArgs& args) {
    for (const auto& kv : args.overrides) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) {
            std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", kv.c_str());
            return exit_code_for(SR_ERR_INVALID_ARG);
        }
        sr_status s =
            sr_config_override(cfg, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
        if (s != SR_OK) {
            std::fprintf(stderr, "error (%s): %s\n", sr_status_name(s), sr_last_error());
            return exit_code_for(s);
        }
    }
    if (!args.output_dir.empty()) {
        std::string quoted = "\"" + args.output_dir + "\"";
        sr_status s = sr_config_override(cfg, "output_dir", quoted.c_str());
        if (s != SR_OK) {
            std::fprintf(stderr, "error (%s): %s\n", sr_status_name(s), sr_last_error());
            return exit_code_for(s);
        }
    }
    return 0;
}

int run_command(const std::string& name, const CommonArgs& args,
                sr_status (*command)(const sr_config*, char**)) {
    sr_config* cfg = nullptr;
    sr_status s = sr_config_load(args.config_path.c_str(), &cfg);
    if (s != SR_OK) {
        std::fprintf(stderr, "error (%s): %s\n", sr_status_name(s), sr_last_error());
        return exit_code_for(s);
    }
    int rc = apply_overrides(cfg, args);
    if (rc != 0) {
        sr_config_free(cfg);
        return rc;
    }

    char* summary = nullptr;
    s = command(cfg, &summary);
    if (s != SR_OK) {
        std::fprintf(stderr, "%s failed (%s): %s\n", name.c_str(), sr_status_name(s),
                     sr_last_error());
        sr_config_free(cfg);
        return exit_code_for(s);
    }
    if (!args.quiet && summary) std::printf("%s\n", summary);
    sr_string_free(summary);
    sr_config_free(cfg);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"step-level speculative generation engine"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(sr_version()));

    struct Sub {
        const char* name;
        const char* help;
        sr_status (*fn)(const sr_config*, char**);
    };
    const Sub subs[] = {
        {"run", "Decode a question file under the configured policy", &sr_cmd_run},
        {"collect", "Build a counterfactual routing corpus", &sr_cmd_collect},
        {"train", "Train the reference router on a collected corpus", &sr_cmd_train},
        {"eval", "Evaluate a router (Spearman rho, per-class accuracy)", &sr_cmd_eval},
        {"sweep", "Threshold/budget sweep with Pareto frontier", &sr_cmd_sweep},
        {"report", "Waste and acceptance diagnostics over a trace file", &sr_cmd_report},
    };

    std::vector<CommonArgs> args(std::size(subs));
    std::vector<CLI::App*> cmds;
    for (size_t i = 0; i < std::size(subs); ++i) {
        CLI::App* cmd = app.add_subcommand(subs[i].name, subs[i].help);
        add_common(cmd, args[i]);
        cmds.push_back(cmd);
    }

    CLI11_PARSE(app, argc, argv);

    for (size_t i = 0; i < std::size(subs); ++i)
        if (cmds[i]->parsed()) return run_command(subs[i].name, args[i], subs[i].fn);
    return 1;
}
