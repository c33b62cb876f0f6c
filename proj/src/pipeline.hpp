#pragma once

#include <nlohmann/json.hpp>

#include "config.hpp"

namespace steproute {

// Pipeline stages behind the CLI subcommands and the C API. Each validates
// its slice of the config before touching any backend, writes its output
// files under cfg.output_dir, and returns the summary it also wrote.
nlohmann::json cmd_run(const RunConfig& cfg);
nlohmann::json cmd_collect(const RunConfig& cfg);
nlohmann::json cmd_train(const RunConfig& cfg);
nlohmann::json cmd_eval(const RunConfig& cfg);
nlohmann::json cmd_sweep(const RunConfig& cfg);
nlohmann::json cmd_report(const RunConfig& cfg);

nlohmann::json run_command(const std::string& command, const RunConfig& cfg);

} // namespace steproute
