#pragma once

#include <string>
#include <vector>

#include "engine.hpp"

namespace steproute {

inline constexpr const char* kTraceSchema = "steproute.trace.v1";

std::string step_trace_to_json(const StepTrace& trace);
StepTrace step_trace_from_json(const std::string& line);

// One problem per line after a header line carrying the schema version,
// config hash and seed. Serialization is deterministic, so identical runs
// produce byte-identical files.
void write_traces(const std::vector<StepTrace>& traces, const std::string& path,
                  const std::string& config_hash, uint64_t seed);
std::vector<StepTrace> read_traces(const std::string& path);

} // namespace steproute
