#include "trace.hpp"

#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "util.hpp"

namespace steproute {

using nlohmann::json;

namespace {

json generation_to_json(const StepGeneration& g) {
    return json{
        {"text", g.step.content},
        {"terminal", g.step.is_terminal},
        {"units", g.step.length_units},
        {"unit", length_unit_name(g.step.unit)},
        {"producer", role_name(g.producer)},
        {"truncated", g.truncated},
        {"wall_time", g.cost.wall_time},
        {"unit_price", g.cost.unit_price},
    };
}

StepGeneration generation_from_json(const json& j) {
    StepGeneration g;
    g.step.content = j.at("text").get<std::string>();
    g.step.is_terminal = j.at("terminal").get<bool>();
    g.step.length_units = j.at("units").get<long>();
    g.step.unit = j.at("unit").get<std::string>() == "tokens" ? LengthUnit::tokens
                                                              : LengthUnit::chars;
    g.producer = role_from_name(j.at("producer").get<std::string>());
    g.truncated = j.at("truncated").get<bool>();
    g.cost.wall_time = j.at("wall_time").get<double>();
    g.cost.unit_price = j.at("unit_price").get<double>();
    g.cost.units = g.step.length_units;
    g.cost.unit = g.step.unit;
    return g;
}

json record_to_json(const StepRecord& r) {
    json j{
        {"index", r.index},
        {"context_hash", r.context_hash},
        {"draft", generation_to_json(r.draft)},
        {"s_d", r.s_d ? json(*r.s_d) : json(nullptr)},
        {"s_t", r.s_t ? json(*r.s_t) : json(nullptr)},
        {"delta", r.delta ? json(*r.delta) : json(nullptr)},
        {"decision",
         {{"a", r.decision.a},
          {"policy", r.decision.policy},
          {"trigger", r.decision.trigger_value},
          {"tau", r.decision.threshold}}},
        {"chosen", role_name(r.chosen)},
        {"y_hat", r.y_hat ? json(*r.y_hat) : json(nullptr)},
        {"tag", r.annotation_tag},
        {"truncated", r.truncated},
    };
    if (r.context_text) j["context_text"] = *r.context_text;
    if (!r.target_samples.empty()) {
        json samples = json::array();
        for (const auto& t : r.target_samples) samples.push_back(generation_to_json(t));
        j["targets"] = std::move(samples);
        j["target_scores"] = r.target_scores;
    }
    return j;
}

StepRecord record_from_json(const json& j) {
    StepRecord r;
    r.index = j.at("index").get<int>();
    r.context_hash = j.at("context_hash").get<std::string>();
    if (j.contains("context_text")) r.context_text = j.at("context_text").get<std::string>();
    r.draft = generation_from_json(j.at("draft"));
    if (!j.at("s_d").is_null()) r.s_d = j.at("s_d").get<double>();
    if (!j.at("s_t").is_null()) r.s_t = j.at("s_t").get<double>();
    if (!j.at("delta").is_null()) r.delta = j.at("delta").get<double>();
    const auto& d = j.at("decision");
    r.decision.a = d.at("a").get<int>();
    r.decision.policy = d.at("policy").get<std::string>();
    r.decision.trigger_value = d.at("trigger").get<double>();
    r.decision.threshold = d.at("tau").get<double>();
    r.chosen = role_from_name(j.at("chosen").get<std::string>());
    if (!j.at("y_hat").is_null()) r.y_hat = j.at("y_hat").get<double>();
    r.annotation_tag = j.at("tag").get<std::string>();
    r.truncated = j.at("truncated").get<bool>();
    if (j.contains("targets")) {
        for (const auto& t : j.at("targets")) r.target_samples.push_back(generation_from_json(t));
        r.target_scores = j.at("target_scores").get<std::vector<double>>();
    }
    return r;
}

} // namespace

std::string step_trace_to_json(const StepTrace& t) {
    json steps = json::array();
    for (const auto& r : t.records) steps.push_back(record_to_json(r));
    json j{
        {"problem_id", t.problem_id},
        {"question", t.question},
        {"steps", std::move(steps)},
        {"final_text", t.final_text},
        {"terminal_reason", terminal_reason_name(t.terminal_reason)},
        {"failure", t.failure_message},
        {"totals",
         {{"acceptance_rate", t.totals.acceptance_rate},
          {"cost", t.totals.cost},
          {"wall_time", t.totals.wall_time},
          {"steps", t.totals.steps}}},
    };
    return j.dump();
}

StepTrace step_trace_from_json(const std::string& line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw IoError(std::string("trace parse error: ") + e.what());
    }
    StepTrace t;
    t.problem_id = j.at("problem_id").get<std::string>();
    t.question = j.at("question").get<std::string>();
    for (const auto& r : j.at("steps")) t.records.push_back(record_from_json(r));
    t.final_text = j.at("final_text").get<std::string>();
    t.terminal_reason = terminal_reason_from_name(j.at("terminal_reason").get<std::string>());
    t.failure_message = j.at("failure").get<std::string>();
    const auto& totals = j.at("totals");
    t.totals.acceptance_rate = totals.at("acceptance_rate").get<double>();
    t.totals.cost = totals.at("cost").get<double>();
    t.totals.wall_time = totals.at("wall_time").get<double>();
    t.totals.steps = totals.at("steps").get<size_t>();
    return t;
}

void write_traces(const std::vector<StepTrace>& traces, const std::string& path,
                  const std::string& config_hash, uint64_t seed) {
    std::string out;
    json header{{"schema", kTraceSchema}, {"config_hash", config_hash}, {"seed", seed}};
    out += header.dump();
    out += '\n';
    for (const auto& t : traces) {
        out += step_trace_to_json(t);
        out += '\n';
    }
    write_file(path, out);
}

std::vector<StepTrace> read_traces(const std::string& path) {
    auto lines = read_lines(path);
    if (lines.empty()) throw IoError("trace file is empty: " + path);
    json header;
    try {
        header = json::parse(lines[0]);
    } catch (const json::exception& e) {
        throw IoError(path + ":1: header parse error: " + e.what());
    }
    if (header.value("schema", std::string()) != kTraceSchema)
        throw IoError(path + ": unknown trace schema '" + header.value("schema", std::string()) +
                      "'");
    std::vector<StepTrace> traces;
    for (size_t i = 1; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        try {
            traces.push_back(step_trace_from_json(lines[i]));
        } catch (const json::exception& e) {
            throw IoError(path + ":" + std::to_string(i + 1) + ": " + e.what());
        }
    }
    return traces;
}

} // namespace steproute
