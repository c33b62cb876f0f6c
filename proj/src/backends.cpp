#include "backends.hpp"

#include <algorithm>
#include <limits>

#include "errors.hpp"
#include "util.hpp"

namespace steproute {

const char* role_name(Role r) { return r == Role::draft ? "draft" : "target"; }

Role role_from_name(const std::string& name) {
    if (name == "draft") return Role::draft;
    if (name == "target") return Role::target;
    throw ConfigError("unknown role '" + name + "' (expected draft|target)");
}

const char* annotation_tag(Role chosen) {
    return chosen == Role::draft ? "Model 0" : "Model 1";
}

std::string annotation_prefix(Role chosen) { return std::string(annotation_tag(chosen)) + ": "; }

void GeneratorRef::validate() const {
    if (max_units < 1) throw ConfigError(std::string(role_name(role)) + ".max_units must be >= 1");
    if (stop.empty()) throw ConfigError(std::string(role_name(role)) + ".stop must be non-empty");
    if (unit_price < 0.0)
        throw ConfigError(std::string(role_name(role)) + ".unit_price must be >= 0");
}

void ScoreBounds::validate() const {
    if (!(hi > lo)) throw ConfigError("scorer bounds require hi > lo");
}

double ScoreBounds::normalize(double raw, bool* clamped) const {
    double v = (raw - lo) / (hi - lo);
    bool out_of_range = v < 0.0 || v > 1.0;
    if (clamped) *clamped = out_of_range;
    return std::clamp(v, 0.0, 1.0);
}

namespace {

constexpr size_t kNoEvent = std::numeric_limits<size_t>::max();

// Position at which a marker *completes* if emitted character by character,
// or kNoEvent when the marker never occurs.
size_t completion_point(const std::string& text, const std::string& marker) {
    if (marker.empty()) return kNoEvent;
    size_t pos = text.find(marker);
    return pos == std::string::npos ? kNoEvent : pos + marker.size();
}

} // namespace

StepGeneration finalize_generation(std::string text, const GeneratorRef& ref,
                                   LengthUnit unit, long backend_units, double wall_time) {
    StepGeneration gen;
    gen.producer = ref.role;

    bool terminal = false;
    bool truncated = false;
    long units = 0;

    if (unit == LengthUnit::chars) {
        // Simulate sequential emission: the step ends at whichever of the
        // stop sequence, the eos marker, or the unit cap completes first.
        const size_t stop_end = completion_point(text, ref.stop);
        const size_t eos_end = completion_point(text, ref.eos_marker);
        const size_t cap_units = static_cast<size_t>(ref.max_units);
        const size_t cap_end = text.size() > cap_units ? cap_units : kNoEvent;

        const size_t first = std::min({stop_end, eos_end, cap_end});
        if (first != kNoEvent) {
            if (first == eos_end && eos_end <= stop_end && eos_end <= cap_end) {
                terminal = true;
                text.resize(eos_end - ref.eos_marker.size());
            } else if (first == stop_end && stop_end <= cap_end) {
                text.resize(stop_end - ref.stop.size());
            } else {
                text.resize(cap_end);
                truncated = true;
            }
        }
        units = static_cast<long>(text.size());
    } else {
        // Token-reporting backend: the server enforced stop/eos/max_tokens;
        // client-side cuts are a safety net for servers that echo markers.
        size_t stop_pos = text.find(ref.stop);
        if (stop_pos != std::string::npos) text.resize(stop_pos);
        if (!ref.eos_marker.empty() && ends_with(text, ref.eos_marker)) {
            text.resize(text.size() - ref.eos_marker.size());
            terminal = true;
        }
        units = backend_units >= 0 ? backend_units : static_cast<long>(text.size());
        if (backend_units < 0) unit = LengthUnit::chars;
        truncated = !terminal && units >= ref.max_units;
    }

    gen.step.content = std::move(text);
    gen.step.length_units = units;
    gen.step.unit = unit;
    gen.step.is_terminal = terminal;
    gen.truncated = truncated;
    gen.cost.wall_time = wall_time;
    gen.cost.units = units;
    gen.cost.unit = unit;
    gen.cost.unit_price = ref.unit_price;
    return gen;
}

} // namespace steproute
