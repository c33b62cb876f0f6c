#include "step_model.hpp"

#include "errors.hpp"
#include "util.hpp"

namespace steproute {

const char* length_unit_name(LengthUnit u) {
    return u == LengthUnit::tokens ? "tokens" : "chars";
}

void SegmentationConfig::validate() const {
    if (separator.empty()) throw ConfigError("segmentation.separator must be non-empty");
    if (separator == eos_marker)
        throw ConfigError("segmentation.separator must differ from eos_marker");
    if (max_steps < 1) throw ConfigError("segmentation.max_steps must be >= 1");
}

std::vector<StepText> segment_steps(const std::string& text, const SegmentationConfig& cfg) {
    cfg.validate();
    std::vector<StepText> steps;
    if (text.empty()) return steps;

    std::string body = text;
    bool terminal = false;
    if (!cfg.eos_marker.empty() && ends_with(body, cfg.eos_marker)) {
        body.resize(body.size() - cfg.eos_marker.size());
        terminal = true;
    }

    for (auto& piece : split_literal(body, cfg.separator)) {
        StepText s;
        s.length_units = static_cast<long>(piece.size());
        s.unit = LengthUnit::chars;
        s.content = std::move(piece);
        steps.push_back(std::move(s));
    }
    if (terminal) steps.back().is_terminal = true;
    return steps;
}

std::string join_steps(const std::vector<StepText>& steps, const SegmentationConfig& cfg) {
    cfg.validate();
    if (steps.empty()) throw InvariantError("join_steps: empty step list");
    std::string out;
    for (size_t i = 0; i < steps.size(); ++i) {
        if (steps[i].is_terminal && i + 1 != steps.size())
            throw InvariantError("join_steps: terminal step at position " + std::to_string(i) +
                                 " is not the final step");
        if (i > 0) out += cfg.separator;
        out += steps[i].content;
    }
    if (steps.back().is_terminal) out += cfg.eos_marker;
    return out;
}

} // namespace steproute
