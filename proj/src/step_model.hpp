#pragma once

#include <string>
#include <vector>

namespace steproute {

// Unit in which a step's length (and therefore its generation cost) is
// counted. HTTP backends report tokens when the server does; everything
// else falls back to characters. The unit travels with the numbers so
// costs in different units are never summed silently.
enum class LengthUnit { chars, tokens };

const char* length_unit_name(LengthUnit u);

// One reasoning step. `content` never contains the separator; `is_terminal`
// marks a step that ended with the end-of-sequence marker instead of the
// separator.
struct StepText {
    std::string content;
    long length_units = 0;
    LengthUnit unit = LengthUnit::chars;
    bool is_terminal = false;
};

struct SegmentationConfig {
    std::string separator = "\n\n";
    std::string eos_marker = "<eos>";
    int max_steps = 32;

    void validate() const; // throws ConfigError on bad fields
};

// Splits a raw generation into steps on every occurrence of the separator.
// An eos marker at the very end of the text is stripped and the final step
// is marked terminal; separator occurrences inside the eos suffix are
// literal text, not boundaries. Empty input yields an empty list; empty
// steps from consecutive separators are preserved.
std::vector<StepText> segment_steps(const std::string& text, const SegmentationConfig& cfg);

// Exact inverse of segment_steps: steps joined by the separator, with the
// eos marker appended after a terminal final step. Throws InvariantError
// when a terminal step appears anywhere but last, or on an empty list.
std::string join_steps(const std::vector<StepText>& steps, const SegmentationConfig& cfg);

} // namespace steproute
