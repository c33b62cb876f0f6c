#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

// Independent test oracles. These stay deliberately naive (exhaustive
// search, counting ranks, O(n^2) scans) and share no code with the
// implementation paths they check.

namespace steproute::testing {

// Maximum of sum(a_i * delta_i) over all decision vectors with
// sum(a_i) <= budget, by exhaustive enumeration of all 2^n subsets.
double brute_force_best_gain(const std::vector<double>& deltas, size_t budget);

// Spearman rho via counting ranks (rank_i = #smaller + (#equal + 1) / 2)
// and a direct long-double Pearson over them.
std::optional<double> independent_spearman(const std::vector<double>& a,
                                           const std::vector<double>& b);

// Character-scanning splitter (no std::string::find on the separator):
// returns pieces plus whether the text ended with the eos marker.
std::pair<std::vector<std::string>, bool> independent_split(const std::string& text,
                                                            const std::string& sep,
                                                            const std::string& eos);

// O(n^2) dominance filter over (cost, accuracy) points.
std::vector<size_t> brute_force_pareto(const std::vector<std::pair<double, double>>& pts);

} // namespace steproute::testing
