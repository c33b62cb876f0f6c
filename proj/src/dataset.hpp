#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace steproute {

struct EngineConfig; // engine.hpp
class StepGenerator;
class StepScorer;
struct Problem;

// One supervised routing tuple: context, draft step, target step(s), their
// rewards, the (averaged) advantage, and the escalation label.
struct RoutingExample {
    std::string problem_id;
    int step_index = 0;
    uint64_t seed = 0;

    std::string context;                  // annotation-tagged when collection ran with tags
    std::string draft_text;
    std::vector<std::string> target_texts; // k samples from the same prefix
    double s_d = 0.0;
    std::vector<double> s_t_samples;
    double s_t = 0.0;                     // mean of s_t_samples
    int k = 1;
    double delta = 0.0;                   // s_t - s_d
    int y = 0;                            // 1 iff delta > 0, strict
    bool draft_terminal = false;
};

struct CorpusStats {
    size_t count_y0 = 0;
    size_t count_y1 = 0;
    size_t dropped_incomplete = 0;
    std::vector<size_t> steps_per_problem;

    size_t total() const { return count_y0 + count_y1; }
    double ratio_y0() const { return total() ? static_cast<double>(count_y0) / total() : 0.0; }
};

CorpusStats corpus_stats(const std::vector<RoutingExample>& corpus);

// Runs the counterfactual collection loop over every question: one example
// per complete step, label from the averaged advantage. Incomplete records
// (failures, empty steps that were never scored) are dropped and counted.
std::vector<RoutingExample> build_corpus(const std::vector<Problem>& questions,
                                         const EngineConfig& cfg, StepGenerator& draft,
                                         StepGenerator& target, StepScorer& scorer,
                                         CorpusStats* stats_out = nullptr, int parallelism = 1);

// Uniformly downsamples the majority class (seeded) until class counts
// differ by at most one, then deterministically shuffles. Refuses
// single-class corpora.
std::vector<RoutingExample> balance(const std::vector<RoutingExample>& corpus, uint64_t seed);

// Problem-level split: every step of a problem lands on one side. The eval
// side stays unbalanced so per-class accuracies keep their meaning.
void split_corpus(const std::vector<RoutingExample>& corpus, double eval_fraction, uint64_t seed,
                  std::vector<RoutingExample>* train_out, std::vector<RoutingExample>* eval_out);

// Seed-question subsampling for collection runs. When problems carry a
// stratum (difficulty/topic bucket), the sample keeps each stratum's
// proportion (largest-remainder allocation); without strata it is a plain
// uniform sample. count = 0 or >= size returns the input unchanged.
std::vector<Problem> sample_questions(const std::vector<Problem>& problems, size_t count,
                                      uint64_t seed);

inline constexpr const char* kCorpusSchema = "steproute.corpus.v1";

// Line-delimited serialization with a version header line. write/read is a
// lossless round trip; re-serializing a read corpus is byte-identical.
void write_corpus(const std::vector<RoutingExample>& corpus, const std::string& path,
                  const std::string& config_hash, uint64_t seed);
std::vector<RoutingExample> read_corpus(const std::string& path);

} // namespace steproute
