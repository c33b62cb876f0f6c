#include "dataset.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "engine.hpp"
#include "errors.hpp"
#include "util.hpp"

namespace steproute {

using nlohmann::json;

CorpusStats corpus_stats(const std::vector<RoutingExample>& corpus) {
    CorpusStats stats;
    std::map<std::string, size_t> per_problem;
    for (const auto& ex : corpus) {
        (ex.y ? stats.count_y1 : stats.count_y0) += 1;
        per_problem[ex.problem_id] += 1;
    }
    for (const auto& [id, n] : per_problem) stats.steps_per_problem.push_back(n);
    return stats;
}

std::vector<RoutingExample> build_corpus(const std::vector<Problem>& questions,
                                         const EngineConfig& cfg, StepGenerator& draft,
                                         StepGenerator& target, StepScorer& scorer,
                                         CorpusStats* stats_out, int parallelism) {
    EngineConfig collect_cfg = cfg;
    collect_cfg.collect_counterfactuals = true;
    if (collect_cfg.policy.kind == PolicyKind::router)
        // Collection never needs a router; trajectories follow the oracle.
        collect_cfg.policy.kind = PolicyKind::oracle;

    auto traces = run_problems(questions, collect_cfg, draft, target, scorer, nullptr, parallelism);

    std::vector<RoutingExample> corpus;
    size_t dropped = 0;
    for (size_t qi = 0; qi < traces.size(); ++qi) {
        const auto& trace = traces[qi];
        for (const auto& rec : trace.records) {
            if (!rec.counterfactual_complete()) {
                ++dropped;
                continue;
            }
            RoutingExample ex;
            ex.problem_id = trace.problem_id;
            ex.step_index = rec.index;
            ex.seed = cfg.seed;
            ex.context = rec.context_text.value_or("");
            ex.draft_text = rec.draft.step.content;
            for (const auto& t : rec.target_samples) ex.target_texts.push_back(t.step.content);
            ex.s_d = *rec.s_d;
            ex.s_t_samples = rec.target_scores;
            ex.s_t = *rec.s_t;
            ex.k = static_cast<int>(rec.target_scores.size());
            ex.delta = *rec.delta;
            ex.y = ex.delta > 0.0 ? 1 : 0;
            ex.draft_terminal = rec.draft.step.is_terminal;
            corpus.push_back(std::move(ex));
        }
        if (trace.failed()) ++dropped;
    }
    if (stats_out) {
        *stats_out = corpus_stats(corpus);
        stats_out->dropped_incomplete = dropped;
    }
    return corpus;
}

std::vector<RoutingExample> balance(const std::vector<RoutingExample>& corpus, uint64_t seed) {
    std::vector<size_t> idx0, idx1;
    for (size_t i = 0; i < corpus.size(); ++i) (corpus[i].y ? idx1 : idx0).push_back(i);
    if (idx0.empty() || idx1.empty())
        throw ConfigError("balance: corpus has a single class (y=0: " +
                          std::to_string(idx0.size()) + ", y=1: " + std::to_string(idx1.size()) +
                          "); collect more data");

    std::mt19937_64 rng(seed);
    auto& majority = idx0.size() >= idx1.size() ? idx0 : idx1;
    const size_t keep = std::min(idx0.size(), idx1.size());
    std::shuffle(majority.begin(), majority.end(), rng);
    majority.resize(keep);

    std::vector<size_t> all;
    all.reserve(idx0.size() + idx1.size());
    all.insert(all.end(), idx0.begin(), idx0.end());
    all.insert(all.end(), idx1.begin(), idx1.end());
    std::shuffle(all.begin(), all.end(), rng);

    std::vector<RoutingExample> out;
    out.reserve(all.size());
    for (size_t i : all) out.push_back(corpus[i]);
    return out;
}

void split_corpus(const std::vector<RoutingExample>& corpus, double eval_fraction, uint64_t seed,
                  std::vector<RoutingExample>* train_out, std::vector<RoutingExample>* eval_out) {
    if (eval_fraction < 0.0 || eval_fraction >= 1.0)
        throw ConfigError("eval_fraction must lie in [0, 1)");

    std::vector<std::string> ids;
    for (const auto& ex : corpus)
        if (ids.empty() || ids.back() != ex.problem_id) ids.push_back(ex.problem_id);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

    std::mt19937_64 rng(seed ^ 0xa5a5a5a5a5a5a5a5ull);
    std::shuffle(ids.begin(), ids.end(), rng);
    const size_t eval_n = static_cast<size_t>(eval_fraction * static_cast<double>(ids.size()));
    std::set<std::string> eval_ids(ids.begin(), ids.begin() + static_cast<long>(eval_n));

    train_out->clear();
    eval_out->clear();
    for (const auto& ex : corpus)
        (eval_ids.count(ex.problem_id) ? *eval_out : *train_out).push_back(ex);
}

std::vector<Problem> sample_questions(const std::vector<Problem>& problems, size_t count,
                                      uint64_t seed) {
    if (count == 0 || count >= problems.size()) return problems;

    std::map<std::string, std::vector<size_t>> strata;
    for (size_t i = 0; i < problems.size(); ++i) strata[problems[i].stratum].push_back(i);

    const double scale = static_cast<double>(count) / static_cast<double>(problems.size());
    std::vector<std::pair<std::string, size_t>> quotas; // stratum -> floor quota
    std::vector<std::pair<double, std::string>> remainders;
    size_t allocated = 0;
    for (const auto& [name, members] : strata) {
        const double exact = scale * static_cast<double>(members.size());
        const auto quota = static_cast<size_t>(exact);
        quotas.emplace_back(name, quota);
        remainders.emplace_back(exact - static_cast<double>(quota), name);
        allocated += quota;
    }
    // largest remainder first; stratum name breaks ties deterministically
    std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (size_t r = 0; allocated < count && r < remainders.size(); ++r) {
        for (auto& [name, quota] : quotas) {
            if (name == remainders[r].second && quota < strata[name].size()) {
                ++quota;
                ++allocated;
                break;
            }
        }
    }

    std::mt19937_64 rng(seed ^ 0x5bd1e995u);
    std::vector<Problem> out;
    for (const auto& [name, quota] : quotas) {
        auto members = strata[name];
        std::shuffle(members.begin(), members.end(), rng);
        for (size_t i = 0; i < quota && i < members.size(); ++i)
            out.push_back(problems[members[i]]);
    }
    std::shuffle(out.begin(), out.end(), rng);
    return out;
}

namespace {

json example_to_json(const RoutingExample& ex) {
    return json{
        {"problem_id", ex.problem_id},
        {"step_index", ex.step_index},
        {"seed", ex.seed},
        {"x", ex.context},
        {"z_d", ex.draft_text},
        {"z_t", ex.target_texts},
        {"s_d", ex.s_d},
        {"s_t_samples", ex.s_t_samples},
        {"s_t", ex.s_t},
        {"k", ex.k},
        {"delta", ex.delta},
        {"y", ex.y},
        {"draft_terminal", ex.draft_terminal},
    };
}

RoutingExample example_from_json(const json& j, const std::string& where) {
    static const char* required[] = {"problem_id", "step_index", "seed", "x",     "z_d",
                                     "z_t",        "s_d",        "s_t",  "delta", "y"};
    for (const char* field : required)
        if (!j.contains(field))
            throw IoError(where + ": missing field '" + std::string(field) + "'");
    RoutingExample ex;
    ex.problem_id = j.at("problem_id").get<std::string>();
    ex.step_index = j.at("step_index").get<int>();
    ex.seed = j.at("seed").get<uint64_t>();
    ex.context = j.at("x").get<std::string>();
    ex.draft_text = j.at("z_d").get<std::string>();
    ex.target_texts = j.at("z_t").get<std::vector<std::string>>();
    ex.s_d = j.at("s_d").get<double>();
    ex.s_t_samples = j.value("s_t_samples", std::vector<double>{});
    ex.s_t = j.at("s_t").get<double>();
    ex.k = j.value("k", static_cast<int>(ex.s_t_samples.size()));
    ex.delta = j.at("delta").get<double>();
    ex.y = j.at("y").get<int>();
    ex.draft_terminal = j.value("draft_terminal", false);
    return ex;
}

} // namespace

void write_corpus(const std::vector<RoutingExample>& corpus, const std::string& path,
                  const std::string& config_hash, uint64_t seed) {
    std::string out;
    json header{{"schema", kCorpusSchema}, {"config_hash", config_hash}, {"seed", seed}};
    out += header.dump();
    out += '\n';
    for (const auto& ex : corpus) {
        out += example_to_json(ex).dump();
        out += '\n';
    }
    write_file(path, out);
}

std::vector<RoutingExample> read_corpus(const std::string& path) {
    auto lines = read_lines(path);
    if (lines.empty()) throw IoError("corpus file is empty: " + path);
    json header;
    try {
        header = json::parse(lines[0]);
    } catch (const json::exception& e) {
        throw IoError(path + ":1: header parse error: " + e.what());
    }
    if (header.value("schema", std::string()) != kCorpusSchema)
        throw IoError(path + ": unknown corpus schema '" + header.value("schema", std::string()) +
                      "'");
    std::vector<RoutingExample> corpus;
    for (size_t i = 1; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        const std::string where = path + ":" + std::to_string(i + 1);
        json j;
        try {
            j = json::parse(lines[i]);
        } catch (const json::exception& e) {
            throw IoError(where + ": parse error: " + e.what());
        }
        corpus.push_back(example_from_json(j, where));
    }
    return corpus;
}

} // namespace steproute
