#include "config.hpp"

#include <filesystem>
#include <set>

#include "errors.hpp"
#include "util.hpp"

namespace steproute {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config field '") + key + "': " + e.what());
    }
}

BackendConfig parse_backend(const json& j, const char* section) {
    BackendConfig b;
    b.kind = get_or<std::string>(j, "kind", b.kind);
    if (b.kind != "scripted" && b.kind != "http")
        throw ConfigError(std::string(section) + ".kind must be scripted|http, got '" + b.kind +
                          "'");
    b.endpoint = get_or<std::string>(j, "endpoint", b.endpoint);
    b.auth_env = get_or<std::string>(j, "auth_env", b.auth_env);
    b.max_units = get_or<long>(j, "max_units", b.max_units);
    b.temperature = get_or<double>(j, "temperature", b.temperature);
    b.seed = get_or<uint64_t>(j, "seed", b.seed);
    b.unit_price = get_or<double>(j, "unit_price", b.unit_price);
    return b;
}

void require_file(const std::string& path, const std::string& field) {
    if (path.empty()) throw ConfigError("config field '" + field + "' is required but empty");
    if (!fs::exists(path))
        throw ConfigError("config field '" + field + "' references missing file: " + path);
}

} // namespace

void RunConfig::derive() {
    const json& j = raw_;
    seed = get_or<uint64_t>(j, "seed", 0);
    output_dir = get_or<std::string>(j, "output_dir", "out");
    questions = get_or<std::string>(j, "questions", "");
    parallelism = get_or<int>(j, "parallelism", 1);
    if (parallelism < 1) throw ConfigError("parallelism must be >= 1");

    if (j.contains("segmentation")) {
        const json& s = j.at("segmentation");
        seg.separator = get_or<std::string>(s, "separator", seg.separator);
        seg.eos_marker = get_or<std::string>(s, "eos_marker", seg.eos_marker);
        seg.max_steps = get_or<int>(s, "max_steps", seg.max_steps);
    }
    seg.validate();

    if (j.contains("scripted_world")) {
        const json& w = j.at("scripted_world");
        world.path = get_or<std::string>(w, "path", "");
        world.key_mode = get_or<std::string>(w, "key_mode", "exact");
        if (world.key_mode != "exact" && world.key_mode != "hash")
            throw ConfigError("scripted_world.key_mode must be exact|hash");
        world.fallback = get_or<bool>(w, "fallback", false);
        world.fallback_seed = get_or<uint64_t>(w, "fallback_seed", 0);
    }

    draft = parse_backend(j.contains("draft") ? j.at("draft") : json::object(), "draft");
    target = parse_backend(j.contains("target") ? j.at("target") : json::object(), "target");
    if (j.contains("target") && !j.at("target").contains("unit_price")) target.unit_price = 8.0;
    scorer = parse_backend(j.contains("scorer") ? j.at("scorer") : json::object(), "scorer");
    if (j.contains("scorer")) {
        score_bounds.lo = get_or<double>(j.at("scorer"), "score_min", 0.0);
        score_bounds.hi = get_or<double>(j.at("scorer"), "score_max", 1.0);
    }
    score_bounds.validate();

    if (j.contains("policy")) {
        const json& p = j.at("policy");
        policy.kind = policy_from_name(get_or<std::string>(p, "kind", "rsd"));
        policy.tau = get_or<double>(p, "tau", 0.5);
        router_model_path = get_or<std::string>(p, "router_model", "");
        router_endpoint = get_or<std::string>(p, "router_endpoint", "");
    }

    collect_counterfactuals = get_or<bool>(j, "collect_counterfactuals", false);
    annotate_history = get_or<bool>(j, "annotate_history", false);
    if (j.contains("collect")) {
        const json& c = j.at("collect");
        collect_samples = get_or<int>(c, "samples", 1);
        collect_sample_questions = get_or<int>(c, "sample_questions", 0);
    }
    if (collect_samples < 1) throw ConfigError("collect.samples must be >= 1");
    if (collect_sample_questions < 0)
        throw ConfigError("collect.sample_questions must be >= 0");

    if (j.contains("train")) {
        const json& t = j.at("train");
        train.epochs = get_or<int>(t, "epochs", train.epochs);
        train.learning_rate = get_or<double>(t, "learning_rate", train.learning_rate);
        train.seed = get_or<uint64_t>(t, "seed", train.seed);
        train.eval_fraction = get_or<double>(t, "eval_fraction", train.eval_fraction);
        train.balance = get_or<bool>(t, "balance", train.balance);
        train.eval_tau = get_or<double>(t, "eval_tau", train.eval_tau);
        train.corpus = get_or<std::string>(t, "corpus", "");
        train.model_out = get_or<std::string>(t, "model_out", "");
    }
    if (train.epochs < 0) throw ConfigError("train.epochs must be >= 0");
    if (train.learning_rate <= 0) throw ConfigError("train.learning_rate must be > 0");

    if (j.contains("eval")) {
        const json& e = j.at("eval");
        eval.tau = get_or<double>(e, "tau", eval.tau);
        eval.taus = get_or<std::vector<double>>(e, "taus", {});
        eval.corpus = get_or<std::string>(e, "corpus", "");
        eval.model = get_or<std::string>(e, "model", "");
    }

    if (j.contains("sweep")) {
        const json& s = j.at("sweep");
        sweep.mode = get_or<std::string>(s, "mode", sweep.mode);
        if (sweep.mode != "frozen" && sweep.mode != "live")
            throw ConfigError("sweep.mode must be frozen|live");
        sweep.policies = get_or<std::vector<std::string>>(s, "policies", sweep.policies);
        sweep.taus = get_or<std::vector<double>>(s, "taus", sweep.taus);
        sweep.deferral_grid = get_or<int>(s, "deferral_grid", sweep.deferral_grid);
        sweep.samples = get_or<int>(s, "samples", sweep.samples);
        for (const auto& p : sweep.policies) policy_from_name(p); // validate names
    }

    if (j.contains("report")) {
        const json& r = j.at("report");
        report.traces = get_or<std::string>(r, "traces", "");
        report.tau = get_or<double>(r, "tau", report.tau);
        report.tau_grid = get_or<int>(r, "tau_grid", report.tau_grid);
    }

    if (j.contains("http")) {
        const json& h = j.at("http");
        http.completion_path = get_or<std::string>(h, "completion_path", http.completion_path);
        http.score_path = get_or<std::string>(h, "score_path", http.score_path);
        http.connect_timeout_ms = get_or<int>(h, "connect_timeout_ms", http.connect_timeout_ms);
        http.read_timeout_ms = get_or<int>(h, "read_timeout_ms", http.read_timeout_ms);
        http.retries = get_or<int>(h, "retries", http.retries);
        http.retry_backoff_ms = get_or<int>(h, "retry_backoff_ms", http.retry_backoff_ms);
    }

    // Identity hash over the canonical config with the output location
    // removed: where results land must not change what they contain.
    json hashable = raw_;
    hashable.erase("output_dir");
    config_hash = stable_hash_hex(hashable.dump());
}

RunConfig RunConfig::parse(const std::string& json_text) {
    RunConfig cfg;
    try {
        cfg.raw_ = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    if (!cfg.raw_.is_object()) throw ConfigError("config root must be a JSON object");
    cfg.derive();
    return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
    RunConfig cfg = parse(read_file(path));
    return cfg;
}

void RunConfig::apply_override(const std::string& dotted_key, const std::string& json_value) {
    json value;
    try {
        value = json::parse(json_value);
    } catch (const json::exception&) {
        value = json_value; // bare strings are taken literally
    }
    json* node = &raw_;
    size_t pos = 0;
    while (true) {
        size_t dot = dotted_key.find('.', pos);
        std::string part = dotted_key.substr(pos, dot - pos);
        if (part.empty()) throw ConfigError("bad override key '" + dotted_key + "'");
        if (dot == std::string::npos) {
            (*node)[part] = value;
            break;
        }
        node = &(*node)[part];
        pos = dot + 1;
    }
    derive();
}

EngineConfig RunConfig::engine_config() const {
    EngineConfig e;
    e.seg = seg;
    e.policy = policy;
    e.collect_counterfactuals = collect_counterfactuals;
    e.counterfactual_samples = collect_samples;
    e.annotate_history = annotate_history;
    e.seed = seed;
    return e;
}

std::string RunConfig::corpus_path() const {
    if (!train.corpus.empty()) return train.corpus;
    return output_dir + "/corpus.jsonl";
}

std::string RunConfig::model_path() const {
    if (!train.model_out.empty()) return train.model_out;
    return output_dir + "/router.json";
}

std::string RunConfig::traces_path() const {
    if (!report.traces.empty()) return report.traces;
    return output_dir + "/traces.jsonl";
}

void RunConfig::validate_for(const std::string& command) const {
    const bool scripted = draft.kind == "scripted" || target.kind == "scripted" ||
                          scorer.kind == "scripted";
    auto require_backends = [&] {
        if (scripted) require_file(world.path, "scripted_world.path");
        if (draft.kind == "http") {
            if (draft.endpoint.empty()) throw ConfigError("config field 'draft.endpoint' is empty");
        }
        if (target.kind == "http" && target.endpoint.empty())
            throw ConfigError("config field 'target.endpoint' is empty");
        if (scorer.kind == "http" && scorer.endpoint.empty())
            throw ConfigError("config field 'scorer.endpoint' is empty");
    };

    if (command == "run") {
        require_file(questions, "questions");
        require_backends();
        if (policy.kind == PolicyKind::router && router_endpoint.empty())
            require_file(router_model_path, "policy.router_model");
        engine_config().validate(policy.kind != PolicyKind::router ||
                                 !router_model_path.empty() || !router_endpoint.empty());
    } else if (command == "collect") {
        require_file(questions, "questions");
        require_backends();
    } else if (command == "train") {
        require_file(corpus_path(), "train.corpus");
    } else if (command == "eval") {
        require_file(eval.corpus.empty() ? corpus_path() : eval.corpus, "eval.corpus");
        require_file(eval.model.empty() ? model_path() : eval.model, "eval.model");
    } else if (command == "sweep") {
        require_file(questions, "questions");
        require_backends();
        bool wants_router = false;
        for (const auto& p : sweep.policies) wants_router |= (p == "router");
        if (wants_router && router_endpoint.empty()) {
            std::string path = router_model_path.empty() ? model_path() : router_model_path;
            require_file(path, "policy.router_model");
        }
        if (sweep.taus.empty() && sweep.deferral_grid < 2)
            throw ConfigError("sweep needs 'taus' or 'deferral_grid' >= 2");
        if (sweep.mode == "live" && sweep.taus.empty())
            throw ConfigError("live sweeps need a 'taus' grid (budgets are frozen-mode only)");
    } else if (command == "report") {
        require_file(traces_path(), "report.traces");
    } else {
        throw ConfigError("unknown command '" + command + "'");
    }
}

BackendSet make_backends(const RunConfig& cfg) {
    BackendSet set;
    const bool any_scripted = cfg.draft.kind == "scripted" || cfg.target.kind == "scripted" ||
                              cfg.scorer.kind == "scripted";
    if (any_scripted) {
        auto mode = cfg.world.key_mode == "hash" ? ScriptedWorld::KeyMode::hash
                                                 : ScriptedWorld::KeyMode::exact;
        auto world = std::make_shared<ScriptedWorld>(ScriptedWorld::load(cfg.world.path, mode));
        if (cfg.world.fallback) world->enable_fallback(cfg.world.fallback_seed);
        set.world = world;
    }

    auto make_ref = [&](const BackendConfig& b, Role role) {
        GeneratorRef ref;
        ref.role = role;
        ref.endpoint = b.endpoint;
        ref.stop = cfg.seg.separator;
        ref.eos_marker = cfg.seg.eos_marker;
        ref.max_units = b.max_units;
        ref.sampling.temperature = b.temperature;
        ref.sampling.seed = b.seed != 0 ? b.seed : cfg.seed;
        ref.unit_price = b.unit_price;
        return ref;
    };

    auto make_generator = [&](const BackendConfig& b, Role role) -> std::unique_ptr<StepGenerator> {
        GeneratorRef ref = make_ref(b, role);
        if (b.kind == "scripted") return std::make_unique<ScriptedGenerator>(set.world, ref);
        return std::make_unique<HttpGenerator>(ref, cfg.http, b.auth_env);
    };

    set.draft = make_generator(cfg.draft, Role::draft);
    set.target = make_generator(cfg.target, Role::target);
    if (cfg.scorer.kind == "scripted") {
        set.scorer = std::make_unique<ScriptedScorer>(set.world, cfg.score_bounds);
    } else {
        set.scorer = std::make_unique<HttpScorer>(cfg.scorer.endpoint, cfg.score_bounds, cfg.http,
                                                  cfg.scorer.auth_env);
    }
    return set;
}

std::vector<Problem> load_problems(const std::string& path) {
    auto lines = read_lines(path);
    std::vector<Problem> problems;
    std::set<std::string> seen_ids;
    for (size_t i = 0; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        json j;
        try {
            j = json::parse(lines[i]);
        } catch (const json::exception& e) {
            throw IoError(path + ":" + std::to_string(i + 1) + ": parse error: " + e.what());
        }
        Problem p;
        if (!j.contains("question"))
            throw IoError(path + ":" + std::to_string(i + 1) + ": missing field 'question'");
        p.question = j.at("question").get<std::string>();
        p.id = j.contains("id") ? j.at("id").get<std::string>() : "q" + std::to_string(i);
        p.gold_answer = j.value("gold_answer", std::string());
        p.stratum = j.value("stratum", std::string());
        if (!seen_ids.insert(p.id).second)
            throw IoError(path + ":" + std::to_string(i + 1) + ": duplicate problem id '" +
                          p.id + "'");
        problems.push_back(std::move(p));
    }
    return problems;
}

} // namespace steproute
