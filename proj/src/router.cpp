#include "router.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <nlohmann/json.hpp>

#include "backends.hpp"
#include "dataset.hpp"
#include "errors.hpp"
#include "util.hpp"

namespace steproute {

using nlohmann::json;

namespace {

double density(const std::string& text, bool (*pred)(char)) {
    if (text.empty()) return 0.0;
    size_t hits = 0;
    for (char c : text)
        if (pred(c)) ++hits;
    return static_cast<double>(hits) / static_cast<double>(text.size());
}

bool is_digit_char(char c) { return c >= '0' && c <= '9'; }
bool is_operator_char(char c) {
    switch (c) {
        case '+': case '-': case '*': case '/': case '=': case '^': case '<': case '>':
            return true;
        default:
            return false;
    }
}

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

std::vector<double> standardize(const std::vector<double>& raw, const std::vector<double>& mean,
                                const std::vector<double>& stdev) {
    std::vector<double> out(raw.size());
    for (size_t j = 0; j < raw.size(); ++j) out[j] = (raw[j] - mean[j]) / stdev[j];
    return out;
}

size_t count_occurrences(const std::string& text, const std::string& needle) {
    if (needle.empty()) return 0;
    size_t count = 0, pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
        ++count;
        pos += needle.size();
    }
    return count;
}

} // namespace

std::vector<double> featurize(const RouterInput& in) {
    const auto escalations =
        static_cast<double>(count_occurrences(in.context, annotation_prefix(Role::target)));
    std::vector<double> f(kFeatureDim);
    f[0] = 1.0; // bias
    f[1] = in.s_d;
    f[2] = static_cast<double>(in.draft_text.size());
    f[3] = static_cast<double>(in.step_index);
    f[4] = escalations;
    f[5] = in.step_index > 0 ? escalations / static_cast<double>(in.step_index) : 0.0;
    f[6] = static_cast<double>(in.context.size());
    f[7] = density(in.draft_text, is_digit_char);
    f[8] = density(in.draft_text, is_operator_char);
    f[9] = in.draft_terminal ? 1.0 : 0.0;
    for (double v : f)
        if (!std::isfinite(v)) throw InvariantError("featurize produced a non-finite value");
    return f;
}

std::vector<double> featurize(const RoutingExample& ex) {
    RouterInput in;
    in.context = ex.context;
    in.draft_text = ex.draft_text;
    in.s_d = ex.s_d;
    in.step_index = ex.step_index;
    in.draft_terminal = ex.draft_terminal;
    return featurize(in);
}

double RouterModel::predict(const std::vector<double>& features) const {
    if (features.size() != weights.size())
        throw ConfigError("feature dimension " + std::to_string(features.size()) +
                          " does not match model dimension " + std::to_string(weights.size()));
    const auto z = standardize(features, feature_mean, feature_std);
    double score = std::inner_product(z.begin(), z.end(), weights.begin(), 0.0);
    double p = sigmoid(score);
    return std::clamp(p, 1e-12, 1.0 - 1e-12);
}

double RouterModel::predict(const RouterInput& in) const { return predict(featurize(in)); }

double cross_entropy_loss(const std::vector<std::vector<double>>& features,
                          const std::vector<int>& labels, const std::vector<double>& weights) {
    if (features.size() != labels.size())
        throw InvariantError("cross_entropy_loss: feature/label count mismatch");
    double loss = 0.0;
    for (size_t i = 0; i < features.size(); ++i) {
        double z = std::inner_product(features[i].begin(), features[i].end(), weights.begin(), 0.0);
        // -[y log p + (1-y) log(1-p)] = softplus(z) - y z
        loss += softplus(z) - labels[i] * z;
    }
    return loss / static_cast<double>(features.size());
}

std::vector<double> cross_entropy_gradient(const std::vector<std::vector<double>>& features,
                                           const std::vector<int>& labels,
                                           const std::vector<double>& weights) {
    std::vector<double> grad(weights.size(), 0.0);
    for (size_t i = 0; i < features.size(); ++i) {
        double z = std::inner_product(features[i].begin(), features[i].end(), weights.begin(), 0.0);
        double residual = sigmoid(z) - labels[i];
        for (size_t j = 0; j < weights.size(); ++j) grad[j] += residual * features[i][j];
    }
    for (double& g : grad) g /= static_cast<double>(features.size());
    return grad;
}

RouterModel train_router(const std::vector<RoutingExample>& corpus, const TrainOptions& opts) {
    if (corpus.empty()) throw ConfigError("train_router: empty corpus");
    bool has0 = false, has1 = false;
    for (const auto& ex : corpus) (ex.y ? has1 : has0) = true;
    if (!has0 || !has1)
        throw ConfigError("train_router: corpus must contain both labels (balance/collect first)");

    std::vector<std::vector<double>> raw;
    std::vector<int> labels;
    raw.reserve(corpus.size());
    labels.reserve(corpus.size());
    for (const auto& ex : corpus) {
        raw.push_back(featurize(ex));
        labels.push_back(ex.y);
    }

    // Standardization stats from the training split; the bias column keeps
    // (mean 0, std 1) so it passes through untouched.
    RouterModel model;
    model.training = opts;
    model.feature_mean.assign(kFeatureDim, 0.0);
    model.feature_std.assign(kFeatureDim, 1.0);
    const double m = static_cast<double>(raw.size());
    for (int j = 1; j < kFeatureDim; ++j) {
        double mean = 0.0;
        for (const auto& r : raw) mean += r[static_cast<size_t>(j)];
        mean /= m;
        double var = 0.0;
        for (const auto& r : raw) {
            double d = r[static_cast<size_t>(j)] - mean;
            var += d * d;
        }
        var /= m;
        model.feature_mean[static_cast<size_t>(j)] = mean;
        model.feature_std[static_cast<size_t>(j)] = var > 0.0 ? std::sqrt(var) : 1.0;
    }

    std::vector<std::vector<double>> X(raw.size());
    for (size_t i = 0; i < raw.size(); ++i)
        X[i] = standardize(raw[i], model.feature_mean, model.feature_std);

    // Zero init: an untrained model predicts exactly 0.5 everywhere.
    std::vector<double> w(kFeatureDim, 0.0);
    double loss = cross_entropy_loss(X, labels, w);
    for (int epoch = 0; epoch < opts.epochs; ++epoch) {
        auto grad = cross_entropy_gradient(X, labels, w);
        for (int j = 0; j < kFeatureDim; ++j)
            w[static_cast<size_t>(j)] -= opts.learning_rate * grad[static_cast<size_t>(j)];
        loss = cross_entropy_loss(X, labels, w);
        if (!std::isfinite(loss)) {
            char lr_text[32];
            std::snprintf(lr_text, sizeof lr_text, "%g", opts.learning_rate);
            throw InvariantError("train_router: loss diverged to non-finite at epoch " +
                                 std::to_string(epoch) + " (lr=" + lr_text + ")");
        }
    }
    model.weights = std::move(w);
    model.final_loss = loss;
    return model;
}

std::string RouterModel::to_json() const {
    json j{
        {"schema", "steproute.router.v1"},
        {"feature_schema", feature_schema},
        {"weights", weights},
        {"feature_mean", feature_mean},
        {"feature_std", feature_std},
        {"training", {{"epochs", training.epochs},
                      {"learning_rate", training.learning_rate},
                      {"seed", training.seed}}},
        {"final_loss", final_loss},
        {"config_hash", config_hash},
    };
    return j.dump(2) + "\n";
}

RouterModel RouterModel::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw IoError(std::string("router model parse error: ") + e.what());
    }
    if (j.value("schema", std::string()) != "steproute.router.v1")
        throw IoError("router model has unknown schema '" + j.value("schema", std::string()) + "'");
    RouterModel m;
    m.feature_schema = j.at("feature_schema").get<std::string>();
    if (m.feature_schema != kFeatureSchema)
        throw ConfigError("router model feature schema '" + m.feature_schema +
                          "' does not match this build's '" + kFeatureSchema + "'");
    m.weights = j.at("weights").get<std::vector<double>>();
    m.feature_mean = j.at("feature_mean").get<std::vector<double>>();
    m.feature_std = j.at("feature_std").get<std::vector<double>>();
    if (m.weights.size() != kFeatureDim || m.feature_mean.size() != kFeatureDim ||
        m.feature_std.size() != kFeatureDim)
        throw IoError("router model dimension mismatch");
    m.training.epochs = j.at("training").value("epochs", 0);
    m.training.learning_rate = j.at("training").value("learning_rate", 0.0);
    m.training.seed = j.at("training").value("seed", uint64_t{0});
    m.final_loss = j.value("final_loss", 0.0);
    m.config_hash = j.value("config_hash", std::string());
    return m;
}

void RouterModel::save(const std::string& path) const { write_file(path, to_json()); }

RouterModel RouterModel::load(const std::string& path) { return from_json(read_file(path)); }

namespace {

// Average ranks (1-based); ties share the mean of the positions they span.
std::vector<double> average_ranks(const std::vector<double>& v) {
    const size_t n = v.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n, 0.0);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        double shared = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
        i = j + 1;
    }
    return ranks;
}

} // namespace

std::optional<double> spearman(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw InvariantError("spearman: length mismatch");
    if (a.size() < 2) throw InvariantError("spearman: need at least 2 observations");
    auto ra = average_ranks(a);
    auto rb = average_ranks(b);
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= n;
    mb /= n;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        double da = ra[i] - ma;
        double db = rb[i] - mb;
        cov += da * db;
        va += da * da;
        vb += db * db;
    }
    if (va == 0.0 || vb == 0.0) return std::nullopt; // constant input: undefined
    return cov / std::sqrt(va * vb);
}

RouterFn router_fn(RouterModel model) {
    return [model = std::move(model)](const RouterInput& in) { return model.predict(in); };
}

RouterEval evaluate_router(const RouterModel& model, const std::vector<RoutingExample>& corpus,
                           double tau) {
    RouterEval ev;
    ev.tau = tau;
    ev.eval_size = corpus.size();

    std::vector<double> y_hats, deltas;
    size_t n0 = 0, n1 = 0, correct0 = 0, correct1 = 0;
    for (const auto& ex : corpus) {
        double y_hat = model.predict(featurize(ex));
        y_hats.push_back(y_hat);
        deltas.push_back(ex.delta);
        if (ex.y == 0) {
            ++n0;
            if (y_hat <= tau) ++correct0;
        } else {
            ++n1;
            if (y_hat > tau) ++correct1;
        }
    }
    if (n0) ev.acc_class0 = 100.0 * static_cast<double>(correct0) / static_cast<double>(n0);
    if (n1) ev.acc_class1 = 100.0 * static_cast<double>(correct1) / static_cast<double>(n1);
    if (y_hats.size() >= 2) ev.spearman_rho = spearman(y_hats, deltas);
    return ev;
}

} // namespace steproute
