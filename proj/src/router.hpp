#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace steproute {

struct RoutingExample; // dataset.hpp

// Inputs available to the router at decision time: the working context
// (annotation-tagged when the engine runs with tags), the draft step, its
// reward, and the step ordinal.
struct RouterInput {
    std::string context;
    std::string draft_text;
    double s_d = 0.0;
    int step_index = 0;
    bool draft_terminal = false;
};

inline constexpr const char* kFeatureSchema = "steproute.features.v1";
inline constexpr int kFeatureDim = 10;

// Fixed-order feature vector (schema v1):
//   0 bias, 1 s_d, 2 step length (chars), 3 step index,
//   4 escalations so far, 5 fraction of prior steps escalated,
//   6 context length (chars), 7 digit density, 8 operator density,
//   9 terminal-marker flag
// History features (4, 5) are read from the "Model 1: " annotation tags in
// the context, so corpus examples and live decisions featurize through one
// identical path; without annotations they are zero on both.
std::vector<double> featurize(const RouterInput& in);
std::vector<double> featurize(const RoutingExample& ex);

struct TrainOptions {
    int epochs = 200;
    double learning_rate = 0.5;
    uint64_t seed = 0;
};

// Linear probabilistic classifier over the feature schema. Feature
// standardization statistics from the training split live inside the model
// so a saved model predicts self-contained.
struct RouterModel {
    std::string feature_schema = kFeatureSchema;
    std::vector<double> weights;        // one per feature, bias included
    std::vector<double> feature_mean;   // standardization; bias entry 0
    std::vector<double> feature_std;    // standardization; bias entry 1
    TrainOptions training;
    double final_loss = 0.0;
    std::string config_hash;            // provenance of the producing run

    double predict(const std::vector<double>& features) const; // in (0,1)
    double predict(const RouterInput& in) const;

    std::string to_json() const;
    static RouterModel from_json(const std::string& text);
    void save(const std::string& path) const;
    static RouterModel load(const std::string& path);
};

// Cross-entropy loss and its analytic gradient for a weight vector over
// (already standardized) features. Exposed for the finite-difference check.
double cross_entropy_loss(const std::vector<std::vector<double>>& features,
                          const std::vector<int>& labels, const std::vector<double>& weights);
std::vector<double> cross_entropy_gradient(const std::vector<std::vector<double>>& features,
                                           const std::vector<int>& labels,
                                           const std::vector<double>& weights);

// Full-batch gradient descent on the balanced corpus. Both classes must be
// present and all features finite; a NaN loss aborts with diagnostics.
RouterModel train_router(const std::vector<RoutingExample>& corpus, const TrainOptions& opts);

// Spearman rank correlation with average-rank tie handling. Returns nullopt
// when either vector is constant (correlation undefined). Throws
// InvariantError on length mismatch or length < 2.
std::optional<double> spearman(const std::vector<double>& a, const std::vector<double>& b);

// Router-quality numbers in the ablation-table layout: rank correlation
// against the advantage plus per-class accuracies at a threshold.
struct RouterEval {
    std::optional<double> spearman_rho;
    std::optional<double> acc_class0; // % of y=0 with y_hat <= tau
    std::optional<double> acc_class1; // % of y=1 with y_hat > tau
    double tau = 0.5;
    size_t eval_size = 0;
};

RouterEval evaluate_router(const RouterModel& model, const std::vector<RoutingExample>& corpus,
                           double tau);

// How the engine consumes a router: any source of y_hat over (x, z_d).
// The reference model and a router served behind the PRM scoring wire
// contract both fit; an empty function means "no router configured".
using RouterFn = std::function<double(const RouterInput&)>;

RouterFn router_fn(RouterModel model);

} // namespace steproute
