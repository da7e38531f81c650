#ifndef DNSREFL_SVM_HPP
#define DNSREFL_SVM_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dnsrefl/matrix.hpp"

namespace dnsrefl {

/// RBF kernel exp(-gamma * ||x - y||^2). Throws DimensionMismatch when the
/// vectors disagree in length.
double rbf_kernel(std::span<const double> x, std::span<const double> y, double gamma);

/// Labeled vectors for training. Labels are +1 (bad) and -1 (good).
struct TrainingSet {
    std::vector<std::vector<double>> xs;
    std::vector<int> ys;

    void add(std::vector<double> x, int y) {
        xs.push_back(std::move(x));
        ys.push_back(y);
    }
    size_t size() const { return xs.size(); }
};

/// Flatten matrices into a training set (bad = +1, good = -1).
TrainingSet make_training_set(const std::vector<FeatureMatrix>& matrices);

/// Trained soft-margin RBF SVM. dual_coefs holds alpha_i * y_i for every
/// stored vector; vectors with alpha = 0 are dropped. decision >= 0 means
/// bad (reflector), < 0 means good.
struct SvmModel {
    double gamma = 0.01;
    double c = 10.0;
    double bias = 0.0;
    std::vector<std::vector<double>> support_vectors;
    std::vector<double> dual_coefs;
    bool cap_hit = false; // iteration cap reached before convergence

    size_t dim() const { return support_vectors.empty() ? 0 : support_vectors[0].size(); }
};

struct SmoConfig {
    double c = 10.0;
    double gamma = 0.01;
    double tol = 1e-3;
    int max_passes = 10;          // consecutive quiet sweeps before stopping
    uint64_t seed = 1;
    uint64_t max_updates = 1000000; // hard cap on pair updates
};

struct TrainInfo {
    uint64_t sweeps = 0;
    uint64_t updates = 0;
    bool cap_hit = false;
    std::vector<double> objective_trace; // dual objective after each sweep
};

/// Simplified sequential minimal optimization: sweep all points, take the
/// KKT violators, pair each with a seeded random partner and solve the
/// two-variable subproblem analytically. Stops after max_passes consecutive
/// sweeps in which no alpha moved by more than tol, or at the update cap
/// (flagged on the model, not an error). Throws SingleClass when only one
/// label is present.
SvmModel smo_train(const TrainingSet& data, const SmoConfig& cfg = {}, TrainInfo* info = nullptr);

double decision_value(const SvmModel& model, std::span<const double> x);
Label predict(const SvmModel& model, std::span<const double> x);

struct GridPoint {
    double c = 0.0;
    double gamma = 0.0;
    double mean_score = 0.0; // macro-F1 averaged over folds
    std::vector<double> fold_scores;
};

struct GridResult {
    double best_c = 0.0;
    double best_gamma = 0.0;
    std::vector<GridPoint> points;
};

/// Stratified k-fold cross validation over the (c, gamma) grid, scored by
/// macro-F1. Ties break toward smaller c, then smaller gamma. Throws
/// TooFewSamples when a class cannot populate every fold.
GridResult grid_search(const TrainingSet& data, std::vector<double> c_grid,
                       std::vector<double> gamma_grid, int folds = 3, uint64_t seed = 1);

/// Versioned human-readable model file; load(save(m)) reproduces decision
/// values within 1e-12. Unknown layout raises SchemaError, an unsupported
/// version raises VersionMismatch.
void save_model(const SvmModel& model, const std::string& path);
SvmModel load_model(const std::string& path);

} // namespace dnsrefl

#endif
