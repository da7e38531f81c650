#ifndef DNSREFL_EVAL_HPP
#define DNSREFL_EVAL_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dnsrefl/matrix.hpp"

namespace dnsrefl {

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    size_t support = 0;
};

/// Two-class evaluation summary: per-class precision/recall/F1/support plus
/// accuracy, unweighted (macro) and support-weighted averages.
struct ClassReport {
    ClassMetrics good;
    ClassMetrics bad;
    double accuracy = 0.0;
    ClassMetrics macro_avg;    // support = total
    ClassMetrics weighted_avg; // support = total
    size_t total = 0;
};

/// Throws LengthMismatch when the vectors differ in length or are empty.
ClassReport classification_report(const std::vector<Label>& truth, const std::vector<Label>& predicted);

/// Fixed-width text table, two decimals (half away from zero), thousands
/// separators in the support column.
std::string render_report(const ClassReport& r);

/// Same fields as JSON for machine consumption.
std::string report_json(const ClassReport& r);

/// How many matrices of each class the sampling regime takes into the pool.
/// good: min(n_good, available); bad: floor(bad_frac * available).
std::pair<size_t, size_t> sample_counts(size_t good_avail, size_t bad_avail, size_t n_good,
                                        double bad_frac);

struct RegimeResult {
    std::vector<FeatureMatrix> pool;
    std::vector<FeatureMatrix> holdout;
    size_t pool_good = 0;
    size_t pool_bad = 0;
    bool good_short = false; // fewer good matrices than requested; took all
};

/// Uniform sampling without replacement into the training pool; everything
/// not sampled lands in the holdout. Deterministic for a given seed. Throws
/// EmptyClass when either side is empty.
RegimeResult sample_regime(std::vector<FeatureMatrix> good, std::vector<FeatureMatrix> bad,
                           size_t n_good, double bad_frac, uint64_t seed);

struct SplitResult {
    std::vector<FeatureMatrix> train;
    std::vector<FeatureMatrix> test;
};

/// Train/test split. Stratified mode splits each class separately (train
/// takes floor(frac * n) per class); unstratified splits the shuffled pool
/// as a whole. Deterministic for a given seed.
SplitResult split(std::vector<FeatureMatrix> pool, double train_frac, uint64_t seed,
                  bool stratified = true);

/// Index-level engines behind sample_regime/split, exposed so arithmetic can
/// be checked at sizes where materializing matrices would be wasteful.
std::pair<std::vector<size_t>, std::vector<size_t>>
stratified_split_indices(const std::vector<Label>& labels, double train_frac, uint64_t seed);
std::pair<std::vector<size_t>, std::vector<size_t>> split_indices(size_t n, double train_frac,
                                                                  uint64_t seed);

} // namespace dnsrefl

#endif
