#include "dnsrefl/svm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dnsrefl/rng.hpp"

namespace dnsrefl {

namespace {

// Full kernel matrices above this footprint are not cached.
constexpr size_t kGramBudgetBytes = 256u << 20;

double sq_dist(std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        s += d * d;
    }
    return s;
}

void validate_training_set(const TrainingSet& data) {
    if (data.xs.size() != data.ys.size())
        throw LengthMismatch("training vectors and labels differ in count");
    if (data.size() < 2)
        throw TooFewSamples("need at least two training points");
    const size_t d = data.xs[0].size();
    bool pos = false, neg = false;
    for (size_t i = 0; i < data.size(); ++i) {
        if (data.xs[i].size() != d)
            throw DimensionMismatch("inconsistent training vector dimensions");
        if (data.ys[i] == 1)
            pos = true;
        else if (data.ys[i] == -1)
            neg = true;
        else
            throw Error("labels must be +1 or -1");
    }
    if (!pos || !neg)
        throw SingleClass("training data contains a single class");
}

// Kernel access with an optional precomputed Gram matrix. Falls back to
// on-demand rows for sets too large to cache.
class KernelCache {
public:
    KernelCache(const TrainingSet& data, double gamma) : data_(data), gamma_(gamma), n_(data.size()) {
        if (n_ * n_ * sizeof(double) <= kGramBudgetBytes) {
            gram_.resize(n_ * n_);
            std::vector<double> sq(n_);
            for (size_t i = 0; i < n_; ++i) {
                double s = 0.0;
                for (double v : data_.xs[i])
                    s += v * v;
                sq[i] = s;
            }
            for (size_t i = 0; i < n_; ++i) {
                gram_[i * n_ + i] = 1.0;
                for (size_t j = i + 1; j < n_; ++j) {
                    double dot = 0.0;
                    const auto& a = data_.xs[i];
                    const auto& b = data_.xs[j];
                    for (size_t k = 0; k < a.size(); ++k)
                        dot += a[k] * b[k];
                    double d2 = sq[i] + sq[j] - 2.0 * dot;
                    if (d2 < 0.0)
                        d2 = 0.0;
                    const double v = std::exp(-gamma_ * d2);
                    gram_[i * n_ + j] = v;
                    gram_[j * n_ + i] = v;
                }
            }
        } else {
            scratch_.resize(n_);
        }
    }

    bool cached() const { return !gram_.empty(); }

    double at(size_t i, size_t j) const {
        if (!gram_.empty())
            return gram_[i * n_ + j];
        return rbf_kernel(data_.xs[i], data_.xs[j], gamma_);
    }

    // Row valid until the next row() call when uncached.
    std::span<const double> row(size_t i) {
        if (!gram_.empty())
            return std::span<const double>(gram_).subspan(i * n_, n_);
        for (size_t j = 0; j < n_; ++j)
            scratch_[j] = rbf_kernel(data_.xs[i], data_.xs[j], gamma_);
        return scratch_;
    }

private:
    const TrainingSet& data_;
    double gamma_;
    size_t n_;
    std::vector<double> gram_;
    std::vector<double> scratch_;
};

double dual_objective(const TrainingSet& data, const std::vector<double>& alpha, KernelCache& kc) {
    std::vector<size_t> nz;
    for (size_t i = 0; i < alpha.size(); ++i)
        if (alpha[i] > 0.0)
            nz.push_back(i);
    double obj = 0.0;
    for (size_t i : nz)
        obj += alpha[i];
    double quad = 0.0;
    for (size_t a = 0; a < nz.size(); ++a) {
        const size_t i = nz[a];
        quad += alpha[i] * alpha[i]; // K(i,i) = 1
        for (size_t b = a + 1; b < nz.size(); ++b) {
            const size_t j = nz[b];
            quad += 2.0 * alpha[i] * alpha[j] * data.ys[i] * data.ys[j] * kc.at(i, j);
        }
    }
    return obj - 0.5 * quad;
}

double macro_f1(const std::vector<int>& truth, const std::vector<int>& pred) {
    double f1_sum = 0.0;
    for (int cls : {-1, +1}) {
        size_t tp = 0, fp = 0, fn = 0;
        for (size_t i = 0; i < truth.size(); ++i) {
            if (pred[i] == cls && truth[i] == cls)
                ++tp;
            else if (pred[i] == cls)
                ++fp;
            else if (truth[i] == cls)
                ++fn;
        }
        const double p = (tp + fp) ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
        const double r = (tp + fn) ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
        f1_sum += (p + r > 0.0) ? 2.0 * p * r / (p + r) : 0.0;
    }
    return f1_sum / 2.0;
}

} // namespace

double rbf_kernel(std::span<const double> x, std::span<const double> y, double gamma) {
    if (x.size() != y.size())
        throw DimensionMismatch("kernel arguments differ in dimension");
    if (!(gamma > 0.0))
        throw Error("gamma must be positive");
    return std::exp(-gamma * sq_dist(x, y));
}

TrainingSet make_training_set(const std::vector<FeatureMatrix>& matrices) {
    TrainingSet ts;
    ts.xs.reserve(matrices.size());
    ts.ys.reserve(matrices.size());
    for (const auto& m : matrices)
        ts.add(flatten(m), m.label == Label::bad ? +1 : -1);
    return ts;
}

SvmModel smo_train(const TrainingSet& data, const SmoConfig& cfg, TrainInfo* info) {
    validate_training_set(data);
    if (!(cfg.c > 0.0) || !(cfg.gamma > 0.0))
        throw Error("penalty and gamma must be positive");

    const size_t n = data.size();
    const double c = cfg.c;
    KernelCache kc(data, cfg.gamma);
    Rng rng(cfg.seed);

    std::vector<double> alpha(n, 0.0);
    std::vector<double> err(n); // E_i = f(x_i) - y_i
    for (size_t i = 0; i < n; ++i)
        err[i] = -static_cast<double>(data.ys[i]);
    double bias = 0.0;

    uint64_t updates = 0, sweeps = 0;
    bool cap_hit = false;
    int quiet = 0;

    // Solve the two-variable subproblem for (i, j). Returns the change in
    // alpha[j], zero when the pair cannot move.
    auto take_step = [&](size_t i, size_t j) -> double {
        const double yi = data.ys[i];
        const double yj = data.ys[j];
        const double ei = err[i];
        const double ej = err[j];

        double lo, hi;
        if (data.ys[i] != data.ys[j]) {
            lo = std::max(0.0, alpha[j] - alpha[i]);
            hi = std::min(c, c + alpha[j] - alpha[i]);
        } else {
            lo = std::max(0.0, alpha[i] + alpha[j] - c);
            hi = std::min(c, alpha[i] + alpha[j]);
        }
        if (lo >= hi)
            return 0.0;

        const double kij = kc.at(i, j);
        const double eta = 2.0 * kij - 2.0; // K(i,i) = K(j,j) = 1 for RBF
        if (eta > -1e-12)
            return 0.0; // effectively identical points

        double aj = alpha[j] - yj * (ei - ej) / eta;
        aj = std::clamp(aj, lo, hi);
        const double step = std::abs(aj - alpha[j]);
        if (step < 1e-12)
            return 0.0;
        const double ai = alpha[i] + yi * yj * (alpha[j] - aj);

        const double di = yi * (ai - alpha[i]);
        const double dj = yj * (aj - alpha[j]);
        const double b1 = bias - ei - di - dj * kij; // K(i,i) = 1
        const double b2 = bias - ej - di * kij - dj; // K(j,j) = 1
        double nb;
        if (ai > 0.0 && ai < c)
            nb = b1;
        else if (aj > 0.0 && aj < c)
            nb = b2;
        else
            nb = 0.5 * (b1 + b2);

        auto row_i = kc.row(i);
        const double db = nb - bias;
        if (kc.cached()) {
            auto row_j = kc.row(j);
            for (size_t k = 0; k < n; ++k)
                err[k] += di * row_i[k] + dj * row_j[k] + db;
        } else {
            // uncached rows share a scratch buffer; fold them in serially
            for (size_t k = 0; k < n; ++k)
                err[k] += di * row_i[k] + db;
            auto row_j = kc.row(j);
            for (size_t k = 0; k < n; ++k)
                err[k] += dj * row_j[k];
        }

        alpha[i] = ai;
        alpha[j] = aj;
        bias = nb;
        return step;
    };

    auto violating = [&](size_t i) {
        const double r = data.ys[i] * err[i];
        return (r < -cfg.tol && alpha[i] < c) || (r > cfg.tol && alpha[i] > 0.0);
    };

    while (quiet < cfg.max_passes && !cap_hit) {
        double max_step = 0.0;
        for (size_t i = 0; i < n && !cap_hit; ++i) {
            if (!violating(i))
                continue;

            // Partner choice: seeded random starting point, then scan. The
            // scan keeps going past microscopic moves, so a quiet sweep
            // certifies that no pair involving a violator can move by more
            // than tol.
            const size_t start = static_cast<size_t>(rng.below(n));
            for (size_t k = 0; k < n; ++k) {
                const size_t j = (start + k) % n;
                if (j == i)
                    continue;
                const double step = take_step(i, j);
                if (step > 0.0) {
                    max_step = std::max(max_step, step);
                    if (++updates >= cfg.max_updates) {
                        cap_hit = true;
                        break;
                    }
                    if (step > cfg.tol || !violating(i))
                        break;
                }
            }
        }
        ++sweeps;
        if (info)
            info->objective_trace.push_back(dual_objective(data, alpha, kc));
        if (max_step <= cfg.tol)
            ++quiet;
        else
            quiet = 0;
    }

    // Recenter the bias on non-bound support vectors; the running value
    // accumulates rounding from incremental updates. Alphas within epsilon
    // of a bound are treated as bound: their margins are unconstrained and
    // would skew the average.
    const double eps_bound = 1e-8 * c;
    double b_sum = 0.0;
    size_t b_cnt = 0;
    for (size_t i = 0; i < n; ++i) {
        if (alpha[i] > eps_bound && alpha[i] < c - eps_bound) {
            double f = 0.0;
            auto row = kc.row(i);
            for (size_t k = 0; k < n; ++k)
                if (alpha[k] > 0.0)
                    f += alpha[k] * data.ys[k] * row[k];
            b_sum += data.ys[i] - f;
            ++b_cnt;
        }
    }
    if (b_cnt > 0)
        bias = b_sum / static_cast<double>(b_cnt);

    SvmModel model;
    model.gamma = cfg.gamma;
    model.c = c;
    model.bias = bias;
    model.cap_hit = cap_hit;
    for (size_t i = 0; i < n; ++i) {
        if (alpha[i] > 0.0) {
            model.support_vectors.push_back(data.xs[i]);
            model.dual_coefs.push_back(alpha[i] * data.ys[i]);
        }
    }
    if (model.support_vectors.empty())
        throw Error("training produced no support vectors");
    if (info) {
        info->sweeps = sweeps;
        info->updates = updates;
        info->cap_hit = cap_hit;
    }
    return model;
}

double decision_value(const SvmModel& model, std::span<const double> x) {
    if (model.support_vectors.empty() || x.size() != model.dim())
        throw DimensionMismatch("input dimension does not match model");
    double f = model.bias;
    for (size_t i = 0; i < model.support_vectors.size(); ++i)
        f += model.dual_coefs[i] * rbf_kernel(model.support_vectors[i], x, model.gamma);
    return f;
}

Label predict(const SvmModel& model, std::span<const double> x) {
    return decision_value(model, x) >= 0.0 ? Label::bad : Label::good;
}

GridResult grid_search(const TrainingSet& data, std::vector<double> c_grid,
                       std::vector<double> gamma_grid, int folds, uint64_t seed) {
    validate_training_set(data);
    if (c_grid.empty() || gamma_grid.empty())
        throw Error("empty hyper-parameter grid");
    if (folds < 2)
        throw Error("need at least two folds");

    std::vector<size_t> pos_idx, neg_idx;
    for (size_t i = 0; i < data.size(); ++i)
        (data.ys[i] == 1 ? pos_idx : neg_idx).push_back(i);
    if (pos_idx.size() < static_cast<size_t>(folds) || neg_idx.size() < static_cast<size_t>(folds))
        throw TooFewSamples("both classes must populate every fold");

    // Stratified assignment: shuffle each class, deal round-robin.
    Rng rng(seed);
    shuffle(pos_idx, rng);
    shuffle(neg_idx, rng);
    std::vector<int> fold_of(data.size());
    for (size_t k = 0; k < pos_idx.size(); ++k)
        fold_of[pos_idx[k]] = static_cast<int>(k % static_cast<size_t>(folds));
    for (size_t k = 0; k < neg_idx.size(); ++k)
        fold_of[neg_idx[k]] = static_cast<int>(k % static_cast<size_t>(folds));

    std::sort(c_grid.begin(), c_grid.end());
    std::sort(gamma_grid.begin(), gamma_grid.end());

    GridResult result;
    double best = -1.0;
    for (double c : c_grid) {
        for (double gamma : gamma_grid) {
            GridPoint pt;
            pt.c = c;
            pt.gamma = gamma;
            for (int f = 0; f < folds; ++f) {
                TrainingSet train;
                std::vector<size_t> test_idx;
                for (size_t i = 0; i < data.size(); ++i) {
                    if (fold_of[i] == f)
                        test_idx.push_back(i);
                    else
                        train.add(data.xs[i], data.ys[i]);
                }
                SmoConfig cfg;
                cfg.c = c;
                cfg.gamma = gamma;
                cfg.seed = seed + static_cast<uint64_t>(f) + 1;
                SvmModel model = smo_train(train, cfg);
                std::vector<int> truth, pred;
                truth.reserve(test_idx.size());
                pred.reserve(test_idx.size());
                for (size_t i : test_idx) {
                    truth.push_back(data.ys[i]);
                    pred.push_back(predict(model, data.xs[i]) == Label::bad ? +1 : -1);
                }
                pt.fold_scores.push_back(macro_f1(truth, pred));
            }
            double mean = 0.0;
            for (double s : pt.fold_scores)
                mean += s;
            pt.mean_score = mean / static_cast<double>(folds);
            if (pt.mean_score > best) {
                best = pt.mean_score;
                result.best_c = c;
                result.best_gamma = gamma;
            }
            result.points.push_back(std::move(pt));
        }
    }
    return result;
}

void save_model(const SvmModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw IoError("cannot open " + path + " for writing");
    char buf[512];
    out << "dnsrefl-svm 1\n";
    std::snprintf(buf, sizeof buf, "gamma %.17g\nc %.17g\nbias %.17g\n", model.gamma, model.c,
                  model.bias);
    out << buf;
    out << "classes +1=bad -1=good\n";
    out << "support_vectors " << model.support_vectors.size() << ' ' << model.dim() << '\n';
    for (size_t i = 0; i < model.support_vectors.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", model.dual_coefs[i]);
        out << buf;
        for (double v : model.support_vectors[i]) {
            std::snprintf(buf, sizeof buf, " %.17g", v);
            out << buf;
        }
        out << '\n';
    }
    if (!out)
        throw IoError("write failed: " + path);
}

SvmModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path);
    std::string tag, version;
    if (!(in >> tag >> version) || tag != "dnsrefl-svm")
        throw SchemaError("not a model file: " + path);
    if (version != "1")
        throw VersionMismatch("unsupported model version '" + version + "'");

    SvmModel model;
    std::string key;
    auto expect_key = [&](const char* want, double& dst) {
        if (!(in >> key >> dst) || key != want)
            throw SchemaError(std::string("expected '") + want + "' field");
    };
    expect_key("gamma", model.gamma);
    expect_key("c", model.c);
    expect_key("bias", model.bias);
    std::string cls, map1, map2;
    if (!(in >> cls >> map1 >> map2) || cls != "classes" || map1 != "+1=bad" || map2 != "-1=good")
        throw SchemaError("bad class map");
    size_t n_sv = 0, dim = 0;
    if (!(in >> key >> n_sv >> dim) || key != "support_vectors")
        throw SchemaError("bad support vector header");
    if (n_sv == 0)
        throw SchemaError("model has no support vectors");
    model.support_vectors.assign(n_sv, std::vector<double>(dim));
    model.dual_coefs.resize(n_sv);
    for (size_t i = 0; i < n_sv; ++i) {
        if (!(in >> model.dual_coefs[i]))
            throw SchemaError("truncated support vector list");
        for (size_t k = 0; k < dim; ++k)
            if (!(in >> model.support_vectors[i][k]))
                throw SchemaError("truncated support vector list");
    }
    return model;
}

} // namespace dnsrefl
