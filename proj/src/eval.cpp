#include "dnsrefl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "dnsrefl/rng.hpp"

namespace dnsrefl {

namespace {

double safe_div(double num, double den) { return den > 0.0 ? num / den : 0.0; }

double f1_of(double p, double r) { return (p + r > 0.0) ? 2.0 * p * r / (p + r) : 0.0; }

std::string two_dp(double v) {
    char buf[32];
    // round half away from zero before formatting
    std::snprintf(buf, sizeof buf, "%.2f", std::round(v * 100.0) / 100.0);
    return buf;
}

std::string thousands(size_t n) {
    std::string digits = std::to_string(n);
    std::string out;
    const size_t len = digits.size();
    for (size_t i = 0; i < len; ++i) {
        if (i > 0 && (len - i) % 3 == 0)
            out.push_back(',');
        out.push_back(digits[i]);
    }
    return out;
}

void row(std::string& out, const std::string& name, const std::string& p, const std::string& r,
         const std::string& f1, const std::string& support) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-13s %9s %7s %9s %9s\n", name.c_str(), p.c_str(), r.c_str(),
                  f1.c_str(), support.c_str());
    out += buf;
}

std::string json_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string json_metrics(const ClassMetrics& m) {
    return "{\"precision\": " + json_num(m.precision) + ", \"recall\": " + json_num(m.recall) +
           ", \"f1\": " + json_num(m.f1) + ", \"support\": " + std::to_string(m.support) + "}";
}

} // namespace

ClassReport classification_report(const std::vector<Label>& truth,
                                  const std::vector<Label>& predicted) {
    if (truth.size() != predicted.size() || truth.empty())
        throw LengthMismatch("truth and prediction lists must be equal-length and non-empty");

    size_t tp_good = 0, tp_bad = 0, fp_good = 0, fp_bad = 0;
    for (size_t i = 0; i < truth.size(); ++i) {
        if (predicted[i] == Label::good) {
            if (truth[i] == Label::good)
                ++tp_good;
            else
                ++fp_good;
        } else {
            if (truth[i] == Label::bad)
                ++tp_bad;
            else
                ++fp_bad;
        }
    }
    const size_t support_good = tp_good + fp_bad; // truth-good = matched + missed
    const size_t support_bad = tp_bad + fp_good;

    ClassReport rep;
    rep.total = truth.size();
    rep.good.support = support_good;
    rep.bad.support = support_bad;
    rep.good.precision = safe_div(static_cast<double>(tp_good), static_cast<double>(tp_good + fp_good));
    rep.bad.precision = safe_div(static_cast<double>(tp_bad), static_cast<double>(tp_bad + fp_bad));
    rep.good.recall = safe_div(static_cast<double>(tp_good), static_cast<double>(support_good));
    rep.bad.recall = safe_div(static_cast<double>(tp_bad), static_cast<double>(support_bad));
    rep.good.f1 = f1_of(rep.good.precision, rep.good.recall);
    rep.bad.f1 = f1_of(rep.bad.precision, rep.bad.recall);
    rep.accuracy = static_cast<double>(tp_good + tp_bad) / static_cast<double>(rep.total);

    rep.macro_avg.precision = 0.5 * (rep.good.precision + rep.bad.precision);
    rep.macro_avg.recall = 0.5 * (rep.good.recall + rep.bad.recall);
    rep.macro_avg.f1 = 0.5 * (rep.good.f1 + rep.bad.f1);
    rep.macro_avg.support = rep.total;

    const double wg = static_cast<double>(support_good);
    const double wb = static_cast<double>(support_bad);
    const double tot = static_cast<double>(rep.total);
    rep.weighted_avg.precision = (wg * rep.good.precision + wb * rep.bad.precision) / tot;
    rep.weighted_avg.recall = (wg * rep.good.recall + wb * rep.bad.recall) / tot;
    rep.weighted_avg.f1 = (wg * rep.good.f1 + wb * rep.bad.f1) / tot;
    rep.weighted_avg.support = rep.total;
    return rep;
}

std::string render_report(const ClassReport& r) {
    std::string out;
    row(out, "", "Precision", "Recall", "F1-score", "Support");
    row(out, "Good", two_dp(r.good.precision), two_dp(r.good.recall), two_dp(r.good.f1),
        thousands(r.good.support));
    row(out, "Bad", two_dp(r.bad.precision), two_dp(r.bad.recall), two_dp(r.bad.f1),
        thousands(r.bad.support));
    out += "\n";
    row(out, "Accuracy", "", "", two_dp(r.accuracy), thousands(r.total));
    row(out, "Macro Avg.", two_dp(r.macro_avg.precision), two_dp(r.macro_avg.recall),
        two_dp(r.macro_avg.f1), thousands(r.macro_avg.support));
    row(out, "Weighted Avg.", two_dp(r.weighted_avg.precision), two_dp(r.weighted_avg.recall),
        two_dp(r.weighted_avg.f1), thousands(r.weighted_avg.support));
    return out;
}

std::string report_json(const ClassReport& r) {
    std::string out = "{\n";
    out += "  \"good\": " + json_metrics(r.good) + ",\n";
    out += "  \"bad\": " + json_metrics(r.bad) + ",\n";
    out += "  \"accuracy\": " + json_num(r.accuracy) + ",\n";
    out += "  \"macro_avg\": " + json_metrics(r.macro_avg) + ",\n";
    out += "  \"weighted_avg\": " + json_metrics(r.weighted_avg) + ",\n";
    out += "  \"total_support\": " + std::to_string(r.total) + "\n";
    out += "}\n";
    return out;
}

std::pair<size_t, size_t> sample_counts(size_t good_avail, size_t bad_avail, size_t n_good,
                                        double bad_frac) {
    const size_t take_good = std::min(n_good, good_avail);
    const size_t take_bad =
        static_cast<size_t>(std::floor(bad_frac * static_cast<double>(bad_avail)));
    return {take_good, std::min(take_bad, bad_avail)};
}

RegimeResult sample_regime(std::vector<FeatureMatrix> good, std::vector<FeatureMatrix> bad,
                           size_t n_good, double bad_frac, uint64_t seed) {
    if (good.empty() || bad.empty())
        throw EmptyClass("both classes must be non-empty for sampling");
    if (!(bad_frac > 0.0 && bad_frac <= 1.0))
        throw Error("bad_frac must be in (0,1]");

    const auto [take_good, take_bad] = sample_counts(good.size(), bad.size(), n_good, bad_frac);
    Rng rng(seed);

    auto pick = [&rng](size_t n, size_t take) {
        std::vector<size_t> idx(n);
        for (size_t i = 0; i < n; ++i)
            idx[i] = i;
        shuffle(idx, rng);
        std::vector<bool> chosen(n, false);
        for (size_t i = 0; i < take; ++i)
            chosen[idx[i]] = true;
        return chosen;
    };
    const auto good_chosen = pick(good.size(), take_good);
    const auto bad_chosen = pick(bad.size(), take_bad);

    RegimeResult out;
    out.pool_good = take_good;
    out.pool_bad = take_bad;
    out.good_short = take_good < n_good;
    for (size_t i = 0; i < good.size(); ++i)
        (good_chosen[i] ? out.pool : out.holdout).push_back(std::move(good[i]));
    for (size_t i = 0; i < bad.size(); ++i)
        (bad_chosen[i] ? out.pool : out.holdout).push_back(std::move(bad[i]));
    return out;
}

std::pair<std::vector<size_t>, std::vector<size_t>> split_indices(size_t n, double train_frac,
                                                                  uint64_t seed) {
    if (n == 0)
        throw EmptyClass("cannot split an empty pool");
    if (!(train_frac > 0.0 && train_frac < 1.0))
        throw Error("train_frac must be in (0,1)");
    std::vector<size_t> idx(n);
    for (size_t i = 0; i < n; ++i)
        idx[i] = i;
    Rng rng(seed);
    shuffle(idx, rng);
    const size_t n_train = static_cast<size_t>(std::floor(train_frac * static_cast<double>(n)));
    std::vector<size_t> train(idx.begin(), idx.begin() + static_cast<ptrdiff_t>(n_train));
    std::vector<size_t> test(idx.begin() + static_cast<ptrdiff_t>(n_train), idx.end());
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    return {train, test};
}

std::pair<std::vector<size_t>, std::vector<size_t>>
stratified_split_indices(const std::vector<Label>& labels, double train_frac, uint64_t seed) {
    if (!(train_frac > 0.0 && train_frac < 1.0))
        throw Error("train_frac must be in (0,1)");
    std::vector<size_t> good_idx, bad_idx;
    for (size_t i = 0; i < labels.size(); ++i)
        (labels[i] == Label::good ? good_idx : bad_idx).push_back(i);
    if (good_idx.empty() || bad_idx.empty())
        throw EmptyClass("stratified split needs both classes");

    Rng rng(seed);
    std::vector<size_t> train, test;
    for (auto* cls : {&good_idx, &bad_idx}) {
        shuffle(*cls, rng);
        const size_t n_train =
            static_cast<size_t>(std::floor(train_frac * static_cast<double>(cls->size())));
        for (size_t k = 0; k < cls->size(); ++k)
            (k < n_train ? train : test).push_back((*cls)[k]);
    }
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    return {train, test};
}

SplitResult split(std::vector<FeatureMatrix> pool, double train_frac, uint64_t seed,
                  bool stratified) {
    std::pair<std::vector<size_t>, std::vector<size_t>> parts;
    if (stratified) {
        std::vector<Label> labels(pool.size());
        for (size_t i = 0; i < pool.size(); ++i)
            labels[i] = pool[i].label;
        parts = stratified_split_indices(labels, train_frac, seed);
    } else {
        parts = split_indices(pool.size(), train_frac, seed);
    }
    SplitResult out;
    out.train.reserve(parts.first.size());
    out.test.reserve(parts.second.size());
    for (size_t i : parts.first)
        out.train.push_back(std::move(pool[i]));
    for (size_t i : parts.second)
        out.test.push_back(std::move(pool[i]));
    return out;
}

} // namespace dnsrefl
