#ifndef DNSREFL_TESTS_QP_ORACLE_HPP
#define DNSREFL_TESTS_QP_ORACLE_HPP

// Independent oracles for the soft-margin SVM dual
//     max W(a) = sum a_i - 1/2 sum a_i a_j y_i y_j K(i,j)
//     s.t. 0 <= a_i <= C,  sum a_i y_i = 0
// used to check the trainer. Everything here recomputes kernels and algebra
// on its own; nothing calls into the library under test.

#include <cmath>
#include <cstdint>
#include <vector>

#include "dnsrefl/rng.hpp"

namespace qporacle {

struct Problem {
    std::vector<std::vector<double>> xs;
    std::vector<int> ys; // +1 / -1
    double c = 10.0;
    double gamma = 0.01;

    size_t n() const { return xs.size(); }
};

inline std::vector<double> kernel_matrix(const Problem& p) {
    const size_t n = p.n();
    std::vector<double> k(n * n);
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < n; ++j) {
            double d2 = 0.0;
            for (size_t t = 0; t < p.xs[i].size(); ++t) {
                const double d = p.xs[i][t] - p.xs[j][t];
                d2 += d * d;
            }
            k[i * n + j] = std::exp(-p.gamma * d2);
        }
    }
    return k;
}

inline double objective(const Problem& p, const std::vector<double>& k,
                        const std::vector<double>& alpha) {
    const size_t n = p.n();
    double lin = 0.0, quad = 0.0;
    for (size_t i = 0; i < n; ++i) {
        lin += alpha[i];
        for (size_t j = 0; j < n; ++j)
            quad += alpha[i] * alpha[j] * p.ys[i] * p.ys[j] * k[i * n + j];
    }
    return lin - 0.5 * quad;
}

/// Maximizer over the discretized feasible set: every alpha is an integer
/// multiple of c/steps. Exhaustive pair moves along the equality-preserving
/// direction until no grid move improves, restarted from several feasible
/// grid points. Alphas are tracked in integer grid units so the equality
/// constraint holds exactly throughout.
inline double discretized_pair_max(const Problem& p, int64_t steps = 4000, int restarts = 3) {
    const size_t n = p.n();
    const auto k = kernel_matrix(p);
    const double h = p.c / static_cast<double>(steps);
    dnsrefl::Rng rng(0xACCE55);

    double best = 0.0;
    for (int attempt = 0; attempt < restarts; ++attempt) {
        std::vector<int64_t> units(n, 0);
        if (attempt > 0) {
            // random feasible start: a few random pair moves from zero
            for (int m = 0; m < 32; ++m) {
                const size_t i = rng.below(n), j = rng.below(n);
                if (i == j)
                    continue;
                // s units applied as da_i = +y_i s, da_j = -y_j s
                int64_t lo, hi;
                const int yi = p.ys[i], yj = p.ys[j];
                const int64_t ai = units[i], aj = units[j];
                lo = (yi > 0) ? -ai : ai - steps;
                hi = (yi > 0) ? steps - ai : ai;
                const int64_t lo2 = (yj > 0) ? aj - steps : -aj;
                const int64_t hi2 = (yj > 0) ? aj : steps - aj;
                lo = std::max(lo, lo2);
                hi = std::min(hi, hi2);
                if (lo >= hi)
                    continue;
                const int64_t s = lo + static_cast<int64_t>(rng.below(static_cast<uint64_t>(hi - lo + 1)));
                units[i] += yi * s;
                units[j] -= yj * s;
            }
        }

        // F_i = sum_j a_j y_j K(i,j)
        std::vector<double> f(n, 0.0);
        for (size_t i = 0; i < n; ++i)
            for (size_t j = 0; j < n; ++j)
                f[i] += static_cast<double>(units[j]) * h * p.ys[j] * k[i * n + j];

        bool improved = true;
        int sweeps = 0;
        while (improved && sweeps < 200000) {
            improved = false;
            ++sweeps;
            for (size_t i = 0; i < n; ++i) {
                for (size_t j = i + 1; j < n; ++j) {
                    const int yi = p.ys[i], yj = p.ys[j];
                    int64_t lo = (yi > 0) ? -units[i] : units[i] - steps;
                    int64_t hi = (yi > 0) ? steps - units[i] : units[i];
                    const int64_t lo2 = (yj > 0) ? units[j] - steps : -units[j];
                    const int64_t hi2 = (yj > 0) ? units[j] : steps - units[j];
                    lo = std::max(lo, lo2);
                    hi = std::min(hi, hi2);
                    if (lo > hi)
                        continue;

                    const double kappa = k[i * n + i] + k[j * n + j] - 2.0 * k[i * n + j];
                    const double g = (yi - f[i]) - (yj - f[j]);
                    // candidate step counts, in grid units
                    int64_t cands[4] = {lo, hi, 0, 0};
                    int ncand = 2;
                    if (kappa > 1e-300) {
                        const double s_star = g / kappa / h;
                        const auto fl = static_cast<int64_t>(std::floor(s_star));
                        cands[ncand++] = std::min(hi, std::max(lo, fl));
                        cands[ncand++] = std::min(hi, std::max(lo, fl + 1));
                    }
                    int64_t bests = 0;
                    double bestdw = 0.0;
                    for (int t = 0; t < ncand; ++t) {
                        const double s = static_cast<double>(cands[t]) * h;
                        const double dw = s * g - 0.5 * s * s * kappa;
                        if (dw > bestdw + 1e-15) {
                            bestdw = dw;
                            bests = cands[t];
                        }
                    }
                    if (bests != 0 && bestdw > 1e-12) {
                        const double s = static_cast<double>(bests) * h;
                        units[i] += yi * bests;
                        units[j] -= yj * bests;
                        for (size_t t = 0; t < n; ++t)
                            f[t] += s * (k[i * n + t] - k[j * n + t]);
                        improved = true;
                    }
                }
            }
        }

        std::vector<double> alpha(n);
        for (size_t i = 0; i < n; ++i)
            alpha[i] = static_cast<double>(units[i]) * h;
        best = std::max(best, objective(p, k, alpha));
    }
    return best;
}

namespace detail {

// Gaussian elimination with partial pivoting; returns false when singular.
inline bool solve(std::vector<std::vector<double>> a, std::vector<double> b,
                  std::vector<double>& out) {
    const size_t n = b.size();
    for (size_t col = 0; col < n; ++col) {
        size_t piv = col;
        for (size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col]))
                piv = r;
        if (std::abs(a[piv][col]) < 1e-12)
            return false;
        std::swap(a[piv], a[col]);
        std::swap(b[piv], b[col]);
        for (size_t r = col + 1; r < n; ++r) {
            const double m = a[r][col] / a[col][col];
            for (size_t cc = col; cc < n; ++cc)
                a[r][cc] -= m * a[col][cc];
            b[r] -= m * b[col];
        }
    }
    out.assign(n, 0.0);
    for (size_t r = n; r-- > 0;) {
        double s = b[r];
        for (size_t cc = r + 1; cc < n; ++cc)
            s -= a[r][cc] * out[cc];
        out[r] = s / a[r][r];
    }
    return true;
}

} // namespace detail

/// Exact maximum by exhausting active sets: each point is at its lower bound,
/// upper bound, or free; free alphas and the offset solve the stationarity
/// system. Every feasible candidate's objective is <= the optimum and the
/// optimal active set is enumerated, so the max over candidates is exact.
/// Cost 3^n, intended for n <= 9.
inline double enumerate_max(const Problem& p) {
    const size_t n = p.n();
    const auto k = kernel_matrix(p);
    std::vector<int> state(n, 0); // 0 = at 0, 1 = at C, 2 = free
    double best = 0.0;

    std::vector<double> alpha(n);
    for (int64_t mask = 0;; ++mask) {
        // ternary counter
        int64_t m = mask;
        bool done = false;
        for (size_t i = 0; i < n; ++i) {
            state[i] = static_cast<int>(m % 3);
            m /= 3;
        }
        if (m > 0)
            done = true;
        if (done)
            break;

        std::vector<size_t> free_idx;
        double fixed_sum = 0.0; // sum over bound alphas of a_i y_i
        for (size_t i = 0; i < n; ++i) {
            if (state[i] == 2)
                free_idx.push_back(i);
            else if (state[i] == 1)
                fixed_sum += p.c * p.ys[i];
        }

        bool feasible = true;
        if (free_idx.empty()) {
            if (std::abs(fixed_sum) > 1e-9)
                continue;
            for (size_t i = 0; i < n; ++i)
                alpha[i] = state[i] == 1 ? p.c : 0.0;
        } else {
            const size_t nf = free_idx.size();
            std::vector<std::vector<double>> a(nf + 1, std::vector<double>(nf + 1, 0.0));
            std::vector<double> rhs(nf + 1, 0.0);
            for (size_t r = 0; r < nf; ++r) {
                const size_t i = free_idx[r];
                for (size_t ccol = 0; ccol < nf; ++ccol) {
                    const size_t j = free_idx[ccol];
                    a[r][ccol] = p.ys[j] * k[i * n + j];
                }
                a[r][nf] = 1.0; // offset b
                double rhsv = p.ys[i];
                for (size_t j = 0; j < n; ++j)
                    if (state[j] == 1)
                        rhsv -= p.c * p.ys[j] * k[i * n + j];
                rhs[r] = rhsv;
            }
            for (size_t ccol = 0; ccol < nf; ++ccol)
                a[nf][ccol] = p.ys[free_idx[ccol]];
            a[nf][nf] = 0.0;
            rhs[nf] = -fixed_sum;

            std::vector<double> sol;
            if (!detail::solve(a, rhs, sol))
                continue;
            for (size_t i = 0; i < n; ++i)
                alpha[i] = state[i] == 1 ? p.c : 0.0;
            for (size_t r = 0; r < nf; ++r) {
                if (sol[r] < -1e-9 || sol[r] > p.c + 1e-9) {
                    feasible = false;
                    break;
                }
                alpha[free_idx[r]] = std::min(std::max(sol[r], 0.0), p.c);
            }
        }
        if (!feasible)
            continue;
        best = std::max(best, objective(p, k, alpha));
    }
    return best;
}

/// Random small problems with both classes present.
inline Problem random_problem(dnsrefl::Rng& rng, size_t max_n = 12) {
    Problem p;
    const size_t n = 4 + rng.below(max_n - 3); // 4..max_n
    const size_t d = 2 + rng.below(4);         // 2..5
    p.c = rng.below(2) ? 10.0 : 1.0;
    const double gammas[3] = {0.1, 0.5, 1.0};
    p.gamma = gammas[rng.below(3)];
    for (size_t i = 0; i < n; ++i) {
        std::vector<double> x(d);
        for (auto& v : x)
            v = rng.uniform();
        p.xs.push_back(std::move(x));
        p.ys.push_back(rng.below(2) ? +1 : -1);
    }
    bool pos = false, neg = false;
    for (int y : p.ys)
        (y > 0 ? pos : neg) = true;
    if (!pos)
        p.ys[0] = +1;
    if (!neg)
        p.ys[n - 1] = -1;
    return p;
}

} // namespace qporacle

#endif
