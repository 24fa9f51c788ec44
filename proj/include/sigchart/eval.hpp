#pragma once

// Chart quality metrics: rank-based continuity/trustworthiness against the
// true-location geometry, and affine-aligned positioning errors (MAE and
// the 90th error percentile) over repeated random anchor draws.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "sigchart/common.hpp"
#include "sigchart/distance.hpp"
#include "sigchart/rng.hpp"

namespace sigchart {

struct EvalConfig {
    std::size_t neighborhood_k = 50; // CT/TW neighborhood
    std::size_t anchors = 100;
    std::size_t trials = 1000;
    std::uint64_t seed = 1;
    std::string split = "all";
};

struct EvalReport {
    double ct = 0.0;
    double tw = 0.0;
    double mae_mean = 0.0;
    double mae_std = 0.0;
    double ce90_mean = 0.0;
    double ce90_std = 0.0;
    std::size_t trials = 0;
    std::size_t anchors = 0;
    std::size_t neighborhood_k = 0;
    std::string split;
    std::uint64_t seed = 0;
};

/// rank(i, j) = position of j in ascending distance order from i, self
/// excluded, ties broken by smaller index. Row values permute 1..D-1.
inline std::vector<std::vector<int>> rank_matrix(const PairwiseMatrix& distances) {
    const std::size_t d = distances.size();
    require(d >= 2, "rank_matrix: need at least 2 samples");
    std::vector<std::vector<int>> ranks(d, std::vector<int>(d, 0));
    parallel_for(d, [&](std::size_t i) {
        std::vector<std::size_t> order;
        order.reserve(d - 1);
        for (std::size_t j = 0; j < d; ++j)
            if (j != i)
                order.push_back(j);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (distances.m(i, a) != distances.m(i, b))
                return distances.m(i, a) < distances.m(i, b);
            return a < b;
        });
        for (std::size_t pos = 0; pos < order.size(); ++pos)
            ranks[i][order[pos]] = static_cast<int>(pos + 1);
    });
    return ranks;
}

namespace detail {

// Shared penalty form: sum over points j that are k-neighbors under
// `selector` but not under `reference` of (reference rank - k).
inline double neighborhood_penalty(const std::vector<std::vector<int>>& selector_rank,
                                   const std::vector<std::vector<int>>& reference_rank, std::size_t k) {
    const std::size_t d = selector_rank.size();
    double penalty = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            if (i == j)
                continue;
            if (selector_rank[i][j] <= static_cast<int>(k) && reference_rank[i][j] > static_cast<int>(k))
                penalty += reference_rank[i][j] - static_cast<double>(k);
        }
    }
    return penalty;
}

inline void check_k(std::size_t d, std::size_t k) {
    require(k >= 1, "CT/TW: k must be >= 1");
    require(3 * k < 2 * d - 1, "CT/TW: k too large for dataset size (need 3k < 2D-1)");
}

} // namespace detail

/// 1 when no far-away pair is embedded as chart neighbors; in [0,1].
inline double trustworthiness(const PairwiseMatrix& true_d, const PairwiseMatrix& chart_d, std::size_t k) {
    require(true_d.size() == chart_d.size(), "trustworthiness: size mismatch");
    const std::size_t d = true_d.size();
    detail::check_k(d, k);
    const auto rt = rank_matrix(true_d);
    const auto rc = rank_matrix(chart_d);
    const double norm = 2.0 / (static_cast<double>(d) * k * (2.0 * d - 3.0 * k - 1.0));
    return 1.0 - norm * detail::neighborhood_penalty(rc, rt, k);
}

/// 1 when no true neighbor is embedded far away; in [0,1].
inline double continuity(const PairwiseMatrix& true_d, const PairwiseMatrix& chart_d, std::size_t k) {
    require(true_d.size() == chart_d.size(), "continuity: size mismatch");
    const std::size_t d = true_d.size();
    detail::check_k(d, k);
    const auto rt = rank_matrix(true_d);
    const auto rc = rank_matrix(chart_d);
    const double norm = 2.0 / (static_cast<double>(d) * k * (2.0 * d - 3.0 * k - 1.0));
    return 1.0 - norm * detail::neighborhood_penalty(rt, rc, k);
}

struct AffineMap {
    Matrix a; // dim x dim
    std::vector<double> b;
};

namespace detail {

// Gaussian elimination with partial pivoting on an n x (n+m) system.
inline void solve_inplace(Matrix& sys, std::size_t n, std::size_t m) {
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(sys(r, col)) > std::abs(sys(pivot, col)))
                pivot = r;
        if (std::abs(sys(pivot, col)) < 1e-12)
            throw data_error("degenerate anchors: singular normal equations");
        if (pivot != col)
            for (std::size_t c = 0; c < n + m; ++c)
                std::swap(sys(pivot, c), sys(col, c));
        const double inv = 1.0 / sys(col, col);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col)
                continue;
            const double f = sys(r, col) * inv;
            if (f == 0.0)
                continue;
            for (std::size_t c = col; c < n + m; ++c)
                sys(r, c) -= f * sys(col, c);
        }
    }
    for (std::size_t r = 0; r < n; ++r) {
        const double inv = 1.0 / sys(r, r);
        for (std::size_t c = n; c < n + m; ++c)
            sys(r, c) *= inv;
    }
}

} // namespace detail

/// Least-squares affine map chart -> truth over the given anchor rows.
inline AffineMap affine_fit(const Matrix& chart_anchors, const Matrix& truth_anchors) {
    const std::size_t n = chart_anchors.rows();
    const std::size_t dim = chart_anchors.cols();
    require(truth_anchors.rows() == n, "affine_fit: anchor count mismatch");
    require(truth_anchors.cols() == dim, "affine_fit: dimension mismatch");
    require(dim >= 1 && dim <= 3, "affine_fit: supports 1-3 dimensional charts");
    require(n >= dim + 1, "affine_fit: not enough anchors");

    // normal equations of [chart | 1] M = truth, M is (dim+1) x dim
    const std::size_t h = dim + 1;
    Matrix sys(h, h + dim);
    for (std::size_t r = 0; r < n; ++r) {
        double xi[4];
        for (std::size_t c = 0; c < dim; ++c)
            xi[c] = chart_anchors(r, c);
        xi[dim] = 1.0;
        for (std::size_t a = 0; a < h; ++a) {
            for (std::size_t b = 0; b < h; ++b)
                sys(a, b) += xi[a] * xi[b];
            for (std::size_t c = 0; c < dim; ++c)
                sys(a, h + c) += xi[a] * truth_anchors(r, c);
        }
    }
    detail::solve_inplace(sys, h, dim);

    AffineMap map;
    map.a = Matrix(dim, dim);
    map.b.assign(dim, 0.0);
    for (std::size_t c = 0; c < dim; ++c) {
        for (std::size_t rr = 0; rr < dim; ++rr)
            map.a(c, rr) = sys(rr, h + c); // output c from input rr
        map.b[c] = sys(dim, h + c);
    }
    return map;
}

inline Matrix apply_affine(const AffineMap& map, const Matrix& chart) {
    const std::size_t dim = map.b.size();
    require(chart.cols() == dim, "apply_affine: dimension mismatch");
    Matrix out(chart.rows(), dim);
    for (std::size_t r = 0; r < chart.rows(); ++r)
        for (std::size_t c = 0; c < dim; ++c) {
            double s = map.b[c];
            for (std::size_t k = 0; k < dim; ++k)
                s += map.a(c, k) * chart(r, k);
            out(r, c) = s;
        }
    return out;
}

/// Percentile with linear interpolation between order statistics.
inline double percentile(std::vector<double> values, double q) {
    require(!values.empty(), "percentile: empty input");
    std::sort(values.begin(), values.end());
    const double h = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= values.size())
        return values.back();
    const double frac = h - static_cast<double>(lo);
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

/// Repeated random-anchor affine alignment plus CT/TW. Each trial draws its
/// random stream from (seed, trial), so results do not depend on execution
/// order. Degenerate anchor draws are redrawn, capped at 10x trials overall.
inline EvalReport locate_and_score(const Matrix& chart, const Matrix& truth, const EvalConfig& cfg) {
    const std::size_t d = chart.rows();
    require(truth.rows() == d, "locate_and_score: chart/truth size mismatch");
    require(chart.cols() == truth.cols(), "locate_and_score: dimension mismatch");
    require(d > cfg.anchors, "locate_and_score: need more samples than anchors");
    require(cfg.trials >= 1, "locate_and_score: trials must be >= 1");

    EvalReport report;
    report.trials = cfg.trials;
    report.anchors = cfg.anchors;
    report.neighborhood_k = cfg.neighborhood_k;
    report.split = cfg.split;
    report.seed = cfg.seed;

    PairwiseMatrix true_d = pairwise_from_locations(truth);
    PairwiseMatrix chart_d = pairwise_from_locations(chart);
    report.ct = continuity(true_d, chart_d, cfg.neighborhood_k);
    report.tw = trustworthiness(true_d, chart_d, cfg.neighborhood_k);

    std::vector<double> maes(cfg.trials), ce90s(cfg.trials);
    const std::size_t redraw_cap = 10 * cfg.trials;
    std::size_t redraws = 0;
    for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
        RngStream rng(cfg.seed, trial);
        for (;;) {
            auto idx = rng.sample_without_replacement(d, cfg.anchors);
            Matrix ca(cfg.anchors, chart.cols());
            Matrix ta(cfg.anchors, chart.cols());
            for (std::size_t r = 0; r < cfg.anchors; ++r)
                for (std::size_t c = 0; c < chart.cols(); ++c) {
                    ca(r, c) = chart(idx[r], c);
                    ta(r, c) = truth(idx[r], c);
                }
            try {
                AffineMap map = affine_fit(ca, ta);
                Matrix aligned = apply_affine(map, chart);
                std::vector<double> err(d);
                for (std::size_t r = 0; r < d; ++r) {
                    double e2 = 0.0;
                    for (std::size_t c = 0; c < chart.cols(); ++c) {
                        const double e = aligned(r, c) - truth(r, c);
                        e2 += e * e;
                    }
                    err[r] = std::sqrt(e2);
                }
                maes[trial] = std::accumulate(err.begin(), err.end(), 0.0) / static_cast<double>(d);
                ce90s[trial] = percentile(err, 0.90);
                break;
            } catch (const data_error&) {
                if (++redraws > redraw_cap)
                    throw data_error("locate_and_score: too many degenerate anchor draws");
            }
        }
    }

    auto mean_std = [](const std::vector<double>& x) {
        const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
        double var = 0.0;
        for (double v : x)
            var += (v - mean) * (v - mean);
        var = x.size() > 1 ? var / static_cast<double>(x.size() - 1) : 0.0;
        return std::make_pair(mean, std::sqrt(var));
    };
    std::tie(report.mae_mean, report.mae_std) = mean_std(maes);
    std::tie(report.ce90_mean, report.ce90_std) = mean_std(ce90s);
    return report;
}

} // namespace sigchart
