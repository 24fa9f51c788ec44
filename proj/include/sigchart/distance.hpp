#pragma once

// Distance metrics over CIR-derived features, dense pairwise matrices,
// and the k-NN-graph geodesic used by the partial-Siamese variant.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <queue>
#include <string>
#include <vector>

#include "sigchart/common.hpp"
#include "sigchart/featurize.hpp"

namespace sigchart {

// Per-sample closed-form feature vector, one entry per BS.
struct SVector {
    std::vector<double> values;
    std::int64_t sample_id = 0;
};

enum class MetricTag : std::uint8_t {
    signature = 0,
    cir_euclidean = 1,
    geodesic = 2,
    true_location = 3,
};

inline std::string metric_tag_name(MetricTag t) {
    switch (t) {
    case MetricTag::signature: return "signature";
    case MetricTag::cir_euclidean: return "cir_euclidean";
    case MetricTag::geodesic: return "geodesic";
    case MetricTag::true_location: return "true_location";
    }
    return "unknown";
}

struct PairwiseMatrix {
    Matrix m;
    MetricTag tag = MetricTag::signature;

    std::size_t size() const { return m.rows(); }
};

/// Closed-form timing-weighted energy feature of one energy-normalized CIR.
/// powers has N entries, times has N+1 entries starting at t_0 = 0. The
/// value equals the (1,2,2) Lyndon log-signature coordinate of the CSE path.
inline double s_feature(const std::vector<double>& powers, const std::vector<double>& times) {
    require(!powers.empty(), "s_feature: empty powers");
    require(times.size() == powers.size() + 1, "s_feature: times must have N+1 entries");
    require(times.front() == 0.0, "s_feature: t_0 must be 0");
    for (std::size_t n = 1; n < times.size(); ++n)
        require(times[n] > times[n - 1], "s_feature: times must be strictly increasing");
    const double tN = times.back();
    CompensatedSum acc;
    for (std::size_t n = 0; n < powers.size(); ++n) {
        require(powers[n] >= 0.0, "s_feature: negative power");
        const double t1 = times[n + 1]; // t_n
        const double t0 = times[n];     // t_{n-1}
        acc.add(powers[n] * (tN * tN + 2.0 * t1 * t1 + 2.0 * t0 * t0 + 2.0 * t1 * t0 - 3.0 * tN * (t1 + t0)));
    }
    return acc.value() / 12.0;
}

/// SVector of a sample: energy-normalize each BS row and evaluate s_feature
/// on the same time grid the featurizer uses.
inline SVector s_vector(const CirSample& sample, const FeaturizeConfig& config = {}) {
    SVector out;
    out.sample_id = sample.sample_id;
    out.values.reserve(sample.per_bs.size());
    for (std::size_t m = 0; m < sample.per_bs.size(); ++m) {
        const Cir& cir = sample.per_bs[m];
        Cir unit = normalize_energy(cir);
        std::vector<double> powers(unit.taps.size());
        for (std::size_t n = 0; n < unit.taps.size(); ++n)
            powers[n] = std::norm(unit.taps[n]);
        std::vector<double> grid;
        if (cir.sample_times)
            grid = *cir.sample_times;
        else if (config.times)
            grid = *config.times;
        else
            grid = default_time_grid(cir.tap_count());
        std::vector<double> times(grid.size() + 1, 0.0);
        std::copy(grid.begin(), grid.end(), times.begin() + 1);
        out.values.push_back(s_feature(powers, times));
    }
    return out;
}

/// l1 distance between SVectors.
inline double signature_distance(const SVector& a, const SVector& b) {
    require(a.values.size() == b.values.size(), "signature_distance: length mismatch");
    double d = 0.0;
    for (std::size_t m = 0; m < a.values.size(); ++m)
        d += std::abs(a.values[m] - b.values[m]);
    return d;
}

/// Stacked per-BS CIR magnitudes, the baseline feature map.
inline Matrix cir_magnitude(const CirSample& sample) {
    require(!sample.per_bs.empty(), "cir_magnitude: no BS rows");
    const std::size_t n_taps = sample.per_bs.front().tap_count();
    Matrix out(sample.per_bs.size(), n_taps);
    for (std::size_t m = 0; m < sample.per_bs.size(); ++m) {
        require(sample.per_bs[m].tap_count() == n_taps, "cir_magnitude: ragged tap counts");
        for (std::size_t n = 0; n < n_taps; ++n)
            out(m, n) = std::abs(sample.per_bs[m].taps[n]);
    }
    return out;
}

/// Frobenius distance between two equally shaped magnitude matrices.
inline double cir_euclidean(const Matrix& a, const Matrix& b) {
    require(a.same_shape(b), "cir_euclidean: shape mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.data()[i] - b.data()[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

/// Symmetric matrix of metric(i, j), upper triangle computed in parallel.
template <typename MetricFn>
PairwiseMatrix pairwise_matrix(std::size_t count, MetricTag tag, MetricFn&& metric) {
    require(count >= 2, "pairwise_matrix: need at least 2 samples");
    PairwiseMatrix pm;
    pm.tag = tag;
    pm.m = Matrix(count, count);
    parallel_for(count, [&](std::size_t i) {
        for (std::size_t j = i + 1; j < count; ++j) {
            const double d = metric(i, j);
            pm.m(i, j) = d;
            pm.m(j, i) = d;
        }
    });
    return pm;
}

inline PairwiseMatrix pairwise_from_svectors(const std::vector<SVector>& sv) {
    return pairwise_matrix(sv.size(), MetricTag::signature,
                           [&](std::size_t i, std::size_t j) { return signature_distance(sv[i], sv[j]); });
}

inline PairwiseMatrix pairwise_from_magnitudes(const std::vector<Matrix>& mags) {
    return pairwise_matrix(mags.size(), MetricTag::cir_euclidean,
                           [&](std::size_t i, std::size_t j) { return cir_euclidean(mags[i], mags[j]); });
}

/// Euclidean distances between rows of a coordinate matrix.
inline PairwiseMatrix pairwise_from_locations(const Matrix& coords) {
    return pairwise_matrix(coords.rows(), MetricTag::true_location, [&](std::size_t i, std::size_t j) {
        double acc = 0.0;
        for (std::size_t c = 0; c < coords.cols(); ++c) {
            const double d = coords(i, c) - coords(j, c);
            acc += d * d;
        }
        return std::sqrt(acc);
    });
}

/// Divide all entries by the maximum; result lies in [0, 1].
inline PairwiseMatrix normalize_matrix(const PairwiseMatrix& pm) {
    double mx = 0.0;
    for (double v : pm.m.data())
        mx = std::max(mx, v);
    if (mx <= 0.0)
        throw data_error("normalize_matrix: all distances are zero (degenerate dataset)");
    PairwiseMatrix out = pm;
    const double inv = 1.0 / mx;
    for (double& v : out.m.data())
        v *= inv;
    return out;
}

// Undirected weighted k-NN graph; an edge is kept if either endpoint
// selects it.
struct KnnGraph {
    struct Edge {
        std::size_t to;
        double weight;
    };
    std::size_t size = 0;
    std::vector<std::vector<Edge>> adj;
};

inline KnnGraph knn_graph(const PairwiseMatrix& pm, std::size_t k) {
    const std::size_t d = pm.size();
    require(k >= 1 && k < d, "knn_graph: need 1 <= k < D");
    KnnGraph g;
    g.size = d;
    g.adj.assign(d, {});

    // per-row selection, ties broken by smaller sample index
    std::vector<std::vector<std::size_t>> selected(d);
    parallel_for(d, [&](std::size_t i) {
        std::vector<std::size_t> order;
        order.reserve(d - 1);
        for (std::size_t j = 0; j < d; ++j)
            if (j != i)
                order.push_back(j);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (pm.m(i, a) != pm.m(i, b))
                return pm.m(i, a) < pm.m(i, b);
            return a < b;
        });
        order.resize(k);
        selected[i] = std::move(order);
    });

    std::vector<std::vector<bool>> has(d, std::vector<bool>(d, false));
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j : selected[i]) {
            has[i][j] = true;
            has[j][i] = true;
        }
    }
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            if (has[i][j] && i != j)
                g.adj[i].push_back({j, pm.m(i, j)});
    return g;
}

namespace detail {

inline std::vector<int> graph_components(const KnnGraph& g) {
    std::vector<int> comp(g.size, -1);
    int next = 0;
    std::vector<std::size_t> stack;
    for (std::size_t s = 0; s < g.size; ++s) {
        if (comp[s] >= 0)
            continue;
        comp[s] = next;
        stack.push_back(s);
        while (!stack.empty()) {
            std::size_t u = stack.back();
            stack.pop_back();
            for (const auto& e : g.adj[u]) {
                if (comp[e.to] < 0) {
                    comp[e.to] = next;
                    stack.push_back(e.to);
                }
            }
        }
        ++next;
    }
    return comp;
}

} // namespace detail

/// All-pairs shortest-path distances over the k-NN graph (Dijkstra per
/// source, sources in parallel). Disconnected components are first joined
/// by the single smallest direct-distance edge per component pair, taken
/// from `base`, so the result is always finite.
inline PairwiseMatrix geodesic_all_pairs(const KnnGraph& graph, const PairwiseMatrix& base) {
    require(graph.size == base.size(), "geodesic_all_pairs: graph/base size mismatch");
    const std::size_t d = graph.size;

    KnnGraph g = graph;
    std::vector<int> comp = detail::graph_components(g);
    const int n_comp = *std::max_element(comp.begin(), comp.end()) + 1;
    if (n_comp > 1) {
        for (int a = 0; a < n_comp; ++a) {
            for (int b = a + 1; b < n_comp; ++b) {
                double best = std::numeric_limits<double>::infinity();
                std::size_t bi = 0, bj = 0;
                for (std::size_t i = 0; i < d; ++i) {
                    if (comp[i] != a)
                        continue;
                    for (std::size_t j = 0; j < d; ++j) {
                        if (comp[j] != b)
                            continue;
                        if (base.m(i, j) < best) {
                            best = base.m(i, j);
                            bi = i;
                            bj = j;
                        }
                    }
                }
                g.adj[bi].push_back({bj, best});
                g.adj[bj].push_back({bi, best});
            }
        }
    }

    PairwiseMatrix out;
    out.tag = MetricTag::geodesic;
    out.m = Matrix(d, d);
    parallel_for(d, [&](std::size_t src) {
        std::vector<double> dist(d, std::numeric_limits<double>::infinity());
        dist[src] = 0.0;
        using Item = std::pair<double, std::size_t>;
        std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
        heap.push({0.0, src});
        while (!heap.empty()) {
            auto [du, u] = heap.top();
            heap.pop();
            if (du > dist[u])
                continue;
            for (const auto& e : g.adj[u]) {
                const double nd = du + e.weight;
                if (nd < dist[e.to]) {
                    dist[e.to] = nd;
                    heap.push({nd, e.to});
                }
            }
        }
        for (std::size_t j = 0; j < d; ++j)
            out.m(src, j) = dist[j];
    });

    // enforce exact symmetry and a zero diagonal despite per-source rounding
    for (std::size_t i = 0; i < d; ++i) {
        out.m(i, i) = 0.0;
        for (std::size_t j = i + 1; j < d; ++j) {
            const double v = std::min(out.m(i, j), out.m(j, i));
            out.m(i, j) = v;
            out.m(j, i) = v;
        }
    }
    return out;
}

} // namespace sigchart
