#pragma once

// PCA over signature-derived features (or raw CIR magnitudes for the
// baseline), built on a cyclic Jacobi symmetric eigendecomposition.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "sigchart/common.hpp"
#include "sigchart/distance.hpp"
#include "sigchart/featurize.hpp"

namespace sigchart {

enum class FeatureLayout : std::uint8_t {
    svector = 0,        // per-BS closed-form feature, dim = N_b
    vectorized_map = 1, // flattened signature map, dim = N_b * L
    cir_magnitude = 2,  // flattened |CIR|, dim = N_b * N
};

inline std::string feature_layout_name(FeatureLayout l) {
    switch (l) {
    case FeatureLayout::svector: return "svector";
    case FeatureLayout::vectorized_map: return "vectorized_map";
    case FeatureLayout::cir_magnitude: return "cir_magnitude";
    }
    return "unknown";
}

struct EigenResult {
    std::vector<double> values; // descending
    Matrix vectors;             // column j is the eigenvector for values[j]
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Sweeps until the
/// off-diagonal Frobenius norm drops below 1e-12 relative to the input scale.
inline EigenResult jacobi_eigen(const Matrix& sym) {
    const std::size_t n = sym.rows();
    require(n >= 1 && sym.cols() == n, "jacobi_eigen: matrix must be square");

    Matrix a = sym;
    Matrix v(n, n);
    for (std::size_t i = 0; i < n; ++i)
        v(i, i) = 1.0;

    double scale = 0.0;
    for (double x : a.data())
        scale += x * x;
    scale = std::sqrt(scale);
    const double tol = 1e-12 * std::max(scale, 1.0);

    auto off_norm = [&]() {
        double s = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q)
                s += 2.0 * a(p, q) * a(p, q);
        return std::sqrt(s);
    };

    const int max_sweeps = 100;
    int sweep = 0;
    while (off_norm() > tol) {
        if (++sweep > max_sweeps)
            throw numeric_error("jacobi_eigen: no convergence after 100 sweeps");
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0)
                    continue;
                const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (std::size_t i = 0; i < n; ++i) {
                    const double aip = a(i, p);
                    const double aiq = a(i, q);
                    a(i, p) = c * aip - s * aiq;
                    a(i, q) = s * aip + c * aiq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double api = a(p, i);
                    const double aqi = a(q, i);
                    a(p, i) = c * api - s * aqi;
                    a(q, i) = s * api + c * aqi;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vip = v(i, p);
                    const double viq = v(i, q);
                    v(i, p) = c * vip - s * viq;
                    v(i, q) = s * vip + c * viq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });

    EigenResult r;
    r.values.resize(n);
    r.vectors = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        r.values[j] = a(order[j], order[j]);
        for (std::size_t i = 0; i < n; ++i)
            r.vectors(i, j) = v(i, order[j]);
    }
    return r;
}

struct PcaModel {
    std::vector<double> mean;
    Matrix components; // n_components x dim, orthonormal rows
    std::vector<double> eigenvalues;
    FeatureLayout layout = FeatureLayout::svector;
};

/// Center features, eigendecompose the covariance, keep the top components.
inline PcaModel pca_fit(const Matrix& data, std::size_t n_components, FeatureLayout layout) {
    const std::size_t d = data.rows();
    const std::size_t dim = data.cols();
    require(d >= 1, "pca_fit: empty dataset");
    require(n_components >= 1 && n_components <= dim, "pca_fit: n_components out of range");

    PcaModel model;
    model.layout = layout;
    model.mean.assign(dim, 0.0);
    for (std::size_t c = 0; c < dim; ++c) {
        CompensatedSum s;
        for (std::size_t r = 0; r < d; ++r)
            s.add(data(r, c));
        model.mean[c] = s.value() / static_cast<double>(d);
    }

    Matrix cov(dim, dim);
    const double inv = 1.0 / static_cast<double>(std::max<std::size_t>(d - 1, 1));
    parallel_for(dim, [&](std::size_t i) {
        for (std::size_t j = i; j < dim; ++j) {
            double s = 0.0;
            for (std::size_t r = 0; r < d; ++r)
                s += (data(r, i) - model.mean[i]) * (data(r, j) - model.mean[j]);
            cov(i, j) = s * inv;
            cov(j, i) = cov(i, j);
        }
    });

    EigenResult eig = jacobi_eigen(cov);
    model.eigenvalues.assign(eig.values.begin(), eig.values.begin() + static_cast<std::ptrdiff_t>(n_components));
    model.components = Matrix(n_components, dim);
    for (std::size_t k = 0; k < n_components; ++k)
        for (std::size_t c = 0; c < dim; ++c)
            model.components(k, c) = eig.vectors(c, k);
    return model;
}

/// Project (x - mean) onto the retained components; valid for unseen rows.
inline Matrix pca_transform(const PcaModel& model, const Matrix& data) {
    require(data.cols() == model.mean.size(), "pca_transform: feature layout mismatch");
    const std::size_t n = model.components.rows();
    Matrix out(data.rows(), n);
    for (std::size_t r = 0; r < data.rows(); ++r) {
        for (std::size_t k = 0; k < n; ++k) {
            double s = 0.0;
            for (std::size_t c = 0; c < data.cols(); ++c)
                s += (data(r, c) - model.mean[c]) * model.components(k, c);
            out(r, k) = s;
        }
    }
    return out;
}

// ---- feature assembly for the three layouts ----

inline Matrix features_from_svectors(const std::vector<SVector>& sv) {
    require(!sv.empty(), "features_from_svectors: empty dataset");
    Matrix out(sv.size(), sv.front().values.size());
    for (std::size_t r = 0; r < sv.size(); ++r) {
        require(sv[r].values.size() == out.cols(), "features_from_svectors: ragged svectors");
        for (std::size_t c = 0; c < out.cols(); ++c)
            out(r, c) = sv[r].values[c];
    }
    return out;
}

inline Matrix features_from_maps(const std::vector<SignatureMap>& maps) {
    require(!maps.empty(), "features_from_maps: empty dataset");
    const std::size_t dim = maps.front().rows.size();
    Matrix out(maps.size(), dim);
    for (std::size_t r = 0; r < maps.size(); ++r) {
        require(maps[r].rows.size() == dim, "features_from_maps: ragged maps");
        std::copy(maps[r].rows.data().begin(), maps[r].rows.data().end(), out.row(r));
    }
    return out;
}

inline Matrix features_from_magnitudes(const std::vector<Matrix>& mags) {
    require(!mags.empty(), "features_from_magnitudes: empty dataset");
    const std::size_t dim = mags.front().size();
    Matrix out(mags.size(), dim);
    for (std::size_t r = 0; r < mags.size(); ++r) {
        require(mags[r].size() == dim, "features_from_magnitudes: ragged magnitudes");
        std::copy(mags[r].data().begin(), mags[r].data().end(), out.row(r));
    }
    return out;
}

} // namespace sigchart
