#pragma once

// Raw CIR matrices -> compact signature maps.
//
// Per BS row: normalize total energy, accumulate tap powers into the
// cumulative-sum-of-energy (CSE) sequence, pair it with the tap time grid,
// prepend a (0,0) basepoint, and take the log-signature of the resulting
// 2-D polyline. Level-1 coordinates are dropped (they are the fixed path
// endpoint after normalization), leaving L features per BS.

#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sigchart/common.hpp"
#include "sigchart/signature.hpp"

namespace sigchart {

// One BS-UE channel impulse response.
struct Cir {
    std::vector<std::complex<double>> taps;
    std::optional<std::vector<double>> sample_times; // physical tap times, if not uniform

    std::size_t tap_count() const { return taps.size(); }
};

// One UE snapshot: the CIRs towards every BS.
struct CirSample {
    std::vector<Cir> per_bs;
    std::int64_t sample_id = 0;
};

// Energy-vs-time polyline, points (c_n, t_n) with a (0,0) basepoint.
struct CsePath {
    std::vector<std::vector<double>> points;

    CsePath(const std::vector<double>& cse, const std::vector<double>& times) {
        require(cse.size() == times.size(), "CsePath: cse/time length mismatch");
        require(!cse.empty(), "CsePath: empty sequence");
        points.reserve(cse.size() + 1);
        points.push_back({0.0, 0.0});
        double prev_c = 0.0;
        double prev_t = 0.0;
        for (std::size_t n = 0; n < cse.size(); ++n) {
            require(times[n] > prev_t, "CsePath: times must be strictly increasing and positive");
            require(cse[n] >= prev_c - 1e-12, "CsePath: energy sequence must be non-decreasing");
            points.push_back({cse[n], times[n]});
            prev_c = cse[n];
            prev_t = times[n];
        }
        require(std::abs(cse.back() - 1.0) <= 1e-9, "CsePath: total energy must be 1 after normalization");
    }
};

struct SignatureMap {
    Matrix rows; // n_bs x L
    std::int64_t sample_id = 0;
};

// Per (bs, feature) z-score statistics fitted on the training split.
struct NormalizationStats {
    Matrix mean;
    Matrix stddev; // clamped from below at eps
    static constexpr double eps = 1e-12;
};

struct FeaturizeConfig {
    int level = 4;                                  // signature truncation depth
    std::optional<std::vector<double>> times;       // shared grid; default n/N
};

/// Number of per-BS features at truncation depth `level` (words of length 2..level).
inline std::size_t feature_count(int level) {
    require(level >= 2, "feature_count: level must be >= 2");
    return lyndon_words(2, level).size() - 2;
}

/// Scale taps so total energy is exactly 1. Throws data_error on all-zero input.
inline Cir normalize_energy(const Cir& cir) {
    require(!cir.taps.empty(), "normalize_energy: empty CIR");
    CompensatedSum energy;
    for (const auto& h : cir.taps) {
        require(std::isfinite(h.real()) && std::isfinite(h.imag()), "normalize_energy: non-finite tap");
        energy.add(h.real() * h.real() + h.imag() * h.imag());
    }
    const double e = energy.value();
    if (e <= 0.0)
        throw data_error("degenerate CIR: total energy is zero");
    const double scale = 1.0 / std::sqrt(e);
    Cir out = cir;
    for (auto& h : out.taps)
        h *= scale;
    return out;
}

/// Cumulative sum of tap powers; expects an energy-normalized input.
inline std::vector<double> cse(const Cir& cir) {
    std::vector<double> c(cir.taps.size());
    CompensatedSum acc;
    for (std::size_t n = 0; n < cir.taps.size(); ++n) {
        const auto& h = cir.taps[n];
        acc.add(h.real() * h.real() + h.imag() * h.imag());
        c[n] = acc.value();
    }
    require(std::abs(c.back() - 1.0) <= 1e-9, "cse: input is not energy-normalized");
    return c;
}

/// Default uniform time grid {n/N}.
inline std::vector<double> default_time_grid(std::size_t n_taps) {
    std::vector<double> t(n_taps);
    for (std::size_t n = 0; n < n_taps; ++n)
        t[n] = static_cast<double>(n + 1) / static_cast<double>(n_taps);
    return t;
}

/// Pair the CSE sequence with tap times and prepend the (0,0) basepoint.
inline CsePath augment(const std::vector<double>& cse_seq, const std::vector<double>& times) {
    return CsePath(cse_seq, times);
}

/// Log-signature coordinates of word length 2..level of the CSE path.
inline std::vector<double> signature_features(const CsePath& path, int level = 4) {
    require(level >= 2, "signature_features: level must be >= 2");
    LogSignature ls = log_signature(path_signature(Path(path.points), level));
    // basis order is (length, lex); the first two entries are the level-1 words
    return std::vector<double>(ls.coords.begin() + 2, ls.coords.end());
}

/// Full per-sample pipeline; one feature row per BS.
inline SignatureMap build_signature_map(const CirSample& sample, const FeaturizeConfig& config = {}) {
    require(!sample.per_bs.empty(), "build_signature_map: sample has no BS rows");
    const std::size_t n_bs = sample.per_bs.size();
    const std::size_t L = feature_count(config.level);

    SignatureMap map;
    map.sample_id = sample.sample_id;
    map.rows = Matrix(n_bs, L);
    for (std::size_t m = 0; m < n_bs; ++m) {
        const Cir& cir = sample.per_bs[m];
        std::vector<double> times;
        if (cir.sample_times)
            times = *cir.sample_times;
        else if (config.times)
            times = *config.times;
        else
            times = default_time_grid(cir.tap_count());
        require(times.size() == cir.tap_count(), "build_signature_map: time grid length mismatch");
        try {
            Cir unit = normalize_energy(cir);
            std::vector<double> features = signature_features(augment(cse(unit), times), config.level);
            for (std::size_t f = 0; f < L; ++f)
                map.rows(m, f) = features[f];
        } catch (const data_error& e) {
            throw data_error(std::string(e.what()) + " (bs index " + std::to_string(m) + ")");
        }
    }
    return map;
}

/// Per (bs, feature) mean/std over a training set, compensated summation.
inline NormalizationStats fit_normalization(const std::vector<SignatureMap>& maps) {
    require(!maps.empty(), "fit_normalization: empty dataset");
    const std::size_t n_bs = maps.front().rows.rows();
    const std::size_t L = maps.front().rows.cols();
    for (const auto& m : maps)
        require(m.rows.rows() == n_bs && m.rows.cols() == L, "fit_normalization: inconsistent map shapes");

    NormalizationStats stats;
    stats.mean = Matrix(n_bs, L);
    stats.stddev = Matrix(n_bs, L);
    const double inv_d = 1.0 / static_cast<double>(maps.size());
    for (std::size_t b = 0; b < n_bs; ++b) {
        for (std::size_t f = 0; f < L; ++f) {
            CompensatedSum s;
            for (const auto& m : maps)
                s.add(m.rows(b, f));
            const double mean = s.value() * inv_d;
            CompensatedSum sq;
            for (const auto& m : maps) {
                const double d = m.rows(b, f) - mean;
                sq.add(d * d);
            }
            stats.mean(b, f) = mean;
            stats.stddev(b, f) = std::max(std::sqrt(sq.value() * inv_d), NormalizationStats::eps);
        }
    }
    return stats;
}

/// Z-score a map with training statistics. Clamped (constant) features map to 0.
inline SignatureMap apply_normalization(const SignatureMap& map, const NormalizationStats& stats) {
    require(map.rows.rows() == stats.mean.rows() && map.rows.cols() == stats.mean.cols(),
            "apply_normalization: shape mismatch");
    SignatureMap out = map;
    for (std::size_t b = 0; b < map.rows.rows(); ++b) {
        for (std::size_t f = 0; f < map.rows.cols(); ++f) {
            if (stats.stddev(b, f) <= NormalizationStats::eps)
                out.rows(b, f) = 0.0;
            else
                out.rows(b, f) = (map.rows(b, f) - stats.mean(b, f)) / stats.stddev(b, f);
        }
    }
    return out;
}

} // namespace sigchart
