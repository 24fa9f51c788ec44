#pragma once

// Desk-scale synthetic scenes: BS grid, UE trajectories, and a simple
// single-bounce geometric multipath CIR generator. This stands in for a
// full stochastic indoor-factory channel model; it is reproducible and
// exercises every pipeline stage, but makes no claim of channel realism.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "sigchart/common.hpp"
#include "sigchart/featurize.hpp"
#include "sigchart/rng.hpp"

namespace sigchart {

enum class Trajectory : std::uint8_t { grid = 0, s_curve = 1, random_walk = 2 };

inline Trajectory trajectory_from_string(const std::string& s) {
    if (s == "grid")
        return Trajectory::grid;
    if (s == "s-curve" || s == "scurve")
        return Trajectory::s_curve;
    if (s == "random-walk" || s == "randomwalk")
        return Trajectory::random_walk;
    throw contract_error("unknown trajectory kind: " + s);
}

struct SceneConfig {
    double hall_w = 120.0; // meters
    double hall_h = 60.0;
    std::size_t n_bs = 18;
    double bs_height = 8.0;
    double ue_height = 1.5;
    std::size_t n_taps = 256;
    double bandwidth_hz = 100e6; // tap spacing = 1/bandwidth
    std::size_t n_scatterers = 5;
    double rician_k = 5.0; // LoS power over total scattered power
    double noise_std = 0.0;
    Trajectory trajectory = Trajectory::grid;
    std::size_t n_samples = 1000;
    std::uint64_t seed = 1;

    void validate() const {
        require(hall_w > 0.0 && hall_h > 0.0, "SceneConfig: hall dimensions must be positive");
        require(n_bs >= 3, "SceneConfig: need at least 3 BS for meaningful charting");
        require(n_taps >= 1, "SceneConfig: need at least 1 tap");
        require(bandwidth_hz > 0.0, "SceneConfig: bandwidth must be positive");
        require(n_samples >= 1, "SceneConfig: need at least 1 sample");
        require(noise_std >= 0.0, "SceneConfig: noise_std must be nonnegative");
        require(rician_k > 0.0, "SceneConfig: rician_k must be positive");
    }

    static SceneConfig desk_preset() {
        SceneConfig c;
        c.n_bs = 8;
        c.n_taps = 64;
        c.n_samples = 1000;
        return c;
    }
};

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;
};

inline double dist3(const Vec3& a, const Vec3& b) {
    const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

struct Scene {
    std::vector<Vec3> bs_positions;
    Matrix ue_positions; // D x 2, ground truth in meters
    // scatterers[sample * n_bs + bs] are the single-bounce points of that link
    std::vector<std::vector<Vec3>> scatterers;
    SceneConfig config;
};

namespace detail {

inline void bs_grid(Scene& scene) {
    const auto& c = scene.config;
    // near-square grid covering the hall, row-major with half-cell margins
    auto rows = static_cast<std::size_t>(std::round(std::sqrt(static_cast<double>(c.n_bs) * c.hall_h / c.hall_w)));
    rows = std::max<std::size_t>(rows, 1);
    std::size_t cols = (c.n_bs + rows - 1) / rows;
    scene.bs_positions.reserve(c.n_bs);
    for (std::size_t i = 0; i < c.n_bs; ++i) {
        const std::size_t r = i / cols;
        const std::size_t q = i % cols;
        Vec3 p;
        p.x = (static_cast<double>(q) + 0.5) * c.hall_w / static_cast<double>(cols);
        p.y = (static_cast<double>(r) + 0.5) * c.hall_h / static_cast<double>(rows);
        p.z = c.bs_height;
        scene.bs_positions.push_back(p);
    }
}

inline void ue_positions(Scene& scene, RngStream& rng) {
    const auto& c = scene.config;
    scene.ue_positions = Matrix(c.n_samples, 2);
    switch (c.trajectory) {
    case Trajectory::grid: {
        auto rows =
            static_cast<std::size_t>(std::round(std::sqrt(static_cast<double>(c.n_samples) * c.hall_h / c.hall_w)));
        rows = std::max<std::size_t>(rows, 1);
        const std::size_t cols = (c.n_samples + rows - 1) / rows;
        for (std::size_t i = 0; i < c.n_samples; ++i) {
            const std::size_t r = i / cols;
            std::size_t q = i % cols;
            if (r % 2 == 1)
                q = cols - 1 - q; // snake order keeps consecutive samples adjacent
            scene.ue_positions(i, 0) = (static_cast<double>(q) + 0.5) * c.hall_w / static_cast<double>(cols);
            scene.ue_positions(i, 1) = (static_cast<double>(r) + 0.5) * c.hall_h / static_cast<double>(rows);
        }
        break;
    }
    case Trajectory::s_curve: {
        const double margin_x = 0.05 * c.hall_w;
        const double margin_y = 0.1 * c.hall_h;
        for (std::size_t i = 0; i < c.n_samples; ++i) {
            const double t = c.n_samples > 1 ? static_cast<double>(i) / static_cast<double>(c.n_samples - 1) : 0.0;
            scene.ue_positions(i, 0) = margin_x + (c.hall_w - 2.0 * margin_x) * t;
            scene.ue_positions(i, 1) =
                0.5 * c.hall_h + (0.5 * c.hall_h - margin_y) * std::sin(2.0 * 3.14159265358979323846 * 2.5 * t);
        }
        break;
    }
    case Trajectory::random_walk: {
        double x = 0.5 * c.hall_w;
        double y = 0.5 * c.hall_h;
        const double step = 0.02 * std::max(c.hall_w, c.hall_h);
        for (std::size_t i = 0; i < c.n_samples; ++i) {
            scene.ue_positions(i, 0) = x;
            scene.ue_positions(i, 1) = y;
            const double ang = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
            x += step * std::cos(ang);
            y += step * std::sin(ang);
            // reflect at walls
            if (x < 0.0) x = -x;
            if (x > c.hall_w) x = 2.0 * c.hall_w - x;
            if (y < 0.0) y = -y;
            if (y > c.hall_h) y = 2.0 * c.hall_h - y;
        }
        break;
    }
    }
}

} // namespace detail

/// BS grid, UE trajectory, and per-link scatterers, all inside the hall.
inline Scene generate_scene(const SceneConfig& config) {
    config.validate();
    Scene scene;
    scene.config = config;
    detail::bs_grid(scene);

    RngStream rng(config.seed, 0x5343454e); // scene stream
    detail::ue_positions(scene, rng);

    scene.scatterers.resize(config.n_samples * config.n_bs);
    for (std::size_t i = 0; i < config.n_samples; ++i) {
        RngStream link_rng(config.seed, 0x53430000ull + i);
        for (std::size_t m = 0; m < config.n_bs; ++m) {
            auto& sc = scene.scatterers[i * config.n_bs + m];
            sc.resize(config.n_scatterers);
            for (auto& p : sc) {
                p.x = link_rng.uniform(0.0, config.hall_w);
                p.y = link_rng.uniform(0.0, config.hall_h);
                p.z = link_rng.uniform(0.0, config.bs_height);
            }
        }
    }
    return scene;
}

struct CirGenStats {
    std::size_t dropped_paths = 0; // paths whose delay fell beyond the tap window
};

/// Geometric multipath CIR for one UE. The LoS tap lands at delay
/// distance/c with fractional-delay linear splitting across two adjacent
/// taps; each scatterer adds a single-bounce path; scattered power is
/// scaled to LoS power divided by the Rician K-factor.
inline CirSample generate_cir(const Scene& scene, std::size_t ue_index, CirGenStats* stats = nullptr) {
    const auto& c = scene.config;
    require(ue_index < c.n_samples, "generate_cir: ue_index out of range");
    constexpr double speed_of_light = 299792458.0;
    const double tap_meters = speed_of_light / c.bandwidth_hz;

    const Vec3 ue{scene.ue_positions(ue_index, 0), scene.ue_positions(ue_index, 1), c.ue_height};
    RngStream rng(c.seed, 0xC1600000ull + ue_index);

    CirSample sample;
    sample.sample_id = static_cast<std::int64_t>(ue_index);
    sample.per_bs.resize(c.n_bs);

    for (std::size_t m = 0; m < c.n_bs; ++m) {
        Cir& cir = sample.per_bs[m];
        cir.taps.assign(c.n_taps, {0.0, 0.0});

        auto add_path = [&](double delay_m, double amplitude, double phase) {
            const double pos = delay_m / tap_meters;
            const auto idx = static_cast<std::size_t>(std::floor(pos));
            const double frac = pos - std::floor(pos);
            if (idx >= c.n_taps) {
                if (stats)
                    ++stats->dropped_paths;
                return;
            }
            const std::complex<double> a = amplitude * std::complex<double>(std::cos(phase), std::sin(phase));
            cir.taps[idx] += a * (1.0 - frac);
            if (frac > 0.0 && idx + 1 < c.n_taps)
                cir.taps[idx + 1] += a * frac;
        };

        const double d_los = dist3(ue, scene.bs_positions[m]);
        const double los_amp = 1.0 / std::max(d_los, 1.0);
        add_path(d_los, los_amp, rng.uniform(0.0, 2.0 * 3.14159265358979323846));

        if (c.n_scatterers > 0) {
            const auto& sc = scene.scatterers[ue_index * c.n_bs + m];
            std::vector<double> amps(sc.size());
            std::vector<double> delays(sc.size());
            std::vector<double> phases(sc.size());
            double scatter_power = 0.0;
            for (std::size_t s = 0; s < sc.size(); ++s) {
                const double d1 = dist3(scene.bs_positions[m], sc[s]);
                const double d2 = dist3(sc[s], ue);
                delays[s] = d1 + d2;
                amps[s] = 1.0 / (std::max(d1, 1.0) * std::max(d2, 1.0));
                phases[s] = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
                scatter_power += amps[s] * amps[s];
            }
            if (scatter_power > 0.0) {
                const double scale = los_amp / std::sqrt(c.rician_k * scatter_power);
                for (std::size_t s = 0; s < sc.size(); ++s)
                    add_path(delays[s], amps[s] * scale, phases[s]);
            }
        }

        if (c.noise_std > 0.0) {
            for (auto& tap : cir.taps)
                tap += std::complex<double>(c.noise_std * rng.normal(), c.noise_std * rng.normal());
        }
    }
    return sample;
}

struct SynthDataset {
    std::vector<CirSample> samples;
    Matrix truth; // D x 2
    CirGenStats stats;
};

/// Scene plus all CIR samples; per-sample generation is parallel and
/// deterministic because every sample derives its own random stream.
inline SynthDataset generate_dataset(const SceneConfig& config) {
    Scene scene = generate_scene(config);
    SynthDataset ds;
    ds.truth = scene.ue_positions;
    ds.samples.resize(config.n_samples);
    std::vector<CirGenStats> stats(config.n_samples);
    parallel_for(config.n_samples, [&](std::size_t i) { ds.samples[i] = generate_cir(scene, i, &stats[i]); });
    for (const auto& s : stats)
        ds.stats.dropped_paths += s.dropped_paths;
    return ds;
}

} // namespace sigchart
