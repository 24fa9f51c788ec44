#pragma once

// Siamese training: twin forward passes through one shared network, a
// root-sum-of-squares distance-matching loss over sampled index pairs,
// and Adam updates. Single-threaded by design so a (seed, config) pair
// reproduces the loss history bit for bit.

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "sigchart/common.hpp"
#include "sigchart/distance.hpp"
#include "sigchart/network.hpp"
#include "sigchart/rng.hpp"

namespace sigchart {

enum class NetworkArch : std::uint8_t { conv = 0, dense = 1 };
enum class DistanceSource : std::uint8_t { signature = 0, geodesic = 1, cir_geodesic = 2 };

struct TrainConfig {
    int epochs = 50;
    std::size_t batch_size = 50;   // pairs per optimization step
    double learning_rate = 1e-4;
    std::uint64_t seed = 1;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    NetworkArch arch = NetworkArch::conv;
    DistanceSource distance_source = DistanceSource::signature;

    void validate() const {
        require(epochs >= 1, "TrainConfig: epochs must be positive");
        require(batch_size >= 1, "TrainConfig: batch_size must be positive");
        require(learning_rate > 0.0, "TrainConfig: learning_rate must be positive");
        require(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0, "TrainConfig: bad Adam betas");
        require(adam_eps > 0.0, "TrainConfig: bad Adam epsilon");
    }
};

struct SiameseLoss {
    double loss = 0.0;
    Matrix grad; // d(loss)/d(embedding), same shape as the embedding matrix
};

/// Root of the summed squared mismatches between target distances and
/// embedding distances; no batch-size scaling factor. The zero-distance
/// and zero-loss cases take subgradient 0.
inline SiameseLoss siamese_loss(const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                                const std::vector<double>& rho, const Matrix& embeddings) {
    require(!pairs.empty(), "siamese_loss: empty pair set");
    require(rho.size() == pairs.size(), "siamese_loss: rho/pair count mismatch");
    const std::size_t dim = embeddings.cols();

    std::vector<double> dist(pairs.size());
    double sq = 0.0;
    for (std::size_t r = 0; r < pairs.size(); ++r) {
        const auto [i, j] = pairs[r];
        require(i < embeddings.rows() && j < embeddings.rows(), "siamese_loss: pair index out of range");
        double d2 = 0.0;
        for (std::size_t c = 0; c < dim; ++c) {
            const double d = embeddings(i, c) - embeddings(j, c);
            d2 += d * d;
        }
        dist[r] = std::sqrt(d2);
        const double e = rho[r] - dist[r];
        sq += e * e;
    }

    SiameseLoss out;
    out.loss = std::sqrt(sq);
    out.grad = Matrix(embeddings.rows(), dim);
    if (out.loss == 0.0)
        return out;
    for (std::size_t r = 0; r < pairs.size(); ++r) {
        if (dist[r] == 0.0)
            continue;
        const auto [i, j] = pairs[r];
        const double scale = (dist[r] - rho[r]) / (out.loss * dist[r]);
        for (std::size_t c = 0; c < dim; ++c) {
            const double diff = embeddings(i, c) - embeddings(j, c);
            out.grad(i, c) += scale * diff;
            out.grad(j, c) -= scale * diff;
        }
    }
    return out;
}

class Adam {
public:
    Adam(std::size_t n_params, const TrainConfig& cfg)
        : m_(n_params, 0.0), v_(n_params, 0.0), lr_(cfg.learning_rate), beta1_(cfg.beta1), beta2_(cfg.beta2),
          eps_(cfg.adam_eps) {}

    void step(const std::vector<ParamView>& params) {
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, t_);
        const double bc2 = 1.0 - std::pow(beta2_, t_);
        std::size_t k = 0;
        for (const auto& p : params) {
            for (std::size_t i = 0; i < p.count; ++i, ++k) {
                const double g = p.grad[i];
                m_[k] = beta1_ * m_[k] + (1.0 - beta1_) * g;
                v_[k] = beta2_ * v_[k] + (1.0 - beta2_) * g * g;
                const double mhat = m_[k] / bc1;
                const double vhat = v_[k] / bc2;
                p.value[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
            }
        }
    }

private:
    std::vector<double> m_, v_;
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
};

struct TrainResult {
    Network net;
    std::vector<double> epoch_loss; // mean step loss per epoch
    std::vector<double> step_loss;
};

/// Train a Siamese chart against a normalized target distance matrix.
/// inputs[i] is the N_b x L (or N_b x N) feature plane of sample i.
inline TrainResult train_siamese(const std::vector<Matrix>& inputs, const PairwiseMatrix& target,
                                 const TrainConfig& cfg) {
    cfg.validate();
    const std::size_t d = inputs.size();
    require(d >= 2, "train_siamese: need at least 2 samples");
    require(target.size() == d, "train_siamese: distance matrix size mismatch");
    for (double v : target.m.data())
        require(v >= 0.0 && v <= 1.0 + 1e-9, "train_siamese: target matrix must be normalized to [0,1]");

    const std::size_t nb = inputs.front().rows();
    const std::size_t nf = inputs.front().cols();
    for (const auto& in : inputs)
        require(in.rows() == nb && in.cols() == nf, "train_siamese: ragged inputs");

    TrainResult result;
    result.net = cfg.arch == NetworkArch::conv ? make_conv_network(nb, nf, cfg.seed)
                                               : make_dense_network(nb, nf, cfg.seed);
    Adam opt(result.net.parameter_count(), cfg);
    RngStream rng(cfg.seed, 0x7261696e); // training stream

    const std::size_t steps_per_epoch = (d + cfg.batch_size - 1) / cfg.batch_size;
    const std::size_t b = cfg.batch_size;

    std::vector<std::pair<std::size_t, std::size_t>> pairs(b); // positions in the stacked batch
    std::vector<std::size_t> left(b), right(b);                // dataset indices
    std::vector<double> rho(b);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double epoch_sum = 0.0;
        for (std::size_t step = 0; step < steps_per_epoch; ++step) {
            // uniform over ordered index pairs, with replacement
            for (std::size_t r = 0; r < b; ++r) {
                left[r] = static_cast<std::size_t>(rng.uniform_index(d));
                right[r] = static_cast<std::size_t>(rng.uniform_index(d));
                pairs[r] = {r, b + r};
                rho[r] = target.m(left[r], right[r]);
            }

            Batch x(2 * b, 1, nb, nf);
            for (std::size_t r = 0; r < b; ++r) {
                std::copy(inputs[left[r]].data().begin(), inputs[left[r]].data().end(),
                          x.v.begin() + static_cast<std::ptrdiff_t>(r * nb * nf));
                std::copy(inputs[right[r]].data().begin(), inputs[right[r]].data().end(),
                          x.v.begin() + static_cast<std::ptrdiff_t>((b + r) * nb * nf));
            }

            result.net.zero_grad();
            Batch out = result.net.forward_train(x);
            Matrix emb(2 * b, 2);
            std::copy(out.v.begin(), out.v.end(), emb.data().begin());

            SiameseLoss sl = siamese_loss(pairs, rho, emb);
            if (!std::isfinite(sl.loss)) {
                std::ostringstream msg;
                msg << "train_siamese: non-finite loss at epoch " << epoch << " step " << step << "; pairs";
                for (std::size_t r = 0; r < std::min<std::size_t>(b, 8); ++r)
                    msg << " (" << left[r] << "," << right[r] << ")";
                throw numeric_error(msg.str());
            }

            Batch gout(2 * b, 2, 1, 1);
            std::copy(sl.grad.data().begin(), sl.grad.data().end(), gout.v.begin());
            result.net.backward(gout);
            opt.step(result.net.parameters());

            result.step_loss.push_back(sl.loss);
            epoch_sum += sl.loss;
        }
        result.epoch_loss.push_back(epoch_sum / static_cast<double>(steps_per_epoch));
    }
    return result;
}

/// Inference pass over a dataset; batch-norm uses running statistics.
inline Chart embed(const Network& net, const std::vector<Matrix>& inputs) {
    require(!inputs.empty(), "embed: empty dataset");
    Chart chart;
    chart.points = Matrix(inputs.size(), 2);
    const std::size_t chunk = 256;
    const std::size_t nb = inputs.front().rows();
    const std::size_t nf = inputs.front().cols();
    for (std::size_t start = 0; start < inputs.size(); start += chunk) {
        const std::size_t n = std::min(chunk, inputs.size() - start);
        Batch x(n, 1, nb, nf);
        for (std::size_t r = 0; r < n; ++r)
            std::copy(inputs[start + r].data().begin(), inputs[start + r].data().end(),
                      x.v.begin() + static_cast<std::ptrdiff_t>(r * nb * nf));
        Batch y = net.forward_eval(x);
        for (std::size_t r = 0; r < n; ++r) {
            chart.points(start + r, 0) = y.v[r * 2 + 0];
            chart.points(start + r, 1) = y.v[r * 2 + 1];
        }
    }
    return chart;
}

} // namespace sigchart
