#include "calibration.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "parallel.hpp"

namespace glupruner {

void NormAccumulator::accumulate(const Tensor2D& batch) {
    if (batch.cols() != dim()) {
        fail(ErrorCode::Dimension, "calibration batch " + shape_string(batch) + " has " +
                                       std::to_string(batch.cols()) + " features, expected " +
                                       std::to_string(dim()));
    }
    const std::size_t rows = batch.rows();
    parallel_for(dim(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t t = 0; t < rows; ++t) {
            const auto r = batch.row(t);
            for (std::size_t j = begin; j < end; ++j) {
                const double v = r[j];
                sumsq_[j] += v * v;
            }
        }
    });
    token_count_ += rows;
}

void NormAccumulator::merge(const NormAccumulator& other) {
    if (other.dim() != dim()) {
        fail(ErrorCode::Dimension, "cannot merge accumulators of dim " + std::to_string(dim()) +
                                       " and " + std::to_string(other.dim()));
    }
    for (std::size_t j = 0; j < dim(); ++j) sumsq_[j] += other.sumsq_[j];
    token_count_ += other.token_count_;
}

std::vector<double> NormAccumulator::finalize() const {
    std::vector<double> out(sumsq_.size());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = std::sqrt(sumsq_[j]);
    return out;
}

MlpCalibrator::MlpCalibrator(const MlpWeights& weights)
    : weights_(weights), inputs_(weights.d_hidden()), intermediates_(weights.d_int()) {
    weights_.validate();
}

void MlpCalibrator::add_batch(const Tensor2D& x) {
    if (x.rows() == 0) return;
    inputs_.accumulate(x);
    intermediates_.accumulate(mlp_intermediate(weights_, x));
}

CalibStats MlpCalibrator::finish() const {
    if (inputs_.token_count() == 0) {
        fail(ErrorCode::EmptyCalibration, "calibration saw zero tokens");
    }
    CalibStats stats{inputs_.finalize(), intermediates_.finalize(), inputs_.token_count()};
    for (const auto* norms : {&stats.input_norms, &stats.intermediate_norms}) {
        for (double v : *norms) {
            if (!std::isfinite(v)) fail(ErrorCode::Data, "calibration produced a non-finite norm");
        }
    }
    return stats;
}

CalibStats calibrate_mlp(const MlpWeights& w, std::span<const Tensor2D> batches) {
    MlpCalibrator calibrator(w);
    for (const auto& b : batches) calibrator.add_batch(b);
    return calibrator.finish();
}

SyntheticStream::SyntheticStream(const SyntheticSpec& spec)
    : spec_(spec), rng_(spec.seed), feature_scale_(spec.dim, 1.0f) {
    if (spec_.dim == 0) fail(ErrorCode::Config, "synthetic calibration needs dim > 0");
    if (spec_.outliers > spec_.dim) {
        fail(ErrorCode::Config, "synthetic outliers (" + std::to_string(spec_.outliers) +
                                    ") exceed dim (" + std::to_string(spec_.dim) + ")");
    }
    if (!(spec_.scale > 0.0) || !std::isfinite(spec_.scale)) {
        fail(ErrorCode::Config, "synthetic scale must be a positive finite number");
    }
    if (spec_.batch_tokens == 0) spec_.batch_tokens = 2048;
    for (std::size_t k = 0; k < spec_.outliers; ++k) {
        const std::size_t j = k * spec_.dim / spec_.outliers;
        outlier_features_.push_back(j);
        feature_scale_[j] = static_cast<float>(spec_.scale);
    }
}

double SyntheticStream::normal() {
    if (spare_) {
        const double v = *spare_;
        spare_.reset();
        return v;
    }
    // Uniform in (0, 1] from the top 53 bits.
    const auto uniform = [this] {
        return (static_cast<double>(rng_() >> 11) + 1.0) * 0x1.0p-53;
    };
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    return radius * std::cos(angle);
}

std::optional<Tensor2D> SyntheticStream::next() {
    if (emitted_ >= spec_.tokens) return std::nullopt;
    const std::uint64_t remaining = spec_.tokens - emitted_;
    const std::size_t rows =
        static_cast<std::size_t>(std::min<std::uint64_t>(remaining, spec_.batch_tokens));
    Tensor2D batch(rows, spec_.dim);
    for (std::size_t t = 0; t < rows; ++t) {
        auto r = batch.row(t);
        for (std::size_t j = 0; j < spec_.dim; ++j) {
            r[j] = static_cast<float>(normal()) * feature_scale_[j];
        }
    }
    emitted_ += rows;
    return batch;
}

std::vector<Tensor2D> synthetic_batches(const SyntheticSpec& spec) {
    SyntheticStream stream(spec);
    std::vector<Tensor2D> out;
    while (auto b = stream.next()) out.push_back(std::move(*b));
    return out;
}

} // namespace glupruner
