#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "glu_mlp.hpp"
#include "tensor.hpp"

namespace glupruner {

// Running per-feature sum of squares over calibration tokens.
class NormAccumulator {
public:
    explicit NormAccumulator(std::size_t dim) : sumsq_(dim, 0.0) {}

    // Adds every row of batch (T, dim). Tokens are added in row order, so
    // the result does not depend on how a token stream is split into batches.
    void accumulate(const Tensor2D& batch);

    // Element-wise sum with an accumulator built over a disjoint token set.
    void merge(const NormAccumulator& other);

    // sqrt(sumsq) per feature.
    std::vector<double> finalize() const;

    std::size_t dim() const noexcept { return sumsq_.size(); }
    std::uint64_t token_count() const noexcept { return token_count_; }
    std::span<const double> sumsq() const noexcept { return sumsq_; }

private:
    std::vector<double> sumsq_;
    std::uint64_t token_count_ = 0;
};

struct CalibStats {
    std::vector<double> input_norms;        // ||X_j||_2, length d_hidden
    std::vector<double> intermediate_norms; // ||y_i||_2, length d_int
    std::uint64_t token_count = 0;
};

// Streams batches through the dense MLP, accumulating input and
// intermediate norms. Weights must outlive the calibrator.
class MlpCalibrator {
public:
    explicit MlpCalibrator(const MlpWeights& weights);

    void add_batch(const Tensor2D& x);
    // Throws ErrorCode::EmptyCalibration when no token was seen.
    CalibStats finish() const;

private:
    const MlpWeights& weights_;
    NormAccumulator inputs_;
    NormAccumulator intermediates_;
};

CalibStats calibrate_mlp(const MlpWeights& w, std::span<const Tensor2D> batches);

// Seeded Gaussian activations with optional heavy outlier features.
// Feature k * dim / outliers (k < outliers) is multiplied by scale. The
// token stream is a pure function of (seed, dim, outliers, scale): values
// come from mt19937_64 through a Box-Muller transform written here, so the
// bytes do not depend on the standard library's distribution code.
struct SyntheticSpec {
    std::uint64_t tokens = 4096;
    std::size_t dim = 0;
    std::size_t outliers = 0;
    double scale = 1.0;
    std::uint64_t seed = 0;
    std::size_t batch_tokens = 2048;
};

class SyntheticStream {
public:
    explicit SyntheticStream(const SyntheticSpec& spec);

    // Next batch of at most batch_tokens rows, or nullopt when exhausted.
    std::optional<Tensor2D> next();

    const std::vector<std::size_t>& outlier_features() const noexcept { return outlier_features_; }

private:
    double normal();

    SyntheticSpec spec_;
    std::mt19937_64 rng_;
    std::optional<double> spare_;
    std::uint64_t emitted_ = 0;
    std::vector<std::size_t> outlier_features_;
    std::vector<float> feature_scale_;
};

std::vector<Tensor2D> synthetic_batches(const SyntheticSpec& spec);

} // namespace glupruner
