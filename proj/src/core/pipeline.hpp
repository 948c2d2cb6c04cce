#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "calibration.hpp"
#include "glu_mlp.hpp"
#include "importance.hpp"
#include "masking.hpp"

namespace glupruner {

enum class PruneMetric { Magnitude, Wanda, Dass };

std::string_view prune_metric_name(PruneMetric m);
PruneMetric parse_prune_metric(std::string_view name);

using SparsityKind = std::variant<Unstructured, NM>;

inline constexpr double kDefaultAlpha = 0.5;
// Documented alpha sweep for the report command.
inline constexpr std::array<double, 4> kAlphaSweep{0.25, 0.5, 0.75, 1.0};

struct PruneConfig {
    GluVariant variant = GluVariant::SwiGLU;
    double alpha = kDefaultAlpha;
    SparsityKind sparsity = Unstructured{0.5};
    PruneMetric metric = PruneMetric::Dass;
    std::uint64_t seed = 0;
};

// Masks and scores are in the storage orientation of MlpWeights, i.e. the
// gate mask is (d_hidden, d_int) and can be applied to w.gate directly.
//
// Comparison groups in that orientation:
//   DaSS:             gate/up per row (one hidden input feature, windows
//                     along d_int); down per column (one hidden output
//                     feature, windows along d_int).
//   Wanda/Magnitude:  gate/up per column (one intermediate neuron, windows
//                     along d_hidden); down per column as above.
struct MlpMasks {
    SparsityMask gate;
    SparsityMask up;
    SparsityMask down;
};

struct MlpScores {
    ImportanceMatrix gate;
    ImportanceMatrix up;
    ImportanceMatrix down;
};

struct MlpPruneResult {
    MlpMasks masks;
    MlpWeights pruned;
};

struct LinearPruneResult {
    SparsityMask mask;
    Tensor2D pruned;
};

// Scores for the configured metric, transposed back to storage orientation.
MlpScores score_mlp(const MlpWeights& w, const CalibStats& stats, const PruneConfig& cfg);

MlpPruneResult prune_mlp_dass(const MlpWeights& w, const CalibStats& stats, const PruneConfig& cfg);

// Wanda on a (d_out, d_in) weight: output-balanced, N:M windows along d_in.
LinearPruneResult prune_linear_wanda(const Tensor2D& w, std::span<const double> input_norms,
                                     const SparsityKind& sparsity);

// Dispatches on cfg.metric. Wanda uses input norms for gate/up and
// intermediate norms for down; Magnitude is Wanda with unit norms.
MlpPruneResult prune_mlp(const MlpWeights& w, const CalibStats& stats, const PruneConfig& cfg);

struct DependencyGroupReport {
    // Per intermediate neuron: kept fraction of its gate, up and down weights.
    std::vector<double> gate_kept;
    std::vector<double> up_kept;
    std::vector<double> down_kept;
    // Pearson correlation; nullopt when either vector has zero variance.
    std::optional<double> gate_down_correlation;
    std::optional<double> up_down_correlation;
};

DependencyGroupReport dependency_report(const MlpMasks& masks);

std::optional<double> pearson(std::span<const double> a, std::span<const double> b);

struct EvalReport {
    double frobenius_error = 0.0;
    // nullopt when the dense output is identically zero.
    std::optional<double> relative_error;
    double dense_norm = 0.0;
    std::uint64_t token_count = 0;
    // Fraction of exactly-zero weights in the pruned projections.
    double gate_sparsity = 0.0;
    double up_sparsity = 0.0;
    double down_sparsity = 0.0;
};

// Streaming reconstruction error of z over a batch sequence.
class ReconstructionEvaluator {
public:
    ReconstructionEvaluator(const MlpWeights& dense, const MlpWeights& pruned);

    void add_batch(const Tensor2D& x);
    EvalReport finish() const;

private:
    const MlpWeights& dense_;
    const MlpWeights& pruned_;
    double err_sq_ = 0.0;
    double dense_sq_ = 0.0;
    std::uint64_t tokens_ = 0;
};

EvalReport eval_reconstruction(const MlpWeights& dense, const MlpWeights& pruned,
                               std::span<const Tensor2D> batches);

double zero_fraction(const Tensor2D& t);

} // namespace glupruner
