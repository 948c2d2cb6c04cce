#include "pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace glupruner {

std::string_view prune_metric_name(PruneMetric m) {
    switch (m) {
    case PruneMetric::Magnitude: return "magnitude";
    case PruneMetric::Wanda: return "wanda";
    case PruneMetric::Dass: return "dass";
    }
    return "unknown";
}

PruneMetric parse_prune_metric(std::string_view name) {
    if (name == "magnitude") return PruneMetric::Magnitude;
    if (name == "wanda") return PruneMetric::Wanda;
    if (name == "dass") return PruneMetric::Dass;
    fail(ErrorCode::Config, "unknown metric '" + std::string(name) + "'");
}

namespace {

void check_stats(const MlpWeights& w, const CalibStats& stats) {
    w.validate();
    if (stats.input_norms.size() != w.d_hidden()) {
        fail(ErrorCode::Dimension, "calibration input norms have length " +
                                       std::to_string(stats.input_norms.size()) + ", d_hidden is " +
                                       std::to_string(w.d_hidden()));
    }
    if (stats.intermediate_norms.size() != w.d_int()) {
        fail(ErrorCode::Dimension, "calibration intermediate norms have length " +
                                       std::to_string(stats.intermediate_norms.size()) + ", d_int is " +
                                       std::to_string(w.d_int()));
    }
}

ImportanceMatrix transposed(ImportanceMatrix m) {
    m.scores = m.scores.transposed();
    return m;
}

// Builds the mask on the transposed weight (the orientation the scores
// are defined in) and returns it in storage orientation.
SparsityMask mask_in_storage(const ImportanceMatrix& transposed_scores, const SparsityKind& kind,
                             GroupAxis transposed_axis) {
    return glupruner::transposed(build_mask(transposed_scores, SparsitySpec{kind, transposed_axis}));
}

MlpPruneResult finish(const MlpWeights& w, MlpMasks masks) {
    MlpWeights pruned{apply_mask(w.gate, masks.gate), apply_mask(w.up, masks.up),
                      apply_mask(w.down, masks.down), w.variant};
    return {std::move(masks), std::move(pruned)};
}

std::vector<double> ones(std::size_t n) { return std::vector<double>(n, 1.0); }

struct TransposedScores {
    ImportanceMatrix gate;
    ImportanceMatrix up;
    ImportanceMatrix down;
    GroupAxis gate_up_axis;
};

// Scores on W^T: gate/up are (d_int, d_hidden), down is (d_hidden, d_int).
TransposedScores score_transposed(const MlpWeights& w, const CalibStats& stats, const PruneConfig& cfg) {
    check_stats(w, stats);
    const Tensor2D gate_t = w.gate.transposed();
    const Tensor2D up_t = w.up.transposed();
    const Tensor2D down_t = w.down.transposed();
    switch (cfg.metric) {
    case PruneMetric::Dass:
        // Input-balanced: each column of W^T collects the weights of one
        // hidden input across all intermediate neurons.
        return {dass_gate_up_scores(gate_t, stats.intermediate_norms, cfg.alpha),
                dass_gate_up_scores(up_t, stats.intermediate_norms, cfg.alpha),
                dass_down_scores(down_t, stats.intermediate_norms), GroupAxis::PerColumn};
    case PruneMetric::Wanda:
        return {wanda_scores(gate_t, stats.input_norms), wanda_scores(up_t, stats.input_norms),
                wanda_scores(down_t, stats.intermediate_norms), GroupAxis::PerRow};
    case PruneMetric::Magnitude: {
        const auto hidden_ones = ones(w.d_hidden());
        const auto int_ones = ones(w.d_int());
        auto gate = wanda_scores(gate_t, hidden_ones);
        auto up = wanda_scores(up_t, hidden_ones);
        auto down = wanda_scores(down_t, int_ones);
        for (auto* m : {&gate, &up, &down}) m->metric = ScoreMetric::Magnitude;
        return {std::move(gate), std::move(up), std::move(down), GroupAxis::PerRow};
    }
    }
    fail(ErrorCode::Config, "unknown metric");
}

} // namespace

MlpScores score_mlp(const MlpWeights& w, const CalibStats& stats, const PruneConfig& cfg) {
    auto t = score_transposed(w, stats, cfg);
    return {transposed(std::move(t.gate)), transposed(std::move(t.up)), transposed(std::move(t.down))};
}

MlpPruneResult prune_mlp_dass(const MlpWeights& w, const CalibStats& stats, const PruneConfig& cfg) {
    if (cfg.metric != PruneMetric::Dass) fail(ErrorCode::Config, "prune_mlp_dass requires metric dass");
    return prune_mlp(w, stats, cfg);
}

LinearPruneResult prune_linear_wanda(const Tensor2D& w, std::span<const double> input_norms,
                                     const SparsityKind& sparsity) {
    SparsityMask mask = build_mask(wanda_scores(w, input_norms), SparsitySpec{sparsity, GroupAxis::PerRow});
    Tensor2D pruned = apply_mask(w, mask);
    return {std::move(mask), std::move(pruned)};
}

MlpPruneResult prune_mlp(const MlpWeights& w, const CalibStats& stats, const PruneConfig& cfg) {
    SparsitySpec{cfg.sparsity, GroupAxis::PerRow}.validate();
    const auto t = score_transposed(w, stats, cfg);
    MlpMasks masks{mask_in_storage(t.gate, cfg.sparsity, t.gate_up_axis),
                   mask_in_storage(t.up, cfg.sparsity, t.gate_up_axis),
                   // Down is output-balanced for every metric: rows of W3^T.
                   mask_in_storage(t.down, cfg.sparsity, GroupAxis::PerRow)};
    return finish(w, std::move(masks));
}

std::optional<double> pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) fail(ErrorCode::Dimension, "pearson: vectors differ in length");
    if (a.size() < 2) return std::nullopt;
    const auto constant = [](std::span<const double> v) {
        return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
    };
    if (constant(a) || constant(b)) return std::nullopt;
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa <= 0.0 || sbb <= 0.0) return std::nullopt;
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

DependencyGroupReport dependency_report(const MlpMasks& masks) {
    const std::size_t h = masks.gate.rows();
    const std::size_t n = masks.gate.cols();
    if (masks.up.rows() != h || masks.up.cols() != n) {
        fail(ErrorCode::Dimension, "up mask " + shape_string(masks.up.keep) + " does not match gate mask " +
                                       shape_string(masks.gate.keep));
    }
    if (masks.down.rows() != n || masks.down.cols() != h) {
        fail(ErrorCode::Dimension, "down mask " + shape_string(masks.down.keep) + " must be " +
                                       shape_string(n, h));
    }
    DependencyGroupReport r;
    r.gate_kept.assign(n, 0.0);
    r.up_kept.assign(n, 0.0);
    r.down_kept.assign(n, 0.0);
    for (std::size_t j = 0; j < h; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            r.gate_kept[i] += masks.gate.kept(j, i) ? 1.0 : 0.0;
            r.up_kept[i] += masks.up.kept(j, i) ? 1.0 : 0.0;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t kept = 0;
        for (std::size_t j = 0; j < h; ++j) kept += masks.down.kept(i, j) ? 1 : 0;
        r.down_kept[i] = static_cast<double>(kept);
    }
    const double denom = h == 0 ? 1.0 : static_cast<double>(h);
    for (auto* v : {&r.gate_kept, &r.up_kept, &r.down_kept}) {
        for (double& x : *v) x /= denom;
    }
    r.gate_down_correlation = pearson(r.gate_kept, r.down_kept);
    r.up_down_correlation = pearson(r.up_kept, r.down_kept);
    return r;
}

double zero_fraction(const Tensor2D& t) {
    if (t.size() == 0) return 0.0;
    const auto d = t.data();
    const auto zeros = std::count(d.begin(), d.end(), 0.0f);
    return static_cast<double>(zeros) / static_cast<double>(d.size());
}

ReconstructionEvaluator::ReconstructionEvaluator(const MlpWeights& dense, const MlpWeights& pruned)
    : dense_(dense), pruned_(pruned) {
    dense_.validate();
    pruned_.validate();
    if (!dense_.gate.same_shape(pruned_.gate) || dense_.variant != pruned_.variant) {
        fail(ErrorCode::Dimension, "dense and pruned MLP weights differ in shape or variant");
    }
}

void ReconstructionEvaluator::add_batch(const Tensor2D& x) {
    if (x.rows() == 0) return;
    const Tensor2D z_dense = mlp_forward(dense_, x).z;
    const Tensor2D z_pruned = mlp_forward(pruned_, x).z;
    const auto d = z_dense.data();
    const auto p = z_pruned.data();
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double diff = static_cast<double>(d[i]) - static_cast<double>(p[i]);
        err_sq_ += diff * diff;
        dense_sq_ += static_cast<double>(d[i]) * d[i];
    }
    tokens_ += x.rows();
}

EvalReport ReconstructionEvaluator::finish() const {
    if (tokens_ == 0) fail(ErrorCode::EmptyCalibration, "evaluation saw zero tokens");
    EvalReport r;
    r.frobenius_error = std::sqrt(err_sq_);
    r.dense_norm = std::sqrt(dense_sq_);
    if (r.dense_norm > 0.0) {
        r.relative_error = r.frobenius_error / r.dense_norm;
    } else if (r.frobenius_error == 0.0) {
        r.relative_error = 0.0;
    }
    r.token_count = tokens_;
    r.gate_sparsity = zero_fraction(pruned_.gate);
    r.up_sparsity = zero_fraction(pruned_.up);
    r.down_sparsity = zero_fraction(pruned_.down);
    return r;
}

EvalReport eval_reconstruction(const MlpWeights& dense, const MlpWeights& pruned,
                               std::span<const Tensor2D> batches) {
    ReconstructionEvaluator eval(dense, pruned);
    for (const auto& b : batches) eval.add_batch(b);
    return eval.finish();
}

} // namespace glupruner
