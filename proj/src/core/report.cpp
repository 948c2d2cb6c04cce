#include "report.hpp"

namespace glupruner {

using nlohmann::json;

namespace {

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json mask_json(const SparsityMask& m) {
    return {{"shape", {m.rows(), m.cols()}},
            {"pattern", m.spec.describe()},
            {"sparsity", mask_sparsity(m)},
            {"violations", count_violations(m)}};
}

} // namespace

json sparsity_json(const SparsityKind& kind) {
    if (const auto* u = std::get_if<Unstructured>(&kind)) {
        return {{"kind", "unstructured"}, {"sparsity", u->sparsity}};
    }
    const auto& nm = std::get<NM>(kind);
    return {{"kind", "nm"}, {"n", nm.n}, {"m", nm.m}};
}

json config_json(const PruneConfig& cfg) {
    json j = {{"variant", variant_name(cfg.variant)},
              {"metric", prune_metric_name(cfg.metric)},
              {"sparsity", sparsity_json(cfg.sparsity)},
              {"seed", cfg.seed}};
    if (cfg.metric == PruneMetric::Dass) j["alpha"] = cfg.alpha;
    return j;
}

json calib_json(const CalibStats& stats) {
    const auto summary = [](const std::vector<double>& v) {
        double lo = v.empty() ? 0.0 : v.front(), hi = lo, sum = 0.0;
        for (double x : v) {
            lo = std::min(lo, x);
            hi = std::max(hi, x);
            sum += x;
        }
        return json{{"len", v.size()}, {"min", lo}, {"max", hi},
                    {"mean", v.empty() ? 0.0 : sum / static_cast<double>(v.size())}};
    };
    return {{"token_count", stats.token_count},
            {"input_norms", summary(stats.input_norms)},
            {"intermediate_norms", summary(stats.intermediate_norms)}};
}

json eval_json(const EvalReport& r) {
    return {{"frobenius_error", r.frobenius_error},
            {"relative_error", optional_json(r.relative_error)},
            {"dense_norm", r.dense_norm},
            {"token_count", r.token_count},
            {"sparsity", {{"gate", r.gate_sparsity}, {"up", r.up_sparsity}, {"down", r.down_sparsity}}}};
}

json dependency_json(const DependencyGroupReport& r, bool per_neuron) {
    json j = {{"gate_down_correlation", optional_json(r.gate_down_correlation)},
              {"up_down_correlation", optional_json(r.up_down_correlation)}};
    if (per_neuron) {
        j["per_neuron_kept_fraction"] = {{"gate", r.gate_kept}, {"up", r.up_kept}, {"down", r.down_kept}};
    }
    return j;
}

json masks_json(const MlpMasks& masks) {
    return {{"gate", mask_json(masks.gate)}, {"up", mask_json(masks.up)}, {"down", mask_json(masks.down)}};
}

json bench_json(const BenchReport& r) {
    return {{"rows", r.rows},
            {"cols", r.cols},
            {"iters", r.iters},
            {"dense_ns", r.dense_ns},
            {"sparse_ns", r.sparse_ns},
            {"speedup", r.speedup},
            {"dense_bytes", r.dense_bytes},
            {"compressed_bytes", r.compressed_bytes}};
}

} // namespace glupruner
