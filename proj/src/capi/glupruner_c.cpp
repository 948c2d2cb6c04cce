#include "glupruner/glupruner.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <optional>
#include <cstring>
#include <new>
#include <string>
#include <vector>

#include "../core/calibration.hpp"
#include "../core/parallel.hpp"
#include "../core/pipeline.hpp"
#include "../core/report.hpp"
#include "../core/sparse_exec.hpp"
#include "../core/tensor_store.hpp"

using namespace glupruner;

struct gp_tensor_file {
    TensorFile file;
    std::vector<std::string> names; // sorted snapshot for index access
    bool names_dirty = true;
};

struct gp_calib_source {
    std::vector<Tensor2D> batches;
    std::optional<SyntheticSpec> synthetic;
};

struct gp_mlp {
    MlpWeights weights;
};

struct gp_calib_stats {
    CalibStats stats;
};

struct gp_prune_result {
    MlpPruneResult result;
    PruneConfig config;
    Tensor2D down_transposed; // dense copy for encoding the down projection
};

struct gp_nm_matrix {
    NmCompressed compressed;
    Tensor2D dense; // decoded form, kept for the benchmark's dense path
};

namespace {

thread_local std::string g_last_error;

gp_status to_status(ErrorCode code) {
    switch (code) {
    case ErrorCode::Io: return GP_ERR_IO;
    case ErrorCode::Format: return GP_ERR_FORMAT;
    case ErrorCode::UnsupportedDtype: return GP_ERR_UNSUPPORTED_DTYPE;
    case ErrorCode::UnsupportedShape: return GP_ERR_UNSUPPORTED_SHAPE;
    case ErrorCode::Data: return GP_ERR_DATA;
    case ErrorCode::Dimension: return GP_ERR_DIMENSION;
    case ErrorCode::Shape: return GP_ERR_SHAPE;
    case ErrorCode::Config: return GP_ERR_CONFIG;
    case ErrorCode::Constraint: return GP_ERR_CONSTRAINT;
    case ErrorCode::EmptyCalibration: return GP_ERR_EMPTY_CALIBRATION;
    }
    return GP_ERR_INTERNAL;
}

gp_status set_error(gp_status status, std::string message) {
    g_last_error = std::move(message);
    return status;
}

// Runs fn, translating exceptions into a status and the last error message.
template <typename Fn>
gp_status guarded(Fn&& fn) {
    try {
        g_last_error.clear();
        fn();
        return GP_OK;
    } catch (const Error& e) {
        return set_error(to_status(e.code()), e.what());
    } catch (const nlohmann::json::exception& e) {
        return set_error(GP_ERR_FORMAT, e.what());
    } catch (const std::bad_alloc&) {
        return set_error(GP_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return set_error(GP_ERR_INTERNAL, e.what());
    }
}

#define GP_REQUIRE(cond, what)                                                      \
    do {                                                                            \
        if (!(cond)) return set_error(GP_ERR_INVALID_ARGUMENT, what);               \
    } while (0)

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out == nullptr) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

GluVariant to_variant(gp_variant v) {
    switch (v) {
    case GP_SWIGLU: return GluVariant::SwiGLU;
    case GP_GEGLU: return GluVariant::GeGLU;
    case GP_REGLU: return GluVariant::ReGLU;
    }
    fail(ErrorCode::Config, "unknown GLU variant code " + std::to_string(static_cast<int>(v)));
}

PruneMetric to_metric(gp_metric m) {
    switch (m) {
    case GP_METRIC_MAGNITUDE: return PruneMetric::Magnitude;
    case GP_METRIC_WANDA: return PruneMetric::Wanda;
    case GP_METRIC_DASS: return PruneMetric::Dass;
    }
    fail(ErrorCode::Config, "unknown metric code " + std::to_string(static_cast<int>(m)));
}

SparsityKind to_sparsity(double sparsity, std::uint32_t n, std::uint32_t m) {
    if (m == 0) return Unstructured{sparsity};
    return NM{n, m};
}

PruneConfig to_config(const gp_prune_config& c) {
    PruneConfig cfg;
    cfg.variant = to_variant(c.variant);
    cfg.metric = to_metric(c.metric);
    cfg.alpha = c.alpha;
    cfg.sparsity = to_sparsity(c.sparsity, c.nm_n, c.nm_m);
    cfg.seed = c.seed;
    return cfg;
}

Tensor2D copy_matrix(const float* data, std::size_t rows, std::size_t cols) {
    return Tensor2D(rows, cols, std::vector<float>(data, data + rows * cols));
}

Tensor2D oriented(const Tensor2D& t, gp_layout layout) {
    return layout == GP_LAYOUT_LINEAR ? t.transposed() : t;
}

const SparsityMask& mask_of(const gp_prune_result& r, gp_projection p) {
    switch (p) {
    case GP_GATE: return r.result.masks.gate;
    case GP_UP: return r.result.masks.up;
    case GP_DOWN: return r.result.masks.down;
    }
    fail(ErrorCode::Config, "unknown projection code");
}

const Tensor2D& weights_of(const gp_prune_result& r, gp_projection p) {
    switch (p) {
    case GP_GATE: return r.result.pruned.gate;
    case GP_UP: return r.result.pruned.up;
    case GP_DOWN: return r.result.pruned.down;
    }
    fail(ErrorCode::Config, "unknown projection code");
}

// Parses "<prefix>.<k>" and returns k, or nullopt when the name does not match.
std::optional<std::size_t> batch_index(const std::string& name, const std::string& prefix) {
    if (name.size() <= prefix.size() + 1 || name.compare(0, prefix.size(), prefix) != 0 ||
        name[prefix.size()] != '.') {
        return std::nullopt;
    }
    const char* first = name.data() + prefix.size() + 1;
    const char* last = name.data() + name.size();
    std::size_t k = 0;
    const auto [ptr, ec] = std::from_chars(first, last, k);
    if (ec != std::errc{} || ptr != last) return std::nullopt;
    return k;
}

} // namespace

extern "C" {

const char* gp_version(void) { return "1.0.0"; }

const char* gp_last_error(void) { return g_last_error.c_str(); }

const char* gp_status_name(gp_status status) {
    switch (status) {
    case GP_OK: return "ok";
    case GP_ERR_IO: return "io";
    case GP_ERR_FORMAT: return "format";
    case GP_ERR_UNSUPPORTED_DTYPE: return "unsupported-dtype";
    case GP_ERR_UNSUPPORTED_SHAPE: return "unsupported-shape";
    case GP_ERR_DATA: return "data";
    case GP_ERR_DIMENSION: return "dimension";
    case GP_ERR_SHAPE: return "shape";
    case GP_ERR_CONFIG: return "config";
    case GP_ERR_CONSTRAINT: return "constraint";
    case GP_ERR_EMPTY_CALIBRATION: return "empty-calibration";
    case GP_ERR_INVALID_ARGUMENT: return "invalid-argument";
    case GP_ERR_NOT_FOUND: return "not-found";
    case GP_ERR_INTERNAL: return "internal";
    }
    return "unknown";
}

void gp_string_free(char* s) { std::free(s); }

void gp_set_threads(size_t threads) { set_thread_count(threads); }

// ---- tensor files ----

gp_status gp_tensor_file_new(gp_tensor_file** out) {
    GP_REQUIRE(out != nullptr, "out is NULL");
    return guarded([&] { *out = new gp_tensor_file{}; });
}

gp_status gp_tensor_file_load(const char* path, gp_tensor_file** out) {
    GP_REQUIRE(path != nullptr && out != nullptr, "path or out is NULL");
    return guarded([&] { *out = new gp_tensor_file{load_tensor_file(path), {}, true}; });
}

gp_status gp_tensor_file_load_memory(const uint8_t* bytes, size_t len, gp_tensor_file** out) {
    GP_REQUIRE(out != nullptr && (bytes != nullptr || len == 0), "bytes or out is NULL");
    return guarded([&] {
        *out = new gp_tensor_file{parse_tensor_file(std::span<const std::uint8_t>(bytes, len)), {}, true};
    });
}

gp_status gp_tensor_file_save(const gp_tensor_file* tf, const char* path) {
    GP_REQUIRE(tf != nullptr && path != nullptr, "tf or path is NULL");
    return guarded([&] { save_tensor_file(tf->file, path); });
}

void gp_tensor_file_free(gp_tensor_file* tf) { delete tf; }

size_t gp_tensor_file_count(const gp_tensor_file* tf) { return tf == nullptr ? 0 : tf->file.entries.size(); }

const char* gp_tensor_file_name(const gp_tensor_file* tf, size_t index) {
    if (tf == nullptr || index >= tf->file.entries.size()) return nullptr;
    auto* mut = const_cast<gp_tensor_file*>(tf);
    if (mut->names_dirty) {
        mut->names.clear();
        for (const auto& [name, t] : tf->file.entries) mut->names.push_back(name);
        mut->names_dirty = false;
    }
    return mut->names[index].c_str();
}

gp_status gp_tensor_file_get(const gp_tensor_file* tf, const char* name, size_t* rows, size_t* cols,
                             const float** data) {
    GP_REQUIRE(tf != nullptr && name != nullptr, "tf or name is NULL");
    const auto it = tf->file.entries.find(name);
    if (it == tf->file.entries.end()) {
        return set_error(GP_ERR_NOT_FOUND, std::string("tensor '") + name + "' not found");
    }
    if (rows) *rows = it->second.rows();
    if (cols) *cols = it->second.cols();
    if (data) *data = it->second.data().data();
    return GP_OK;
}

gp_status gp_tensor_file_put(gp_tensor_file* tf, const char* name, size_t rows, size_t cols, const float* data) {
    GP_REQUIRE(tf != nullptr && name != nullptr && data != nullptr, "tf, name or data is NULL");
    return guarded([&] {
        Tensor2D t = copy_matrix(data, rows, cols);
        if (!all_finite(t)) fail(ErrorCode::Data, std::string("tensor '") + name + "' contains NaN or Inf");
        tf->file.put(name, std::move(t));
        tf->names_dirty = true;
    });
}

gp_status gp_tensor_file_merge(gp_tensor_file* dst, const gp_tensor_file* src) {
    GP_REQUIRE(dst != nullptr && src != nullptr, "dst or src is NULL");
    return guarded([&] {
        for (const auto& [name, t] : src->file.entries) dst->file.entries.insert_or_assign(name, t);
        for (const auto& [k, v] : src->file.metadata) dst->file.metadata.insert_or_assign(k, v);
        dst->names_dirty = true;
    });
}

gp_status gp_tensor_file_set_metadata(gp_tensor_file* tf, const char* key, const char* value) {
    GP_REQUIRE(tf != nullptr && key != nullptr && value != nullptr, "tf, key or value is NULL");
    return guarded([&] { tf->file.metadata.insert_or_assign(key, value); });
}

// ---- calibration sources ----

gp_status gp_calib_source_from_file(const gp_tensor_file* tf, const char* prefix, gp_calib_source** out) {
    GP_REQUIRE(tf != nullptr && out != nullptr, "tf or out is NULL");
    return guarded([&] {
        const std::string p = prefix != nullptr ? prefix : "x";
        std::vector<std::pair<std::size_t, const Tensor2D*>> found;
        for (const auto& [name, t] : tf->file.entries) {
            if (const auto k = batch_index(name, p)) found.emplace_back(*k, &t);
        }
        std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        auto src = std::make_unique<gp_calib_source>();
        for (const auto& [k, t] : found) src->batches.push_back(*t);
        if (src->batches.empty()) {
            fail(ErrorCode::EmptyCalibration, "no calibration tensors named '" + p + ".<k>'");
        }
        *out = src.release();
    });
}

gp_status gp_calib_source_synthetic(const gp_synthetic_spec* spec, gp_calib_source** out) {
    GP_REQUIRE(spec != nullptr && out != nullptr, "spec or out is NULL");
    return guarded([&] {
        SyntheticSpec s;
        s.tokens = spec->tokens;
        s.dim = spec->dim;
        s.outliers = spec->outliers;
        s.scale = spec->scale;
        s.seed = spec->seed;
        s.batch_tokens = spec->batch_tokens == 0 ? 2048 : spec->batch_tokens;
        auto src = std::make_unique<gp_calib_source>();
        src->batches = synthetic_batches(s);
        src->synthetic = s;
        *out = src.release();
    });
}

void gp_calib_source_free(gp_calib_source* src) { delete src; }

gp_status gp_calib_source_store(const gp_calib_source* src, gp_tensor_file* dst, const char* prefix) {
    GP_REQUIRE(src != nullptr && dst != nullptr, "src or dst is NULL");
    return guarded([&] {
        const std::string p = prefix != nullptr ? prefix : "x";
        for (std::size_t k = 0; k < src->batches.size(); ++k) {
            dst->file.put(p + "." + std::to_string(k), src->batches[k]);
        }
        dst->names_dirty = true;
    });
}

// ---- MLP ----

gp_status gp_mlp_new(size_t d_hidden, size_t d_int, const float* gate, const float* up, const float* down,
                     gp_variant variant, gp_mlp** out) {
    GP_REQUIRE(gate != nullptr && up != nullptr && down != nullptr && out != nullptr, "NULL argument");
    return guarded([&] {
        MlpWeights w{copy_matrix(gate, d_hidden, d_int), copy_matrix(up, d_hidden, d_int),
                     copy_matrix(down, d_int, d_hidden), to_variant(variant)};
        w.validate();
        *out = new gp_mlp{std::move(w)};
    });
}

gp_status gp_mlp_from_file(const gp_tensor_file* tf, const char* gate, const char* up, const char* down,
                           gp_variant variant, gp_layout layout, gp_mlp** out) {
    GP_REQUIRE(tf != nullptr && gate != nullptr && up != nullptr && down != nullptr && out != nullptr,
               "NULL argument");
    return guarded([&] {
        const auto fetch = [&](const char* name) -> const Tensor2D& {
            const auto it = tf->file.entries.find(name);
            if (it == tf->file.entries.end()) fail(ErrorCode::Format, std::string("tensor '") + name + "' not found");
            return it->second;
        };
        MlpWeights w{oriented(fetch(gate), layout), oriented(fetch(up), layout), oriented(fetch(down), layout),
                     to_variant(variant)};
        w.validate();
        *out = new gp_mlp{std::move(w)};
    });
}

void gp_mlp_free(gp_mlp* mlp) { delete mlp; }

size_t gp_mlp_d_hidden(const gp_mlp* mlp) { return mlp == nullptr ? 0 : mlp->weights.d_hidden(); }

size_t gp_mlp_d_int(const gp_mlp* mlp) { return mlp == nullptr ? 0 : mlp->weights.d_int(); }

gp_status gp_mlp_forward(const gp_mlp* mlp, const float* x, size_t tokens, float* y, float* z) {
    GP_REQUIRE(mlp != nullptr && (x != nullptr || tokens == 0), "mlp or x is NULL");
    return guarded([&] {
        const auto out = mlp_forward(mlp->weights, copy_matrix(x, tokens, mlp->weights.d_hidden()));
        if (y) std::copy(out.y.data().begin(), out.y.data().end(), y);
        if (z) std::copy(out.z.data().begin(), out.z.data().end(), z);
    });
}

// ---- calibration statistics ----

gp_status gp_calibrate(const gp_mlp* mlp, const gp_calib_source* src, gp_calib_stats** out) {
    GP_REQUIRE(mlp != nullptr && src != nullptr && out != nullptr, "NULL argument");
    return guarded([&] { *out = new gp_calib_stats{calibrate_mlp(mlp->weights, src->batches)}; });
}

gp_status gp_calib_stats_new(const double* input_norms, size_t d_hidden, const double* intermediate_norms,
                             size_t d_int, uint64_t token_count, gp_calib_stats** out) {
    GP_REQUIRE(input_norms != nullptr && intermediate_norms != nullptr && out != nullptr, "NULL argument");
    return guarded([&] {
        CalibStats s{std::vector<double>(input_norms, input_norms + d_hidden),
                     std::vector<double>(intermediate_norms, intermediate_norms + d_int), token_count};
        for (const auto* v : {&s.input_norms, &s.intermediate_norms}) {
            for (double x : *v) {
                if (!(x >= 0.0) || !std::isfinite(x)) fail(ErrorCode::Data, "norms must be finite and nonnegative");
            }
        }
        *out = new gp_calib_stats{std::move(s)};
    });
}

void gp_calib_stats_free(gp_calib_stats* stats) { delete stats; }

gp_status gp_calib_stats_get(const gp_calib_stats* stats, const double** input_norms, size_t* d_hidden,
                             const double** intermediate_norms, size_t* d_int, uint64_t* token_count) {
    GP_REQUIRE(stats != nullptr, "stats is NULL");
    if (input_norms) *input_norms = stats->stats.input_norms.data();
    if (d_hidden) *d_hidden = stats->stats.input_norms.size();
    if (intermediate_norms) *intermediate_norms = stats->stats.intermediate_norms.data();
    if (d_int) *d_int = stats->stats.intermediate_norms.size();
    if (token_count) *token_count = stats->stats.token_count;
    return GP_OK;
}

gp_status gp_calib_stats_store(const gp_calib_stats* stats, gp_tensor_file* dst, const char* label) {
    GP_REQUIRE(stats != nullptr && dst != nullptr && label != nullptr, "NULL argument");
    return guarded([&] {
        const auto as_row = [](const std::vector<double>& v) {
            return Tensor2D(1, v.size(), std::vector<float>(v.begin(), v.end()));
        };
        const std::string l = label;
        dst->file.put(l + ".input_norms", as_row(stats->stats.input_norms));
        dst->file.put(l + ".intermediate_norms", as_row(stats->stats.intermediate_norms));
        dst->file.metadata.insert_or_assign(l + ".token_count", std::to_string(stats->stats.token_count));
        dst->names_dirty = true;
    });
}

gp_status gp_calib_stats_load(const gp_tensor_file* tf, const char* label, gp_calib_stats** out) {
    GP_REQUIRE(tf != nullptr && label != nullptr && out != nullptr, "NULL argument");
    return guarded([&] {
        const std::string l = label;
        const auto as_vec = [](const Tensor2D& t) {
            return std::vector<double>(t.data().begin(), t.data().end());
        };
        CalibStats s{as_vec(tf->file.get(l + ".input_norms")), as_vec(tf->file.get(l + ".intermediate_norms")), 0};
        if (const auto it = tf->file.metadata.find(l + ".token_count"); it != tf->file.metadata.end()) {
            s.token_count = std::stoull(it->second);
        }
        *out = new gp_calib_stats{std::move(s)};
    });
}

gp_status gp_calib_stats_report_json(const gp_calib_stats* stats, char** json) {
    GP_REQUIRE(stats != nullptr && json != nullptr, "NULL argument");
    return guarded([&] { *json = dup_string(calib_json(stats->stats).dump()); });
}

// ---- pruning ----

void gp_prune_config_init(gp_prune_config* cfg) {
    if (cfg == nullptr) return;
    cfg->variant = GP_SWIGLU;
    cfg->metric = GP_METRIC_DASS;
    cfg->alpha = kDefaultAlpha;
    cfg->sparsity = 0.5;
    cfg->nm_n = 0;
    cfg->nm_m = 0;
    cfg->seed = 0;
}

gp_status gp_prune_mlp(const gp_mlp* mlp, const gp_calib_stats* stats, const gp_prune_config* cfg,
                       gp_prune_result** out) {
    GP_REQUIRE(mlp != nullptr && stats != nullptr && cfg != nullptr && out != nullptr, "NULL argument");
    return guarded([&] {
        PruneConfig config = to_config(*cfg);
        // The MLP handle carries the variant it was loaded with.
        config.variant = mlp->weights.variant;
        auto result = prune_mlp(mlp->weights, stats->stats, config);
        Tensor2D down_t = result.pruned.down.transposed();
        *out = new gp_prune_result{std::move(result), config, std::move(down_t)};
    });
}

void gp_prune_result_free(gp_prune_result* result) { delete result; }

gp_status gp_prune_result_mask(const gp_prune_result* result, gp_projection projection, const uint8_t** keep,
                               size_t* rows, size_t* cols) {
    GP_REQUIRE(result != nullptr, "result is NULL");
    return guarded([&] {
        const auto& m = mask_of(*result, projection);
        if (keep) *keep = m.keep.data().data();
        if (rows) *rows = m.rows();
        if (cols) *cols = m.cols();
    });
}

gp_status gp_prune_result_weights(const gp_prune_result* result, gp_projection projection, const float** data,
                                  size_t* rows, size_t* cols) {
    GP_REQUIRE(result != nullptr, "result is NULL");
    return guarded([&] {
        const auto& w = weights_of(*result, projection);
        if (data) *data = w.data().data();
        if (rows) *rows = w.rows();
        if (cols) *cols = w.cols();
    });
}

gp_status gp_prune_result_store(const gp_prune_result* result, gp_tensor_file* dst, const char* gate,
                                const char* up, const char* down, gp_layout layout, int with_masks) {
    GP_REQUIRE(result != nullptr && dst != nullptr && gate != nullptr && up != nullptr && down != nullptr,
               "NULL argument");
    return guarded([&] {
        const std::pair<gp_projection, const char*> items[] = {{GP_GATE, gate}, {GP_UP, up}, {GP_DOWN, down}};
        for (const auto& [p, name] : items) {
            dst->file.put(name, oriented(weights_of(*result, p), layout));
            if (with_masks != 0) {
                dst->file.put(std::string(name) + ".mask", oriented(mask_to_tensor(mask_of(*result, p)), layout));
            }
        }
        dst->names_dirty = true;
    });
}

gp_status gp_prune_result_report_json(const gp_prune_result* result, int per_neuron, char** json) {
    GP_REQUIRE(result != nullptr && json != nullptr, "NULL argument");
    return guarded([&] {
        const auto& masks = result->result.masks;
        nlohmann::json j = {{"config", config_json(result->config)},
                            {"masks", masks_json(masks)},
                            {"dependency", dependency_json(dependency_report(masks), per_neuron != 0)}};
        *json = dup_string(j.dump());
    });
}

gp_status gp_evaluate(const gp_mlp* dense, const gp_prune_result* result, const gp_calib_source* src, char** json) {
    GP_REQUIRE(dense != nullptr && result != nullptr && src != nullptr && json != nullptr, "NULL argument");
    return guarded([&] {
        const auto r = eval_reconstruction(dense->weights, result->result.pruned, src->batches);
        *json = dup_string(eval_json(r).dump());
    });
}

gp_status gp_scores_store(const gp_mlp* mlp, const gp_calib_stats* stats, const gp_prune_config* cfg,
                          gp_tensor_file* dst, const char* gate, const char* up, const char* down,
                          gp_layout layout) {
    GP_REQUIRE(mlp != nullptr && stats != nullptr && cfg != nullptr && dst != nullptr && gate != nullptr &&
                   up != nullptr && down != nullptr,
               "NULL argument");
    return guarded([&] {
        const MlpScores s = score_mlp(mlp->weights, stats->stats, to_config(*cfg));
        const auto as_f32 = [&](const ImportanceMatrix& m) {
            std::vector<float> f(m.scores.data().begin(), m.scores.data().end());
            return oriented(Tensor2D(m.scores.rows(), m.scores.cols(), std::move(f)), layout);
        };
        dst->file.put(std::string(gate) + ".scores", as_f32(s.gate));
        dst->file.put(std::string(up) + ".scores", as_f32(s.up));
        dst->file.put(std::string(down) + ".scores", as_f32(s.down));
        dst->names_dirty = true;
    });
}

gp_status gp_prune_linear_wanda(const float* w, size_t d_out, size_t d_in, const double* input_norms,
                                double sparsity, uint32_t nm_n, uint32_t nm_m, float* pruned, uint8_t* keep) {
    GP_REQUIRE(w != nullptr && input_norms != nullptr, "w or input_norms is NULL");
    return guarded([&] {
        const auto r = prune_linear_wanda(copy_matrix(w, d_out, d_in),
                                          std::span<const double>(input_norms, d_in),
                                          to_sparsity(sparsity, nm_n, nm_m));
        if (pruned) std::copy(r.pruned.data().begin(), r.pruned.data().end(), pruned);
        if (keep) std::copy(r.mask.keep.data().begin(), r.mask.keep.data().end(), keep);
    });
}

// ---- N:M compressed execution ----

gp_status gp_nm_encode(const float* w, const uint8_t* keep, size_t rows, size_t cols, uint32_t n, uint32_t m,
                       gp_nm_matrix** out) {
    GP_REQUIRE(w != nullptr && keep != nullptr && out != nullptr, "NULL argument");
    return guarded([&] {
        KeepMatrix k(rows, cols, std::vector<std::uint8_t>(keep, keep + rows * cols));
        for (auto& v : k.data()) v = v != 0 ? 1 : 0;
        SparsityMask mask{std::move(k), SparsitySpec{NM{n, m}, GroupAxis::PerRow}};
        const Tensor2D dense = copy_matrix(w, rows, cols);
        NmCompressed c = encode(dense, mask);
        *out = new gp_nm_matrix{std::move(c), apply_mask(dense, mask)};
    });
}

gp_status gp_prune_result_encode(const gp_prune_result* result, gp_projection projection, gp_nm_matrix** out) {
    GP_REQUIRE(result != nullptr && out != nullptr, "NULL argument");
    return guarded([&] {
        const SparsityMask& m = mask_of(*result, projection);
        const bool flip_down = projection == GP_DOWN;
        const SparsityMask mask = flip_down ? transposed(m) : m;
        const Tensor2D& w = flip_down ? result->down_transposed : weights_of(*result, projection);
        NmCompressed c = encode(w, mask);
        *out = new gp_nm_matrix{std::move(c), w};
    });
}

void gp_nm_free(gp_nm_matrix* c) { delete c; }

gp_status gp_nm_shape(const gp_nm_matrix* c, size_t* rows, size_t* cols, uint32_t* n, uint32_t* m) {
    GP_REQUIRE(c != nullptr, "c is NULL");
    if (rows) *rows = c->compressed.rows;
    if (cols) *cols = c->compressed.cols;
    if (n) *n = static_cast<uint32_t>(c->compressed.n);
    if (m) *m = static_cast<uint32_t>(c->compressed.m);
    return GP_OK;
}

gp_status gp_nm_values(const gp_nm_matrix* c, const float** values, size_t* count) {
    GP_REQUIRE(c != nullptr, "c is NULL");
    if (values) *values = c->compressed.values.data();
    if (count) *count = c->compressed.values.size();
    return GP_OK;
}

gp_status gp_nm_decode(const gp_nm_matrix* c, float* out, size_t len) {
    GP_REQUIRE(c != nullptr && out != nullptr, "NULL argument");
    return guarded([&] {
        if (len != c->compressed.rows * c->compressed.cols) {
            fail(ErrorCode::Dimension, "decode buffer length does not match rows * cols");
        }
        const Tensor2D d = decode(c->compressed);
        std::copy(d.data().begin(), d.data().end(), out);
    });
}

gp_status gp_nm_spmv(const gp_nm_matrix* c, const float* x, size_t x_len, float* y, size_t y_len) {
    GP_REQUIRE(c != nullptr && x != nullptr && y != nullptr, "NULL argument");
    return guarded([&] {
        if (y_len != c->compressed.rows) {
            fail(ErrorCode::Dimension, "spmv: y has length " + std::to_string(y_len) + ", expected " +
                                           std::to_string(c->compressed.rows));
        }
        const auto r = spmv(c->compressed, std::span<const float>(x, x_len));
        std::copy(r.begin(), r.end(), y);
    });
}

gp_status gp_nm_bench(const gp_nm_matrix* c, size_t iters, char** json) {
    GP_REQUIRE(c != nullptr && json != nullptr, "NULL argument");
    return guarded([&] { *json = dup_string(bench_json(bench(c->compressed, c->dense, iters)).dump()); });
}

gp_status gp_nm_save_index(const gp_nm_matrix* c, const char* path) {
    GP_REQUIRE(c != nullptr && path != nullptr, "NULL argument");
    return guarded([&] { save_nmidx(c->compressed, path); });
}

gp_status gp_nm_load(const char* index_path, const float* values, size_t count, gp_nm_matrix** out) {
    GP_REQUIRE(index_path != nullptr && (values != nullptr || count == 0) && out != nullptr, "NULL argument");
    return guarded([&] {
        NmCompressed c = load_nm(index_path, std::span<const float>(values, count));
        Tensor2D dense = decode(c);
        *out = new gp_nm_matrix{std::move(c), std::move(dense)};
    });
}

} // extern "C"
