// glupruner command line: calibrate, prune, inspect, report.
//
// Exit codes: 0 success, 1 usage error, 2 data or format error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "glupruner/glupruner.h"

using json = nlohmann::json;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LibraryError : std::runtime_error {
    LibraryError(gp_status s, const std::string& what) : std::runtime_error(what), status(s) {}
    gp_status status;
};

void check(gp_status s, const std::string& context) {
    if (s == GP_OK) return;
    throw LibraryError(s, context + ": " + gp_status_name(s) + " error: " + gp_last_error());
}

template <typename T, void (*Free)(T*)>
struct Deleter {
    void operator()(T* p) const { Free(p); }
};
using TensorFilePtr = std::unique_ptr<gp_tensor_file, Deleter<gp_tensor_file, gp_tensor_file_free>>;
using SourcePtr = std::unique_ptr<gp_calib_source, Deleter<gp_calib_source, gp_calib_source_free>>;
using MlpPtr = std::unique_ptr<gp_mlp, Deleter<gp_mlp, gp_mlp_free>>;
using StatsPtr = std::unique_ptr<gp_calib_stats, Deleter<gp_calib_stats, gp_calib_stats_free>>;
using ResultPtr = std::unique_ptr<gp_prune_result, Deleter<gp_prune_result, gp_prune_result_free>>;
using NmPtr = std::unique_ptr<gp_nm_matrix, Deleter<gp_nm_matrix, gp_nm_free>>;

json take_json(char* raw) {
    std::unique_ptr<char, Deleter<char, gp_string_free>> owned(raw);
    return json::parse(owned.get());
}

struct Options {
    std::string weights;
    std::string calib;
    std::string synthetic;
    std::string stats;
    std::string metric = "dass";
    double alpha = 0.5;
    std::optional<double> sparsity;
    std::string nm;
    std::string variant = "swiglu";
    std::string layout = "math";
    std::string manifest;
    std::string gate = "gate";
    std::string up = "up";
    std::string down = "down";
    std::uint64_t seed = 0;
    std::string out;

    // prune
    std::string masks_out;
    std::string report_out;
    std::string export_nm;
    bool with_masks = false;
    // inspect
    std::string dump_scores;
    // report
    std::string sweep_alpha;
    std::size_t bench_iters = 0;
    // calibrate
    std::string emit_batches;
};

struct Layer {
    std::string name;
    std::string gate;
    std::string up;
    std::string down;
    std::string calib_prefix = "x";
};

gp_variant parse_variant(const std::string& s) {
    if (s == "swiglu") return GP_SWIGLU;
    if (s == "geglu") return GP_GEGLU;
    if (s == "reglu") return GP_REGLU;
    throw UsageError("--variant must be one of swiglu, geglu, reglu");
}

gp_metric parse_metric(const std::string& s) {
    if (s == "magnitude") return GP_METRIC_MAGNITUDE;
    if (s == "wanda") return GP_METRIC_WANDA;
    if (s == "dass") return GP_METRIC_DASS;
    throw UsageError("--metric must be one of magnitude, wanda, dass");
}

gp_layout parse_layout(const std::string& s) {
    if (s == "math") return GP_LAYOUT_MATH;
    if (s == "linear") return GP_LAYOUT_LINEAR;
    throw UsageError("--layout must be math or linear");
}

std::uint64_t parse_u64(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        const auto v = std::stoull(s, &used);
        if (used != s.size() || s.front() == '-') throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw UsageError(what + ": '" + s + "' is not a nonnegative integer");
    }
}

double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw UsageError(what + ": '" + s + "' is not a number");
    }
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) parts.push_back(item);
    return parts;
}

void parse_nm(const std::string& s, gp_prune_config& cfg) {
    const auto parts = split(s, ':');
    if (parts.size() != 2 || parts[0].empty() || parts[1].empty()) {
        throw UsageError("--nm expects N:M, e.g. 2:4");
    }
    const auto n = parse_u64(parts[0], "--nm");
    const auto m = parse_u64(parts[1], "--nm");
    if (n == 0 || n >= m || m > 256) throw UsageError("--nm needs 0 < N < M <= 256");
    cfg.nm_n = static_cast<std::uint32_t>(n);
    cfg.nm_m = static_cast<std::uint32_t>(m);
}

gp_prune_config make_config(const Options& o) {
    gp_prune_config cfg;
    gp_prune_config_init(&cfg);
    cfg.variant = parse_variant(o.variant);
    cfg.metric = parse_metric(o.metric);
    cfg.alpha = o.alpha;
    cfg.seed = o.seed;
    if (!o.nm.empty() && o.sparsity) throw UsageError("--sparsity and --nm are mutually exclusive");
    if (!o.nm.empty()) {
        parse_nm(o.nm, cfg);
    } else {
        cfg.sparsity = o.sparsity.value_or(0.5);
        if (!(cfg.sparsity >= 0.0 && cfg.sparsity < 1.0)) throw UsageError("--sparsity must lie in [0, 1)");
    }
    if (!(cfg.alpha >= 0.0)) throw UsageError("--alpha must be nonnegative");
    return cfg;
}

json sparsity_json(const gp_prune_config& cfg) {
    if (cfg.nm_m == 0) return {{"kind", "unstructured"}, {"sparsity", cfg.sparsity}};
    return {{"kind", "nm"}, {"n", cfg.nm_n}, {"m", cfg.nm_m}};
}

std::vector<Layer> load_layers(const Options& o) {
    if (o.manifest.empty()) return {Layer{o.gate, o.gate, o.up, o.down, "x"}};
    std::ifstream in(o.manifest);
    if (!in) throw LibraryError(GP_ERR_IO, "cannot open manifest " + o.manifest);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw LibraryError(GP_ERR_FORMAT, "manifest " + o.manifest + ": " + e.what());
    }
    if (!doc.is_array() || doc.empty()) {
        throw LibraryError(GP_ERR_FORMAT, "manifest must be a non-empty JSON list of {gate, up, down}");
    }
    std::vector<Layer> layers;
    for (const auto& entry : doc) {
        if (!entry.is_object()) throw LibraryError(GP_ERR_FORMAT, "manifest entries must be objects");
        Layer l;
        for (auto [key, field] : {std::pair{"gate", &l.gate}, {"up", &l.up}, {"down", &l.down}}) {
            if (!entry.contains(key) || !entry[key].is_string()) {
                throw LibraryError(GP_ERR_FORMAT, std::string("manifest entry missing string field '") + key + "'");
            }
            *field = entry[key].get<std::string>();
        }
        l.name = entry.value("name", l.gate);
        l.calib_prefix = entry.value("calib_prefix", std::string("x"));
        layers.push_back(std::move(l));
    }
    return layers;
}

TensorFilePtr load_file(const std::string& path, const std::string& flag) {
    if (path.empty()) throw UsageError(flag + " is required");
    gp_tensor_file* tf = nullptr;
    check(gp_tensor_file_load(path.c_str(), &tf), "loading " + path);
    return TensorFilePtr(tf);
}

gp_synthetic_spec parse_synthetic(const std::string& s, std::size_t d_hidden, std::uint64_t seed) {
    gp_synthetic_spec spec{4096, d_hidden, 0, 1.0, seed, 2048};
    for (const auto& item : split(s, ',')) {
        if (item.empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw UsageError("--synthetic expects key=value pairs, got '" + item + "'");
        const std::string key = item.substr(0, eq);
        const std::string value = item.substr(eq + 1);
        if (key == "tokens") {
            spec.tokens = parse_u64(value, "--synthetic tokens");
        } else if (key == "dim") {
            spec.dim = parse_u64(value, "--synthetic dim");
        } else if (key == "outliers") {
            spec.outliers = parse_u64(value, "--synthetic outliers");
        } else if (key == "scale") {
            spec.scale = parse_double(value, "--synthetic scale");
        } else if (key == "batch") {
            spec.batch_tokens = parse_u64(value, "--synthetic batch");
        } else {
            throw UsageError("--synthetic: unknown key '" + key + "'");
        }
    }
    if (spec.tokens == 0) throw UsageError("--synthetic tokens must be positive");
    return spec;
}

json synthetic_json(const gp_synthetic_spec& s) {
    return {{"kind", "synthetic"}, {"tokens", s.tokens}, {"dim", s.dim}, {"outliers", s.outliers},
            {"scale", s.scale},    {"seed", s.seed},     {"batch_tokens", s.batch_tokens}};
}

// Everything one layer needs: weights, calibration batches and stats.
struct LayerContext {
    MlpPtr mlp;
    SourcePtr source; // null when stats came from --stats
    StatsPtr stats;
    json calibration;
};

class Session {
public:
    explicit Session(const Options& o) : o_(o) {
        variant_ = parse_variant(o.variant);
        layout_ = parse_layout(o.layout);
        const int sources = !o.calib.empty() + !o.synthetic.empty() + !o.stats.empty();
        if (sources > 1) throw UsageError("use only one of --calib, --synthetic, --stats");
        weights_ = load_file(o.weights, "--weights");
        if (!o.calib.empty()) calib_ = load_file(o.calib, "--calib");
        if (!o.stats.empty()) stats_file_ = load_file(o.stats, "--stats");
        layers_ = load_layers(o);
    }

    const std::vector<Layer>& layers() const { return layers_; }
    gp_tensor_file* weights() const { return weights_.get(); }
    gp_layout layout() const { return layout_; }

    LayerContext open(const Layer& l, bool need_batches) const {
        LayerContext ctx;
        gp_mlp* mlp = nullptr;
        check(gp_mlp_from_file(weights_.get(), l.gate.c_str(), l.up.c_str(), l.down.c_str(), variant_, layout_, &mlp),
              "layer " + l.name);
        ctx.mlp.reset(mlp);

        if (!o_.stats.empty()) {
            if (need_batches) throw UsageError("this command needs --calib or --synthetic, not --stats");
            gp_calib_stats* st = nullptr;
            check(gp_calib_stats_load(stats_file_.get(), l.name.c_str(), &st), "stats for " + l.name);
            ctx.stats.reset(st);
            ctx.calibration = {{"kind", "stats"}};
            return ctx;
        }

        gp_calib_source* src = nullptr;
        if (calib_) {
            check(gp_calib_source_from_file(calib_.get(), l.calib_prefix.c_str(), &src), "calibration for " + l.name);
            ctx.calibration = {{"kind", "file"}, {"prefix", l.calib_prefix}};
        } else if (!o_.synthetic.empty()) {
            const auto spec = parse_synthetic(o_.synthetic, gp_mlp_d_hidden(mlp), o_.seed);
            check(gp_calib_source_synthetic(&spec, &src), "synthetic calibration");
            ctx.calibration = synthetic_json(spec);
        } else {
            throw UsageError("one of --calib, --synthetic or --stats is required");
        }
        ctx.source.reset(src);

        gp_calib_stats* st = nullptr;
        check(gp_calibrate(mlp, src, &st), "calibrating " + l.name);
        ctx.stats.reset(st);
        char* raw = nullptr;
        check(gp_calib_stats_report_json(st, &raw), "calibration report");
        ctx.calibration["stats"] = take_json(raw);
        return ctx;
    }

private:
    const Options& o_;
    gp_variant variant_;
    gp_layout layout_;
    TensorFilePtr weights_;
    TensorFilePtr calib_;
    TensorFilePtr stats_file_;
    std::vector<Layer> layers_;
};

json base_report(const char* command) { return {{"schema", "glupruner/1"}, {"command", command}}; }

void emit(const json& report, const std::string& path) {
    const std::string text = report.dump(2) + "\n";
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out || !(out << text)) throw LibraryError(GP_ERR_IO, "cannot write report to " + path);
}

ResultPtr run_prune(const LayerContext& ctx, const gp_prune_config& cfg, const std::string& layer) {
    gp_prune_result* r = nullptr;
    check(gp_prune_mlp(ctx.mlp.get(), ctx.stats.get(), &cfg, &r), "pruning " + layer);
    return ResultPtr(r);
}

json result_json(const gp_prune_result* r, bool per_neuron) {
    char* raw = nullptr;
    check(gp_prune_result_report_json(r, per_neuron ? 1 : 0, &raw), "prune report");
    return take_json(raw);
}

json eval_json(const LayerContext& ctx, const gp_prune_result* r) {
    if (!ctx.source) return nullptr;
    char* raw = nullptr;
    check(gp_evaluate(ctx.mlp.get(), r, ctx.source.get(), &raw), "evaluation");
    return take_json(raw);
}

json layer_header(const Layer& l) {
    return {{"name", l.name}, {"gate", l.gate}, {"up", l.up}, {"down", l.down}};
}

int cmd_calibrate(const Options& o) {
    Session s(o);
    json report = base_report("calibrate");
    report["variant"] = o.variant;
    TensorFilePtr stats_out;
    if (!o.out.empty()) {
        gp_tensor_file* tf = nullptr;
        check(gp_tensor_file_new(&tf), "allocating output");
        stats_out.reset(tf);
    }
    TensorFilePtr batches_out;
    if (!o.emit_batches.empty()) {
        gp_tensor_file* tf = nullptr;
        check(gp_tensor_file_new(&tf), "allocating output");
        batches_out.reset(tf);
    }
    json layers = json::array();
    for (const auto& l : s.layers()) {
        const LayerContext ctx = s.open(l, true);
        json entry = layer_header(l);
        entry["calibration"] = ctx.calibration;
        layers.push_back(entry);
        if (stats_out) check(gp_calib_stats_store(ctx.stats.get(), stats_out.get(), l.name.c_str()), "storing stats");
        if (batches_out) {
            check(gp_calib_source_store(ctx.source.get(), batches_out.get(), l.calib_prefix.c_str()), "storing batches");
        }
    }
    report["layers"] = layers;
    if (stats_out) check(gp_tensor_file_save(stats_out.get(), o.out.c_str()), "saving " + o.out);
    if (batches_out) check(gp_tensor_file_save(batches_out.get(), o.emit_batches.c_str()), "saving " + o.emit_batches);
    emit(report, "");
    return 0;
}

void export_compressed(const gp_prune_result* r, const Layer& l, const std::string& prefix, gp_tensor_file* values) {
    const std::pair<gp_projection, const std::string*> items[] = {{GP_GATE, &l.gate}, {GP_UP, &l.up}, {GP_DOWN, &l.down}};
    for (const auto& [p, name] : items) {
        gp_nm_matrix* raw = nullptr;
        check(gp_prune_result_encode(r, p, &raw), "compressing " + *name);
        NmPtr c(raw);
        size_t rows = 0;
        const float* vals = nullptr;
        size_t count = 0;
        check(gp_nm_shape(c.get(), &rows, nullptr, nullptr, nullptr), "nm shape");
        check(gp_nm_values(c.get(), &vals, &count), "nm values");
        check(gp_tensor_file_put(values, (*name + ".nm_values").c_str(), rows, count / rows, vals), "nm values");
        const std::string index_path = prefix + "." + *name + ".nmidx";
        check(gp_nm_save_index(c.get(), index_path.c_str()), "writing " + index_path);
    }
}

int cmd_prune(const Options& o) {
    if (o.out.empty()) throw UsageError("prune needs --out");
    const gp_prune_config cfg = make_config(o);
    if (!o.export_nm.empty() && cfg.nm_m == 0) throw UsageError("--export-nm requires --nm");
    Session s(o);

    gp_tensor_file* raw = nullptr;
    check(gp_tensor_file_new(&raw), "allocating output");
    TensorFilePtr out(raw);
    check(gp_tensor_file_merge(out.get(), s.weights()), "copying weights");
    TensorFilePtr masks;
    if (!o.masks_out.empty()) {
        check(gp_tensor_file_new(&raw), "allocating masks");
        masks.reset(raw);
    }
    TensorFilePtr nm_values;
    if (!o.export_nm.empty()) {
        check(gp_tensor_file_new(&raw), "allocating compressed values");
        nm_values.reset(raw);
    }

    json report = base_report("prune");
    report["config"] = {{"metric", o.metric},
                        {"variant", o.variant},
                        {"layout", o.layout},
                        {"sparsity", sparsity_json(cfg)},
                        {"seed", o.seed}};
    if (cfg.metric == GP_METRIC_DASS) report["config"]["alpha"] = cfg.alpha;
    json layers = json::array();
    for (const auto& l : s.layers()) {
        const LayerContext ctx = s.open(l, false);
        const ResultPtr r = run_prune(ctx, cfg, l.name);
        check(gp_prune_result_store(r.get(), out.get(), l.gate.c_str(), l.up.c_str(), l.down.c_str(), s.layout(),
                                    o.with_masks ? 1 : 0),
              "storing " + l.name);
        if (masks) {
            gp_tensor_file* tmp = nullptr;
            check(gp_tensor_file_new(&tmp), "allocating masks");
            TensorFilePtr layer_masks(tmp);
            check(gp_prune_result_store(r.get(), layer_masks.get(), l.gate.c_str(), l.up.c_str(), l.down.c_str(),
                                        s.layout(), 1),
                  "storing masks");
            // Keep only the .mask tensors.
            for (size_t i = 0; i < gp_tensor_file_count(layer_masks.get()); ++i) {
                const std::string name = gp_tensor_file_name(layer_masks.get(), i);
                if (name.size() < 5 || name.compare(name.size() - 5, 5, ".mask") != 0) continue;
                size_t rows = 0, cols = 0;
                const float* data = nullptr;
                check(gp_tensor_file_get(layer_masks.get(), name.c_str(), &rows, &cols, &data), "mask");
                check(gp_tensor_file_put(masks.get(), name.c_str(), rows, cols, data), "mask");
            }
        }
        if (nm_values) export_compressed(r.get(), l, o.export_nm, nm_values.get());

        json entry = layer_header(l);
        entry["calibration"] = ctx.calibration;
        entry["result"] = result_json(r.get(), false);
        entry["eval"] = eval_json(ctx, r.get());
        layers.push_back(entry);
    }
    report["layers"] = layers;

    check(gp_tensor_file_set_metadata(out.get(), "glupruner.metric", o.metric.c_str()), "metadata");
    check(gp_tensor_file_set_metadata(out.get(), "glupruner.sparsity", sparsity_json(cfg).dump().c_str()), "metadata");
    check(gp_tensor_file_save(out.get(), o.out.c_str()), "saving " + o.out);
    if (masks) check(gp_tensor_file_save(masks.get(), o.masks_out.c_str()), "saving " + o.masks_out);
    if (nm_values) {
        const std::string path = o.export_nm + ".safetensors";
        check(gp_tensor_file_save(nm_values.get(), path.c_str()), "saving " + path);
    }
    emit(report, "");
    if (!o.report_out.empty()) emit(report, o.report_out);
    return 0;
}

int cmd_inspect(const Options& o) {
    const gp_prune_config cfg = make_config(o);
    Session s(o);
    TensorFilePtr scores;
    if (!o.dump_scores.empty()) {
        gp_tensor_file* raw = nullptr;
        check(gp_tensor_file_new(&raw), "allocating scores");
        scores.reset(raw);
    }
    json report = base_report("inspect");
    report["config"] = {{"metric", o.metric}, {"variant", o.variant}, {"sparsity", sparsity_json(cfg)}};
    if (cfg.metric == GP_METRIC_DASS) report["config"]["alpha"] = cfg.alpha;
    json layers = json::array();
    for (const auto& l : s.layers()) {
        const LayerContext ctx = s.open(l, false);
        if (scores) {
            check(gp_scores_store(ctx.mlp.get(), ctx.stats.get(), &cfg, scores.get(), l.gate.c_str(), l.up.c_str(),
                                  l.down.c_str(), s.layout()),
                  "scoring " + l.name);
        }
        const ResultPtr r = run_prune(ctx, cfg, l.name);
        json entry = layer_header(l);
        entry["calibration"] = ctx.calibration;
        entry["result"] = result_json(r.get(), true);
        layers.push_back(entry);
    }
    report["layers"] = layers;
    if (scores) check(gp_tensor_file_save(scores.get(), o.dump_scores.c_str()), "saving " + o.dump_scores);
    emit(report, o.out);
    return 0;
}

int cmd_report(const Options& o) {
    gp_prune_config cfg = make_config(o);
    std::vector<double> alphas;
    if (!o.sweep_alpha.empty()) {
        for (const auto& a : split(o.sweep_alpha, ',')) {
            const double v = parse_double(a, "--sweep-alpha");
            if (!(v >= 0.0)) throw UsageError("--sweep-alpha values must be nonnegative");
            alphas.push_back(v);
        }
        if (alphas.empty()) throw UsageError("--sweep-alpha needs at least one value");
        cfg.metric = GP_METRIC_DASS;
    }
    if (o.bench_iters > 0 && cfg.nm_m == 0) throw UsageError("--bench requires --nm");
    Session s(o);

    json report = base_report("report");
    report["config"] = {{"metric", alphas.empty() ? o.metric : std::string("dass")},
                        {"variant", o.variant},
                        {"sparsity", sparsity_json(cfg)}};
    json layers = json::array();
    for (const auto& l : s.layers()) {
        const LayerContext ctx = s.open(l, true);
        json entry = layer_header(l);
        entry["calibration"] = ctx.calibration;
        const auto run = [&](const gp_prune_config& c) {
            const ResultPtr r = run_prune(ctx, c, l.name);
            json row = {{"eval", eval_json(ctx, r.get())}};
            row["dependency"] = result_json(r.get(), false)["dependency"];
            if (o.bench_iters > 0) {
                json bench = json::object();
                for (const auto& [p, label] : {std::pair{GP_GATE, "gate"}, {GP_UP, "up"}, {GP_DOWN, "down"}}) {
                    gp_nm_matrix* raw = nullptr;
                    check(gp_prune_result_encode(r.get(), p, &raw), "compressing");
                    NmPtr c(raw);
                    char* text = nullptr;
                    check(gp_nm_bench(c.get(), o.bench_iters, &text), "benchmark");
                    bench[label] = take_json(text);
                }
                row["bench"] = bench;
            }
            return row;
        };
        if (alphas.empty()) {
            entry["runs"] = json::array({run(cfg)});
            if (cfg.metric == GP_METRIC_DASS) entry["runs"][0]["alpha"] = cfg.alpha;
        } else {
            json sweep = json::array();
            for (double a : alphas) {
                gp_prune_config c = cfg;
                c.alpha = a;
                json row = run(c);
                row["alpha"] = a;
                sweep.push_back(row);
            }
            entry["runs"] = sweep;
        }
        layers.push_back(entry);
    }
    report["layers"] = layers;
    emit(report, o.out);
    return 0;
}

void add_common(CLI::App* cmd, Options& o, bool pruning) {
    cmd->add_option("--weights", o.weights, "safetensors file holding the MLP weights")->required();
    cmd->add_option("--calib", o.calib, "safetensors file with calibration batches x.<k>");
    cmd->add_option("--synthetic", o.synthetic, "synthetic calibration: tokens=N,dim=D,outliers=K,scale=S");
    cmd->add_option("--variant", o.variant, "GLU variant: swiglu, geglu, reglu")->capture_default_str();
    cmd->add_option("--layout", o.layout, "tensor orientation in files: math or linear")->capture_default_str();
    cmd->add_option("--manifest", o.manifest, "JSON list of {gate, up, down} tensor-name triplets");
    cmd->add_option("--gate", o.gate, "gate tensor name (without --manifest)")->capture_default_str();
    cmd->add_option("--up", o.up, "up tensor name (without --manifest)")->capture_default_str();
    cmd->add_option("--down", o.down, "down tensor name (without --manifest)")->capture_default_str();
    cmd->add_option("--seed", o.seed, "seed for synthetic calibration")->capture_default_str();
    if (!pruning) return;
    cmd->add_option("--stats", o.stats, "precomputed norms written by 'calibrate --out'");
    cmd->add_option("--metric", o.metric, "magnitude, wanda or dass")->capture_default_str();
    cmd->add_option("--alpha", o.alpha, "DaSS group importance strength")->capture_default_str();
    cmd->add_option("--sparsity", o.sparsity, "unstructured sparsity in [0, 1) (default 0.5)");
    cmd->add_option("--nm", o.nm, "N:M sparsity, N zeros per M consecutive weights");
}

} // namespace

int main(int argc, char** argv) {
    Options o;
    CLI::App app{"glupruner: dependency-aware N:M pruning of GLU MLP blocks"};
    app.require_subcommand(1);

    auto* calibrate = app.add_subcommand("calibrate", "accumulate input and intermediate activation norms");
    add_common(calibrate, o, false);
    calibrate->add_option("--out", o.out, "write norms to this safetensors file");
    calibrate->add_option("--emit-batches", o.emit_batches, "write the calibration batches as x.<k> tensors");

    auto* prune = app.add_subcommand("prune", "prune MLP triplets and write the pruned weights");
    add_common(prune, o, true);
    prune->add_option("--out", o.out, "pruned safetensors file")->required();
    prune->add_option("--masks", o.masks_out, "write <name>.mask tensors to this file");
    prune->add_flag("--with-masks", o.with_masks, "also store <name>.mask tensors in --out");
    prune->add_option("--report", o.report_out, "also write the JSON report here");
    prune->add_option("--export-nm", o.export_nm, "write N:M compressed form to PREFIX.safetensors and PREFIX.<name>.nmidx");

    auto* inspect = app.add_subcommand("inspect", "scores, masks and dependency-group diagnostics");
    add_common(inspect, o, true);
    inspect->add_option("--dump-scores", o.dump_scores, "write <name>.scores tensors to this file");
    inspect->add_option("--out", o.out, "write the JSON report here instead of stdout");

    auto* report = app.add_subcommand("report", "reconstruction error, alpha sweeps and kernel benchmarks");
    add_common(report, o, true);
    report->add_option("--sweep-alpha", o.sweep_alpha, "comma-separated alpha values, e.g. 0.25,0.5,0.75,1.0");
    report->add_option("--bench", o.bench_iters, "benchmark the N:M kernel with this many iterations");
    report->add_option("--out", o.out, "write the JSON report here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*calibrate) return cmd_calibrate(o);
        if (*prune) return cmd_prune(o);
        if (*inspect) return cmd_inspect(o);
        if (*report) return cmd_report(o);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const LibraryError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.status == GP_ERR_CONFIG || e.status == GP_ERR_INVALID_ARGUMENT ? kExitUsage : kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
