// Exercises the shared library through its public header only.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "glupruner/glupruner.h"

namespace {

std::string take(char* s) {
    std::string out = s != nullptr ? s : "";
    gp_string_free(s);
    return out;
}

struct Fixture {
    gp_mlp* mlp = nullptr;
    gp_calib_source* src = nullptr;
    gp_calib_stats* stats = nullptr;

    Fixture(std::size_t h = 8, std::size_t n = 16) {
        std::vector<float> gate(h * n), up(h * n), down(n * h);
        for (std::size_t i = 0; i < gate.size(); ++i) {
            gate[i] = static_cast<float>((i * 37 % 23)) / 11.0f - 1.0f;
            up[i] = static_cast<float>((i * 53 % 29)) / 14.0f - 1.0f;
            down[i] = static_cast<float>((i * 17 % 31)) / 15.0f - 1.0f;
        }
        REQUIRE(gp_mlp_new(h, n, gate.data(), up.data(), down.data(), GP_SWIGLU, &mlp) == GP_OK);
        gp_synthetic_spec spec{512, h, 2, 10.0, 3, 100};
        REQUIRE(gp_calib_source_synthetic(&spec, &src) == GP_OK);
        REQUIRE(gp_calibrate(mlp, src, &stats) == GP_OK);
    }
    ~Fixture() {
        gp_calib_stats_free(stats);
        gp_calib_source_free(src);
        gp_mlp_free(mlp);
    }
};

} // namespace

TEST_CASE("version and status names") {
    CHECK(std::strlen(gp_version()) > 0);
    CHECK(std::string(gp_status_name(GP_OK)) == "ok");
    CHECK(std::string(gp_status_name(GP_ERR_SHAPE)).size() > 0);
}

TEST_CASE("null frees are no-ops") {
    gp_tensor_file_free(nullptr);
    gp_calib_source_free(nullptr);
    gp_mlp_free(nullptr);
    gp_calib_stats_free(nullptr);
    gp_prune_result_free(nullptr);
    gp_nm_free(nullptr);
    gp_string_free(nullptr);
}

TEST_CASE("tensor files through the C API") {
    gp_tensor_file* tf = nullptr;
    REQUIRE(gp_tensor_file_new(&tf) == GP_OK);
    const float data[] = {1, 2, 3, 4, 5, 6};
    REQUIRE(gp_tensor_file_put(tf, "b", 2, 3, data) == GP_OK);
    REQUIRE(gp_tensor_file_put(tf, "a", 1, 1, data) == GP_OK);
    REQUIRE(gp_tensor_file_set_metadata(tf, "k", "v") == GP_OK);
    CHECK(gp_tensor_file_count(tf) == 2);
    CHECK(std::string(gp_tensor_file_name(tf, 0)) == "a");
    CHECK(gp_tensor_file_name(tf, 5) == nullptr);

    const auto path = (std::filesystem::temp_directory_path() / "glupruner_capi.safetensors").string();
    REQUIRE(gp_tensor_file_save(tf, path.c_str()) == GP_OK);
    gp_tensor_file* back = nullptr;
    REQUIRE(gp_tensor_file_load(path.c_str(), &back) == GP_OK);
    std::size_t rows = 0, cols = 0;
    const float* got = nullptr;
    REQUIRE(gp_tensor_file_get(back, "b", &rows, &cols, &got) == GP_OK);
    CHECK(rows == 2);
    CHECK(cols == 3);
    CHECK(std::memcmp(got, data, sizeof data) == 0);
    CHECK(gp_tensor_file_get(back, "missing", &rows, &cols, &got) == GP_ERR_NOT_FOUND);
    CHECK(std::string(gp_last_error()).find("missing") != std::string::npos);
    gp_tensor_file_free(back);
    gp_tensor_file_free(tf);
    std::filesystem::remove(path);

    CHECK(gp_tensor_file_load("/nonexistent/x.safetensors", &back) == GP_ERR_IO);
    const std::uint8_t junk[] = {1, 2, 3};
    CHECK(gp_tensor_file_load_memory(junk, sizeof junk, &back) == GP_ERR_FORMAT);
}

TEST_CASE("invalid arguments are reported, not dereferenced") {
    CHECK(gp_tensor_file_new(nullptr) == GP_ERR_INVALID_ARGUMENT);
    gp_mlp* mlp = nullptr;
    CHECK(gp_mlp_new(2, 2, nullptr, nullptr, nullptr, GP_SWIGLU, &mlp) == GP_ERR_INVALID_ARGUMENT);
    CHECK(mlp == nullptr);
    gp_prune_config cfg;
    gp_prune_config_init(&cfg);
    CHECK(gp_prune_mlp(nullptr, nullptr, &cfg, nullptr) == GP_ERR_INVALID_ARGUMENT);
}

TEST_CASE("calibrate, prune, store and report") {
    Fixture fx;
    const double* in_norms = nullptr;
    const double* inter_norms = nullptr;
    std::size_t h = 0, n = 0;
    std::uint64_t tokens = 0;
    REQUIRE(gp_calib_stats_get(fx.stats, &in_norms, &h, &inter_norms, &n, &tokens) == GP_OK);
    CHECK(h == 8);
    CHECK(n == 16);
    CHECK(tokens == 512);

    gp_prune_config cfg;
    gp_prune_config_init(&cfg);
    CHECK(cfg.metric == GP_METRIC_DASS);
    CHECK(cfg.alpha == 0.5);
    cfg.nm_n = 2;
    cfg.nm_m = 4;
    gp_prune_result* result = nullptr;
    REQUIRE(gp_prune_mlp(fx.mlp, fx.stats, &cfg, &result) == GP_OK);

    const std::uint8_t* keep = nullptr;
    std::size_t rows = 0, cols = 0;
    REQUIRE(gp_prune_result_mask(result, GP_GATE, &keep, &rows, &cols) == GP_OK);
    CHECK(rows == 8);
    CHECK(cols == 16);
    std::size_t kept = 0;
    for (std::size_t i = 0; i < rows * cols; ++i) kept += keep[i];
    CHECK(kept == rows * cols / 2);

    char* json = nullptr;
    REQUIRE(gp_prune_result_report_json(result, 1, &json) == GP_OK);
    const auto report = nlohmann::json::parse(take(json));
    CHECK(report["masks"]["gate"]["violations"] == 0);
    CHECK(report["masks"]["down"]["sparsity"] == 0.5);

    REQUIRE(gp_evaluate(fx.mlp, result, fx.src, &json) == GP_OK);
    const auto eval = nlohmann::json::parse(take(json));
    CHECK(eval["relative_error"].get<double>() > 0.0);
    CHECK(eval["token_count"] == 512);

    gp_tensor_file* out = nullptr;
    REQUIRE(gp_tensor_file_new(&out) == GP_OK);
    REQUIRE(gp_prune_result_store(result, out, "g", "u", "d", GP_LAYOUT_LINEAR, 1) == GP_OK);
    const float* data = nullptr;
    REQUIRE(gp_tensor_file_get(out, "d", &rows, &cols, &data) == GP_OK);
    CHECK(rows == 8);
    CHECK(cols == 16);
    REQUIRE(gp_tensor_file_get(out, "g.mask", &rows, &cols, &data) == GP_OK);
    CHECK(rows == 16);
    CHECK(cols == 8);

    // Reload the stored weights in linear layout and check the masks apply.
    gp_mlp* reloaded = nullptr;
    REQUIRE(gp_mlp_from_file(out, "g", "u", "d", GP_SWIGLU, GP_LAYOUT_LINEAR, &reloaded) == GP_OK);
    CHECK(gp_mlp_d_hidden(reloaded) == 8);
    CHECK(gp_mlp_d_int(reloaded) == 16);
    gp_mlp_free(reloaded);

    for (gp_projection p : {GP_GATE, GP_UP, GP_DOWN}) {
        gp_nm_matrix* nm = nullptr;
        REQUIRE(gp_prune_result_encode(result, p, &nm) == GP_OK);
        std::size_t r = 0, c = 0;
        std::uint32_t nn = 0, mm = 0;
        REQUIRE(gp_nm_shape(nm, &r, &c, &nn, &mm) == GP_OK);
        CHECK(r == 8);
        CHECK(c == 16);
        CHECK(nn == 2);
        CHECK(mm == 4);
        std::vector<float> x(16, 1.0f), y(8);
        CHECK(gp_nm_spmv(nm, x.data(), x.size(), y.data(), y.size()) == GP_OK);
        CHECK(gp_nm_spmv(nm, x.data(), 3, y.data(), y.size()) == GP_ERR_DIMENSION);
        REQUIRE(gp_nm_bench(nm, 3, &json) == GP_OK);
        CHECK(nlohmann::json::parse(take(json))["speedup"].get<double>() > 0.0);
        gp_nm_free(nm);
    }
    gp_tensor_file_free(out);
    gp_prune_result_free(result);
}

TEST_CASE("stats store and load round trip") {
    Fixture fx;
    gp_tensor_file* tf = nullptr;
    REQUIRE(gp_tensor_file_new(&tf) == GP_OK);
    REQUIRE(gp_calib_stats_store(fx.stats, tf, "layer0") == GP_OK);
    gp_calib_stats* back = nullptr;
    REQUIRE(gp_calib_stats_load(tf, "layer0", &back) == GP_OK);
    const double *a = nullptr, *b = nullptr;
    std::size_t h = 0, n = 0;
    std::uint64_t tokens = 0;
    REQUIRE(gp_calib_stats_get(back, &a, &h, &b, &n, &tokens) == GP_OK);
    CHECK(h == 8);
    CHECK(tokens == 512);
    CHECK(gp_calib_stats_load(tf, "other", &back) != GP_OK);
    gp_calib_stats_free(back);
    gp_tensor_file_free(tf);
}

TEST_CASE("errors surface with codes") {
    Fixture fx(8, 6);
    gp_prune_config cfg;
    gp_prune_config_init(&cfg);
    cfg.nm_n = 2;
    cfg.nm_m = 4;
    gp_prune_result* result = nullptr;
    CHECK(gp_prune_mlp(fx.mlp, fx.stats, &cfg, &result) == GP_ERR_SHAPE);
    CHECK(std::string(gp_last_error()).find("divisible") != std::string::npos);
    cfg.nm_m = 0;
    cfg.sparsity = 1.5;
    CHECK(gp_prune_mlp(fx.mlp, fx.stats, &cfg, &result) == GP_ERR_CONFIG);
    cfg.sparsity = 0.5;
    cfg.alpha = -1.0;
    CHECK(gp_prune_mlp(fx.mlp, fx.stats, &cfg, &result) == GP_ERR_CONFIG);
}

TEST_CASE("linear wanda through the C API") {
    const float w[] = {1, -4, 2, -3};
    const double norms[] = {1, 1, 1, 1};
    float pruned[4];
    std::uint8_t keep[4];
    REQUIRE(gp_prune_linear_wanda(w, 1, 4, norms, 0.0, 2, 4, pruned, keep) == GP_OK);
    CHECK(keep[0] == 0);
    CHECK(keep[1] == 1);
    CHECK(keep[2] == 0);
    CHECK(keep[3] == 1);
    CHECK(pruned[1] == -4.0f);
}

TEST_CASE("nm matrices save and load") {
    const float w[] = {1, 2, 3, 4, 5, 6, 7, 8};
    const std::uint8_t keep[] = {0, 1, 0, 1, 1, 1, 0, 0};
    gp_nm_matrix* nm = nullptr;
    REQUIRE(gp_nm_encode(w, keep, 2, 4, 2, 4, &nm) == GP_OK);
    const float* values = nullptr;
    std::size_t count = 0;
    REQUIRE(gp_nm_values(nm, &values, &count) == GP_OK);
    CHECK(count == 4);
    const auto path = (std::filesystem::temp_directory_path() / "glupruner_capi.nmidx").string();
    REQUIRE(gp_nm_save_index(nm, path.c_str()) == GP_OK);
    gp_nm_matrix* back = nullptr;
    REQUIRE(gp_nm_load(path.c_str(), values, count, &back) == GP_OK);
    float dense[8];
    REQUIRE(gp_nm_decode(back, dense, 8) == GP_OK);
    const float expected[] = {0, 2, 0, 4, 5, 6, 0, 0};
    CHECK(std::memcmp(dense, expected, sizeof dense) == 0);
    gp_nm_free(back);
    gp_nm_free(nm);
    std::filesystem::remove(path);

    const std::uint8_t bad_keep[] = {1, 1, 1, 0, 1, 1, 0, 0};
    CHECK(gp_nm_encode(w, bad_keep, 2, 4, 2, 4, &nm) == GP_ERR_CONSTRAINT);
}
