#include <doctest.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <random>

#include <json.hpp>

#include "support/oracles.hpp"
#include "tensor_store.hpp"

using namespace glupruner;

namespace {

std::vector<std::uint8_t> raw_file(const std::string& header, const std::vector<std::uint8_t>& payload) {
    std::vector<std::uint8_t> out;
    const std::uint64_t len = header.size();
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(len >> (8 * i)));
    out.insert(out.end(), header.begin(), header.end());
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
}

std::vector<std::uint8_t> f32_bytes(std::initializer_list<float> values) {
    std::vector<std::uint8_t> out;
    for (float v : values) {
        std::uint8_t b[4];
        std::memcpy(b, &v, 4);
        out.insert(out.end(), b, b + 4);
    }
    return out;
}

ErrorCode code_of(std::span<const std::uint8_t> bytes) {
    try {
        parse_tensor_file(bytes);
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::Io;
}

std::uint64_t header_len(const std::vector<std::uint8_t>& bytes) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | bytes[static_cast<std::size_t>(i)];
    return v;
}

} // namespace

TEST_CASE("save then load reproduces a 2x2 tensor") {
    TensorFile tf;
    tf.put("w", Tensor2D(2, 2, {1, 2, 3, 4}));
    const auto bytes = serialize_tensor_file(tf);
    const TensorFile back = parse_tensor_file(bytes);
    CHECK(back == tf);
    CHECK(back.get("w") == Tensor2D(2, 2, {1, 2, 3, 4}));
}

TEST_CASE("header declares F32 dtype and the saved shape") {
    TensorFile tf;
    tf.put("w", Tensor2D(2, 2, {1, 2, 3, 4}));
    const auto bytes = serialize_tensor_file(tf);
    const std::uint64_t len = header_len(bytes);
    REQUIRE(len + 8 <= bytes.size());
    const auto header = nlohmann::json::parse(bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(len));
    CHECK(header["w"]["dtype"] == "F32");
    CHECK(header["w"]["shape"] == nlohmann::json::array({2, 2}));
    CHECK(header["w"]["data_offsets"] == nlohmann::json::array({0, 16}));
    // Header length field covers the JSON text exactly, payload follows.
    CHECK(bytes.size() == 8 + len + 16);
}

TEST_CASE("a single zero is stored as four zero payload bytes") {
    TensorFile tf;
    tf.put("w", Tensor2D(1, 1, {0.0f}));
    const auto bytes = serialize_tensor_file(tf);
    const std::uint64_t len = header_len(bytes);
    REQUIRE(bytes.size() == 8 + len + 4);
    for (std::size_t i = 8 + len; i < bytes.size(); ++i) CHECK(bytes[i] == 0);
}

TEST_CASE("round trip of 100 random tensors is bit exact") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<std::size_t> dim(1, 9);
    std::uniform_int_distribution<std::uint32_t> bits;
    TensorFile tf;
    for (int i = 0; i < 100; ++i) {
        Tensor2D t(dim(rng), dim(rng));
        for (float& v : t.data()) {
            // Random finite bit patterns, including subnormals and -0.
            float f;
            do {
                f = std::bit_cast<float>(bits(rng));
            } while (!std::isfinite(f));
            v = f;
        }
        tf.put("t" + std::to_string(i), std::move(t));
    }
    tf.metadata["origin"] = "unit-test";
    const TensorFile back = parse_tensor_file(serialize_tensor_file(tf));
    REQUIRE(back.entries.size() == tf.entries.size());
    for (const auto& [name, t] : tf.entries) CHECK(bit_equal(back.get(name), t));
    CHECK(back.metadata == tf.metadata);
}

TEST_CASE("files on disk round trip") {
    const auto path = std::filesystem::temp_directory_path() / "glupruner_store_test.safetensors";
    TensorFile tf;
    tf.put("a", Tensor2D(1, 3, {1.5f, -2.0f, 0.25f}));
    save_tensor_file(tf, path);
    CHECK(load_tensor_file(path) == tf);
    std::filesystem::remove(path);
}

TEST_CASE("missing file is an io error") {
    CHECK_THROWS_AS(load_tensor_file("/nonexistent/dir/x.safetensors"), Error);
}

TEST_CASE("malformed containers are rejected with format errors") {
    CHECK(code_of({}) == ErrorCode::Format);
    const std::vector<std::uint8_t> short_file{1, 2, 3};
    CHECK(code_of(short_file) == ErrorCode::Format);
    CHECK(code_of(raw_file("{not json", {})) == ErrorCode::Format);
    CHECK(code_of(raw_file("[]", {})) == ErrorCode::Format);

    // Header length larger than the file.
    auto big = raw_file("{}", {});
    big[0] = 0xFF;
    big[1] = 0xFF;
    CHECK(code_of(big) == ErrorCode::Format);

    const auto payload = f32_bytes({1, 2, 3, 4});
    CHECK(code_of(raw_file(R"({"w":{"dtype":"F32","shape":[2,2],"data_offsets":[0,32]}})", payload)) ==
          ErrorCode::Format);
    CHECK(code_of(raw_file(R"({"w":{"dtype":"F32","shape":[2,2],"data_offsets":[0,12]}})", payload)) ==
          ErrorCode::Format);
    CHECK(code_of(raw_file(R"({"a":{"dtype":"F32","shape":[1,3],"data_offsets":[0,12]},)"
                           R"("b":{"dtype":"F32","shape":[1,2],"data_offsets":[8,16]}})",
                           payload)) == ErrorCode::Format);
    CHECK(code_of(raw_file(R"({"w":{"dtype":"F32","shape":[4]}})", payload)) == ErrorCode::Format);
}

TEST_CASE("3-D tensors are an unsupported shape") {
    const auto payload = f32_bytes(std::initializer_list<float>(
        {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20, 21, 22, 23}));
    CHECK(code_of(raw_file(R"({"w":{"dtype":"F32","shape":[2,3,4],"data_offsets":[0,96]}})", payload)) ==
          ErrorCode::UnsupportedShape);
}

TEST_CASE("integer dtypes are unsupported and the error names the tensor") {
    const auto payload = f32_bytes({1, 2});
    try {
        parse_tensor_file(raw_file(R"({"counts":{"dtype":"I32","shape":[2],"data_offsets":[0,8]}})", payload));
        FAIL("expected unsupported dtype");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnsupportedDtype);
        CHECK(std::string(e.what()).find("counts") != std::string::npos);
    }
}

TEST_CASE("NaN payload is a data error naming the tensor") {
    const auto payload = f32_bytes({1.0f, std::numeric_limits<float>::quiet_NaN()});
    try {
        parse_tensor_file(raw_file(R"({"bad":{"dtype":"F32","shape":[1,2],"data_offsets":[0,8]}})", payload));
        FAIL("expected data error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Data);
        CHECK(std::string(e.what()).find("bad") != std::string::npos);
    }
}

TEST_CASE("1-D tensors load as a single row") {
    const auto tf = parse_tensor_file(
        raw_file(R"({"v":{"dtype":"F32","shape":[3],"data_offsets":[0,12]}})", f32_bytes({1, 2, 3})));
    CHECK(tf.get("v") == Tensor2D(1, 3, {1, 2, 3}));
}

TEST_CASE("F16 and BF16 payloads widen to f32") {
    // F16: 1.0 = 0x3C00, -2.0 = 0xC000, 65504 = 0x7BFF, smallest subnormal 0x0001.
    // BF16: 1.0 = 0x3F80, -0.5 = 0xBF00.
    std::vector<std::uint8_t> payload{0x00, 0x3C, 0x00, 0xC0, 0xFF, 0x7B, 0x01, 0x00, 0x80, 0x3F, 0x00, 0xBF};
    const auto tf = parse_tensor_file(raw_file(R"({"h":{"dtype":"F16","shape":[2,2],"data_offsets":[0,8]},)"
                                               R"("b":{"dtype":"BF16","shape":[2],"data_offsets":[8,12]}})",
                                               payload));
    const auto& h = tf.get("h");
    CHECK(h(0, 0) == 1.0f);
    CHECK(h(0, 1) == -2.0f);
    CHECK(h(1, 0) == 65504.0f);
    CHECK(h(1, 1) == std::ldexp(1.0f, -24));
    CHECK(tf.get("b") == Tensor2D(1, 2, {1.0f, -0.5f}));
}

TEST_CASE("metadata must map strings to strings") {
    CHECK(code_of(raw_file(R"({"__metadata__":{"k":3}})", {})) == ErrorCode::Format);
    const auto tf = parse_tensor_file(raw_file(R"({"__metadata__":{"k":"v"}})", {}));
    CHECK(tf.metadata.at("k") == "v");
    CHECK(tf.entries.empty());
}

TEST_CASE("truncated and bit-flipped files never crash") {
    std::mt19937_64 rng(99);
    TensorFile tf;
    tf.put("gate", testutil::random_tensor(rng, 4, 8));
    tf.put("up", testutil::random_tensor(rng, 4, 8));
    const auto good = serialize_tensor_file(tf);
    for (std::size_t cut = 0; cut < good.size(); cut += 7) {
        const std::span<const std::uint8_t> prefix(good.data(), cut);
        try {
            parse_tensor_file(prefix);
        } catch (const Error&) {
        }
    }
    std::uniform_int_distribution<std::size_t> pos(0, good.size() - 1);
    for (int trial = 0; trial < 500; ++trial) {
        auto bad = good;
        bad[pos(rng)] ^= static_cast<std::uint8_t>(1u << (trial % 8));
        try {
            parse_tensor_file(bad);
        } catch (const Error&) {
        }
    }
}
