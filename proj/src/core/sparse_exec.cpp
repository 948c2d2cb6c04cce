#include "sparse_exec.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <chrono>
#include <cstring>
#include <random>
#include <string>

#include "tensor_store.hpp"

namespace glupruner {

namespace {

constexpr std::array<std::uint8_t, 4> kNmixMagic{'N', 'M', 'I', 'X'};
constexpr std::size_t kNmixHeaderBytes = 4 + 4 + 4 + 8 + 8;

std::size_t code_bytes(std::size_t count, unsigned bits) { return (count * bits + 7) / 8; }

class CodeWriter {
public:
    CodeWriter(std::vector<std::uint8_t>& out, unsigned bits) : out_(out), bits_(bits) {}

    void push(std::size_t code) {
        for (unsigned b = 0; b < bits_; ++b, ++pos_) {
            if (pos_ % 8 == 0) out_.push_back(0);
            if ((code >> b) & 1u) out_.back() |= static_cast<std::uint8_t>(1u << (pos_ % 8));
        }
    }

private:
    std::vector<std::uint8_t>& out_;
    unsigned bits_;
    std::size_t pos_ = 0;
};

inline std::size_t read_code(const std::uint8_t* codes, std::size_t n_bytes, std::size_t k, unsigned bits) {
    const std::size_t bit = k * bits;
    const std::size_t byte = bit / 8;
    unsigned window = codes[byte];
    if (byte + 1 < n_bytes) window |= static_cast<unsigned>(codes[byte + 1]) << 8;
    return (window >> (bit % 8)) & ((1u << bits) - 1u);
}

void append_le(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t read_le(std::span<const std::uint8_t> bytes, std::size_t offset, int width) {
    std::uint64_t v = 0;
    for (int i = width - 1; i >= 0; --i) v = (v << 8) | bytes[offset + static_cast<std::size_t>(i)];
    return v;
}

void check_geometry(std::size_t n, std::size_t m, std::size_t cols) {
    if (m < 2 || m > 256 || n == 0 || n >= m) {
        fail(ErrorCode::Format, "invalid N:M pattern " + std::to_string(n) + ":" + std::to_string(m));
    }
    if (cols % m != 0) {
        fail(ErrorCode::Format, "column count " + std::to_string(cols) + " is not a multiple of " +
                                    std::to_string(m));
    }
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t mid = v.size() / 2;
    return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

} // namespace

unsigned index_bits(std::size_t m) {
    if (m <= 4) return 2;
    if (m <= 8) return 3;
    return static_cast<unsigned>(std::bit_width(m - 1));
}

std::size_t NmCompressed::code(std::size_t k) const {
    return read_code(codes.data(), codes.size(), k, index_bits(m));
}

NmCompressed encode(const Tensor2D& w, const SparsityMask& mask) {
    const auto* nm = std::get_if<NM>(&mask.spec.kind);
    if (nm == nullptr || mask.spec.axis != GroupAxis::PerRow) {
        fail(ErrorCode::Constraint, "encode needs an N:M mask with windows along rows (per-row); got " +
                                        mask.spec.describe());
    }
    if (w.rows() != mask.rows() || w.cols() != mask.cols()) {
        fail(ErrorCode::Dimension, "mask " + shape_string(mask.keep) + " does not match weight " + shape_string(w));
    }
    if (nm->m > 256 || nm->n == 0 || nm->n >= nm->m) {
        fail(ErrorCode::Constraint, "unsupported N:M pattern " + mask.spec.describe());
    }
    if (const std::size_t v = count_violations(mask); v != 0) {
        fail(ErrorCode::Constraint, "mask violates " + mask.spec.describe() + " in " + std::to_string(v) +
                                        " window(s)");
    }

    NmCompressed c{nm->n, nm->m, w.rows(), w.cols(), {}, {}};
    c.values.reserve(c.value_count());
    CodeWriter writer(c.codes, index_bits(c.m));
    for (std::size_t r = 0; r < c.rows; ++r) {
        const auto row = w.row(r);
        for (std::size_t w0 = 0; w0 < c.cols; w0 += c.m) {
            for (std::size_t k = 0; k < c.m; ++k) {
                if (!mask.kept(r, w0 + k)) continue;
                c.values.push_back(row[w0 + k]);
                writer.push(k);
            }
        }
    }
    return c;
}

void validate(const NmCompressed& c) {
    check_geometry(c.n, c.m, c.cols);
    if (c.values.size() != c.value_count()) {
        fail(ErrorCode::Format, "value payload has " + std::to_string(c.values.size()) + " entries, expected " +
                                    std::to_string(c.value_count()));
    }
    const unsigned bits = index_bits(c.m);
    if (c.codes.size() != code_bytes(c.value_count(), bits)) {
        fail(ErrorCode::Format, "index payload has " + std::to_string(c.codes.size()) + " bytes, expected " +
                                    std::to_string(code_bytes(c.value_count(), bits)));
    }
    const std::size_t per_window = c.kept_per_window();
    for (std::size_t k = 0; k < c.value_count(); ++k) {
        const std::size_t code = c.code(k);
        if (code >= c.m) fail(ErrorCode::Format, "index code " + std::to_string(code) + " out of range");
        if (k % per_window != 0 && code <= c.code(k - 1)) {
            fail(ErrorCode::Format, "index codes not strictly increasing within a window");
        }
    }
}

Tensor2D decode(const NmCompressed& c) {
    Tensor2D out(c.rows, c.cols);
    const std::size_t per_window = c.kept_per_window();
    std::size_t k = 0;
    for (std::size_t r = 0; r < c.rows; ++r) {
        auto row = out.row(r);
        for (std::size_t w0 = 0; w0 < c.cols; w0 += c.m) {
            for (std::size_t i = 0; i < per_window; ++i, ++k) row[w0 + c.code(k)] = c.values[k];
        }
    }
    return out;
}

std::vector<float> spmv(const NmCompressed& c, std::span<const float> x) {
    if (x.size() != c.cols) {
        fail(ErrorCode::Dimension, "spmv: x has length " + std::to_string(x.size()) + ", expected " +
                                       std::to_string(c.cols));
    }
    std::vector<float> y(c.rows);
    const unsigned bits = index_bits(c.m);
    const std::size_t per_window = c.kept_per_window();
    const std::uint8_t* codes = c.codes.data();
    const std::size_t n_bytes = c.codes.size();
    const float* values = c.values.data();
    std::size_t k = 0;
    for (std::size_t r = 0; r < c.rows; ++r) {
        double acc = 0.0;
        for (std::size_t w0 = 0; w0 < c.cols; w0 += c.m) {
            const float* xw = x.data() + w0;
            for (std::size_t i = 0; i < per_window; ++i, ++k) {
                acc += static_cast<double>(values[k]) * xw[read_code(codes, n_bytes, k, bits)];
            }
        }
        y[r] = static_cast<float>(acc);
    }
    return y;
}

std::vector<float> dense_matvec(const Tensor2D& w, std::span<const float> x) {
    if (x.size() != w.cols()) {
        fail(ErrorCode::Dimension, "matvec: x has length " + std::to_string(x.size()) + ", expected " +
                                       std::to_string(w.cols()));
    }
    std::vector<float> y(w.rows());
    for (std::size_t r = 0; r < w.rows(); ++r) {
        const auto row = w.row(r);
        double acc = 0.0;
        for (std::size_t j = 0; j < row.size(); ++j) acc += static_cast<double>(row[j]) * x[j];
        y[r] = static_cast<float>(acc);
    }
    return y;
}

BenchReport bench(const NmCompressed& c, const Tensor2D& dense, std::size_t iters) {
    if (iters == 0) fail(ErrorCode::Config, "bench needs iters >= 1");
    if (dense.rows() != c.rows || dense.cols() != c.cols) {
        fail(ErrorCode::Dimension, "bench: dense matrix " + shape_string(dense) + " does not match compressed " +
                                       shape_string(c.rows, c.cols));
    }
    std::mt19937 rng(12345);
    std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
    std::vector<float> x(c.cols);
    for (float& v : x) v = dist(rng);

    using clock = std::chrono::steady_clock;
    const auto time_ns = [&](auto&& fn) {
        std::vector<double> samples;
        samples.reserve(iters);
        volatile float sink = 0.0f;
        for (std::size_t i = 0; i < iters; ++i) {
            const auto t0 = clock::now();
            const auto y = fn();
            const auto t1 = clock::now();
            sink = sink + (y.empty() ? 0.0f : y[0]);
            samples.push_back(static_cast<double>(std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count()));
        }
        // Clamp so the ratio stays finite on sub-tick workloads.
        return std::max(1.0, median(std::move(samples)));
    };

    BenchReport r;
    r.rows = c.rows;
    r.cols = c.cols;
    r.iters = iters;
    r.dense_ns = time_ns([&] { return dense_matvec(dense, x); });
    r.sparse_ns = time_ns([&] { return spmv(c, x); });
    r.speedup = r.dense_ns / r.sparse_ns;
    r.dense_bytes = c.dense_bytes();
    r.compressed_bytes = c.compressed_bytes();
    return r;
}

std::vector<std::uint8_t> serialize_nmidx(const NmCompressed& c) {
    std::vector<std::uint8_t> out(kNmixMagic.begin(), kNmixMagic.end());
    append_le(out, c.n, 4);
    append_le(out, c.m, 4);
    append_le(out, c.rows, 8);
    append_le(out, c.cols, 8);
    out.insert(out.end(), c.codes.begin(), c.codes.end());
    return out;
}

NmCompressed parse_nmidx(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kNmixHeaderBytes) fail(ErrorCode::Format, "nmidx file shorter than its header");
    if (!std::equal(kNmixMagic.begin(), kNmixMagic.end(), bytes.begin())) {
        fail(ErrorCode::Format, "nmidx magic mismatch");
    }
    NmCompressed c;
    c.n = read_le(bytes, 4, 4);
    c.m = read_le(bytes, 8, 4);
    const std::uint64_t rows = read_le(bytes, 12, 8);
    const std::uint64_t cols = read_le(bytes, 20, 8);
    check_geometry(c.n, c.m, cols);
    const std::size_t payload = bytes.size() - kNmixHeaderBytes;
    // Each row holds at least one code bit per window, so the payload bounds rows * cols.
    if (cols != 0 && rows > (payload * 8 + 1) / std::max<std::uint64_t>(1, cols / c.m)) {
        fail(ErrorCode::Format, "nmidx header dimensions exceed the code payload");
    }
    c.rows = rows;
    c.cols = cols;
    const std::size_t expected = code_bytes(c.value_count(), index_bits(c.m));
    if (payload != expected) {
        fail(ErrorCode::Format, "nmidx code payload has " + std::to_string(payload) + " bytes, expected " +
                                    std::to_string(expected));
    }
    c.codes.assign(bytes.begin() + kNmixHeaderBytes, bytes.end());
    return c;
}

void save_nmidx(const NmCompressed& c, const std::filesystem::path& path) {
    write_file_bytes(path, serialize_nmidx(c));
}

NmCompressed load_nm(const std::filesystem::path& index_path, std::span<const float> values) {
    NmCompressed c = parse_nmidx(read_file_bytes(index_path));
    c.values.assign(values.begin(), values.end());
    validate(c);
    return c;
}

} // namespace glupruner
