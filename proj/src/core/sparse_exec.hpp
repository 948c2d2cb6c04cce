#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "masking.hpp"
#include "tensor.hpp"

namespace glupruner {

// N:M compressed matrix. Windows of m consecutive columns in each row keep
// m - n values; each kept value carries its in-window position as a code of
// index_bits(m) bits, packed LSB-first into a little-endian byte stream in
// the same order as `values` (row-major, window by window).
struct NmCompressed {
    std::size_t n = 0;
    std::size_t m = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<float> values;
    std::vector<std::uint8_t> codes;

    std::size_t kept_per_window() const noexcept { return m - n; }
    std::size_t kept_per_row() const noexcept { return cols / m * (m - n); }
    std::size_t value_count() const noexcept { return rows * kept_per_row(); }
    std::size_t code(std::size_t k) const;
    std::size_t compressed_bytes() const noexcept { return values.size() * sizeof(float) + codes.size(); }
    std::size_t dense_bytes() const noexcept { return rows * cols * sizeof(float); }

    friend bool operator==(const NmCompressed&, const NmCompressed&) = default;
};

// 2 bits for m <= 4, 3 bits for m <= 8, ceil(log2 m) beyond (m <= 256).
unsigned index_bits(std::size_t m);

// mask must be N:M along rows (GroupAxis::PerRow) and satisfy its spec;
// otherwise ErrorCode::Constraint.
NmCompressed encode(const Tensor2D& w, const SparsityMask& mask);

Tensor2D decode(const NmCompressed& c);

// Checks sizes, code ranges and the strictly increasing order of codes
// inside every window. Throws ErrorCode::Format.
void validate(const NmCompressed& c);

// y = W x with f64 accumulation.
std::vector<float> spmv(const NmCompressed& c, std::span<const float> x);
std::vector<float> dense_matvec(const Tensor2D& w, std::span<const float> x);

struct BenchReport {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t iters = 0;
    double dense_ns = 0.0;  // median over iters
    double sparse_ns = 0.0; // median over iters
    double speedup = 0.0;   // dense_ns / sparse_ns
    std::size_t dense_bytes = 0;
    std::size_t compressed_bytes = 0;
};

BenchReport bench(const NmCompressed& c, const Tensor2D& dense, std::size_t iters);

// .nmidx layout: "NMIX", u32 n, u32 m, u64 rows, u64 cols, packed codes.
// All integers little-endian. Values travel separately (f32 tensor).
std::vector<std::uint8_t> serialize_nmidx(const NmCompressed& c);
// Returns the structure with codes filled and values empty.
NmCompressed parse_nmidx(std::span<const std::uint8_t> bytes);

void save_nmidx(const NmCompressed& c, const std::filesystem::path& path);
// Joins an index file with its value payload and validates the result.
NmCompressed load_nm(const std::filesystem::path& index_path, std::span<const float> values);

} // namespace glupruner
