#pragma once

#include <cstddef>
#include <string>
#include <variant>

#include "importance.hpp"
#include "tensor.hpp"

namespace glupruner {

// Comparison groups are rows (PerRow) or columns (PerColumn). N:M windows
// run along the group line.
enum class GroupAxis { PerRow, PerColumn };

struct Unstructured {
    double sparsity = 0.0; // fraction pruned per group, in [0, 1)
    friend bool operator==(const Unstructured&, const Unstructured&) = default;
};

// n zeros in every aligned window of m consecutive entries.
struct NM {
    std::size_t n = 2;
    std::size_t m = 4;
    friend bool operator==(const NM&, const NM&) = default;
};

struct SparsitySpec {
    std::variant<Unstructured, NM> kind;
    GroupAxis axis = GroupAxis::PerRow;

    bool is_nm() const noexcept { return std::holds_alternative<NM>(kind); }
    // Throws ErrorCode::Config on s outside [0, 1), n == 0 or n >= m.
    void validate() const;
    std::string describe() const;

    friend bool operator==(const SparsitySpec&, const SparsitySpec&) = default;
};

GroupAxis flip(GroupAxis axis);

// floor(s * group_len). The 1e-9 slack keeps products such as 0.29 * 100
// from rounding down to 28.
std::size_t pruned_per_group(double sparsity, std::size_t group_len);

struct SparsityMask {
    KeepMatrix keep; // 1 = kept, 0 = pruned
    SparsitySpec spec;

    std::size_t rows() const noexcept { return keep.rows(); }
    std::size_t cols() const noexcept { return keep.cols(); }
    bool kept(std::size_t r, std::size_t c) const { return keep(r, c) != 0; }

    friend bool operator==(const SparsityMask&, const SparsityMask&) = default;
};

// Within every group line, prune the floor(s * len) lowest scores. Ties go
// to the lower index first.
SparsityMask topk_mask(const ImportanceMatrix& scores, const SparsitySpec& spec);

// Within every aligned window of m entries along a group line, prune the n
// lowest scores (same tie rule). Line length must be a multiple of m.
SparsityMask nm_mask(const ImportanceMatrix& scores, const SparsitySpec& spec);

// Dispatches on spec.kind.
SparsityMask build_mask(const ImportanceMatrix& scores, const SparsitySpec& spec);

SparsityMask all_keep_mask(std::size_t rows, std::size_t cols, const SparsitySpec& spec);

// Pruned entries become exactly +0.0; kept entries are copied bit for bit.
Tensor2D apply_mask(const Tensor2D& w, const SparsityMask& mask);

double mask_sparsity(const SparsityMask& mask);

// Walks every group (and window) and counts those whose kept count differs
// from the spec. Independent of how the mask was produced.
std::size_t count_violations(const SparsityMask& mask);

// Same keep pattern on the transposed matrix; the group axis flips with it.
SparsityMask transposed(const SparsityMask& mask);

// 0/1 valued f32 tensor for export, and the reverse.
Tensor2D mask_to_tensor(const SparsityMask& mask);
SparsityMask mask_from_tensor(const Tensor2D& t, const SparsitySpec& spec);

} // namespace glupruner
