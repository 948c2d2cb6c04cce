#include "masking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "parallel.hpp"

namespace glupruner {

namespace {

// Strided view of one group line of a row-major matrix.
struct LineLayout {
    std::size_t lines;
    std::size_t length;
    std::size_t line_stride;
    std::size_t elem_stride;

    std::size_t at(std::size_t line, std::size_t k) const { return line * line_stride + k * elem_stride; }
};

LineLayout layout_for(std::size_t rows, std::size_t cols, GroupAxis axis) {
    if (axis == GroupAxis::PerRow) return {rows, cols, cols, 1};
    return {cols, rows, 1, cols};
}

std::string axis_label(GroupAxis axis) { return axis == GroupAxis::PerRow ? "row" : "column"; }

// Prunes the `count` lowest (score, index) entries among positions
// [first, first + len) of the line.
void prune_lowest(const LineLayout& lay, std::span<const double> scores, std::span<std::uint8_t> keep,
                  std::size_t line, std::size_t first, std::size_t len, std::size_t count,
                  std::vector<std::size_t>& order) {
    if (count == 0) return;
    order.resize(len);
    std::iota(order.begin(), order.end(), first);
    const auto lower = [&](std::size_t a, std::size_t b) {
        const double sa = scores[lay.at(line, a)];
        const double sb = scores[lay.at(line, b)];
        return sa < sb || (sa == sb && a < b);
    };
    if (count < len) {
        std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count), order.end(), lower);
    }
    for (std::size_t k = 0; k < std::min(count, len); ++k) keep[lay.at(line, order[k])] = 0;
}

} // namespace

void SparsitySpec::validate() const {
    if (const auto* u = std::get_if<Unstructured>(&kind)) {
        if (!(u->sparsity >= 0.0 && u->sparsity < 1.0)) {
            fail(ErrorCode::Config, "unstructured sparsity must lie in [0, 1), got " + std::to_string(u->sparsity));
        }
    } else {
        const auto& nm = std::get<NM>(kind);
        if (nm.n == 0 || nm.n >= nm.m) {
            fail(ErrorCode::Config, "N:M sparsity needs 0 < N < M, got " + std::to_string(nm.n) + ":" +
                                        std::to_string(nm.m));
        }
    }
}

std::string SparsitySpec::describe() const {
    std::string out;
    if (const auto* u = std::get_if<Unstructured>(&kind)) {
        out = "unstructured(" + std::to_string(u->sparsity) + ")";
    } else {
        const auto& nm = std::get<NM>(kind);
        out = std::to_string(nm.n) + ":" + std::to_string(nm.m);
    }
    return out + " per-" + axis_label(axis);
}

GroupAxis flip(GroupAxis axis) {
    return axis == GroupAxis::PerRow ? GroupAxis::PerColumn : GroupAxis::PerRow;
}

std::size_t pruned_per_group(double sparsity, std::size_t group_len) {
    const double exact = sparsity * static_cast<double>(group_len);
    const auto count = static_cast<std::size_t>(std::floor(exact + 1e-9));
    return std::min(count, group_len);
}

SparsityMask all_keep_mask(std::size_t rows, std::size_t cols, const SparsitySpec& spec) {
    return {KeepMatrix(rows, cols, 1), spec};
}

SparsityMask topk_mask(const ImportanceMatrix& scores, const SparsitySpec& spec) {
    spec.validate();
    const auto* u = std::get_if<Unstructured>(&spec.kind);
    if (u == nullptr) fail(ErrorCode::Config, "topk_mask expects an unstructured sparsity spec");

    const auto& s = scores.scores;
    SparsityMask mask = all_keep_mask(s.rows(), s.cols(), spec);
    const LineLayout lay = layout_for(s.rows(), s.cols(), spec.axis);
    const std::size_t count = pruned_per_group(u->sparsity, lay.length);
    if (count == 0) return mask;

    auto keep = mask.keep.data();
    parallel_for(lay.lines, [&](std::size_t begin, std::size_t end) {
        std::vector<std::size_t> order;
        for (std::size_t line = begin; line < end; ++line) {
            prune_lowest(lay, s.data(), keep, line, 0, lay.length, count, order);
        }
    });
    return mask;
}

SparsityMask nm_mask(const ImportanceMatrix& scores, const SparsitySpec& spec) {
    spec.validate();
    const auto* nm = std::get_if<NM>(&spec.kind);
    if (nm == nullptr) fail(ErrorCode::Config, "nm_mask expects an N:M sparsity spec");

    const auto& s = scores.scores;
    const LineLayout lay = layout_for(s.rows(), s.cols(), spec.axis);
    if (lay.length % nm->m != 0) {
        fail(ErrorCode::Shape, "N:M " + std::to_string(nm->n) + ":" + std::to_string(nm->m) + " needs every " +
                                   axis_label(spec.axis) + " of the " + shape_string(s) + " matrix to have a length divisible by " +
                                   std::to_string(nm->m) + " (got " + std::to_string(lay.length) +
                                   "); pad or trim the weight explicitly before pruning");
    }

    SparsityMask mask = all_keep_mask(s.rows(), s.cols(), spec);
    auto keep = mask.keep.data();
    parallel_for(lay.lines, [&](std::size_t begin, std::size_t end) {
        std::vector<std::size_t> order;
        for (std::size_t line = begin; line < end; ++line) {
            for (std::size_t w = 0; w < lay.length; w += nm->m) {
                prune_lowest(lay, s.data(), keep, line, w, nm->m, nm->n, order);
            }
        }
    });
    return mask;
}

SparsityMask build_mask(const ImportanceMatrix& scores, const SparsitySpec& spec) {
    return spec.is_nm() ? nm_mask(scores, spec) : topk_mask(scores, spec);
}

Tensor2D apply_mask(const Tensor2D& w, const SparsityMask& mask) {
    if (w.rows() != mask.rows() || w.cols() != mask.cols()) {
        fail(ErrorCode::Dimension, "mask " + shape_string(mask.keep) + " does not match weight " + shape_string(w));
    }
    Tensor2D out = w;
    auto d = out.data();
    const auto k = mask.keep.data();
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (k[i] == 0) d[i] = 0.0f;
    }
    return out;
}

double mask_sparsity(const SparsityMask& mask) {
    if (mask.keep.size() == 0) return 0.0;
    const auto k = mask.keep.data();
    const auto pruned = static_cast<std::size_t>(std::count(k.begin(), k.end(), std::uint8_t{0}));
    return static_cast<double>(pruned) / static_cast<double>(k.size());
}

std::size_t count_violations(const SparsityMask& mask) {
    const LineLayout lay = layout_for(mask.rows(), mask.cols(), mask.spec.axis);
    const auto keep = mask.keep.data();
    const auto kept_in = [&](std::size_t line, std::size_t first, std::size_t len) {
        std::size_t kept = 0;
        for (std::size_t k = first; k < first + len; ++k) kept += keep[lay.at(line, k)] != 0 ? 1 : 0;
        return kept;
    };

    std::size_t violations = 0;
    if (const auto* u = std::get_if<Unstructured>(&mask.spec.kind)) {
        const std::size_t expected = lay.length - pruned_per_group(u->sparsity, lay.length);
        for (std::size_t line = 0; line < lay.lines; ++line) {
            if (kept_in(line, 0, lay.length) != expected) ++violations;
        }
        return violations;
    }
    const auto& nm = std::get<NM>(mask.spec.kind);
    if (lay.length % nm.m != 0) return lay.lines;
    for (std::size_t line = 0; line < lay.lines; ++line) {
        for (std::size_t w = 0; w < lay.length; w += nm.m) {
            if (kept_in(line, w, nm.m) != nm.m - nm.n) ++violations;
        }
    }
    return violations;
}

SparsityMask transposed(const SparsityMask& mask) {
    return {mask.keep.transposed(), SparsitySpec{mask.spec.kind, flip(mask.spec.axis)}};
}

Tensor2D mask_to_tensor(const SparsityMask& mask) {
    Tensor2D t(mask.rows(), mask.cols());
    auto d = t.data();
    const auto k = mask.keep.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = k[i] != 0 ? 1.0f : 0.0f;
    return t;
}

SparsityMask mask_from_tensor(const Tensor2D& t, const SparsitySpec& spec) {
    KeepMatrix keep(t.rows(), t.cols());
    auto k = keep.data();
    const auto d = t.data();
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (d[i] != 0.0f && d[i] != 1.0f) fail(ErrorCode::Data, "mask tensor values must be 0 or 1");
        k[i] = d[i] != 0.0f ? 1 : 0;
    }
    return {std::move(keep), spec};
}

} // namespace glupruner
