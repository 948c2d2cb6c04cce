#pragma once

#include <string_view>

#include "tensor.hpp"

namespace glupruner {

enum class GluVariant { SwiGLU, GeGLU, ReGLU };

std::string_view variant_name(GluVariant v);
GluVariant parse_variant(std::string_view name);

// sigma(t): SiLU for SwiGLU, erf-based GeLU for GeGLU, ReLU for ReGLU.
float activation(GluVariant v, float t);

// gate/up: (d_hidden, d_int), down: (d_int, d_hidden), so that
// y = act(x gate) * (x up) and z = y down for x of shape (L, d_hidden).
struct MlpWeights {
    Tensor2D gate;
    Tensor2D up;
    Tensor2D down;
    GluVariant variant = GluVariant::SwiGLU;

    std::size_t d_hidden() const noexcept { return gate.rows(); }
    std::size_t d_int() const noexcept { return gate.cols(); }

    // Throws ErrorCode::Dimension naming the first inconsistent projection.
    void validate() const;
};

struct MlpOutput {
    Tensor2D y; // (L, d_int)
    Tensor2D z; // (L, d_hidden)
};

// Only the intermediate activation; skips the down projection.
Tensor2D mlp_intermediate(const MlpWeights& w, const Tensor2D& x);

MlpOutput mlp_forward(const MlpWeights& w, const Tensor2D& x);

} // namespace glupruner
