#include "glu_mlp.hpp"

#include <cmath>
#include <string>

namespace glupruner {

std::string_view variant_name(GluVariant v) {
    switch (v) {
    case GluVariant::SwiGLU: return "swiglu";
    case GluVariant::GeGLU: return "geglu";
    case GluVariant::ReGLU: return "reglu";
    }
    return "unknown";
}

GluVariant parse_variant(std::string_view name) {
    if (name == "swiglu") return GluVariant::SwiGLU;
    if (name == "geglu") return GluVariant::GeGLU;
    if (name == "reglu") return GluVariant::ReGLU;
    fail(ErrorCode::Config, "unknown GLU variant '" + std::string(name) + "'");
}

float activation(GluVariant v, float t) {
    const double x = t;
    switch (v) {
    case GluVariant::SwiGLU:
        return static_cast<float>(x / (1.0 + std::exp(-x)));
    case GluVariant::GeGLU:
        return static_cast<float>(0.5 * x * std::erfc(-x / std::sqrt(2.0)));
    case GluVariant::ReGLU:
        return t > 0.0f ? t : 0.0f;
    }
    return 0.0f;
}

void MlpWeights::validate() const {
    const std::size_t h = gate.rows();
    const std::size_t n = gate.cols();
    if (up.rows() != h || up.cols() != n) {
        fail(ErrorCode::Dimension, "up projection " + shape_string(up) + " does not match gate " +
                                       shape_string(gate));
    }
    if (down.rows() != n || down.cols() != h) {
        fail(ErrorCode::Dimension, "down projection " + shape_string(down) + " must be " +
                                       shape_string(n, h) + " to match gate " + shape_string(gate));
    }
}

Tensor2D mlp_intermediate(const MlpWeights& w, const Tensor2D& x) {
    w.validate();
    if (x.cols() != w.d_hidden()) {
        fail(ErrorCode::Dimension, "input x " + shape_string(x) + " must have " +
                                       std::to_string(w.d_hidden()) + " columns (d_hidden)");
    }
    Tensor2D y = matmul(x, w.gate);
    const Tensor2D up = matmul(x, w.up);
    auto yd = y.data();
    const auto ud = up.data();
    for (std::size_t i = 0; i < yd.size(); ++i) yd[i] = activation(w.variant, yd[i]) * ud[i];
    return y;
}

MlpOutput mlp_forward(const MlpWeights& w, const Tensor2D& x) {
    Tensor2D y = mlp_intermediate(w, x);
    Tensor2D z = matmul(y, w.down);
    return {std::move(y), std::move(z)};
}

} // namespace glupruner
