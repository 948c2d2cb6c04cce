#include "tensor.hpp"

#include <cmath>
#include <cstring>

#include "parallel.hpp"

namespace glupruner {

std::string shape_string(std::size_t rows, std::size_t cols) {
    return "[" + std::to_string(rows) + "," + std::to_string(cols) + "]";
}

bool all_finite(const Tensor2D& t) {
    for (float v : t.data()) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

bool bit_equal(const Tensor2D& a, const Tensor2D& b) {
    if (!a.same_shape(b)) return false;
    return a.size() == 0 ||
           std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(float)) == 0;
}

Tensor2D matmul(const Tensor2D& a, const Tensor2D& b) {
    if (a.cols() != b.rows()) {
        fail(ErrorCode::Dimension, "matmul: left operand " + shape_string(a) +
                                       " incompatible with right operand " + shape_string(b));
    }
    const std::size_t n = a.rows();
    const std::size_t k = a.cols();
    const std::size_t m = b.cols();
    Tensor2D out(n, m);
    parallel_for(n, [&](std::size_t begin, std::size_t end) {
        std::vector<double> acc(m);
        for (std::size_t i = begin; i < end; ++i) {
            std::fill(acc.begin(), acc.end(), 0.0);
            const auto a_row = a.row(i);
            for (std::size_t p = 0; p < k; ++p) {
                const double av = a_row[p];
                if (av == 0.0) continue;
                const auto b_row = b.row(p);
                for (std::size_t j = 0; j < m; ++j) acc[j] += av * static_cast<double>(b_row[j]);
            }
            auto o = out.row(i);
            for (std::size_t j = 0; j < m; ++j) o[j] = static_cast<float>(acc[j]);
        }
    });
    return out;
}

Tensor2D vconcat(const Tensor2D& top, const Tensor2D& bottom) {
    if (top.cols() != bottom.cols()) {
        fail(ErrorCode::Dimension, "vconcat: column counts differ, " + shape_string(top) +
                                       " vs " + shape_string(bottom));
    }
    std::vector<float> data(top.values());
    data.insert(data.end(), bottom.values().begin(), bottom.values().end());
    return Tensor2D(top.rows() + bottom.rows(), top.cols(), std::move(data));
}

double frobenius_norm(const Tensor2D& t) {
    double sum = 0.0;
    for (float v : t.data()) sum += static_cast<double>(v) * v;
    return std::sqrt(sum);
}

} // namespace glupruner
