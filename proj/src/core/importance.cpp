#include "importance.hpp"

#include <cmath>
#include <string>

#include "parallel.hpp"

namespace glupruner {

std::string_view metric_name(ScoreMetric m) {
    switch (m) {
    case ScoreMetric::Magnitude: return "magnitude";
    case ScoreMetric::Wanda: return "wanda";
    case ScoreMetric::DassGateUp: return "dass-gate-up";
    case ScoreMetric::DassDown: return "dass-down";
    }
    return "unknown";
}

namespace {

void check_norms(std::span<const double> norms, std::size_t expected, const char* what) {
    if (norms.size() != expected) {
        fail(ErrorCode::Dimension, std::string(what) + ": norm vector has length " +
                                       std::to_string(norms.size()) + ", expected " +
                                       std::to_string(expected));
    }
    for (double v : norms) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            fail(ErrorCode::Data, std::string(what) + ": norms must be finite and nonnegative");
        }
    }
}

void check_finite(const ScoreMatrix& s, const char* what) {
    for (double v : s.data()) {
        if (!std::isfinite(v)) fail(ErrorCode::Data, std::string(what) + ": score overflowed");
    }
}

// scores[i,j] = |w[i,j]| * row_factor[i] * col_factor[j]; one of the factor
// spans is empty and treated as all ones.
ScoreMatrix scaled_abs(const Tensor2D& w, std::span<const double> row_factor,
                       std::span<const double> col_factor) {
    ScoreMatrix out(w.rows(), w.cols());
    parallel_for(w.rows(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const auto src = w.row(i);
            auto dst = out.row(i);
            const double rf = row_factor.empty() ? 1.0 : row_factor[i];
            for (std::size_t j = 0; j < src.size(); ++j) {
                double v = std::fabs(static_cast<double>(src[j]));
                if (!row_factor.empty()) v *= rf;
                if (!col_factor.empty()) v *= col_factor[j];
                dst[j] = v;
            }
        }
    });
    return out;
}

} // namespace

ImportanceMatrix magnitude_scores(const Tensor2D& w) {
    return {scaled_abs(w, {}, {}), ScoreMetric::Magnitude, 0.0};
}

ImportanceMatrix wanda_scores(const Tensor2D& w, std::span<const double> input_norms) {
    check_norms(input_norms, w.cols(), "wanda_scores");
    ImportanceMatrix m{scaled_abs(w, {}, input_norms), ScoreMetric::Wanda, 0.0};
    check_finite(m.scores, "wanda_scores");
    return m;
}

ImportanceMatrix dass_gate_up_scores(const Tensor2D& w_t, std::span<const double> intermediate_norms,
                                     double alpha) {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
        fail(ErrorCode::Config, "alpha must be a finite nonnegative number");
    }
    check_norms(intermediate_norms, w_t.rows(), "dass_gate_up_scores");
    std::vector<double> group(intermediate_norms.size());
    // std::pow(0, 0) == 1, so alpha == 0 reduces to plain magnitude.
    for (std::size_t i = 0; i < group.size(); ++i) group[i] = std::pow(intermediate_norms[i], alpha);
    ImportanceMatrix m{scaled_abs(w_t, group, {}), ScoreMetric::DassGateUp, alpha};
    check_finite(m.scores, "dass_gate_up_scores");
    return m;
}

ImportanceMatrix dass_down_scores(const Tensor2D& w_t, std::span<const double> intermediate_norms) {
    check_norms(intermediate_norms, w_t.cols(), "dass_down_scores");
    ImportanceMatrix m{scaled_abs(w_t, {}, intermediate_norms), ScoreMetric::DassDown, 0.0};
    check_finite(m.scores, "dass_down_scores");
    return m;
}

} // namespace glupruner
