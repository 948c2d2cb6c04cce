#pragma once

#include <span>
#include <string_view>

#include "tensor.hpp"

namespace glupruner {

enum class ScoreMetric { Magnitude, Wanda, DassGateUp, DassDown };

std::string_view metric_name(ScoreMetric m);

// Scores are kept in f64 so that rescaling the norms by a positive constant
// cannot reorder two entries of one comparison group through f32 rounding.
struct ImportanceMatrix {
    ScoreMatrix scores;
    ScoreMetric metric = ScoreMetric::Magnitude;
    double alpha = 0.0;
};

// |w|
ImportanceMatrix magnitude_scores(const Tensor2D& w);

// |w[i,j]| * input_norms[j] for w of shape (d_out, d_in).
ImportanceMatrix wanda_scores(const Tensor2D& w, std::span<const double> input_norms);

// Gate/Up on the transposed weight (d_int, d_hidden):
// |w_t[i,j]| * intermediate_norms[i]^alpha, with 0^0 = 1.
ImportanceMatrix dass_gate_up_scores(const Tensor2D& w_t, std::span<const double> intermediate_norms,
                                     double alpha);

// Down on the transposed weight (d_hidden, d_int):
// |w_t[i,j]| * intermediate_norms[j]. Same arithmetic as wanda_scores.
ImportanceMatrix dass_down_scores(const Tensor2D& w_t, std::span<const double> intermediate_norms);

} // namespace glupruner
