#pragma once

#include <json.hpp>

#include "calibration.hpp"
#include "pipeline.hpp"
#include "sparse_exec.hpp"

namespace glupruner {

inline constexpr const char* kReportSchema = "glupruner/1";

nlohmann::json sparsity_json(const SparsityKind& kind);
nlohmann::json config_json(const PruneConfig& cfg);
nlohmann::json calib_json(const CalibStats& stats);
nlohmann::json eval_json(const EvalReport& r);
// per_neuron adds the three kept-fraction vectors.
nlohmann::json dependency_json(const DependencyGroupReport& r, bool per_neuron);
nlohmann::json masks_json(const MlpMasks& masks);
nlohmann::json bench_json(const BenchReport& r);

} // namespace glupruner
