#include "error.hpp"

namespace glupruner {

const char* error_code_name(ErrorCode code) {
    switch (code) {
    case ErrorCode::Io: return "io";
    case ErrorCode::Format: return "format";
    case ErrorCode::UnsupportedDtype: return "unsupported-dtype";
    case ErrorCode::UnsupportedShape: return "unsupported-shape";
    case ErrorCode::Data: return "data";
    case ErrorCode::Dimension: return "dimension";
    case ErrorCode::Shape: return "shape";
    case ErrorCode::Config: return "config";
    case ErrorCode::Constraint: return "constraint";
    case ErrorCode::EmptyCalibration: return "empty-calibration";
    }
    return "unknown";
}

} // namespace glupruner
