#pragma once

#include <stdexcept>
#include <string>

namespace hydroquad {

/// Joint angles put the four-bar outside its mechanical range.
struct LinkageInfeasible : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Force-log file does not match the expected CSV schema.
struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Timestamps in a force log deviate from uniform sampling by more than 1%.
struct SamplingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Series too short for the requested filtering or windowing.
struct InsufficientLength : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Fewer than three flow speeds available for quadratic interpolation.
struct GridError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Training loss became NaN/Inf (learning rate too high or corrupt data).
struct NonFiniteLoss : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Rotation axis is not a unit vector.
struct AxisNotUnit : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Simulation state diverged to NaN/Inf.
struct NonFiniteState : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Configuration document failed validation.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// File could not be read or written.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Command pipeline failure, message prefixed with the stage that raised it.
struct StageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace hydroquad
