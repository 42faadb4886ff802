#pragma once

#include <vector>

namespace hydroquad {

/// Zero-phase second-order Butterworth lowpass: one forward and one backward
/// pass of the same biquad, with odd-reflection edge padding and steady-state
/// filter initialization so the result has no phase lag and no start-up
/// transient. Requires fs > 0, 0 < cutoff_hz < fs/2 and more samples than the
/// pad length (9); throws SamplingError / InsufficientLength otherwise.
std::vector<double> lowpass_filtfilt(const std::vector<double>& x, double fs,
                                     double cutoff_hz);

} // namespace hydroquad
