#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hydroquad/gait.hpp"
#include "hydroquad/wrench.hpp"

namespace hydroquad {

/// One logged sample: commanded kinematics plus the measured wrench at the
/// leg mount. Angles in radians, forces in N, torques in N*m.
struct ForceRecord {
    double t = 0.0;
    double V_flow = 0.0;
    double theta_H = 0.0;
    double theta_K = 0.0;
    double dtheta_H = 0.0;
    double dtheta_K = 0.0;
    Wrench wrench;
};

/// A contiguous recording of one (gait parameter set, flow speed) cell.
/// Sets that share gait parameters but differ in flow speed share a group
/// id; the dataset split assigns whole groups to one partition.
struct RecordSet {
    int id = 0;
    int group = 0;
    GaitParams params;
    double V_flow = 0.0;
    double fs = 65.0;
    std::vector<ForceRecord> records;
};

/// Supervised unit for the sequence model: a window of consecutive input
/// rows (V_flow, theta_H, theta_K, dtheta_H, dtheta_K) paired with the
/// wrench (tau_x, tau_y, tau_z, f_x, f_y, f_z) at the window's final row.
struct SequenceSample {
    Eigen::MatrixXd window; // len x 5
    Eigen::Matrix<double, 6, 1> target;
    int set_id = 0;
    int group = 0;
    double V_flow = 0.0;
};

inline constexpr int kWindowLen = 16;
inline constexpr int kInputDim = 5;
inline constexpr int kTargetDim = 6;

struct SplitResult {
    std::vector<SequenceSample> train;
    std::vector<SequenceSample> val;
    std::vector<SequenceSample> test;
};

/// Reads a force log. Expects a `# fs=<hz>` comment, the exact column
/// header, and a `# set key=value ...` line opening each block. Timestamps
/// within a block must be uniform at the declared rate within 1%.
std::vector<RecordSet> load_force_log(const std::string& path);

/// Writes sets in the format load_force_log reads. All sets must share fs.
/// `meta` is an optional free-form line stored as a `# params=` comment,
/// used to record generator settings.
void save_force_log(const std::string& path, const std::vector<RecordSet>& sets,
                    const std::string& meta = "");

/// Applies the zero-phase lowpass to the six wrench channels of every set,
/// in place. Kinematic channels are left as commanded.
void lowpass_wrench_channels(std::vector<RecordSet>& sets, double cutoff_hz);

/// Synthesizes RecordSets at new flow speeds from sets that share one gait
/// parameter group: per time index and wrench channel, a quadratic in V is
/// fit through the 3 grid speeds nearest each target (ties broken toward
/// the lower speed) and evaluated there. Kinematic columns are copied from
/// the phase-aligned sources. The lowpass is re-applied to the synthesized
/// wrench channels. New ids start at first_new_id; the group id is kept.
std::vector<RecordSet> interpolate_velocity(const std::vector<RecordSet>& group_sets,
                                            const std::vector<double>& targets,
                                            int first_new_id, double cutoff_hz);

/// Runs interpolate_velocity over every group in the collection and returns
/// the input sets plus the synthesized ones, ids continuing after the
/// existing maximum.
std::vector<RecordSet> augment_with_interpolation(const std::vector<RecordSet>& sets,
                                                  const std::vector<double>& targets,
                                                  double cutoff_hz);

/// Sliding windows of `len` rows, stride 1; one sample per window, never
/// crossing the set boundary. A set of n records yields n - len + 1 samples.
std::vector<SequenceSample> make_windows(const RecordSet& rs, int len = kWindowLen);

std::vector<SequenceSample> make_windows(const std::vector<RecordSet>& sets,
                                         int len = kWindowLen);

/// Partitions samples 70/10/20 at group granularity: the distinct group ids
/// are shuffled under the seed and assigned whole to train/val/test. With
/// at least 3 groups every partition is nonempty.
SplitResult split_dataset(const std::vector<SequenceSample>& samples, std::uint64_t seed);

} // namespace hydroquad
