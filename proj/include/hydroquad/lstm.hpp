#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hydroquad/records.hpp"
#include "hydroquad/rng.hpp"
#include "hydroquad/wrench.hpp"

namespace hydroquad {

inline constexpr int kLstmHidden = 64;

/// Per-channel affine normalization. Stats are frozen from the training
/// split; std is floored at 1e-12 so constant channels normalize to zero.
struct NormStats {
    Eigen::VectorXd mean;
    Eigen::VectorXd std;

    static NormStats identity(int dim);

    Eigen::VectorXd normalize(const Eigen::VectorXd& x) const {
        return (x - mean).cwiseQuotient(std);
    }
    Eigen::VectorXd denormalize(const Eigen::VectorXd& x) const {
        return x.cwiseProduct(std) + mean;
    }
};

/// One LSTM layer's parameters, gates stacked in the row order
/// input, forget, cell, output: W (4H x D), U (4H x H), b (4H).
struct LstmLayer {
    Eigen::MatrixXd W;
    Eigen::MatrixXd U;
    Eigen::VectorXd b;

    int hidden() const { return static_cast<int>(U.cols()); }
    int input_dim() const { return static_cast<int>(W.cols()); }
};

/// Two stacked LSTM layers and a linear head applied to the second layer's
/// final hidden state. The production architecture is 5 -> 64 -> 64 -> 6;
/// smaller widths are permitted for finite-difference testing.
struct LstmModel {
    LstmLayer layer1;
    LstmLayer layer2;
    Eigen::MatrixXd head_W; // out x H
    Eigen::VectorXd head_b;
    NormStats input_norm;
    NormStats target_norm;

    int hidden() const { return layer1.hidden(); }
    int input_dim() const { return layer1.input_dim(); }
    int output_dim() const { return static_cast<int>(head_W.rows()); }
    bool dims_consistent() const;
};

/// Uniform init in +-1/sqrt(fan_in) per matrix, zero biases except the
/// forget gate's, which starts at +1. Normalization starts at identity.
LstmModel make_model(int input_dim, int hidden, int output_dim, std::uint64_t seed);

struct TrainConfig {
    double dropout = 0.21;
    double lr_min = 0.001;
    double lr_max = 0.1;
    int batch_size = 64;
    int max_epochs = 200;
    int patience = 5;
    double clip_norm = 5.0;
    std::uint64_t seed = 0;

    bool valid() const {
        return dropout >= 0.0 && dropout < 1.0 && lr_min > 0.0 && lr_min <= lr_max &&
               batch_size > 0 && max_epochs > 0 && patience > 0 && clip_norm > 0.0;
    }
};

struct EpochStats {
    double train_mse = 0.0;
    double val_mse = 0.0;
    double lr = 0.0;
};

struct TrainHistory {
    std::vector<EpochStats> epochs;
    int best_epoch = -1; // index into epochs
};

struct FitResult {
    LstmModel model; // snapshot at the best validation epoch
    TrainHistory history;
};

/// Gradients with the same shapes as the trainable parameters.
struct LstmGradients {
    LstmLayer layer1;
    LstmLayer layer2;
    Eigen::MatrixXd head_W;
    Eigen::VectorXd head_b;
};

/// Normalized minibatch, columns = samples: x[t] is D x B for each of the
/// T window steps, y is out x B.
struct Batch {
    std::vector<Eigen::MatrixXd> x;
    Eigen::MatrixXd y;
};

Batch make_batch(const std::vector<SequenceSample>& samples,
                 const std::vector<std::size_t>& idx, const NormStats& input_norm,
                 const NormStats& target_norm);

/// Inverted-dropout masks for the layer1 -> layer2 connection, one H x B
/// matrix per window step with entries 0 or 1/(1-p), drawn row-major.
std::vector<Eigen::MatrixXd> make_dropout_masks(int steps, int hidden, int batch,
                                                double dropout, Rng& rng);

/// Forward pass in normalized space over a batch; masks empty = no dropout.
Eigen::MatrixXd lstm_forward(const LstmModel& m, const Batch& batch,
                             const std::vector<Eigen::MatrixXd>& masks);

/// MSE loss over the normalized channels of a batch and, when grads is
/// non-null, its exact gradient by backpropagation through time.
double lstm_loss_and_grad(const LstmModel& m, const Batch& batch,
                          const std::vector<Eigen::MatrixXd>& masks,
                          LstmGradients* grads);

/// Inference on one raw window: normalize, run the net, de-normalize.
Vector6d lstm_predict(const LstmModel& m, const Eigen::MatrixXd& window);

/// Batched inference on raw samples (no dropout), in sample order.
std::vector<Vector6d> lstm_predict_all(const LstmModel& m,
                                       const std::vector<SequenceSample>& samples);

/// One epoch of shuffled minibatch gradient descent at the given rate, with
/// global gradient-norm clipping. Returns mean train MSE (normalized).
/// Throws NonFiniteLoss as soon as a batch loss is not finite.
double train_epoch(LstmModel& m, const std::vector<SequenceSample>& train,
                   const TrainConfig& cfg, double lr, Rng& rng);

/// Mean MSE in normalized space (no dropout), used for validation.
double mse_normalized(const LstmModel& m, const std::vector<SequenceSample>& samples);

/// Full training run: freezes normalization from the train split, starts at
/// 0.1 * lr_max, halves the rate whenever validation MSE stalls for
/// `patience` epochs (clamped to [lr_min, lr_max]) and stops early after 3
/// consecutive stalls with the rate already at lr_min. Returns the model
/// snapshot from the best validation epoch.
FitResult fit(const std::vector<SequenceSample>& train,
              const std::vector<SequenceSample>& val, const TrainConfig& cfg);

/// Test-split report. The aggregate is the mean of the tau_x, f_y and f_z
/// channel MSEs; it is reported both in physical units and in the model's
/// normalized space.
struct EvalReport {
    Vector6d mse = Vector6d::Zero();      // physical units
    Vector6d mse_norm = Vector6d::Zero(); // per target_norm
    double aggregate = 0.0;
    double aggregate_norm = 0.0;
    std::size_t count = 0;
};

EvalReport evaluate_predictions(const std::vector<Vector6d>& preds,
                                const std::vector<SequenceSample>& samples,
                                const NormStats& target_norm);

EvalReport evaluate(const LstmModel& m, const std::vector<SequenceSample>& samples);

std::map<double, EvalReport> evaluate_by_flow(const LstmModel& m,
                                              const std::vector<SequenceSample>& samples);

std::map<double, EvalReport> evaluate_predictions_by_flow(
    const std::vector<Vector6d>& preds, const std::vector<SequenceSample>& samples,
    const NormStats& target_norm);

/// Trainable parameters flattened in a fixed order (layer1 W, U, b; layer2
/// W, U, b; head W, b), matrices row-major. Used by the finite-difference
/// gradient check and the norm clip.
Eigen::VectorXd flatten_params(const LstmModel& m);
void set_params(LstmModel& m, const Eigen::VectorXd& theta);
Eigen::VectorXd flatten_grads(const LstmGradients& g);

/// Normalization stats over the training split (inputs pooled over all
/// window rows).
NormStats input_norm_from(const std::vector<SequenceSample>& samples);
NormStats target_norm_from(const std::vector<SequenceSample>& samples);

/// Versioned binary serialization; loading validates the dimension header
/// against the stored matrices.
void save_model(const LstmModel& m, const std::string& path);
LstmModel load_model(const std::string& path);

} // namespace hydroquad
