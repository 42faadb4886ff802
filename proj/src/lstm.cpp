#include "hydroquad/lstm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>

#include "hydroquad/errors.hpp"

namespace hydroquad {

namespace {

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& z) {
    return ((-z).array().exp() + 1.0).inverse().matrix();
}

// Activations of one layer over a whole window, kept for backpropagation.
// h and c have T+1 entries with index 0 holding the zero initial state, so
// at step t the previous state is h[t] / c[t].
struct LayerCache {
    std::vector<Eigen::MatrixXd> x;
    std::vector<Eigen::MatrixXd> h;
    std::vector<Eigen::MatrixXd> c;
    std::vector<Eigen::MatrixXd> gi, gf, gg, go;
    std::vector<Eigen::MatrixXd> tanh_c;
};

void layer_forward(const LstmLayer& L, std::vector<Eigen::MatrixXd> xs, LayerCache& cc) {
    const std::size_t T = xs.size();
    const int H = L.hidden();
    const Eigen::Index B = xs.front().cols();

    cc.x = std::move(xs);
    const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(H, B);
    cc.h.assign(T + 1, zero);
    cc.c.assign(T + 1, zero);
    cc.gi.resize(T);
    cc.gf.resize(T);
    cc.gg.resize(T);
    cc.go.resize(T);
    cc.tanh_c.resize(T);

    for (std::size_t t = 0; t < T; ++t) {
        Eigen::MatrixXd Z = L.W * cc.x[t] + L.U * cc.h[t];
        Z.colwise() += L.b;
        cc.gi[t] = sigmoid(Z.topRows(H));
        cc.gf[t] = sigmoid(Z.middleRows(H, H));
        cc.gg[t] = Z.middleRows(2 * H, H).array().tanh().matrix();
        cc.go[t] = sigmoid(Z.bottomRows(H));
        cc.c[t + 1] = cc.gf[t].cwiseProduct(cc.c[t]) + cc.gi[t].cwiseProduct(cc.gg[t]);
        cc.tanh_c[t] = cc.c[t + 1].array().tanh().matrix();
        cc.h[t + 1] = cc.go[t].cwiseProduct(cc.tanh_c[t]);
    }
}

void layer_backward(const LstmLayer& L, const LayerCache& cc,
                    const std::vector<Eigen::MatrixXd>& dh_ext, LstmLayer& g,
                    std::vector<Eigen::MatrixXd>* dx_out) {
    const std::size_t T = cc.x.size();
    const int H = L.hidden();
    const Eigen::Index B = cc.x.front().cols();

    g.W = Eigen::MatrixXd::Zero(L.W.rows(), L.W.cols());
    g.U = Eigen::MatrixXd::Zero(L.U.rows(), L.U.cols());
    g.b = Eigen::VectorXd::Zero(L.b.size());
    if (dx_out) dx_out->resize(T);

    Eigen::MatrixXd dh_next = Eigen::MatrixXd::Zero(H, B);
    Eigen::MatrixXd dc_next = Eigen::MatrixXd::Zero(H, B);
    Eigen::MatrixXd dZ(4 * H, B);
    for (std::size_t t = T; t-- > 0;) {
        const Eigen::MatrixXd& i = cc.gi[t];
        const Eigen::MatrixXd& f = cc.gf[t];
        const Eigen::MatrixXd& gg = cc.gg[t];
        const Eigen::MatrixXd& o = cc.go[t];
        const Eigen::MatrixXd& tc = cc.tanh_c[t];

        const Eigen::MatrixXd dh = dh_ext[t] + dh_next;
        const Eigen::MatrixXd dc =
            dc_next + (dh.array() * o.array() * (1.0 - tc.array().square())).matrix();
        const Eigen::ArrayXXd do_ = dh.array() * tc.array();
        const Eigen::ArrayXXd di = dc.array() * gg.array();
        const Eigen::ArrayXXd dg = dc.array() * i.array();
        const Eigen::ArrayXXd df = dc.array() * cc.c[t].array();

        dZ.topRows(H) = (di * i.array() * (1.0 - i.array())).matrix();
        dZ.middleRows(H, H) = (df * f.array() * (1.0 - f.array())).matrix();
        dZ.middleRows(2 * H, H) = (dg * (1.0 - gg.array().square())).matrix();
        dZ.bottomRows(H) = (do_ * o.array() * (1.0 - o.array())).matrix();

        g.W.noalias() += dZ * cc.x[t].transpose();
        g.U.noalias() += dZ * cc.h[t].transpose();
        g.b += dZ.rowwise().sum();
        if (dx_out) (*dx_out)[t] = L.W.transpose() * dZ;
        dh_next.noalias() = L.U.transpose() * dZ;
        dc_next = dc.cwiseProduct(f);
    }
}

// Shared forward over both layers; y is the normalized head output.
Eigen::MatrixXd forward_impl(const LstmModel& m, const Batch& batch,
                             const std::vector<Eigen::MatrixXd>& masks, LayerCache& c1,
                             LayerCache& c2) {
    layer_forward(m.layer1, batch.x, c1);

    const std::size_t T = batch.x.size();
    std::vector<Eigen::MatrixXd> x2(T);
    for (std::size_t t = 0; t < T; ++t)
        x2[t] = masks.empty() ? c1.h[t + 1] : c1.h[t + 1].cwiseProduct(masks[t]);
    layer_forward(m.layer2, std::move(x2), c2);

    Eigen::MatrixXd y = m.head_W * c2.h[T];
    y.colwise() += m.head_b;
    return y;
}

double grad_sq_norm(const LstmGradients& g) {
    return g.layer1.W.squaredNorm() + g.layer1.U.squaredNorm() + g.layer1.b.squaredNorm() +
           g.layer2.W.squaredNorm() + g.layer2.U.squaredNorm() + g.layer2.b.squaredNorm() +
           g.head_W.squaredNorm() + g.head_b.squaredNorm();
}

void apply_update(LstmModel& m, const LstmGradients& g, double step) {
    m.layer1.W -= step * g.layer1.W;
    m.layer1.U -= step * g.layer1.U;
    m.layer1.b -= step * g.layer1.b;
    m.layer2.W -= step * g.layer2.W;
    m.layer2.U -= step * g.layer2.U;
    m.layer2.b -= step * g.layer2.b;
    m.head_W -= step * g.head_W;
    m.head_b -= step * g.head_b;
}

std::vector<std::size_t> iota_indices(std::size_t n) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    return idx;
}

} // namespace

NormStats NormStats::identity(int dim) {
    NormStats s;
    s.mean = Eigen::VectorXd::Zero(dim);
    s.std = Eigen::VectorXd::Ones(dim);
    return s;
}

bool LstmModel::dims_consistent() const {
    const int H = hidden();
    const int D = input_dim();
    const int out = output_dim();
    return H > 0 && D > 0 && out > 0 && layer1.W.rows() == 4 * H &&
           layer1.U.rows() == 4 * H && layer1.U.cols() == H && layer1.b.size() == 4 * H &&
           layer2.W.rows() == 4 * H && layer2.W.cols() == H && layer2.U.rows() == 4 * H &&
           layer2.U.cols() == H && layer2.b.size() == 4 * H && head_W.cols() == H &&
           head_b.size() == out && input_norm.mean.size() == D &&
           input_norm.std.size() == D && target_norm.mean.size() == out &&
           target_norm.std.size() == out;
}

LstmModel make_model(int input_dim, int hidden, int output_dim, std::uint64_t seed) {
    if (input_dim < 1 || hidden < 1 || output_dim < 1)
        throw ConfigError("model dimensions must be positive");
    Rng rng(seed);
    const auto init = [&rng](Eigen::MatrixXd& M, Eigen::Index rows, Eigen::Index cols,
                             Eigen::Index fan_in) {
        const double r = 1.0 / std::sqrt(static_cast<double>(fan_in));
        M.resize(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j) M(i, j) = rng.uniform(-r, r);
    };

    LstmModel m;
    init(m.layer1.W, 4 * hidden, input_dim, input_dim);
    init(m.layer1.U, 4 * hidden, hidden, hidden);
    m.layer1.b = Eigen::VectorXd::Zero(4 * hidden);
    m.layer1.b.segment(hidden, hidden).setOnes(); // forget gate opens high
    init(m.layer2.W, 4 * hidden, hidden, hidden);
    init(m.layer2.U, 4 * hidden, hidden, hidden);
    m.layer2.b = Eigen::VectorXd::Zero(4 * hidden);
    m.layer2.b.segment(hidden, hidden).setOnes();
    init(m.head_W, output_dim, hidden, hidden);
    m.head_b = Eigen::VectorXd::Zero(output_dim);
    m.input_norm = NormStats::identity(input_dim);
    m.target_norm = NormStats::identity(output_dim);
    return m;
}

Batch make_batch(const std::vector<SequenceSample>& samples,
                 const std::vector<std::size_t>& idx, const NormStats& input_norm,
                 const NormStats& target_norm) {
    if (idx.empty()) throw InsufficientLength("empty batch");
    const Eigen::Index T = samples[idx[0]].window.rows();
    const Eigen::Index D = samples[idx[0]].window.cols();
    const Eigen::Index B = static_cast<Eigen::Index>(idx.size());

    Batch batch;
    batch.x.assign(static_cast<std::size_t>(T), Eigen::MatrixXd(D, B));
    batch.y.resize(target_norm.mean.size(), B);
    for (Eigen::Index b = 0; b < B; ++b) {
        const SequenceSample& s = samples[idx[static_cast<std::size_t>(b)]];
        if (s.window.rows() != T || s.window.cols() != D)
            throw SchemaError("mixed window shapes in one batch");
        for (Eigen::Index t = 0; t < T; ++t)
            for (Eigen::Index d = 0; d < D; ++d)
                batch.x[static_cast<std::size_t>(t)](d, b) =
                    (s.window(t, d) - input_norm.mean(d)) / input_norm.std(d);
        batch.y.col(b) = target_norm.normalize(s.target);
    }
    return batch;
}

std::vector<Eigen::MatrixXd> make_dropout_masks(int steps, int hidden, int batch,
                                                double dropout, Rng& rng) {
    const double keep = 1.0 - dropout;
    std::vector<Eigen::MatrixXd> masks(static_cast<std::size_t>(steps));
    for (auto& mask : masks) {
        mask.resize(hidden, batch);
        for (int h = 0; h < hidden; ++h)
            for (int b = 0; b < batch; ++b)
                mask(h, b) = rng.uniform() < keep ? 1.0 / keep : 0.0;
    }
    return masks;
}

Eigen::MatrixXd lstm_forward(const LstmModel& m, const Batch& batch,
                             const std::vector<Eigen::MatrixXd>& masks) {
    LayerCache c1, c2;
    return forward_impl(m, batch, masks, c1, c2);
}

double lstm_loss_and_grad(const LstmModel& m, const Batch& batch,
                          const std::vector<Eigen::MatrixXd>& masks,
                          LstmGradients* grads) {
    const std::size_t T = batch.x.size();
    const Eigen::Index B = batch.y.cols();
    const Eigen::Index out = batch.y.rows();

    LayerCache c1, c2;
    const Eigen::MatrixXd y = forward_impl(m, batch, masks, c1, c2);
    const Eigen::MatrixXd r = y - batch.y;
    const double denom = static_cast<double>(out) * static_cast<double>(B);
    const double loss = r.squaredNorm() / denom;
    if (!grads) return loss;

    const Eigen::MatrixXd dy = (2.0 / denom) * r;
    grads->head_W = dy * c2.h[T].transpose();
    grads->head_b = dy.rowwise().sum();

    const int H = m.hidden();
    std::vector<Eigen::MatrixXd> dh2(T, Eigen::MatrixXd::Zero(H, B));
    dh2[T - 1] = m.head_W.transpose() * dy;
    std::vector<Eigen::MatrixXd> dx2;
    layer_backward(m.layer2, c2, dh2, grads->layer2, &dx2);

    std::vector<Eigen::MatrixXd> dh1(T);
    for (std::size_t t = 0; t < T; ++t)
        dh1[t] = masks.empty() ? dx2[t] : dx2[t].cwiseProduct(masks[t]);
    layer_backward(m.layer1, c1, dh1, grads->layer1, nullptr);
    return loss;
}

Vector6d lstm_predict(const LstmModel& m, const Eigen::MatrixXd& window) {
    if (window.cols() != m.input_dim())
        throw SchemaError("window width does not match the model input");
    const std::size_t T = static_cast<std::size_t>(window.rows());
    Batch batch;
    batch.x.resize(T);
    for (std::size_t t = 0; t < T; ++t)
        batch.x[t] = m.input_norm.normalize(window.row(static_cast<Eigen::Index>(t)).transpose());
    batch.y = Eigen::MatrixXd::Zero(m.output_dim(), 1);
    const Eigen::MatrixXd y = lstm_forward(m, batch, {});
    return m.target_norm.denormalize(y.col(0));
}

std::vector<Vector6d> lstm_predict_all(const LstmModel& m,
                                       const std::vector<SequenceSample>& samples) {
    std::vector<Vector6d> preds(samples.size());
    constexpr std::size_t chunk = 256;
    for (std::size_t start = 0; start < samples.size(); start += chunk) {
        const std::size_t stop = std::min(samples.size(), start + chunk);
        std::vector<std::size_t> idx(stop - start);
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = start + i;
        const Batch batch = make_batch(samples, idx, m.input_norm, m.target_norm);
        const Eigen::MatrixXd y = lstm_forward(m, batch, {});
        for (std::size_t i = 0; i < idx.size(); ++i)
            preds[start + i] = m.target_norm.denormalize(y.col(static_cast<Eigen::Index>(i)));
    }
    return preds;
}

double train_epoch(LstmModel& m, const std::vector<SequenceSample>& train,
                   const TrainConfig& cfg, double lr, Rng& rng) {
    if (train.empty()) throw InsufficientLength("no training samples");
    if (!cfg.valid()) throw ConfigError("invalid training configuration");

    std::vector<std::size_t> idx = iota_indices(train.size());
    rng.shuffle(idx);

    double weighted_loss = 0.0;
    for (std::size_t start = 0; start < idx.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
        const std::size_t stop =
            std::min(idx.size(), start + static_cast<std::size_t>(cfg.batch_size));
        const std::vector<std::size_t> batch_idx(idx.begin() + static_cast<std::ptrdiff_t>(start),
                                                 idx.begin() + static_cast<std::ptrdiff_t>(stop));
        const Batch batch = make_batch(train, batch_idx, m.input_norm, m.target_norm);
        std::vector<Eigen::MatrixXd> masks;
        if (cfg.dropout > 0.0)
            masks = make_dropout_masks(static_cast<int>(batch.x.size()), m.hidden(),
                                       static_cast<int>(batch_idx.size()), cfg.dropout, rng);

        LstmGradients grads;
        const double loss = lstm_loss_and_grad(m, batch, masks, &grads);
        if (!std::isfinite(loss)) throw NonFiniteLoss("non-finite batch loss");
        weighted_loss += loss * static_cast<double>(batch_idx.size());

        const double gnorm = std::sqrt(grad_sq_norm(grads));
        const double scale = gnorm > cfg.clip_norm ? cfg.clip_norm / gnorm : 1.0;
        apply_update(m, grads, lr * scale);
    }
    return weighted_loss / static_cast<double>(train.size());
}

double mse_normalized(const LstmModel& m, const std::vector<SequenceSample>& samples) {
    if (samples.empty()) throw InsufficientLength("no samples to evaluate");
    double weighted_loss = 0.0;
    constexpr std::size_t chunk = 256;
    for (std::size_t start = 0; start < samples.size(); start += chunk) {
        const std::size_t stop = std::min(samples.size(), start + chunk);
        std::vector<std::size_t> idx(stop - start);
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = start + i;
        const Batch batch = make_batch(samples, idx, m.input_norm, m.target_norm);
        weighted_loss +=
            lstm_loss_and_grad(m, batch, {}, nullptr) * static_cast<double>(idx.size());
    }
    return weighted_loss / static_cast<double>(samples.size());
}

FitResult fit(const std::vector<SequenceSample>& train,
              const std::vector<SequenceSample>& val, const TrainConfig& cfg) {
    if (!cfg.valid()) throw ConfigError("invalid training configuration");
    if (train.empty() || val.empty())
        throw InsufficientLength("training and validation splits must be nonempty");

    LstmModel m = make_model(kInputDim, kLstmHidden, kTargetDim, derive_seed(cfg.seed, 0));
    m.input_norm = input_norm_from(train);
    m.target_norm = target_norm_from(train);
    Rng rng(derive_seed(cfg.seed, 1));

    double lr = std::clamp(0.1 * cfg.lr_max, cfg.lr_min, cfg.lr_max);
    FitResult result;
    result.model = m;
    double best_val = std::numeric_limits<double>::infinity();
    int since_improve = 0;
    int plateaus_at_min = 0;
    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        const double train_mse = train_epoch(m, train, cfg, lr, rng);
        const double val_mse = mse_normalized(m, val);
        if (!std::isfinite(val_mse)) throw NonFiniteLoss("non-finite validation loss");
        result.history.epochs.push_back({train_mse, val_mse, lr});

        if (val_mse < best_val) {
            best_val = val_mse;
            result.model = m;
            result.history.best_epoch = epoch;
            since_improve = 0;
            plateaus_at_min = 0;
        } else {
            ++since_improve;
        }
        if (since_improve >= cfg.patience) {
            since_improve = 0;
            if (lr <= cfg.lr_min) {
                if (++plateaus_at_min >= 3) break;
            } else {
                lr = std::max(0.5 * lr, cfg.lr_min);
            }
        }
    }
    return result;
}

EvalReport evaluate_predictions(const std::vector<Vector6d>& preds,
                                const std::vector<SequenceSample>& samples,
                                const NormStats& target_norm) {
    if (preds.size() != samples.size())
        throw SchemaError("prediction and sample counts differ");
    if (target_norm.std.size() != 6)
        throw SchemaError("evaluation expects 6 target channels");
    EvalReport rep;
    rep.count = samples.size();
    if (samples.empty()) return rep;

    for (std::size_t i = 0; i < samples.size(); ++i) {
        const Vector6d err = preds[i] - samples[i].target;
        rep.mse += err.cwiseAbs2();
    }
    rep.mse /= static_cast<double>(samples.size());
    rep.mse_norm = rep.mse.cwiseQuotient(target_norm.std.cwiseAbs2());
    rep.aggregate = (rep.mse(0) + rep.mse(4) + rep.mse(5)) / 3.0;
    rep.aggregate_norm = (rep.mse_norm(0) + rep.mse_norm(4) + rep.mse_norm(5)) / 3.0;
    return rep;
}

EvalReport evaluate(const LstmModel& m, const std::vector<SequenceSample>& samples) {
    return evaluate_predictions(lstm_predict_all(m, samples), samples, m.target_norm);
}

std::map<double, EvalReport> evaluate_predictions_by_flow(
    const std::vector<Vector6d>& preds, const std::vector<SequenceSample>& samples,
    const NormStats& target_norm) {
    if (preds.size() != samples.size())
        throw SchemaError("prediction and sample counts differ");
    std::map<double, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < samples.size(); ++i) groups[samples[i].V_flow].push_back(i);

    std::map<double, EvalReport> out;
    for (const auto& [v, idx] : groups) {
        std::vector<Vector6d> p;
        std::vector<SequenceSample> s;
        p.reserve(idx.size());
        s.reserve(idx.size());
        for (std::size_t i : idx) {
            p.push_back(preds[i]);
            s.push_back(samples[i]);
        }
        out[v] = evaluate_predictions(p, s, target_norm);
    }
    return out;
}

std::map<double, EvalReport> evaluate_by_flow(const LstmModel& m,
                                              const std::vector<SequenceSample>& samples) {
    return evaluate_predictions_by_flow(lstm_predict_all(m, samples), samples,
                                        m.target_norm);
}

namespace {

void append_rowmajor(Eigen::VectorXd& out, Eigen::Index& pos, const Eigen::MatrixXd& M) {
    for (Eigen::Index i = 0; i < M.rows(); ++i)
        for (Eigen::Index j = 0; j < M.cols(); ++j) out(pos++) = M(i, j);
}

void read_rowmajor(const Eigen::VectorXd& in, Eigen::Index& pos, Eigen::MatrixXd& M) {
    for (Eigen::Index i = 0; i < M.rows(); ++i)
        for (Eigen::Index j = 0; j < M.cols(); ++j) M(i, j) = in(pos++);
}

Eigen::Index param_count(const LstmModel& m) {
    return m.layer1.W.size() + m.layer1.U.size() + m.layer1.b.size() + m.layer2.W.size() +
           m.layer2.U.size() + m.layer2.b.size() + m.head_W.size() + m.head_b.size();
}

} // namespace

Eigen::VectorXd flatten_params(const LstmModel& m) {
    Eigen::VectorXd out(param_count(m));
    Eigen::Index pos = 0;
    append_rowmajor(out, pos, m.layer1.W);
    append_rowmajor(out, pos, m.layer1.U);
    append_rowmajor(out, pos, m.layer1.b);
    append_rowmajor(out, pos, m.layer2.W);
    append_rowmajor(out, pos, m.layer2.U);
    append_rowmajor(out, pos, m.layer2.b);
    append_rowmajor(out, pos, m.head_W);
    append_rowmajor(out, pos, m.head_b);
    return out;
}

void set_params(LstmModel& m, const Eigen::VectorXd& theta) {
    if (theta.size() != param_count(m))
        throw SchemaError("parameter vector size does not match the model");
    Eigen::Index pos = 0;
    Eigen::MatrixXd b1 = m.layer1.b, b2 = m.layer2.b, hb = m.head_b;
    read_rowmajor(theta, pos, m.layer1.W);
    read_rowmajor(theta, pos, m.layer1.U);
    read_rowmajor(theta, pos, b1);
    read_rowmajor(theta, pos, m.layer2.W);
    read_rowmajor(theta, pos, m.layer2.U);
    read_rowmajor(theta, pos, b2);
    read_rowmajor(theta, pos, m.head_W);
    read_rowmajor(theta, pos, hb);
    m.layer1.b = b1.col(0);
    m.layer2.b = b2.col(0);
    m.head_b = hb.col(0);
}

Eigen::VectorXd flatten_grads(const LstmGradients& g) {
    Eigen::Index n = g.layer1.W.size() + g.layer1.U.size() + g.layer1.b.size() +
                     g.layer2.W.size() + g.layer2.U.size() + g.layer2.b.size() +
                     g.head_W.size() + g.head_b.size();
    Eigen::VectorXd out(n);
    Eigen::Index pos = 0;
    append_rowmajor(out, pos, g.layer1.W);
    append_rowmajor(out, pos, g.layer1.U);
    append_rowmajor(out, pos, g.layer1.b);
    append_rowmajor(out, pos, g.layer2.W);
    append_rowmajor(out, pos, g.layer2.U);
    append_rowmajor(out, pos, g.layer2.b);
    append_rowmajor(out, pos, g.head_W);
    append_rowmajor(out, pos, g.head_b);
    return out;
}

NormStats input_norm_from(const std::vector<SequenceSample>& samples) {
    if (samples.empty()) throw InsufficientLength("no samples for normalization");
    const Eigen::Index D = samples.front().window.cols();
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(D);
    Eigen::VectorXd sq = Eigen::VectorXd::Zero(D);
    double n = 0.0;
    for (const SequenceSample& s : samples) {
        for (Eigen::Index t = 0; t < s.window.rows(); ++t) {
            sum += s.window.row(t).transpose();
            sq += s.window.row(t).cwiseAbs2().transpose();
        }
        n += static_cast<double>(s.window.rows());
    }
    NormStats out;
    out.mean = sum / n;
    out.std = (sq / n - out.mean.cwiseAbs2()).cwiseMax(0.0).cwiseSqrt().cwiseMax(1e-12);
    return out;
}

NormStats target_norm_from(const std::vector<SequenceSample>& samples) {
    if (samples.empty()) throw InsufficientLength("no samples for normalization");
    const Eigen::Index D = samples.front().target.size();
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(D);
    Eigen::VectorXd sq = Eigen::VectorXd::Zero(D);
    for (const SequenceSample& s : samples) {
        sum += s.target;
        sq += s.target.cwiseAbs2();
    }
    const double n = static_cast<double>(samples.size());
    NormStats out;
    out.mean = sum / n;
    out.std = (sq / n - out.mean.cwiseAbs2()).cwiseMax(0.0).cwiseSqrt().cwiseMax(1e-12);
    return out;
}

namespace {

constexpr char kModelMagic[8] = {'H', 'Q', 'L', 'S', 'T', 'M', '0', '1'};

void write_mat(std::ofstream& out, const Eigen::MatrixXd& M) {
    for (Eigen::Index i = 0; i < M.rows(); ++i)
        for (Eigen::Index j = 0; j < M.cols(); ++j) {
            const double v = M(i, j);
            out.write(reinterpret_cast<const char*>(&v), sizeof(v));
        }
}

void read_mat(std::ifstream& in, Eigen::MatrixXd& M) {
    for (Eigen::Index i = 0; i < M.rows(); ++i)
        for (Eigen::Index j = 0; j < M.cols(); ++j) {
            double v;
            in.read(reinterpret_cast<char*>(&v), sizeof(v));
            M(i, j) = v;
        }
}

} // namespace

void save_model(const LstmModel& m, const std::string& path) {
    if (!m.dims_consistent()) throw SchemaError("refusing to save an inconsistent model");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out.write(kModelMagic, sizeof(kModelMagic));
    const std::int32_t dims[3] = {static_cast<std::int32_t>(m.input_dim()),
                                  static_cast<std::int32_t>(m.hidden()),
                                  static_cast<std::int32_t>(m.output_dim())};
    out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    write_mat(out, m.layer1.W);
    write_mat(out, m.layer1.U);
    write_mat(out, m.layer1.b);
    write_mat(out, m.layer2.W);
    write_mat(out, m.layer2.U);
    write_mat(out, m.layer2.b);
    write_mat(out, m.head_W);
    write_mat(out, m.head_b);
    write_mat(out, m.input_norm.mean);
    write_mat(out, m.input_norm.std);
    write_mat(out, m.target_norm.mean);
    write_mat(out, m.target_norm.std);
    if (!out) throw IoError("write failed for " + path);
}

LstmModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kModelMagic, sizeof(magic)) != 0)
        throw SchemaError("not a model file: " + path);
    std::int32_t dims[3];
    in.read(reinterpret_cast<char*>(dims), sizeof(dims));
    if (!in || dims[0] < 1 || dims[1] < 1 || dims[2] < 1)
        throw SchemaError("bad model dimensions in " + path);
    const int D = dims[0], H = dims[1], out = dims[2];

    LstmModel m;
    m.layer1.W.resize(4 * H, D);
    m.layer1.U.resize(4 * H, H);
    m.layer1.b.resize(4 * H);
    m.layer2.W.resize(4 * H, H);
    m.layer2.U.resize(4 * H, H);
    m.layer2.b.resize(4 * H);
    m.head_W.resize(out, H);
    m.head_b.resize(out);
    m.input_norm.mean.resize(D);
    m.input_norm.std.resize(D);
    m.target_norm.mean.resize(out);
    m.target_norm.std.resize(out);

    Eigen::MatrixXd b1(4 * H, 1), b2(4 * H, 1), hb(out, 1), im(D, 1), is(D, 1), tm(out, 1),
        ts(out, 1);
    read_mat(in, m.layer1.W);
    read_mat(in, m.layer1.U);
    read_mat(in, b1);
    read_mat(in, m.layer2.W);
    read_mat(in, m.layer2.U);
    read_mat(in, b2);
    read_mat(in, m.head_W);
    read_mat(in, hb);
    read_mat(in, im);
    read_mat(in, is);
    read_mat(in, tm);
    read_mat(in, ts);
    if (!in) throw SchemaError("model file truncated: " + path);
    in.peek();
    if (!in.eof()) throw SchemaError("trailing bytes in model file: " + path);

    m.layer1.b = b1.col(0);
    m.layer2.b = b2.col(0);
    m.head_b = hb.col(0);
    m.input_norm.mean = im.col(0);
    m.input_norm.std = is.col(0);
    m.target_norm.mean = tm.col(0);
    m.target_norm.std = ts.col(0);
    if (!m.dims_consistent()) throw SchemaError("inconsistent model file: " + path);
    return m;
}

} // namespace hydroquad
