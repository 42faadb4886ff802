#include <doctest.h>

#include <cmath>
#include <fstream>

#include "hydroquad/errors.hpp"
#include "hydroquad/lstm.hpp"
#include "hydroquad/synth.hpp"
#include "oracles.hpp"

using namespace hydroquad;

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Small real dataset for training behavior tests.
std::vector<SequenceSample> synth_samples() {
    SynthGrid g;
    g.theta_H_min = {deg2rad(0.0)};
    g.theta_K_max = {deg2rad(-40.0)};
    g.freq = {0.5};
    g.phi = {deg2rad(60.0)};
    g.V_flow = {0.2};
    g.cycles = 2;
    return make_windows(synth_generate(g, {}, 7), kWindowLen);
}

} // namespace

TEST_CASE("an all-zero network predicts the training-target mean") {
    LstmModel m = make_model(kInputDim, 8, kTargetDim, 1);
    set_params(m, Eigen::VectorXd::Zero(flatten_params(m).size()));
    m.target_norm.mean = (Eigen::VectorXd(6) << 0.4, -1.0, 2.0, 0.0, 3.5, -0.2).finished();
    m.target_norm.std = Eigen::VectorXd::Constant(6, 2.0);

    const Eigen::MatrixXd window = Eigen::MatrixXd::Random(kWindowLen, kInputDim);
    const Vector6d y = lstm_predict(m, window);
    for (int c = 0; c < 6; ++c)
        CHECK(y(c) == doctest::Approx(m.target_norm.mean(c)).epsilon(1e-15));
}

TEST_CASE("inference is deterministic") {
    const LstmModel m = make_model(kInputDim, 16, kTargetDim, 9);
    Eigen::MatrixXd window = Eigen::MatrixXd::Random(kWindowLen, kInputDim);
    const Vector6d a = lstm_predict(m, window);
    const Vector6d b = lstm_predict(m, window);
    CHECK((a - b).norm() == 0.0);
}

TEST_CASE("a one-unit network matches a transcribed scalar recurrence") {
    LstmModel m = make_model(1, 1, 1, 3);
    // Gate rows are stacked input, forget, cell, output.
    m.layer1.W << 0.5, -0.3, 0.8, 0.2;
    m.layer1.U << 0.1, 0.4, -0.2, 0.3;
    m.layer1.b << 0.05, 1.0, -0.1, 0.2;
    m.layer2.W << -0.4, 0.6, 0.7, -0.1;
    m.layer2.U << 0.2, -0.5, 0.3, 0.6;
    m.layer2.b << 0.15, 0.9, 0.0, -0.3;
    m.head_W << 1.7;
    m.head_b << 0.25;

    const double xs[2] = {0.3, -0.6};
    double h1 = 0.0, c1 = 0.0, h2 = 0.0, c2 = 0.0;
    for (double x : xs) {
        const double i1 = sigmoid(0.5 * x + 0.1 * h1 + 0.05);
        const double f1 = sigmoid(-0.3 * x + 0.4 * h1 + 1.0);
        const double g1 = std::tanh(0.8 * x + -0.2 * h1 + -0.1);
        const double o1 = sigmoid(0.2 * x + 0.3 * h1 + 0.2);
        c1 = f1 * c1 + i1 * g1;
        h1 = o1 * std::tanh(c1);

        const double i2 = sigmoid(-0.4 * h1 + 0.2 * h2 + 0.15);
        const double f2 = sigmoid(0.6 * h1 + -0.5 * h2 + 0.9);
        const double g2 = std::tanh(0.7 * h1 + 0.3 * h2 + 0.0);
        const double o2 = sigmoid(-0.1 * h1 + 0.6 * h2 + -0.3);
        c2 = f2 * c2 + i2 * g2;
        h2 = o2 * std::tanh(c2);
    }
    const double expected = 1.7 * h2 + 0.25;

    Eigen::MatrixXd window(2, 1);
    window << xs[0], xs[1];
    const Vector6d got = lstm_predict(m, window);
    CHECK(got(0) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("backpropagation matches central finite differences") {
    // Two stacked width-4 layers on random data; every parameter class is
    // sampled. The production-size check runs the same comparison wider.
    LstmModel m = make_model(3, 4, 2, 42);
    Rng rng(43);

    std::vector<SequenceSample> raw;
    for (int s = 0; s < 3; ++s) {
        SequenceSample smp;
        smp.window.resize(8, 3);
        for (int r = 0; r < 8; ++r)
            for (int c = 0; c < 3; ++c) smp.window(r, c) = rng.normal();
        smp.target.setZero();
        raw.push_back(smp);
    }
    Batch batch;
    batch.x.assign(8, Eigen::MatrixXd(3, 3));
    batch.y.resize(2, 3);
    for (int s = 0; s < 3; ++s) {
        for (int t = 0; t < 8; ++t)
            for (int c = 0; c < 3; ++c)
                batch.x[static_cast<std::size_t>(t)](c, s) = raw[static_cast<std::size_t>(s)].window(t, c);
        batch.y(0, s) = rng.normal();
        batch.y(1, s) = rng.normal();
    }

    LstmGradients grads;
    lstm_loss_and_grad(m, batch, {}, &grads);
    const Eigen::VectorXd g = flatten_grads(grads);
    Eigen::VectorXd theta = flatten_params(m);
    REQUIRE(g.size() == theta.size());

    const double eps = 1e-5;
    double max_rel = 0.0;
    for (int trial = 0; trial < 40; ++trial) {
        const Eigen::Index i =
            static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(theta.size())));
        LstmModel probe = m;
        Eigen::VectorXd tp = theta;
        tp(i) += eps;
        set_params(probe, tp);
        const double lp = lstm_loss_and_grad(probe, batch, {}, nullptr);
        tp(i) = theta(i) - eps;
        set_params(probe, tp);
        const double lm = lstm_loss_and_grad(probe, batch, {}, nullptr);
        const double fd = (lp - lm) / (2.0 * eps);
        const double rel = std::abs(fd - g(i)) /
                           std::max({std::abs(fd), std::abs(g(i)), 1e-6});
        max_rel = std::max(max_rel, rel);
    }
    CHECK(max_rel < 1e-4);
}

TEST_CASE("gradients flow through the dropout masks unchanged in expectation") {
    LstmModel m = make_model(3, 4, 2, 4);
    Rng rng(5);
    Batch batch;
    batch.x.assign(6, Eigen::MatrixXd(3, 2));
    batch.y.resize(2, 2);
    for (auto& x : batch.x)
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 2; ++c) x(r, c) = rng.normal();
    batch.y << 0.3, -0.2, 0.1, 0.7;

    const auto masks = make_dropout_masks(6, 4, 2, 0.5, rng);
    LstmGradients grads;
    lstm_loss_and_grad(m, batch, masks, &grads);
    const Eigen::VectorXd g = flatten_grads(grads);
    Eigen::VectorXd theta = flatten_params(m);

    const double eps = 1e-5;
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::Index i =
            static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(theta.size())));
        LstmModel probe = m;
        Eigen::VectorXd tp = theta;
        tp(i) += eps;
        set_params(probe, tp);
        const double lp = lstm_loss_and_grad(probe, batch, masks, nullptr);
        tp(i) = theta(i) - eps;
        set_params(probe, tp);
        const double lm = lstm_loss_and_grad(probe, batch, masks, nullptr);
        const double fd = (lp - lm) / (2.0 * eps);
        const double rel = std::abs(fd - g(i)) /
                           std::max({std::abs(fd), std::abs(g(i)), 1e-6});
        CHECK(rel < 1e-4);
    }
}

TEST_CASE("dropout masks are inverted, deterministic and mean-preserving") {
    const double p = 0.21;
    Rng rng_a(77), rng_b(77);
    const auto a = make_dropout_masks(16, 64, 32, p, rng_a);
    const auto b = make_dropout_masks(16, 64, 32, p, rng_b);
    REQUIRE(a.size() == 16);

    const double keep = 1.0 / (1.0 - p);
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t t = 0; t < a.size(); ++t) {
        CHECK((a[t] - b[t]).norm() == 0.0);
        for (Eigen::Index i = 0; i < a[t].size(); ++i) {
            const double v = a[t].data()[i];
            CHECK((v == 0.0 || v == keep));
            sum += v;
            ++n;
        }
    }
    CHECK(sum / static_cast<double>(n) == doctest::Approx(1.0).epsilon(0.02));

    Rng rng_c(78);
    const auto none = make_dropout_masks(4, 8, 4, 0.0, rng_c);
    for (const auto& mmat : none)
        for (Eigen::Index i = 0; i < mmat.size(); ++i) CHECK(mmat.data()[i] == 1.0);
}

TEST_CASE("a zero learning rate leaves the parameters untouched") {
    const auto samples = synth_samples();
    LstmModel m = make_model(kInputDim, kLstmHidden, kTargetDim, 2);
    m.input_norm = input_norm_from(samples);
    m.target_norm = target_norm_from(samples);
    const Eigen::VectorXd before = flatten_params(m);

    TrainConfig cfg;
    cfg.dropout = 0.0;
    Rng rng(1);
    train_epoch(m, samples, cfg, 0.0, rng);
    CHECK((flatten_params(m) - before).norm() == 0.0);
}

TEST_CASE("a handful of samples can be memorized") {
    auto samples = synth_samples();
    samples.resize(3);
    TrainConfig cfg;
    cfg.dropout = 0.0;
    cfg.batch_size = 3;
    cfg.max_epochs = 2000;
    cfg.patience = 2000;
    cfg.lr_max = 1.0; // start rate 0.1
    cfg.seed = 4;
    const FitResult r = fit(samples, samples, cfg);
    REQUIRE(!r.history.epochs.empty());
    const double initial = r.history.epochs.front().train_mse;
    double best = initial;
    for (const EpochStats& e : r.history.epochs) best = std::min(best, e.val_mse);
    CHECK(best < 0.01 * initial);
}

TEST_CASE("the rate schedule replays exactly from the validation history") {
    // Pure-noise targets with disjoint validation noise, so validation
    // stops improving early and plateaus actually occur.
    auto samples = synth_samples();
    samples.resize(24);
    Rng noise(11);
    for (auto& s : samples)
        for (int c = 0; c < 6; ++c) s.target(c) = noise.normal();
    std::vector<SequenceSample> val(samples.begin() + 16, samples.end());
    samples.resize(16);

    TrainConfig cfg;
    cfg.dropout = 0.0;
    cfg.batch_size = 8;
    cfg.max_epochs = 40;
    cfg.patience = 2;
    cfg.lr_min = 0.004;
    cfg.lr_max = 0.1;
    cfg.seed = 6;
    const FitResult r = fit(samples, val, cfg);
    const auto& eps = r.history.epochs;
    REQUIRE(!eps.empty());

    double lr = std::clamp(0.1 * cfg.lr_max, cfg.lr_min, cfg.lr_max);
    double best = std::numeric_limits<double>::infinity();
    int best_epoch = -1;
    int since = 0, at_min = 0;
    for (std::size_t e = 0; e < eps.size(); ++e) {
        CHECK(eps[e].lr == lr);
        CHECK(eps[e].lr >= cfg.lr_min);
        CHECK(eps[e].lr <= cfg.lr_max);
        if (e > 0) CHECK(eps[e].lr <= eps[e - 1].lr); // only ever halves
        if (eps[e].val_mse < best) {
            best = eps[e].val_mse;
            best_epoch = static_cast<int>(e);
            since = 0;
            at_min = 0;
        } else {
            ++since;
        }
        if (since >= cfg.patience) {
            since = 0;
            if (lr <= cfg.lr_min) {
                if (++at_min >= 3) {
                    CHECK(e == eps.size() - 1); // early stop fired here
                    break;
                }
            } else {
                lr = std::max(0.5 * lr, cfg.lr_min);
            }
        }
    }
    CHECK(r.history.best_epoch == best_epoch);
    // The hard targets actually triggered at least one halving.
    CHECK(eps.back().lr < eps.front().lr);
}

TEST_CASE("training rejects non-finite targets immediately") {
    auto samples = synth_samples();
    samples.resize(4);
    samples[2].target(1) = std::nan("");
    LstmModel m = make_model(kInputDim, 8, kTargetDim, 3);
    TrainConfig cfg;
    cfg.dropout = 0.0;
    Rng rng(2);
    CHECK_THROWS_AS(train_epoch(m, samples, cfg, 0.01, rng), NonFiniteLoss);
}

TEST_CASE("normalization statistics and round trip") {
    const auto samples = synth_samples();
    const NormStats in = input_norm_from(samples);
    const NormStats tg = target_norm_from(samples);
    REQUIRE(in.mean.size() == 5);
    REQUIRE(tg.mean.size() == 6);

    // Independent single-pass moments over the pooled window rows.
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(5), sum2 = Eigen::VectorXd::Zero(5);
    std::size_t rows = 0;
    for (const auto& s : samples) {
        for (Eigen::Index r = 0; r < s.window.rows(); ++r) {
            sum += s.window.row(r).transpose();
            sum2 += s.window.row(r).transpose().cwiseAbs2();
            ++rows;
        }
    }
    const Eigen::VectorXd mean = sum / static_cast<double>(rows);
    for (int c = 0; c < 5; ++c) {
        CHECK(in.mean(c) == doctest::Approx(mean(c)).epsilon(1e-9));
        const double var = sum2(c) / static_cast<double>(rows) - mean(c) * mean(c);
        CHECK(in.std(c) == doctest::Approx(std::sqrt(std::max(var, 0.0))).scale(1.0).epsilon(1e-6));
    }

    Rng rng(10);
    for (int i = 0; i < 50; ++i) {
        Eigen::VectorXd x(6);
        for (int c = 0; c < 6; ++c) x(c) = rng.normal(0.0, 3.0);
        const Eigen::VectorXd back = tg.denormalize(tg.normalize(x));
        CHECK((back - x).cwiseAbs().maxCoeff() < 1e-12);
    }

    // Constant channels get the floored deviation and normalize to zero.
    std::vector<SequenceSample> flat = samples;
    for (auto& s : flat) s.target.setConstant(2.5);
    const NormStats ct = target_norm_from(flat);
    for (int c = 0; c < 6; ++c) {
        CHECK(ct.std(c) >= 1e-12);
        CHECK(ct.normalize(flat[0].target)(c) == 0.0);
    }
}

TEST_CASE("evaluation is zero for injected truth and variance for a zero predictor") {
    const auto samples = synth_samples();
    std::vector<Vector6d> truth, zeros;
    for (const auto& s : samples) {
        truth.push_back(s.target);
        zeros.push_back(Vector6d::Zero());
    }
    const NormStats tg = target_norm_from(samples);

    const EvalReport perfect = evaluate_predictions(truth, samples, tg);
    CHECK(perfect.aggregate == 0.0);
    CHECK(perfect.mse.maxCoeff() == 0.0);

    const EvalReport zero = evaluate_predictions(zeros, samples, tg);
    for (int c = 0; c < 6; ++c) {
        double sum = 0.0, sum2 = 0.0;
        for (const auto& s : samples) {
            sum += s.target(c);
            sum2 += s.target(c) * s.target(c);
        }
        const double n = static_cast<double>(samples.size());
        const double mean = sum / n;
        const double expected = (sum2 / n - mean * mean) + mean * mean;
        CHECK(zero.mse(c) == doctest::Approx(expected).epsilon(1e-9));
    }
    // Aggregate averages the surge-relevant channels tau_x, f_y, f_z.
    CHECK(zero.aggregate ==
          doctest::Approx((zero.mse(0) + zero.mse(4) + zero.mse(5)) / 3.0).epsilon(1e-12));
}

TEST_CASE("per-speed evaluation partitions by the set flow speed") {
    SynthGrid g;
    g.theta_H_min = {deg2rad(0.0)};
    g.theta_K_max = {deg2rad(-40.0)};
    g.freq = {0.5};
    g.phi = {deg2rad(60.0)};
    g.V_flow = {0.0, 0.2};
    g.cycles = 2;
    const auto samples = make_windows(synth_generate(g, {}, 7), kWindowLen);
    const LstmModel m = [&] {
        LstmModel mm = make_model(kInputDim, 8, kTargetDim, 5);
        mm.input_norm = input_norm_from(samples);
        mm.target_norm = target_norm_from(samples);
        return mm;
    }();
    const auto by_flow = evaluate_by_flow(m, samples);
    REQUIRE(by_flow.size() == 2);
    CHECK(by_flow.count(0.0) == 1);
    CHECK(by_flow.count(0.2) == 1);
    std::size_t total = 0;
    for (const auto& [v, rep] : by_flow) total += rep.count;
    CHECK(total == samples.size());
}

TEST_CASE("models survive a binary round trip bit for bit") {
    const std::string dir = testutil::scratch_dir("lstm_io");
    const auto samples = synth_samples();
    LstmModel m = make_model(kInputDim, 16, kTargetDim, 12);
    m.input_norm = input_norm_from(samples);
    m.target_norm = target_norm_from(samples);

    const std::string path = dir + "/model.bin";
    save_model(m, path);
    const LstmModel back = load_model(path);

    CHECK((flatten_params(back) - flatten_params(m)).norm() == 0.0);
    CHECK((back.input_norm.mean - m.input_norm.mean).norm() == 0.0);
    CHECK((back.target_norm.std - m.target_norm.std).norm() == 0.0);

    const Eigen::MatrixXd window = Eigen::MatrixXd::Random(kWindowLen, kInputDim);
    CHECK((lstm_predict(back, window) - lstm_predict(m, window)).norm() == 0.0);
}

TEST_CASE("corrupt model files are rejected") {
    const std::string dir = testutil::scratch_dir("lstm_io_bad");
    CHECK_THROWS_AS(load_model(dir + "/missing.bin"), IoError);

    const std::string garbage = dir + "/garbage.bin";
    std::ofstream(garbage) << "definitely not a model";
    CHECK_THROWS_AS(load_model(garbage), SchemaError);

    // Truncate a valid file.
    LstmModel m = make_model(kInputDim, 8, kTargetDim, 1);
    const std::string path = dir + "/model.bin";
    save_model(m, path);
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), {});
    in.close();
    std::ofstream(dir + "/short.bin", std::ios::binary)
        << bytes.substr(0, bytes.size() / 2);
    CHECK_THROWS_AS(load_model(dir + "/short.bin"), SchemaError);
}

TEST_CASE("training twice with one seed gives identical histories and weights") {
    auto samples = synth_samples();
    samples.resize(32);
    std::vector<SequenceSample> val(samples.begin() + 24, samples.end());
    samples.resize(24);

    TrainConfig cfg;
    cfg.batch_size = 8;
    cfg.max_epochs = 3;
    cfg.seed = 21;
    const FitResult a = fit(samples, val, cfg);
    const FitResult b = fit(samples, val, cfg);
    REQUIRE(a.history.epochs.size() == b.history.epochs.size());
    for (std::size_t e = 0; e < a.history.epochs.size(); ++e) {
        CHECK(a.history.epochs[e].train_mse == b.history.epochs[e].train_mse);
        CHECK(a.history.epochs[e].val_mse == b.history.epochs[e].val_mse);
        CHECK(a.history.epochs[e].lr == b.history.epochs[e].lr);
    }
    CHECK((flatten_params(a.model) - flatten_params(b.model)).norm() == 0.0);
}
