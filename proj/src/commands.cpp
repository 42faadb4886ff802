#include "hydroquad/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "hydroquad/errors.hpp"
#include "hydroquad/manifest.hpp"

namespace hydroquad {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr double kStationSpacing = 0.25; // m, straight-swim sampling interval

std::string g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string gshort(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

[[noreturn]] void stage_fail(const std::string& stage, const std::string& what) {
    throw StageError("[" + stage + "] " + what);
}

template <typename F>
auto run_stage(const std::string& stage, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        stage_fail(stage, e.what());
    }
}

void ensure_out_dir(const std::string& out_dir) {
    if (out_dir.empty()) stage_fail("setup", "output directory not set");
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) stage_fail("setup", "cannot create output directory " + out_dir);
}

std::string resolve_path(const std::string& flag, const std::string& from_config,
                         const char* what) {
    if (!flag.empty()) return flag;
    if (!from_config.empty()) return from_config;
    stage_fail("setup", std::string(what) + " path not set (flag or paths section)");
}

std::string join(const std::string& dir, const char* name) {
    return (fs::path(dir) / name).string();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << text;
    if (!out) throw IoError("write error on " + path);
}

json report_json(const EvalReport& r) {
    json j;
    j["count"] = r.count;
    j["mse"] = std::vector<double>(r.mse.data(), r.mse.data() + 6);
    j["mse_norm"] = std::vector<double>(r.mse_norm.data(), r.mse_norm.data() + 6);
    j["aggregate"] = r.aggregate;
    j["aggregate_norm"] = r.aggregate_norm;
    return j;
}

json gait_json(const GaitParams& g) {
    return {{"theta_H_min_deg", rad2deg(g.theta_H_min)},
            {"theta_K_max_deg", rad2deg(g.theta_K_max)},
            {"freq", g.freq},
            {"phi_deg", rad2deg(g.phi)},
            {"alpha_deg",
             {rad2deg(g.alpha[0]), rad2deg(g.alpha[1]), rad2deg(g.alpha[2]),
              rad2deg(g.alpha[3])}}};
}

/// Shared front half of train and compare: raw log to split windows.
struct PipelineData {
    std::vector<RecordSet> sets;
    SplitResult split;
    std::map<int, double> fs_by_set;
};

PipelineData run_pipeline(const RunConfig& cfg, const std::string& data_path) {
    PipelineData p;
    p.sets = run_stage("load", [&] { return load_force_log(data_path); });
    run_stage("filter", [&] { lowpass_wrench_channels(p.sets, cfg.pipeline.cutoff_hz); });
    if (cfg.pipeline.interpolate) {
        p.sets = run_stage("interpolate", [&] {
            return augment_with_interpolation(p.sets, cfg.pipeline.interp_targets,
                                              cfg.pipeline.cutoff_hz);
        });
    }
    const std::vector<SequenceSample> samples =
        run_stage("window", [&] { return make_windows(p.sets); });
    p.split = run_stage("split", [&] { return split_dataset(samples, cfg.seed); });
    for (const RecordSet& rs : p.sets) p.fs_by_set[rs.id] = rs.fs;
    return p;
}

std::vector<Vector6d> ef_predictions(const RunConfig& cfg,
                                     const std::vector<SequenceSample>& samples,
                                     const std::map<int, double>& fs_by_set) {
    std::vector<Vector6d> preds;
    preds.reserve(samples.size());
    for (const SequenceSample& s : samples)
        preds.push_back(
            ef_window_prediction(cfg.linkage, cfg.ef, s.window, fs_by_set.at(s.set_id)));
    return preds;
}

/// Squared error averaged over the channels the web actually loads
/// (tau_x, f_y, f_z), per window.
double window_error(const Vector6d& pred, const Vector6d& target) {
    constexpr int ch[3] = {0, 4, 5};
    double e = 0.0;
    for (int c : ch) {
        const double d = pred[c] - target[c];
        e += d * d;
    }
    return e / 3.0;
}

double quantile_sorted(const std::vector<double>& x, double q) {
    const double pos = q * static_cast<double>(x.size() - 1);
    const std::size_t i = static_cast<std::size_t>(pos);
    if (i + 1 >= x.size()) return x.back();
    const double frac = pos - static_cast<double>(i);
    return x[i] * (1.0 - frac) + x[i + 1] * frac;
}

struct BoxStats {
    std::size_t count = 0;
    double mean = 0.0, median = 0.0, q1 = 0.0, q3 = 0.0;
    double whisker_lo = 0.0, whisker_hi = 0.0;
    std::size_t outliers = 0;
};

BoxStats box_stats(std::vector<double> x) {
    BoxStats b;
    if (x.empty()) return b;
    std::sort(x.begin(), x.end());
    b.count = x.size();
    for (double v : x) b.mean += v;
    b.mean /= static_cast<double>(x.size());
    b.median = quantile_sorted(x, 0.5);
    b.q1 = quantile_sorted(x, 0.25);
    b.q3 = quantile_sorted(x, 0.75);
    const double iqr = b.q3 - b.q1;
    const double lo_fence = b.q1 - 1.5 * iqr;
    const double hi_fence = b.q3 + 1.5 * iqr;
    b.whisker_lo = b.whisker_hi = b.median;
    for (double v : x) {
        if (v >= lo_fence) {
            b.whisker_lo = v;
            break;
        }
    }
    for (auto it = x.rbegin(); it != x.rend(); ++it) {
        if (*it <= hi_fence) {
            b.whisker_hi = *it;
            break;
        }
    }
    for (double v : x) b.outliers += (v < lo_fence || v > hi_fence) ? 1 : 0;
    return b;
}

const LstmModel* load_model_if_lstm(const CommandArgs& a, LstmModel& storage) {
    if (a.model_tag == "ef") return nullptr;
    if (a.model_tag != "lstm")
        stage_fail("setup", "model tag must be \"ef\" or \"lstm\", got \"" + a.model_tag + "\"");
    const std::string path = resolve_path(a.model_path, a.cfg.paths.model, "model");
    storage = run_stage("model", [&] { return load_model(path); });
    return &storage;
}

json simulate_summary(const Trajectory& traj, SimMode mode, const BodyConfig& body) {
    const SimState& last = traj.states.back();
    const Eigen::Vector3d obj = evaluate_objectives(traj, mode, body.dt);
    json j;
    j["model"] = traj.model_tag;
    j["mode"] = mode == SimMode::straight ? "straight" : "turn";
    j["t_final"] = last.t;
    j["x_final"] = last.x;
    j["y_final"] = last.y;
    j["distance"] = std::hypot(last.x, last.y);
    j["theta_yaw_final"] = last.theta_yaw;
    j["objectives"] = {obj[0], obj[1], obj[2]};
    if (mode == SimMode::straight) {
        j["yaw_error"] = std::abs(last.theta_yaw);
        const StationStats st = lateral_mae(traj, kStationSpacing, body.finish_distance);
        j["stations"] = st.stations;
        j["station_spacing"] = kStationSpacing;
        j["mae_x"] = st.mae_x;
    } else {
        const int dir = turn_direction(traj);
        j["direction"] = dir;
        j["yaw_error"] = std::abs(last.theta_yaw - 2.0 * M_PI * dir);
        std::vector<Eigen::Vector2d> pts;
        pts.reserve(traj.states.size());
        for (const SimState& s : traj.states) pts.emplace_back(s.x, s.y);
        const CircleFit c = fit_circle(pts);
        j["turn_radius"] = c.r;
        j["turn_center"] = {c.cx, c.cy};
    }
    return j;
}

} // namespace

int cmd_synth(const CommandArgs& a) {
    ensure_out_dir(a.out_dir);
    const std::vector<RecordSet> sets = run_stage("generate", [&] {
        return synth_generate(a.cfg.grid, a.cfg.noise, a.cfg.seed, a.cfg.linkage, a.cfg.ef);
    });
    const std::string log_path = join(a.out_dir, "force_log.csv");
    run_stage("write",
              [&] { save_force_log(log_path, sets, synth_meta(a.cfg.noise, a.cfg.seed)); });

    std::map<std::string, std::string> meta;
    meta["command"] = "synth";
    meta["seed"] = std::to_string(a.cfg.seed);
    meta["sets"] = std::to_string(sets.size());
    meta["groups"] = std::to_string(a.cfg.grid.cell_count());
    meta["fs"] = gshort(a.cfg.grid.fs);
    meta["cycles"] = std::to_string(a.cfg.grid.cycles);
    meta["grid"] = std::to_string(a.cfg.grid.theta_H_min.size()) + "x" +
                   std::to_string(a.cfg.grid.theta_K_max.size()) + "x" +
                   std::to_string(a.cfg.grid.freq.size()) + "x" +
                   std::to_string(a.cfg.grid.phi.size()) + " cells x " +
                   std::to_string(a.cfg.grid.V_flow.size()) + " speeds";
    meta["generator"] = synth_meta(a.cfg.noise, a.cfg.seed);
    std::vector<ManifestEntry> entries;
    entries.push_back(manifest_entry(a.out_dir, log_path, "output"));
    run_stage("write", [&] { write_manifest(join(a.out_dir, "manifest.json"), meta, entries); });

    std::printf("synth: %zu sets (%zu gait cells) -> %s\n", sets.size(),
                a.cfg.grid.cell_count(), log_path.c_str());
    return 0;
}

int cmd_train(const CommandArgs& a) {
    ensure_out_dir(a.out_dir);
    const std::string data = resolve_path(a.data_path, a.cfg.paths.data, "data");
    PipelineData p = run_pipeline(a.cfg, data);
    std::printf("train: %zu sets -> %zu/%zu/%zu train/val/test windows\n", p.sets.size(),
                p.split.train.size(), p.split.val.size(), p.split.test.size());

    TrainConfig tc = a.cfg.pipeline.train;
    tc.seed = a.cfg.seed;
    const FitResult res =
        run_stage("train", [&] { return fit(p.split.train, p.split.val, tc); });
    const std::string model_path = join(a.out_dir, "model.bin");
    run_stage("write", [&] { save_model(res.model, model_path); });

    const EvalReport learned = run_stage("evaluate", [&] {
        return evaluate(res.model, p.split.test);
    });
    const EvalReport baseline = run_stage("evaluate", [&] {
        return evaluate_predictions(ef_predictions(a.cfg, p.split.test, p.fs_by_set),
                                    p.split.test, res.model.target_norm);
    });
    const int n_epochs = static_cast<int>(res.history.epochs.size());
    std::printf("train: %d epochs, best epoch %d (val MSE %s)\n", n_epochs,
                res.history.best_epoch,
                gshort(res.history.best_epoch >= 0
                           ? res.history.epochs[res.history.best_epoch].val_mse
                           : 0.0)
                    .c_str());
    std::printf("test aggregate MSE (tau_x, f_y, f_z): learned %s | quasi-steady %s\n",
                gshort(learned.aggregate).c_str(), gshort(baseline.aggregate).c_str());

    json hist;
    hist["best_epoch"] = res.history.best_epoch;
    json epochs = json::array();
    for (const EpochStats& e : res.history.epochs)
        epochs.push_back({{"train_mse", e.train_mse}, {"val_mse", e.val_mse}, {"lr", e.lr}});
    hist["epochs"] = epochs;
    hist["split"] = {{"train", p.split.train.size()},
                     {"val", p.split.val.size()},
                     {"test", p.split.test.size()}};
    hist["test"] = {{"learned", report_json(learned)}, {"ef", report_json(baseline)}};
    const std::string hist_path = join(a.out_dir, "history.json");
    run_stage("write", [&] { write_text(hist_path, hist.dump(2) + "\n"); });

    std::map<std::string, std::string> meta;
    meta["command"] = "train";
    meta["seed"] = std::to_string(a.cfg.seed);
    meta["cutoff_hz"] = gshort(a.cfg.pipeline.cutoff_hz);
    meta["interpolate"] = a.cfg.pipeline.interpolate ? "true" : "false";
    meta["windows"] = std::to_string(p.split.train.size() + p.split.val.size() +
                                     p.split.test.size());
    std::vector<ManifestEntry> entries;
    entries.push_back(manifest_entry(a.out_dir, data, "input"));
    entries.push_back(manifest_entry(a.out_dir, model_path, "output"));
    entries.push_back(manifest_entry(a.out_dir, hist_path, "output"));
    run_stage("write", [&] { write_manifest(join(a.out_dir, "manifest.json"), meta, entries); });
    return 0;
}

int cmd_compare(const CommandArgs& a) {
    ensure_out_dir(a.out_dir);
    const std::string data = resolve_path(a.data_path, a.cfg.paths.data, "data");
    const std::string model_path = resolve_path(a.model_path, a.cfg.paths.model, "model");
    const LstmModel model = run_stage("model", [&] { return load_model(model_path); });
    PipelineData p = run_pipeline(a.cfg, data);
    const std::vector<SequenceSample>& test = p.split.test;
    if (test.empty()) stage_fail("split", "test split is empty");

    const std::vector<Vector6d> learned_preds =
        run_stage("predict", [&] { return lstm_predict_all(model, test); });
    const std::vector<Vector6d> ef_preds =
        run_stage("predict", [&] { return ef_predictions(a.cfg, test, p.fs_by_set); });

    // per-speed error distributions of both models over the test windows
    std::map<double, std::vector<double>> learned_err, ef_err;
    for (std::size_t i = 0; i < test.size(); ++i) {
        learned_err[test[i].V_flow].push_back(window_error(learned_preds[i], test[i].target));
        ef_err[test[i].V_flow].push_back(window_error(ef_preds[i], test[i].target));
    }
    std::string box = "model,V_flow,count,mean,median,q1,q3,whisker_lo,whisker_hi,outliers\n";
    const auto box_row = [&box](const char* tag, double v, const BoxStats& b) {
        box += std::string(tag) + "," + g17(v) + "," + std::to_string(b.count) + "," +
               g17(b.mean) + "," + g17(b.median) + "," + g17(b.q1) + "," + g17(b.q3) + "," +
               g17(b.whisker_lo) + "," + g17(b.whisker_hi) + "," + std::to_string(b.outliers) +
               "\n";
    };
    std::printf("compare: per-speed window MSE medians (tau_x, f_y, f_z)\n");
    for (const auto& [v, errs] : learned_err) {
        const BoxStats lb = box_stats(errs);
        const BoxStats eb = box_stats(ef_err[v]);
        box_row("learned", v, lb);
        box_row("ef", v, eb);
        std::printf("  V=%-5s learned %-12s quasi-steady %s\n", gshort(v).c_str(),
                    gshort(lb.median).c_str(), gshort(eb.median).c_str());
    }
    const std::string box_path = join(a.out_dir, "mse_box.csv");
    run_stage("write", [&] { write_text(box_path, box); });

    // ground truth vs both predictions over one test set per speed
    std::map<double, int> chosen; // V_flow -> lowest test set id
    for (const SequenceSample& s : test) {
        auto it = chosen.find(s.V_flow);
        if (it == chosen.end() || s.set_id < it->second) chosen[s.V_flow] = s.set_id;
    }
    std::vector<ManifestEntry> entries;
    for (const auto& [v, set_id] : chosen) {
        std::string csv = "t";
        static const char* kCh[6] = {"tau_x", "tau_y", "tau_z", "f_x", "f_y", "f_z"};
        for (const char* prefix : {"truth_", "learned_", "ef_"})
            for (const char* c : kCh) csv += std::string(",") + prefix + c;
        csv += "\n";
        const double fs = p.fs_by_set.at(set_id);
        int k = 0;
        for (std::size_t i = 0; i < test.size(); ++i) {
            if (test[i].set_id != set_id) continue;
            const double t = (k + kWindowLen - 1) / fs;
            csv += g17(t);
            for (int c = 0; c < 6; ++c) csv += "," + g17(test[i].target[c]);
            for (int c = 0; c < 6; ++c) csv += "," + g17(learned_preds[i][c]);
            for (int c = 0; c < 6; ++c) csv += "," + g17(ef_preds[i][c]);
            csv += "\n";
            ++k;
        }
        const std::string ts_path =
            join(a.out_dir, ("timeseries_v" + gshort(v) + ".csv").c_str());
        run_stage("write", [&] { write_text(ts_path, csv); });
        entries.push_back(manifest_entry(a.out_dir, ts_path, "output"));
    }

    std::map<std::string, std::string> meta;
    meta["command"] = "compare";
    meta["seed"] = std::to_string(a.cfg.seed);
    meta["test_windows"] = std::to_string(test.size());
    entries.push_back(manifest_entry(a.out_dir, data, "input"));
    entries.push_back(manifest_entry(a.out_dir, model_path, "input"));
    entries.push_back(manifest_entry(a.out_dir, box_path, "output"));
    run_stage("write", [&] { write_manifest(join(a.out_dir, "manifest.json"), meta, entries); });
    return 0;
}

int cmd_simulate(const CommandArgs& a) {
    ensure_out_dir(a.out_dir);
    LstmModel storage;
    const LstmModel* model = load_model_if_lstm(a, storage);
    const SimMode mode = a.mode.value_or(SimMode::straight);

    const Trajectory traj = run_stage("simulate", [&] {
        return simulate(a.cfg.gait, a.cfg.body, mode, a.cfg.linkage, a.cfg.ef, model);
    });
    const std::string traj_path = join(a.out_dir, "trajectory.csv");
    run_stage("write", [&] { save_trajectory_csv(traj, traj_path); });

    const json summary = simulate_summary(traj, mode, a.cfg.body);
    const std::string summary_path = join(a.out_dir, "summary.json");
    run_stage("write", [&] { write_text(summary_path, summary.dump(2) + "\n"); });

    std::map<std::string, std::string> meta;
    meta["command"] = "simulate";
    meta["mode"] = summary["mode"].get<std::string>();
    meta["model"] = a.model_tag;
    meta["seed"] = std::to_string(a.cfg.seed);
    std::vector<ManifestEntry> entries;
    if (model)
        entries.push_back(manifest_entry(
            a.out_dir, resolve_path(a.model_path, a.cfg.paths.model, "model"), "input"));
    entries.push_back(manifest_entry(a.out_dir, traj_path, "output"));
    entries.push_back(manifest_entry(a.out_dir, summary_path, "output"));
    run_stage("write", [&] { write_manifest(join(a.out_dir, "manifest.json"), meta, entries); });

    std::printf("simulate: %s/%s finished at t=%s s, x=%s m, y=%s m, yaw=%s rad\n",
                summary["mode"].get<std::string>().c_str(), a.model_tag.c_str(),
                gshort(traj.states.back().t).c_str(), gshort(traj.states.back().x).c_str(),
                gshort(traj.states.back().y).c_str(),
                gshort(traj.states.back().theta_yaw).c_str());
    return 0;
}

int cmd_optimize(const CommandArgs& a) {
    ensure_out_dir(a.out_dir);
    LstmModel storage;
    const LstmModel* model = load_model_if_lstm(a, storage);
    OptConfig ocfg = a.cfg.opt;
    if (a.mode) ocfg.mode = *a.mode;

    json gens = json::array();
    const GenerationCallback progress = [&](int gen,
                                            const std::vector<Nsga2Individual>& pop) {
        double best_s = std::numeric_limits<double>::infinity();
        int front0 = 0;
        for (const Nsga2Individual& ind : pop) {
            if (ind.rank == 0) ++front0;
            best_s = std::min(best_s, ocfg.weights.dot(ind.objectives));
        }
        json g;
        g["gen"] = gen;
        g["front0"] = front0;
        g["best_S"] = std::isfinite(best_s) ? json(best_s) : json(nullptr);
        gens.push_back(g);
        std::printf("optimize: gen %3d front0 %3d best S %s\n", gen, front0,
                    gshort(best_s).c_str());
    };

    const OptimizeResult res = run_stage("optimize", [&] {
        return optimize_gait(a.cfg.gait, a.cfg.body, a.cfg.linkage, a.cfg.ef, model, ocfg,
                             progress);
    });

    // re-simulate the retained gaits for the report table
    json top = json::array();
    std::vector<ManifestEntry> entries;
    for (std::size_t i = 0; i < res.top.size(); ++i) {
        const ScoredGait& sg = res.top[i];
        json t;
        t["rank"] = i + 1;
        t["S"] = std::isfinite(sg.S) ? json(sg.S) : json(nullptr);
        json obj = json::array();
        for (int c = 0; c < sg.objectives.size(); ++c)
            obj.push_back(std::isfinite(sg.objectives[c]) ? json(sg.objectives[c])
                                                          : json(nullptr));
        t["objectives"] = obj;
        const GaitParams gait = gait_from_genes(a.cfg.gait, sg.genes);
        t["gait"] = gait_json(gait);
        if (std::isfinite(sg.S)) {
            const Trajectory traj = run_stage("resimulate", [&] {
                return simulate(gait, a.cfg.body, ocfg.mode, a.cfg.linkage, a.cfg.ef, model);
            });
            t["summary"] = simulate_summary(traj, ocfg.mode, a.cfg.body);
        } else {
            t["summary"] = nullptr;
        }
        const std::string gait_path =
            join(a.out_dir, ("top_" + std::to_string(i + 1) + ".json").c_str());
        run_stage("write", [&] { write_text(gait_path, t.dump(2) + "\n"); });
        entries.push_back(manifest_entry(a.out_dir, gait_path, "output"));
        top.push_back(t);
    }

    json report;
    report["command"] = "optimize";
    report["mode"] = ocfg.mode == SimMode::straight ? "straight" : "turn";
    report["model"] = a.model_tag;
    report["config"] = json::parse(run_config_json(a.cfg));
    report["evaluations"] = res.search.archive.size();
    report["generations"] = gens;
    report["top"] = top;
    const std::string report_path = join(a.out_dir, "report.json");
    run_stage("write", [&] { write_text(report_path, report.dump(2) + "\n"); });
    entries.push_back(manifest_entry(a.out_dir, report_path, "output"));

    std::map<std::string, std::string> meta;
    meta["command"] = "optimize";
    meta["mode"] = report["mode"].get<std::string>();
    meta["model"] = a.model_tag;
    meta["seed"] = std::to_string(ocfg.seed);
    meta["evaluations"] = std::to_string(res.search.archive.size());
    if (model)
        entries.push_back(manifest_entry(
            a.out_dir, resolve_path(a.model_path, a.cfg.paths.model, "model"), "input"));
    run_stage("write", [&] { write_manifest(join(a.out_dir, "manifest.json"), meta, entries); });

    std::printf("optimize: retained %zu gaits of %zu evaluated\n", res.top.size(),
                res.search.archive.size());
    for (std::size_t i = 0; i < res.top.size(); ++i) {
        const ScoredGait& sg = res.top[i];
        std::printf("  #%zu S=%-10s f=(%s, %s, %s)\n", i + 1, gshort(sg.S).c_str(),
                    gshort(sg.objectives[0]).c_str(), gshort(sg.objectives[1]).c_str(),
                    gshort(sg.objectives[2]).c_str());
    }
    return 0;
}

} // namespace hydroquad
