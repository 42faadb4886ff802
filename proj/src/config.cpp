#include "hydroquad/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hydroquad/errors.hpp"

namespace hydroquad {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw ConfigError(msg); }

std::string fmt_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

/// One JSON object with the unknown-key rule: every key must be claimed by
/// a get() call before require_no_unknown() passes.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j.is_object()) fail(display() + " must be an object");
    }

    const json* get(const std::string& key) {
        known_.push_back(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    void require_no_unknown() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (std::find(known_.begin(), known_.end(), it.key()) == known_.end())
                fail("unknown config key \"" + child(it.key()) + "\"");
        }
    }

    std::string child(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

private:
    std::string display() const { return path_.empty() ? "config root" : path_; }

    const json& j_;
    std::string path_;
    std::vector<std::string> known_;
};

double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) fail(path + " must be a number");
    return v.get<double>();
}

int as_int(const json& v, const std::string& path) {
    if (!v.is_number_integer()) fail(path + " must be an integer");
    return v.get<int>();
}

bool as_bool(const json& v, const std::string& path) {
    if (!v.is_boolean()) fail(path + " must be a boolean");
    return v.get<bool>();
}

std::string as_string(const json& v, const std::string& path) {
    if (!v.is_string()) fail(path + " must be a string");
    return v.get<std::string>();
}

std::vector<double> as_number_array(const json& v, const std::string& path) {
    if (!v.is_array() || v.empty()) fail(path + " must be a nonempty array of numbers");
    std::vector<double> out;
    out.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(as_number(v[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

void check_range(double v, double lo, double hi, const std::string& path,
                 const char* unit = "") {
    if (!(v >= lo && v <= hi))
        fail(path + " = " + fmt_num(v) + " outside allowed range [" + fmt_num(lo) +
             ", " + fmt_num(hi) + "]" + (*unit ? std::string(" ") + unit : ""));
}

void check_positive(double v, const std::string& path) {
    if (!(v > 0.0) || !std::isfinite(v)) fail(path + " = " + fmt_num(v) + " must be positive");
}

void read_linkage(const json& j, const std::string& path, LinkageGeometry& g) {
    Section s(j, path);
    if (const json* v = s.get("len_OA")) g.len_OA = as_number(*v, s.child("len_OA"));
    if (const json* v = s.get("len_OC")) g.len_OC = as_number(*v, s.child("len_OC"));
    if (const json* v = s.get("len_BQ_ratio"))
        g.len_BQ_ratio = as_number(*v, s.child("len_BQ_ratio"));
    if (const json* v = s.get("web_side")) g.web_side = as_number(*v, s.child("web_side"));
    if (const json* v = s.get("web_mass")) g.web_mass = as_number(*v, s.child("web_mass"));
    s.require_no_unknown();
    check_positive(g.len_OA, path + ".len_OA");
    check_positive(g.len_OC, path + ".len_OC");
    check_positive(g.len_BQ_ratio, path + ".len_BQ_ratio");
    check_positive(g.web_side, path + ".web_side");
    check_positive(g.web_mass, path + ".web_mass");
}

void read_ef(const json& j, const std::string& path, EfParams& p) {
    Section s(j, path);
    if (const json* v = s.get("rho_water")) p.rho_water = as_number(*v, s.child("rho_water"));
    if (const json* v = s.get("a")) p.a = as_number(*v, s.child("a"));
    if (const json* v = s.get("C_R")) p.C_R = as_number(*v, s.child("C_R"));
    if (const json* v = s.get("m_web")) p.m_web = as_number(*v, s.child("m_web"));
    s.require_no_unknown();
    check_positive(p.rho_water, path + ".rho_water");
    check_positive(p.a, path + ".a");
    check_positive(p.C_R, path + ".C_R");
    check_positive(p.m_web, path + ".m_web");
}

void read_body(const json& j, const std::string& path, BodyConfig& b) {
    Section s(j, path);
    if (const json* v = s.get("mass")) b.mass = as_number(*v, s.child("mass"));
    if (const json* v = s.get("I_yaw")) b.I_yaw = as_number(*v, s.child("I_yaw"));
    if (const json* v = s.get("dt")) b.dt = as_number(*v, s.child("dt"));
    if (const json* v = s.get("t_max")) b.t_max = as_number(*v, s.child("t_max"));
    if (const json* v = s.get("finish_distance"))
        b.finish_distance = as_number(*v, s.child("finish_distance"));
    s.require_no_unknown();
    check_positive(b.mass, path + ".mass");
    check_positive(b.I_yaw, path + ".I_yaw");
    check_positive(b.dt, path + ".dt");
    check_positive(b.t_max, path + ".t_max");
    check_positive(b.finish_distance, path + ".finish_distance");
}

void read_gait(const json& j, const std::string& path, GaitParams& g) {
    Section s(j, path);
    if (const json* v = s.get("theta_H_min_deg"))
        g.theta_H_min = deg2rad(as_number(*v, s.child("theta_H_min_deg")));
    if (const json* v = s.get("theta_K_max_deg"))
        g.theta_K_max = deg2rad(as_number(*v, s.child("theta_K_max_deg")));
    if (const json* v = s.get("freq")) g.freq = as_number(*v, s.child("freq"));
    if (const json* v = s.get("phi_deg")) g.phi = deg2rad(as_number(*v, s.child("phi_deg")));
    if (const json* v = s.get("alpha_deg")) {
        const std::vector<double> a = as_number_array(*v, s.child("alpha_deg"));
        if (a.size() != 4) fail(s.child("alpha_deg") + " must list 4 legs");
        for (int i = 0; i < 4; ++i) g.alpha[i] = deg2rad(a[i]);
    }
    s.require_no_unknown();
    check_positive(g.freq, path + ".freq");
    if (!g.valid()) fail(path + " has non-finite values");
}

void read_synth(const json& j, const std::string& path, SynthGrid& g, NoiseSpec& n) {
    Section s(j, path);
    if (const json* v = s.get("theta_H_min_deg")) {
        const std::string p = s.child("theta_H_min_deg");
        const std::vector<double> deg = as_number_array(*v, p);
        g.theta_H_min.clear();
        for (std::size_t i = 0; i < deg.size(); ++i) {
            check_range(deg[i], bounds::theta_H_min_lo_deg, bounds::theta_H_min_hi_deg,
                        p + "[" + std::to_string(i) + "]", "deg");
            g.theta_H_min.push_back(deg2rad(deg[i]));
        }
    }
    if (const json* v = s.get("theta_K_max_deg")) {
        const std::string p = s.child("theta_K_max_deg");
        const std::vector<double> deg = as_number_array(*v, p);
        g.theta_K_max.clear();
        for (std::size_t i = 0; i < deg.size(); ++i) {
            check_range(deg[i], bounds::theta_K_max_lo_deg, bounds::theta_K_max_hi_deg,
                        p + "[" + std::to_string(i) + "]", "deg");
            g.theta_K_max.push_back(deg2rad(deg[i]));
        }
    }
    if (const json* v = s.get("freq")) {
        const std::string p = s.child("freq");
        g.freq = as_number_array(*v, p);
        for (std::size_t i = 0; i < g.freq.size(); ++i)
            check_range(g.freq[i], bounds::freq_grid_lo, bounds::freq_grid_hi,
                        p + "[" + std::to_string(i) + "]", "Hz");
    }
    if (const json* v = s.get("phi_deg")) {
        const std::string p = s.child("phi_deg");
        const std::vector<double> deg = as_number_array(*v, p);
        g.phi.clear();
        for (std::size_t i = 0; i < deg.size(); ++i) {
            check_range(deg[i], 0.0, 360.0, p + "[" + std::to_string(i) + "]", "deg");
            g.phi.push_back(deg2rad(deg[i]));
        }
    }
    if (const json* v = s.get("V_flow")) {
        const std::string p = s.child("V_flow");
        g.V_flow = as_number_array(*v, p);
        for (std::size_t i = 0; i < g.V_flow.size(); ++i)
            check_range(g.V_flow[i], 0.0, 0.3, p + "[" + std::to_string(i) + "]", "m/s");
    }
    if (const json* v = s.get("fs")) g.fs = as_number(*v, s.child("fs"));
    if (const json* v = s.get("cycles")) g.cycles = as_int(*v, s.child("cycles"));
    if (const json* v = s.get("aug_amp_tau")) n.aug_amp_tau = as_number(*v, s.child("aug_amp_tau"));
    if (const json* v = s.get("aug_amp_f")) n.aug_amp_f = as_number(*v, s.child("aug_amp_f"));
    if (const json* v = s.get("noise_std_tau"))
        n.noise_std_tau = as_number(*v, s.child("noise_std_tau"));
    if (const json* v = s.get("noise_std_f"))
        n.noise_std_f = as_number(*v, s.child("noise_std_f"));
    s.require_no_unknown();
    check_positive(g.fs, path + ".fs");
    if (g.cycles < 1) fail(path + ".cycles must be at least 1");
    if (!n.valid()) fail(path + " noise amplitudes must be nonnegative");
}

void read_train(const json& j, const std::string& path, PipelineConfig& p) {
    Section s(j, path);
    if (const json* v = s.get("cutoff_hz")) p.cutoff_hz = as_number(*v, s.child("cutoff_hz"));
    if (const json* v = s.get("interpolate")) p.interpolate = as_bool(*v, s.child("interpolate"));
    if (const json* v = s.get("interp_targets")) {
        const std::string tp = s.child("interp_targets");
        p.interp_targets = as_number_array(*v, tp);
        for (std::size_t i = 0; i < p.interp_targets.size(); ++i)
            check_range(p.interp_targets[i], 0.0, 0.3, tp + "[" + std::to_string(i) + "]",
                        "m/s");
    }
    if (const json* v = s.get("dropout")) p.train.dropout = as_number(*v, s.child("dropout"));
    if (const json* v = s.get("lr_min")) p.train.lr_min = as_number(*v, s.child("lr_min"));
    if (const json* v = s.get("lr_max")) p.train.lr_max = as_number(*v, s.child("lr_max"));
    if (const json* v = s.get("batch_size")) p.train.batch_size = as_int(*v, s.child("batch_size"));
    if (const json* v = s.get("max_epochs")) p.train.max_epochs = as_int(*v, s.child("max_epochs"));
    if (const json* v = s.get("patience")) p.train.patience = as_int(*v, s.child("patience"));
    if (const json* v = s.get("clip_norm")) p.train.clip_norm = as_number(*v, s.child("clip_norm"));
    s.require_no_unknown();
    check_positive(p.cutoff_hz, path + ".cutoff_hz");
    check_range(p.train.dropout, 0.0, 0.999, path + ".dropout");
    if (!p.train.valid()) fail(path + " training controls out of range");
}

void read_opt(const json& j, const std::string& path, OptConfig& o) {
    Section s(j, path);
    if (const json* v = s.get("mode")) {
        const std::string m = as_string(*v, s.child("mode"));
        if (m == "straight")
            o.mode = SimMode::straight;
        else if (m == "turn")
            o.mode = SimMode::turn;
        else
            fail(s.child("mode") + " must be \"straight\" or \"turn\"");
    }
    if (const json* v = s.get("population")) o.population = as_int(*v, s.child("population"));
    if (const json* v = s.get("generations")) o.generations = as_int(*v, s.child("generations"));
    if (const json* v = s.get("crossover_prob"))
        o.crossover_prob = as_number(*v, s.child("crossover_prob"));
    if (const json* v = s.get("mutation_prob"))
        o.mutation_prob = as_number(*v, s.child("mutation_prob"));
    if (const json* v = s.get("sbx_eta")) o.sbx_eta = as_number(*v, s.child("sbx_eta"));
    if (const json* v = s.get("pm_eta")) o.pm_eta = as_number(*v, s.child("pm_eta"));
    if (const json* v = s.get("weights")) {
        const std::string wp = s.child("weights");
        const std::vector<double> w = as_number_array(*v, wp);
        if (w.size() != 3) fail(wp + " must list 3 objective weights");
        o.weights = Eigen::Vector3d(w[0], w[1], w[2]);
    }
    if (const json* v = s.get("retain_k")) o.retain_k = as_int(*v, s.child("retain_k"));
    s.require_no_unknown();
    if (o.population < 2 || o.population % 2 != 0)
        fail(path + ".population must be even and at least 2");
    if (o.generations < 0) fail(path + ".generations must be nonnegative");
    check_range(o.crossover_prob, 0.0, 1.0, path + ".crossover_prob");
    check_range(o.mutation_prob, 0.0, 1.0, path + ".mutation_prob");
    check_positive(o.sbx_eta, path + ".sbx_eta");
    check_positive(o.pm_eta, path + ".pm_eta");
    if (o.retain_k < 1) fail(path + ".retain_k must be at least 1");
    if (!o.valid()) fail(path + " optimizer controls out of range");
}

void read_paths(const json& j, const std::string& path, RunPaths& p) {
    Section s(j, path);
    if (const json* v = s.get("data")) p.data = as_string(*v, s.child("data"));
    if (const json* v = s.get("model")) p.model = as_string(*v, s.child("model"));
    if (const json* v = s.get("out")) p.out = as_string(*v, s.child("out"));
    s.require_no_unknown();
}

} // namespace

RunConfig parse_run_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(std::string("config is not valid JSON: ") + e.what());
    }
    RunConfig cfg;
    Section root(j, "");
    if (const json* v = root.get("seed")) {
        if (!v->is_number_unsigned()) fail("seed must be an unsigned integer");
        cfg.seed = v->get<std::uint64_t>();
    }
    if (const json* v = root.get("linkage")) read_linkage(*v, "linkage", cfg.linkage);
    if (const json* v = root.get("ef")) read_ef(*v, "ef", cfg.ef);
    if (const json* v = root.get("body")) read_body(*v, "body", cfg.body);
    if (const json* v = root.get("gait")) read_gait(*v, "gait", cfg.gait);
    if (const json* v = root.get("synth")) read_synth(*v, "synth", cfg.grid, cfg.noise);
    if (const json* v = root.get("train")) read_train(*v, "train", cfg.pipeline);
    if (const json* v = root.get("opt")) read_opt(*v, "opt", cfg.opt);
    if (const json* v = root.get("paths")) read_paths(*v, "paths", cfg.paths);
    root.require_no_unknown();
    // one master seed drives every stage
    cfg.pipeline.train.seed = cfg.seed;
    cfg.opt.seed = cfg.seed;
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str());
}

std::string run_config_json(const RunConfig& cfg) {
    json j;
    j["seed"] = cfg.seed;
    j["linkage"] = {{"len_OA", cfg.linkage.len_OA},
                    {"len_OC", cfg.linkage.len_OC},
                    {"len_BQ_ratio", cfg.linkage.len_BQ_ratio},
                    {"web_side", cfg.linkage.web_side},
                    {"web_mass", cfg.linkage.web_mass}};
    j["ef"] = {{"rho_water", cfg.ef.rho_water},
               {"a", cfg.ef.a},
               {"C_R", cfg.ef.C_R},
               {"m_web", cfg.ef.m_web}};
    j["body"] = {{"mass", cfg.body.mass},
                 {"I_yaw", cfg.body.I_yaw},
                 {"dt", cfg.body.dt},
                 {"t_max", cfg.body.t_max},
                 {"finish_distance", cfg.body.finish_distance}};
    j["gait"] = {{"theta_H_min_deg", rad2deg(cfg.gait.theta_H_min)},
                 {"theta_K_max_deg", rad2deg(cfg.gait.theta_K_max)},
                 {"freq", cfg.gait.freq},
                 {"phi_deg", rad2deg(cfg.gait.phi)},
                 {"alpha_deg",
                  {rad2deg(cfg.gait.alpha[0]), rad2deg(cfg.gait.alpha[1]),
                   rad2deg(cfg.gait.alpha[2]), rad2deg(cfg.gait.alpha[3])}}};
    json synth;
    json th_min = json::array(), tk_max = json::array(), phi = json::array();
    for (double v : cfg.grid.theta_H_min) th_min.push_back(rad2deg(v));
    for (double v : cfg.grid.theta_K_max) tk_max.push_back(rad2deg(v));
    for (double v : cfg.grid.phi) phi.push_back(rad2deg(v));
    synth["theta_H_min_deg"] = th_min;
    synth["theta_K_max_deg"] = tk_max;
    synth["freq"] = cfg.grid.freq;
    synth["phi_deg"] = phi;
    synth["V_flow"] = cfg.grid.V_flow;
    synth["fs"] = cfg.grid.fs;
    synth["cycles"] = cfg.grid.cycles;
    synth["aug_amp_tau"] = cfg.noise.aug_amp_tau;
    synth["aug_amp_f"] = cfg.noise.aug_amp_f;
    synth["noise_std_tau"] = cfg.noise.noise_std_tau;
    synth["noise_std_f"] = cfg.noise.noise_std_f;
    j["synth"] = synth;
    j["train"] = {{"cutoff_hz", cfg.pipeline.cutoff_hz},
                  {"interpolate", cfg.pipeline.interpolate},
                  {"interp_targets", cfg.pipeline.interp_targets},
                  {"dropout", cfg.pipeline.train.dropout},
                  {"lr_min", cfg.pipeline.train.lr_min},
                  {"lr_max", cfg.pipeline.train.lr_max},
                  {"batch_size", cfg.pipeline.train.batch_size},
                  {"max_epochs", cfg.pipeline.train.max_epochs},
                  {"patience", cfg.pipeline.train.patience},
                  {"clip_norm", cfg.pipeline.train.clip_norm}};
    j["opt"] = {{"mode", cfg.opt.mode == SimMode::straight ? "straight" : "turn"},
                {"population", cfg.opt.population},
                {"generations", cfg.opt.generations},
                {"crossover_prob", cfg.opt.crossover_prob},
                {"mutation_prob", cfg.opt.mutation_prob},
                {"sbx_eta", cfg.opt.sbx_eta},
                {"pm_eta", cfg.opt.pm_eta},
                {"weights", {cfg.opt.weights[0], cfg.opt.weights[1], cfg.opt.weights[2]}},
                {"retain_k", cfg.opt.retain_k}};
    j["paths"] = {{"data", cfg.paths.data}, {"model", cfg.paths.model}, {"out", cfg.paths.out}};
    return j.dump(2) + "\n";
}

} // namespace hydroquad
