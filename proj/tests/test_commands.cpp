#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hydroquad/commands.hpp"
#include "hydroquad/errors.hpp"
#include "hydroquad/manifest.hpp"
#include "hydroquad/records.hpp"
#include "oracles.hpp"

using namespace hydroquad;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json load_json(const fs::path& path) { return json::parse(slurp(path)); }

// Small noiseless corpus shared by the pipeline commands: 2x2 gait cells at
// one frequency and phase, logged at rest and at 0.2 m/s.
const char* corpus_config() {
    return R"({
        "seed": 5,
        "synth": {"theta_H_min_deg": [0.0, -40.0], "theta_K_max_deg": [-30.0, -70.0],
                  "freq": [0.5], "phi_deg": [60.0], "V_flow": [0.0, 0.2], "cycles": 2,
                  "aug_amp_tau": 0.0, "aug_amp_f": 0.0,
                  "noise_std_tau": 0.0, "noise_std_f": 0.0},
        "train": {"interpolate": false, "max_epochs": 2, "batch_size": 64}
    })";
}

const fs::path& corpus_dir() {
    static const fs::path dir = [] {
        const fs::path d = testutil::scratch_dir("cmd_corpus");
        CommandArgs a;
        a.cfg = parse_run_config(corpus_config());
        a.out_dir = d.string();
        REQUIRE(cmd_synth(a) == 0);
        return d;
    }();
    return dir;
}

// One short training run over the corpus, reused by the compare test.
const fs::path& trained_dir() {
    static const fs::path dir = [] {
        const fs::path d = testutil::scratch_dir("cmd_trained");
        CommandArgs a;
        a.cfg = parse_run_config(corpus_config());
        a.out_dir = d.string();
        a.data_path = (corpus_dir() / "force_log.csv").string();
        REQUIRE(cmd_train(a) == 0);
        return d;
    }();
    return dir;
}

template <typename Fn>
std::string stage_error(Fn&& fn) {
    try {
        fn();
    } catch (const StageError& e) {
        return e.what();
    }
    return {};
}

bool contains(const std::string& hay, const std::string& needle) {
    return hay.find(needle) != std::string::npos;
}

} // namespace

TEST_CASE("synth writes the force log and a faithful manifest") {
    const fs::path dir = corpus_dir();
    const fs::path log = dir / "force_log.csv";
    REQUIRE(fs::exists(log));
    REQUIRE(fs::exists(dir / "manifest.json"));

    const std::vector<RecordSet> sets = load_force_log(log.string());
    REQUIRE(sets.size() == 8); // 4 gait cells x 2 flow speeds
    std::vector<int> groups;
    for (const RecordSet& s : sets) {
        CHECK(s.records.size() == 261); // 2 cycles at 0.5 Hz, 65 Hz sampling
        if (std::find(groups.begin(), groups.end(), s.group) == groups.end())
            groups.push_back(s.group);
    }
    CHECK(groups.size() == 4);

    const json m = load_json(dir / "manifest.json");
    CHECK(m.at("meta").at("command") == "synth");
    CHECK(m.at("meta").at("sets") == "8");
    CHECK(m.at("meta").at("groups") == "4");
    CHECK(m.at("meta").at("grid") == "2x2x1x1 cells x 2 speeds");
    REQUIRE(m.at("files").size() == 1);
    const json& f = m.at("files")[0];
    CHECK(f.at("path") == "force_log.csv");
    CHECK(f.at("role") == "output");
    CHECK(f.at("bytes").get<std::uint64_t>() == fs::file_size(log));
    CHECK(f.at("fnv1a64") == hex64(fnv1a64_file(log.string())));
}

TEST_CASE("synth reruns reproduce every output byte") {
    CommandArgs a;
    a.cfg = parse_run_config(corpus_config());
    const fs::path d1 = testutil::scratch_dir("cmd_synth_a");
    const fs::path d2 = testutil::scratch_dir("cmd_synth_b");
    a.out_dir = d1.string();
    REQUIRE(cmd_synth(a) == 0);
    a.out_dir = d2.string();
    REQUIRE(cmd_synth(a) == 0);
    CHECK(slurp(d1 / "force_log.csv") == slurp(d2 / "force_log.csv"));
    CHECK(slurp(d1 / "manifest.json") == slurp(d2 / "manifest.json"));
}

TEST_CASE("train writes a loadable model and a consistent history") {
    const fs::path dir = trained_dir();
    REQUIRE(fs::exists(dir / "model.bin"));
    REQUIRE(fs::exists(dir / "history.json"));
    REQUIRE(fs::exists(dir / "manifest.json"));

    const LstmModel model = load_model((dir / "model.bin").string());
    const std::vector<RecordSet> sets =
        load_force_log((corpus_dir() / "force_log.csv").string());
    const std::vector<SequenceSample> windows = make_windows(sets);
    REQUIRE(!windows.empty());
    const Vector6d pred = lstm_predict(model, windows.front().window);
    for (int c = 0; c < 6; ++c) CHECK(std::isfinite(pred[c]));

    const json h = load_json(dir / "history.json");
    const auto& epochs = h.at("epochs");
    REQUIRE(!epochs.empty());
    CHECK(epochs.size() <= 2);
    const int best = h.at("best_epoch").get<int>();
    CHECK(best >= 0);
    CHECK(best < static_cast<int>(epochs.size()));
    for (const json& e : epochs) {
        CHECK(e.at("train_mse").get<double>() >= 0.0);
        CHECK(e.at("val_mse").get<double>() >= 0.0);
        CHECK(e.at("lr").get<double>() > 0.0);
    }
    // 8 sets of 246 windows each, split whole groups 2/1/1
    CHECK(h.at("split").at("train").get<int>() == 984);
    CHECK(h.at("split").at("val").get<int>() == 492);
    CHECK(h.at("split").at("test").get<int>() == 492);
    for (const char* who : {"learned", "ef"}) {
        const json& r = h.at("test").at(who);
        CHECK(r.at("count").get<int>() == 492);
        CHECK(r.at("mse").size() == 6);
        CHECK(r.at("aggregate").get<double>() >= 0.0);
        CHECK(std::isfinite(r.at("aggregate").get<double>()));
    }
}

TEST_CASE("train reruns reproduce the model and history bytes") {
    CommandArgs a;
    a.cfg = parse_run_config(corpus_config());
    a.data_path = (corpus_dir() / "force_log.csv").string();
    const fs::path d1 = testutil::scratch_dir("cmd_train_a");
    const fs::path d2 = testutil::scratch_dir("cmd_train_b");
    a.out_dir = d1.string();
    REQUIRE(cmd_train(a) == 0);
    a.out_dir = d2.string();
    REQUIRE(cmd_train(a) == 0);
    CHECK(slurp(d1 / "model.bin") == slurp(d2 / "model.bin"));
    CHECK(slurp(d1 / "history.json") == slurp(d2 / "history.json"));
    CHECK(slurp(d1 / "manifest.json") == slurp(d2 / "manifest.json"));
}

TEST_CASE("compare reports per-speed error distributions for both models") {
    CommandArgs a;
    a.cfg = parse_run_config(corpus_config());
    a.data_path = (corpus_dir() / "force_log.csv").string();
    a.model_path = (trained_dir() / "model.bin").string();
    const fs::path dir = testutil::scratch_dir("cmd_compare");
    a.out_dir = dir.string();
    REQUIRE(cmd_compare(a) == 0);

    const std::string box = slurp(dir / "mse_box.csv");
    std::istringstream lines(box);
    std::string line;
    REQUIRE(std::getline(lines, line));
    CHECK(line == "model,V_flow,count,mean,median,q1,q3,whisker_lo,whisker_hi,outliers");
    std::map<std::string, std::map<double, double>> medians; // model -> V -> median
    int rows = 0;
    while (std::getline(lines, line)) {
        std::istringstream cells(line);
        std::string model, v, count, mean, median;
        std::getline(cells, model, ',');
        std::getline(cells, v, ',');
        std::getline(cells, count, ',');
        std::getline(cells, mean, ',');
        std::getline(cells, median, ',');
        medians[model][std::stod(v)] = std::stod(median);
        ++rows;
    }
    CHECK(rows == 4); // two models at two flow speeds
    REQUIRE(medians.count("ef") == 1);
    REQUIRE(medians.count("learned") == 1);
    for (const double v : {0.0, 0.2}) {
        REQUIRE(medians["ef"].count(v) == 1);
        REQUIRE(medians["learned"].count(v) == 1);
        // noiseless logs: the quasi-steady model reproduces its own output
        // up to filtering and stencil error, far below a 2-epoch network
        CHECK(medians["ef"][v] < 1e-4);
        CHECK(medians["ef"][v] < medians["learned"][v]);
    }

    for (const char* name : {"timeseries_v0.csv", "timeseries_v0.2.csv"}) {
        const fs::path ts = dir / name;
        REQUIRE(fs::exists(ts));
        std::istringstream in(slurp(ts));
        std::string header;
        REQUIRE(std::getline(in, header));
        CHECK(contains(header, "t,truth_tau_x"));
        CHECK(contains(header, "learned_f_z"));
        CHECK(contains(header, "ef_f_z"));
    }
}

TEST_CASE("simulate: a motionless gait stays at the origin for the whole run") {
    CommandArgs a;
    a.cfg = parse_run_config(R"({
        "gait": {"theta_H_min_deg": -100.0, "theta_K_max_deg": 80.0},
        "body": {"t_max": 5.0}
    })");
    const fs::path dir = testutil::scratch_dir("cmd_sim_still");
    a.out_dir = dir.string();
    REQUIRE(cmd_simulate(a) == 0);

    const json s = load_json(dir / "summary.json");
    CHECK(s.at("model") == "ef");
    CHECK(s.at("mode") == "straight");
    CHECK(s.at("distance").get<double>() < 1e-9);
    CHECK(s.at("t_final").get<double>() == doctest::Approx(5.0).epsilon(1e-6));
    CHECK(s.at("yaw_error").get<double>() < 1e-12);
    CHECK(s.at("stations").get<int>() == 1); // only the start line is reached
    CHECK(s.at("mae_x").get<double>() == 0.0);
    CHECK(s.at("objectives")[2].get<double>() == doctest::Approx(5.0).epsilon(1e-6));

    // trajectory: header plus one row per integration step (65 Hz for 5 s)
    const std::string traj = slurp(dir / "trajectory.csv");
    CHECK(std::count(traj.begin(), traj.end(), '\n') == 326);
}

TEST_CASE("simulate: a strong gait crosses the finish line early") {
    CommandArgs a;
    a.cfg = parse_run_config(R"({"gait": {"freq": 0.65}})");
    const fs::path dir = testutil::scratch_dir("cmd_sim_cross");
    a.out_dir = dir.string();
    REQUIRE(cmd_simulate(a) == 0);

    const json s = load_json(dir / "summary.json");
    CHECK(s.at("y_final").get<double>() >= 2.0);
    CHECK(s.at("t_final").get<double>() < 59.0);
    CHECK(s.at("stations").get<int>() == 9); // 0 m to 2 m every 0.25 m
    CHECK(s.at("objectives")[0].get<double>() < 0.0);
}

TEST_CASE("simulate: swapping the left and right phases mirrors the outcome") {
    const fs::path d1 = testutil::scratch_dir("cmd_sim_mirror_a");
    const fs::path d2 = testutil::scratch_dir("cmd_sim_mirror_b");
    CommandArgs a;
    a.cfg = parse_run_config(R"({
        "body": {"t_max": 10.0},
        "gait": {"alpha_deg": [0.0, 120.3, 40.1, 229.2]}
    })");
    a.out_dir = d1.string();
    REQUIRE(cmd_simulate(a) == 0);
    CommandArgs b;
    b.cfg = parse_run_config(R"({
        "body": {"t_max": 10.0},
        "gait": {"alpha_deg": [120.3, 0.0, 229.2, 40.1]}
    })");
    b.out_dir = d2.string();
    REQUIRE(cmd_simulate(b) == 0);

    const json s1 = load_json(d1 / "summary.json");
    const json s2 = load_json(d2 / "summary.json");
    CHECK(s1.at("x_final").get<double>() ==
          doctest::Approx(-s2.at("x_final").get<double>()).epsilon(1e-9).scale(1.0));
    CHECK(s1.at("y_final").get<double>() ==
          doctest::Approx(s2.at("y_final").get<double>()).epsilon(1e-9).scale(1.0));
    CHECK(s1.at("theta_yaw_final").get<double>() ==
          doctest::Approx(-s2.at("theta_yaw_final").get<double>()).epsilon(1e-9).scale(1.0));
}

TEST_CASE("optimize: the report retains exactly the ranked top gaits") {
    CommandArgs a;
    a.cfg = parse_run_config(R"({
        "seed": 3,
        "body": {"t_max": 10.0},
        "opt": {"population": 8, "generations": 0, "retain_k": 8}
    })");
    const fs::path dir = testutil::scratch_dir("cmd_opt");
    a.out_dir = dir.string();
    REQUIRE(cmd_optimize(a) == 0);

    const json r = load_json(dir / "report.json");
    CHECK(r.at("command") == "optimize");
    CHECK(r.at("mode") == "straight");
    CHECK(r.at("model") == "ef");
    CHECK(r.at("evaluations").get<int>() == 8);
    CHECK(r.at("generations").size() == 1);
    CHECK(r.at("generations")[0].at("gen").get<int>() == 0);
    CHECK(r.at("config") == json::parse(run_config_json(a.cfg)));

    const auto& top = r.at("top");
    REQUIRE(top.size() == 8);
    double prev = -std::numeric_limits<double>::infinity();
    bool seen_null = false;
    for (std::size_t i = 0; i < top.size(); ++i) {
        CHECK(top[i].at("rank").get<int>() == static_cast<int>(i) + 1);
        const json& S = top[i].at("S");
        if (S.is_null()) {
            seen_null = true; // infeasible candidates rank last
            CHECK(top[i].at("summary").is_null());
        } else {
            CHECK(!seen_null);
            CHECK(S.get<double>() >= prev);
            prev = S.get<double>();
            CHECK(top[i].at("summary").at("model") == "ef");
        }
        CHECK(fs::exists(dir / ("top_" + std::to_string(i + 1) + ".json")));
    }

    const json m = load_json(dir / "manifest.json");
    CHECK(m.at("meta").at("command") == "optimize");
    CHECK(m.at("meta").at("evaluations") == "8");
}

TEST_CASE("commands fail with the failing stage in the message") {
    CommandArgs a;
    a.cfg = parse_run_config("{}");
    a.out_dir = testutil::scratch_dir("cmd_fail");
    a.data_path = "/nonexistent/force_log.csv";
    CHECK(contains(stage_error([&] { cmd_train(a); }), "[load]"));

    CommandArgs b;
    b.cfg = parse_run_config("{}");
    b.out_dir = a.out_dir;
    b.data_path = a.data_path;
    b.model_path = "/nonexistent/model.bin";
    CHECK(contains(stage_error([&] { cmd_compare(b); }), "[model]"));

    CommandArgs c;
    c.cfg = parse_run_config("{}");
    c.out_dir = a.out_dir;
    c.model_tag = "banana";
    CHECK(contains(stage_error([&] { cmd_simulate(c); }), "model tag"));

    CommandArgs d;
    d.cfg = parse_run_config("{}");
    d.out_dir = ""; // no output directory
    CHECK(contains(stage_error([&] { cmd_synth(d); }), "[setup]"));

    CommandArgs e;
    e.cfg = parse_run_config("{}");
    e.out_dir = testutil::scratch_dir("cmd_fail2");
    // no data path anywhere
    CHECK(contains(stage_error([&] { cmd_train(e); }), "data path not set"));
}
