#include "hydroquad/records.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "hydroquad/errors.hpp"
#include "hydroquad/filters.hpp"
#include "hydroquad/rng.hpp"

namespace hydroquad {

namespace {

constexpr const char* kHeader =
    "t,V_flow,theta_H,theta_K,dtheta_H,dtheta_K,tau_x,tau_y,tau_z,f_x,f_y,f_z";

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(const std::string& tok, const std::string& where) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0')
        throw SchemaError("bad number '" + tok + "' in " + where);
    return v;
}

std::vector<std::string> split_on(const std::string& s, char delim) {
    std::vector<std::string> out;
    std::string tok;
    std::istringstream ss(s);
    while (std::getline(ss, tok, delim)) out.push_back(tok);
    if (!s.empty() && s.back() == delim) out.emplace_back();
    return out;
}

RecordSet parse_set_line(const std::string& line) {
    RecordSet rs;
    bool seen_id = false, seen_group = false, seen_v = false;
    int seen_params = 0;
    std::istringstream ss(line.substr(5)); // after "# set"
    std::string tok;
    while (ss >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos)
            throw SchemaError("malformed set attribute '" + tok + "'");
        const std::string key = tok.substr(0, eq);
        const std::string val = tok.substr(eq + 1);
        const double x = parse_double(val, "set attribute " + key);
        if (key == "id") {
            rs.id = static_cast<int>(x);
            seen_id = true;
        } else if (key == "group") {
            rs.group = static_cast<int>(x);
            seen_group = true;
        } else if (key == "V_flow") {
            rs.V_flow = x;
            seen_v = true;
        } else if (key == "theta_H_max") {
            rs.params.theta_H_max = x;
            ++seen_params;
        } else if (key == "theta_H_min") {
            rs.params.theta_H_min = x;
            ++seen_params;
        } else if (key == "theta_K_min") {
            rs.params.theta_K_min = x;
            ++seen_params;
        } else if (key == "theta_K_max") {
            rs.params.theta_K_max = x;
            ++seen_params;
        } else if (key == "freq") {
            rs.params.freq = x;
            ++seen_params;
        } else if (key == "phi") {
            rs.params.phi = x;
            ++seen_params;
        } else if (key == "alpha0") {
            rs.params.alpha[0] = x;
            ++seen_params;
        } else if (key == "alpha1") {
            rs.params.alpha[1] = x;
            ++seen_params;
        } else if (key == "alpha2") {
            rs.params.alpha[2] = x;
            ++seen_params;
        } else if (key == "alpha3") {
            rs.params.alpha[3] = x;
            ++seen_params;
        } else {
            throw SchemaError("unknown set attribute '" + key + "'");
        }
    }
    if (!seen_id || !seen_group || !seen_v || seen_params != 10)
        throw SchemaError("set line missing required attributes");
    return rs;
}

std::string set_line(const RecordSet& rs) {
    std::ostringstream ss;
    ss << "# set id=" << rs.id << " group=" << rs.group
       << " V_flow=" << fmt(rs.V_flow)
       << " theta_H_max=" << fmt(rs.params.theta_H_max)
       << " theta_H_min=" << fmt(rs.params.theta_H_min)
       << " theta_K_min=" << fmt(rs.params.theta_K_min)
       << " theta_K_max=" << fmt(rs.params.theta_K_max)
       << " freq=" << fmt(rs.params.freq) << " phi=" << fmt(rs.params.phi);
    for (int i = 0; i < 4; ++i)
        ss << " alpha" << i << "=" << fmt(rs.params.alpha[i]);
    return ss.str();
}

void validate_sampling(const RecordSet& rs) {
    if (rs.records.empty()) throw SchemaError("record set with no rows");
    const double dt = 1.0 / rs.fs;
    for (std::size_t i = 1; i < rs.records.size(); ++i) {
        const double step = rs.records[i].t - rs.records[i - 1].t;
        if (std::abs(step - dt) > 0.01 * dt)
            throw SamplingError("timestamp jitter above 1% of the sampling period");
    }
}

} // namespace

std::vector<RecordSet> load_force_log(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);

    std::vector<RecordSet> sets;
    double fs = 0.0;
    bool seen_header = false;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.rfind("# fs=", 0) == 0) {
            fs = parse_double(line.substr(5), "fs comment");
            if (!(fs > 0.0)) throw SchemaError("fs must be positive");
            continue;
        }
        if (line.rfind("# params=", 0) == 0) continue; // generator metadata
        if (line.rfind("# set", 0) == 0) {
            if (fs <= 0.0) throw SchemaError("set block before fs declaration");
            if (!seen_header) throw SchemaError("set block before column header");
            sets.push_back(parse_set_line(line));
            sets.back().fs = fs;
            continue;
        }
        if (line.front() == '#') throw SchemaError("unrecognized comment line: " + line);
        if (!seen_header) {
            if (line != kHeader)
                throw SchemaError("unexpected column header: " + line);
            seen_header = true;
            continue;
        }
        if (sets.empty()) throw SchemaError("data row before any set block");
        const std::vector<std::string> cols = split_on(line, ',');
        if (cols.size() != 12)
            throw SchemaError("expected 12 columns, got " + std::to_string(cols.size()));
        ForceRecord r;
        r.t = parse_double(cols[0], "column t");
        r.V_flow = parse_double(cols[1], "column V_flow");
        r.theta_H = parse_double(cols[2], "column theta_H");
        r.theta_K = parse_double(cols[3], "column theta_K");
        r.dtheta_H = parse_double(cols[4], "column dtheta_H");
        r.dtheta_K = parse_double(cols[5], "column dtheta_K");
        r.wrench.tau = {parse_double(cols[6], "column tau_x"),
                        parse_double(cols[7], "column tau_y"),
                        parse_double(cols[8], "column tau_z")};
        r.wrench.f = {parse_double(cols[9], "column f_x"),
                      parse_double(cols[10], "column f_y"),
                      parse_double(cols[11], "column f_z")};
        sets.back().records.push_back(r);
    }
    if (sets.empty()) throw SchemaError("no record sets in " + path);
    for (const RecordSet& rs : sets) validate_sampling(rs);
    return sets;
}

void save_force_log(const std::string& path, const std::vector<RecordSet>& sets,
                    const std::string& meta) {
    if (sets.empty()) throw SchemaError("refusing to write an empty force log");
    const double fs = sets.front().fs;
    for (const RecordSet& rs : sets)
        if (rs.fs != fs) throw SchemaError("sets in one log must share fs");

    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "# fs=" << fmt(fs) << "\n";
    if (!meta.empty()) out << "# params=" << meta << "\n";
    out << kHeader << "\n";
    for (const RecordSet& rs : sets) {
        out << set_line(rs) << "\n";
        for (const ForceRecord& r : rs.records) {
            out << fmt(r.t) << ',' << fmt(r.V_flow) << ',' << fmt(r.theta_H) << ','
                << fmt(r.theta_K) << ',' << fmt(r.dtheta_H) << ',' << fmt(r.dtheta_K)
                << ',' << fmt(r.wrench.tau.x()) << ',' << fmt(r.wrench.tau.y()) << ','
                << fmt(r.wrench.tau.z()) << ',' << fmt(r.wrench.f.x()) << ','
                << fmt(r.wrench.f.y()) << ',' << fmt(r.wrench.f.z()) << "\n";
        }
    }
    if (!out) throw IoError("write failed for " + path);
}

void lowpass_wrench_channels(std::vector<RecordSet>& sets, double cutoff_hz) {
    for (RecordSet& rs : sets) {
        const std::size_t n = rs.records.size();
        std::vector<double> series(n);
        for (int c = 0; c < 6; ++c) {
            for (std::size_t i = 0; i < n; ++i) {
                const Wrench& w = rs.records[i].wrench;
                series[i] = c < 3 ? w.tau[c] : w.f[c - 3];
            }
            const std::vector<double> filtered = lowpass_filtfilt(series, rs.fs, cutoff_hz);
            for (std::size_t i = 0; i < n; ++i) {
                Wrench& w = rs.records[i].wrench;
                (c < 3 ? w.tau[c] : w.f[c - 3]) = filtered[i];
            }
        }
    }
}

std::vector<RecordSet> interpolate_velocity(const std::vector<RecordSet>& group_sets,
                                            const std::vector<double>& targets,
                                            int first_new_id, double cutoff_hz) {
    if (group_sets.size() < 3)
        throw GridError("velocity interpolation needs at least 3 flow speeds");
    const std::size_t n = group_sets.front().records.size();
    for (const RecordSet& rs : group_sets) {
        if (rs.group != group_sets.front().group)
            throw SchemaError("velocity interpolation across different groups");
        if (rs.records.size() != n || rs.fs != group_sets.front().fs)
            throw SchemaError("velocity interpolation needs phase-aligned sets");
    }
    std::vector<double> speeds(group_sets.size());
    for (std::size_t i = 0; i < group_sets.size(); ++i) speeds[i] = group_sets[i].V_flow;

    std::vector<RecordSet> out;
    out.reserve(targets.size());
    for (std::size_t ti = 0; ti < targets.size(); ++ti) {
        const double vt = targets[ti];

        // The 3 grid speeds nearest the target, low speed winning ties.
        std::vector<std::size_t> order(group_sets.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const double da = std::abs(speeds[a] - vt), db = std::abs(speeds[b] - vt);
            if (da != db) return da < db;
            return speeds[a] < speeds[b];
        });
        const std::size_t s0 = order[0], s1 = order[1], s2 = order[2];
        const double v0 = speeds[s0], v1 = speeds[s1], v2 = speeds[s2];
        if (v0 == v1 || v0 == v2 || v1 == v2)
            throw GridError("duplicate flow speeds in interpolation stencil");

        // Lagrange weights of the quadratic through (v0, v1, v2) at vt.
        const double w0 = (vt - v1) * (vt - v2) / ((v0 - v1) * (v0 - v2));
        const double w1 = (vt - v0) * (vt - v2) / ((v1 - v0) * (v1 - v2));
        const double w2 = (vt - v0) * (vt - v1) / ((v2 - v0) * (v2 - v1));

        RecordSet rs;
        rs.id = first_new_id + static_cast<int>(ti);
        rs.group = group_sets.front().group;
        rs.params = group_sets.front().params;
        rs.V_flow = vt;
        rs.fs = group_sets.front().fs;
        rs.records = group_sets.front().records;
        for (std::size_t k = 0; k < n; ++k) {
            ForceRecord& r = rs.records[k];
            r.V_flow = vt;
            const Wrench& a = group_sets[s0].records[k].wrench;
            const Wrench& b = group_sets[s1].records[k].wrench;
            const Wrench& c = group_sets[s2].records[k].wrench;
            r.wrench.tau = w0 * a.tau + w1 * b.tau + w2 * c.tau;
            r.wrench.f = w0 * a.f + w1 * b.f + w2 * c.f;
        }
        out.push_back(std::move(rs));
    }
    lowpass_wrench_channels(out, cutoff_hz);
    return out;
}

std::vector<RecordSet> augment_with_interpolation(const std::vector<RecordSet>& sets,
                                                  const std::vector<double>& targets,
                                                  double cutoff_hz) {
    std::vector<int> group_order;
    std::map<int, std::vector<RecordSet>> by_group;
    int next_id = 0;
    for (const RecordSet& rs : sets) {
        if (!by_group.count(rs.group)) group_order.push_back(rs.group);
        by_group[rs.group].push_back(rs);
        next_id = std::max(next_id, rs.id + 1);
    }
    std::vector<RecordSet> out = sets;
    for (int g : group_order) {
        std::vector<RecordSet> made =
            interpolate_velocity(by_group[g], targets, next_id, cutoff_hz);
        next_id += static_cast<int>(made.size());
        for (RecordSet& rs : made) out.push_back(std::move(rs));
    }
    return out;
}

std::vector<SequenceSample> make_windows(const RecordSet& rs, int len) {
    if (len < 1) throw InsufficientLength("window length must be positive");
    const int n = static_cast<int>(rs.records.size());
    if (n < len)
        throw InsufficientLength("record set shorter than one window");
    std::vector<SequenceSample> out;
    out.reserve(static_cast<std::size_t>(n - len + 1));
    for (int start = 0; start + len <= n; ++start) {
        SequenceSample s;
        s.window.resize(len, kInputDim);
        for (int i = 0; i < len; ++i) {
            const ForceRecord& r = rs.records[static_cast<std::size_t>(start + i)];
            s.window(i, 0) = r.V_flow;
            s.window(i, 1) = r.theta_H;
            s.window(i, 2) = r.theta_K;
            s.window(i, 3) = r.dtheta_H;
            s.window(i, 4) = r.dtheta_K;
        }
        const Wrench& w = rs.records[static_cast<std::size_t>(start + len - 1)].wrench;
        s.target << w.tau.x(), w.tau.y(), w.tau.z(), w.f.x(), w.f.y(), w.f.z();
        s.set_id = rs.id;
        s.group = rs.group;
        s.V_flow = rs.V_flow;
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<SequenceSample> make_windows(const std::vector<RecordSet>& sets, int len) {
    std::vector<SequenceSample> out;
    for (const RecordSet& rs : sets) {
        std::vector<SequenceSample> s = make_windows(rs, len);
        out.insert(out.end(), std::make_move_iterator(s.begin()),
                   std::make_move_iterator(s.end()));
    }
    return out;
}

SplitResult split_dataset(const std::vector<SequenceSample>& samples, std::uint64_t seed) {
    std::vector<int> groups;
    for (const SequenceSample& s : samples)
        if (std::find(groups.begin(), groups.end(), s.group) == groups.end())
            groups.push_back(s.group);

    Rng rng(seed);
    rng.shuffle(groups);

    const long G = static_cast<long>(groups.size());
    long n_train = std::min<long>(G, std::max<long>(1, std::lround(0.7 * G)));
    long n_val = std::max<long>(1, std::lround(0.1 * G));
    while (n_train + n_val > G - 1 && n_train > 1) --n_train;
    if (n_train + n_val > G) n_val = G - n_train;

    enum Part { kTrain, kVal, kTest };
    std::map<int, Part> part;
    for (long i = 0; i < G; ++i)
        part[groups[static_cast<std::size_t>(i)]] =
            i < n_train ? kTrain : (i < n_train + n_val ? kVal : kTest);

    SplitResult out;
    for (const SequenceSample& s : samples) {
        switch (part[s.group]) {
            case kTrain: out.train.push_back(s); break;
            case kVal: out.val.push_back(s); break;
            case kTest: out.test.push_back(s); break;
        }
    }
    return out;
}

} // namespace hydroquad
