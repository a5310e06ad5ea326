#include "wdn/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <unordered_map>

namespace wdn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_short(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

double parse_number(const std::string& token, const std::string& path, int line) {
    try {
        size_t used = 0;
        const double v = std::stod(token, &used);
        if (used != token.size()) throw std::invalid_argument(token);
        if (!std::isfinite(v)) throw UnitError("non-finite value '" + token + "'");
        return v;
    } catch (const UnitError&) {
        throw;
    } catch (const std::exception&) {
        throw ParseError(path, line, "expected a number, got '" + token + "'");
    }
}

int parse_int(const std::string& token, const std::string& path, int line) {
    try {
        size_t used = 0;
        const int v = std::stoi(token, &used);
        if (used != token.size()) throw std::invalid_argument(token);
        return v;
    } catch (const std::exception&) {
        throw ParseError(path, line, "expected an integer, got '" + token + "'");
    }
}

std::vector<std::string> tokenize(const std::string& line) {
    std::vector<std::string> tokens;
    std::istringstream in(line.substr(0, line.find('#')));
    std::string tok;
    while (in >> tok) tokens.push_back(tok);
    return tokens;
}

struct NameMaps {
    std::unordered_map<std::string, NodeRef> nodes;
    std::unordered_map<std::string, int> links;
};

NodeRef node_ref(const NameMaps& maps, const std::string& id, const std::string& path, int line) {
    const auto it = maps.nodes.find(id);
    if (it == maps.nodes.end()) throw ParseError(path, line, "unknown node '" + id + "'");
    return it->second;
}

Vec to_vec(const json& arr) {
    Vec v(arr.size());
    for (size_t i = 0; i < arr.size(); ++i) v[static_cast<Index>(i)] = arr[i].get<double>();
    return v;
}

json from_vec(const Vec& v) {
    json arr = json::array();
    for (Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

}  // namespace

std::string algorithm_name(Algorithm alg) {
    switch (alg) {
        case Algorithm::simulate: return "simulate";
        case Algorithm::standard: return "standard";
        case Algorithm::two_level: return "two-level";
        case Algorithm::centralized: return "centralized";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Network format
// ---------------------------------------------------------------------------

Network load_network(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "cannot open file");

    Network net;
    NameMaps maps;
    std::vector<double> elev, hmin_nodes, azp_w, alpha_lps;
    std::vector<std::pair<std::string, double>> scc_w_named, azp_w_named, hmin_named;
    double hmin_scalar = 0.0;
    bool saw_end = false;

    std::string line;
    int ln = 0;
    while (std::getline(in, line)) {
        ++ln;
        const auto tok = tokenize(line);
        if (tok.empty()) continue;
        if (saw_end) throw ParseError(path, ln, "content after 'end'");
        const std::string& kw = tok[0];

        if (kw == "network") {
            if (tok.size() != 2) throw ParseError(path, ln, "usage: network <name>");
            net.name = tok[1];
        } else if (kw == "node") {
            if (tok.size() < 3) throw ParseError(path, ln, "usage: node <id> source|junction [elev]");
            if (maps.nodes.count(tok[1]))
                throw ParseError(path, ln, "duplicate node '" + tok[1] + "'");
            if (tok[2] == "source") {
                maps.nodes[tok[1]] = {true, net.source_count++};
                net.source_names.push_back(tok[1]);
            } else if (tok[2] == "junction") {
                if (tok.size() != 4)
                    throw ParseError(path, ln, "usage: node <id> junction <elevation_m>");
                maps.nodes[tok[1]] = {false, net.junction_count++};
                net.junction_names.push_back(tok[1]);
                elev.push_back(parse_number(tok[3], path, ln));
            } else {
                throw ParseError(path, ln, "node kind must be 'source' or 'junction'");
            }
        } else if (kw == "link") {
            if (tok.size() < 5) throw ParseError(path, ln, "usage: link <id> pipe|valve <from> <to> ...");
            if (maps.links.count(tok[1]))
                throw ParseError(path, ln, "duplicate link '" + tok[1] + "'");
            Link link;
            link.from = node_ref(maps, tok[3], path, ln);
            link.to = node_ref(maps, tok[4], path, ln);
            if (tok[2] == "pipe") {
                if (tok.size() != 8)
                    throw ParseError(path, ln,
                                     "usage: link <id> pipe <from> <to> <length_m> <diameter_m> <hw_coeff>");
                link.kind = LinkKind::pipe;
                link.length = parse_number(tok[5], path, ln);
                link.diameter = parse_number(tok[6], path, ln);
                link.hw_coeff = parse_number(tok[7], path, ln);
            } else if (tok[2] == "valve") {
                if (tok.size() != 7)
                    throw ParseError(path, ln,
                                     "usage: link <id> valve <from> <to> <diameter_m> <loss_coeff>");
                link.kind = LinkKind::valve;
                link.diameter = parse_number(tok[5], path, ln);
                link.loss_coeff = parse_number(tok[6], path, ln);
            } else {
                throw ParseError(path, ln, "link kind must be 'pipe' or 'valve'");
            }
            maps.links[tok[1]] = net.link_count();
            net.link_names.push_back(tok[1]);
            net.links.push_back(link);
        } else if (kw == "pcv") {
            if (tok.size() != 2) throw ParseError(path, ln, "usage: pcv <link-id>");
            const auto it = maps.links.find(tok[1]);
            if (it == maps.links.end()) throw ParseError(path, ln, "unknown link '" + tok[1] + "'");
            net.pcv_links.push_back(it->second);
        } else if (kw == "afv") {
            if (tok.size() != 2 && tok.size() != 3)
                throw ParseError(path, ln, "usage: afv <node-id> [max_lps]");
            const NodeRef ref = node_ref(maps, tok[1], path, ln);
            if (ref.source) throw ParseError(path, ln, "AFV must sit on a junction");
            net.afv_nodes.push_back(ref.idx);
            alpha_lps.push_back(tok.size() == 3 ? parse_number(tok[2], path, ln) : 25.0);
        } else if (kw == "hmin") {
            if (tok.size() != 2) throw ParseError(path, ln, "usage: hmin <m>");
            hmin_scalar = parse_number(tok[1], path, ln);
        } else if (kw == "hmin-node") {
            if (tok.size() != 3) throw ParseError(path, ln, "usage: hmin-node <node-id> <m>");
            hmin_named.emplace_back(tok[1], parse_number(tok[2], path, ln));
        } else if (kw == "azp-weight") {
            if (tok.size() != 3) throw ParseError(path, ln, "usage: azp-weight <node-id> <w>");
            azp_w_named.emplace_back(tok[1], parse_number(tok[2], path, ln));
        } else if (kw == "scc-weight") {
            if (tok.size() != 3) throw ParseError(path, ln, "usage: scc-weight <link-id> <w>");
            scc_w_named.emplace_back(tok[1], parse_number(tok[2], path, ln));
        } else if (kw == "end") {
            saw_end = true;
        } else {
            throw ParseError(path, ln, "unknown keyword '" + kw + "'");
        }
    }
    if (!saw_end) throw ParseError(path, ln, "missing 'end'");

    net.elevation = Eigen::Map<Vec>(elev.data(), elev.size());
    net.h_min_node = Vec::Constant(net.junction_count, hmin_scalar);
    for (const auto& [id, v] : hmin_named) {
        const NodeRef ref = node_ref(maps, id, path, 0);
        if (ref.source) throw ParseError(path, 0, "hmin-node applies to junctions only");
        net.h_min_node[ref.idx] = v;
    }
    net.alpha_max.resize(static_cast<Index>(alpha_lps.size()));
    for (size_t f = 0; f < alpha_lps.size(); ++f) {
        if (alpha_lps[f] < 0.0) throw UnitError("AFV cap must be nonnegative (got " +
                                                fmt(alpha_lps[f]) + " L/s)");
        net.alpha_max[static_cast<Index>(f)] = alpha_lps[f] * kLpsToM3s;
    }
    if (!azp_w_named.empty()) {
        net.azp_weights = Vec::Zero(net.junction_count);
        for (const auto& [id, v] : azp_w_named) {
            const NodeRef ref = node_ref(maps, id, path, 0);
            if (ref.source) throw ParseError(path, 0, "azp-weight applies to junctions only");
            net.azp_weights[ref.idx] = v;
        }
    }
    if (!scc_w_named.empty()) {
        net.scc_weights = Vec::Zero(net.link_count());
        for (const auto& [id, v] : scc_w_named) {
            const auto it = maps.links.find(id);
            if (it == maps.links.end()) throw ParseError(path, 0, "unknown link '" + id + "'");
            net.scc_weights[it->second] = v;
        }
    }

    net.finalize();
    net.validate();
    return net;
}

void save_network(const Network& net, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << "network " << (net.name.empty() ? "unnamed" : net.name) << "\n";
    for (int s = 0; s < net.source_count; ++s)
        out << "node " << net.source_names[s] << " source\n";
    for (int i = 0; i < net.junction_count; ++i)
        out << "node " << net.junction_names[i] << " junction " << fmt(net.elevation[i]) << "\n";
    for (int j = 0; j < net.link_count(); ++j) {
        const Link& link = net.links[j];
        const auto& from = link.from.source ? net.source_names[link.from.idx]
                                            : net.junction_names[link.from.idx];
        const auto& to =
            link.to.source ? net.source_names[link.to.idx] : net.junction_names[link.to.idx];
        out << "link " << net.link_names[j];
        if (link.kind == LinkKind::pipe)
            out << " pipe " << from << " " << to << " " << fmt(link.length) << " "
                << fmt(link.diameter) << " " << fmt(link.hw_coeff) << "\n";
        else
            out << " valve " << from << " " << to << " " << fmt(link.diameter) << " "
                << fmt(link.loss_coeff) << "\n";
    }
    for (int j : net.pcv_links) out << "pcv " << net.link_names[j] << "\n";
    for (int f = 0; f < net.afv_count(); ++f)
        out << "afv " << net.junction_names[net.afv_nodes[f]] << " "
            << fmt(net.alpha_max[f] / kLpsToM3s) << "\n";
    for (int i = 0; i < net.junction_count; ++i)
        out << "hmin-node " << net.junction_names[i] << " " << fmt(net.h_min_node[i]) << "\n";
    for (int i = 0; i < net.junction_count; ++i)
        out << "azp-weight " << net.junction_names[i] << " " << fmt(net.azp_weights[i]) << "\n";
    for (int j = 0; j < net.link_count(); ++j)
        out << "scc-weight " << net.link_names[j] << " " << fmt(net.scc_weights[j]) << "\n";
    out << "end\n";
}

// ---------------------------------------------------------------------------
// Scenario format
// ---------------------------------------------------------------------------

namespace {

void load_demand_table(const std::string& csv_path, const Network& net, Scenario& scen,
                       const std::string& scen_path, int ref_line) {
    std::ifstream in(csv_path);
    if (!in)
        throw ParseError(scen_path, ref_line, "cannot open demand table '" + csv_path + "'");

    std::unordered_map<std::string, int> junctions;
    for (int i = 0; i < net.junction_count; ++i) junctions[net.junction_names[i]] = i;

    auto split = [](const std::string& s) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ss(s);
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        return cells;
    };

    std::string line;
    if (!std::getline(in, line)) throw ParseError(csv_path, 1, "empty demand table");
    const auto header = split(line);
    std::vector<int> columns(header.size(), -1);
    for (size_t c = 0; c < header.size(); ++c) {
        if (c == 0 && header[c] == "time") continue;
        const auto it = junctions.find(header[c]);
        if (it == junctions.end())
            throw ParseError(csv_path, 1, "header names unknown junction '" + header[c] + "'");
        columns[c] = it->second;
    }

    int row = 0;
    int ln = 1;
    while (std::getline(in, line)) {
        ++ln;
        if (line.empty()) continue;
        if (row >= scen.horizon)
            throw ParseError(csv_path, ln, "more rows than the scenario horizon");
        const auto cells = split(line);
        if (cells.size() != header.size())
            throw ParseError(csv_path, ln, "row width does not match header");
        for (size_t c = 0; c < cells.size(); ++c) {
            if (columns[c] < 0) continue;
            scen.demands(row, columns[c]) = parse_number(cells[c], csv_path, ln) * kLpsToM3s;
        }
        ++row;
    }
    if (row != scen.horizon)
        throw ParseError(csv_path, ln, "expected " + std::to_string(scen.horizon) + " rows, got " +
                                           std::to_string(row));
}

}  // namespace

Scenario load_scenario(const std::string& path, const Network& net) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "cannot open file");

    std::unordered_map<std::string, int> junctions, sources;
    for (int i = 0; i < net.junction_count; ++i) junctions[net.junction_names[i]] = i;
    for (int s = 0; s < net.source_count; ++s) sources[net.source_names[s]] = s;

    Scenario scen;
    bool have_horizon = false, saw_end = false;
    std::vector<bool> head_given;

    std::string line;
    int ln = 0;
    while (std::getline(in, line)) {
        ++ln;
        const auto tok = tokenize(line);
        if (tok.empty()) continue;
        if (saw_end) throw ParseError(path, ln, "content after 'end'");
        const std::string& kw = tok[0];

        if (kw == "scenario") {
            if (tok.size() != 2) throw ParseError(path, ln, "usage: scenario <name>");
            scen.name = tok[1];
        } else if (kw == "horizon") {
            if (tok.size() != 3) throw ParseError(path, ln, "usage: horizon <n_t> <step_minutes>");
            scen.horizon = parse_int(tok[1], path, ln);
            scen.step_minutes = parse_number(tok[2], path, ln);
            if (scen.horizon <= 0) throw ParseError(path, ln, "horizon must be positive");
            scen.demands = Mat::Zero(scen.horizon, net.junction_count);
            scen.source_heads = Mat::Zero(scen.horizon, net.source_count);
            head_given.assign(net.source_count, false);
            have_horizon = true;
        } else if (kw == "scc-window") {
            for (size_t c = 1; c < tok.size(); ++c)
                scen.scc_window.push_back(parse_int(tok[c], path, ln));
        } else if (kw == "source-head" || kw == "demand") {
            if (!have_horizon) throw ParseError(path, ln, "'horizon' must come first");
            if (tok.size() != static_cast<size_t>(scen.horizon) + 2)
                throw ParseError(path, ln, "expected " + std::to_string(scen.horizon) +
                                               " values after the id");
            if (kw == "source-head") {
                const auto it = sources.find(tok[1]);
                if (it == sources.end())
                    throw ParseError(path, ln, "unknown source '" + tok[1] + "'");
                for (int t = 0; t < scen.horizon; ++t)
                    scen.source_heads(t, it->second) = parse_number(tok[t + 2], path, ln);
                head_given[it->second] = true;
            } else {
                const auto it = junctions.find(tok[1]);
                if (it == junctions.end())
                    throw ParseError(path, ln, "unknown junction '" + tok[1] + "'");
                for (int t = 0; t < scen.horizon; ++t)
                    scen.demands(t, it->second) = parse_number(tok[t + 2], path, ln) * kLpsToM3s;
            }
        } else if (kw == "demand-table") {
            if (!have_horizon) throw ParseError(path, ln, "'horizon' must come first");
            if (tok.size() != 2) throw ParseError(path, ln, "usage: demand-table <csv-path>");
            const fs::path csv = fs::path(path).parent_path() / tok[1];
            load_demand_table(csv.string(), net, scen, path, ln);
        } else if (kw == "end") {
            saw_end = true;
        } else {
            throw ParseError(path, ln, "unknown keyword '" + kw + "'");
        }
    }
    if (!saw_end) throw ParseError(path, ln, "missing 'end'");
    if (!have_horizon) throw ParseError(path, ln, "missing 'horizon'");
    for (int s = 0; s < net.source_count; ++s)
        if (!head_given[s])
            throw ParseError(path, ln, "no source-head series for '" + net.source_names[s] + "'");

    scen.validate(net);
    return scen;
}

void save_scenario(const Scenario& scen, const Network& net, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << "scenario " << (scen.name.empty() ? "unnamed" : scen.name) << "\n";
    out << "horizon " << scen.horizon << " " << fmt(scen.step_minutes) << "\n";
    if (!scen.scc_window.empty()) {
        out << "scc-window";
        for (int w : scen.scc_window) out << " " << w;
        out << "\n";
    }
    for (int s = 0; s < net.source_count; ++s) {
        out << "source-head " << net.source_names[s];
        for (int t = 0; t < scen.horizon; ++t) out << " " << fmt(scen.source_heads(t, s));
        out << "\n";
    }
    for (int i = 0; i < net.junction_count; ++i) {
        out << "demand " << net.junction_names[i];
        for (int t = 0; t < scen.horizon; ++t) out << " " << fmt(scen.demands(t, i) / kLpsToM3s);
        out << "\n";
    }
    out << "end\n";
}

// ---------------------------------------------------------------------------
// Solution, trace, summary
// ---------------------------------------------------------------------------

void write_solution(const SolutionFile& sol, const std::string& path) {
    json doc;
    doc["kind"] = "solution";
    doc["network"] = sol.network;
    doc["scenario"] = sol.scenario;
    doc["algorithm"] = sol.algorithm;
    if (std::isfinite(sol.delta))
        doc["delta"] = sol.delta;
    else
        doc["delta"] = "inf";
    doc["objective"] = sol.objective;
    doc["scc"] = {{"threshold_velocity", sol.scc.threshold_velocity},
                  {"steepness", sol.scc.steepness}};
    doc["scc_window"] = sol.scc_window;
    json stages = json::array();
    for (const StageState& s : sol.traj.stages)
        stages.push_back({{"q", from_vec(s.q)},
                          {"h", from_vec(s.h)},
                          {"eta", from_vec(s.eta)},
                          {"alpha", from_vec(s.alpha)}});
    doc["stages"] = std::move(stages);
    if (sol.h_bar.size() > 0) {
        json hb = json::array();
        for (Index t = 0; t < sol.h_bar.rows(); ++t)
            hb.push_back(from_vec(sol.h_bar.row(t).transpose()));
        doc["h_bar"] = std::move(hb);
    }
    doc["pressure_range"] = from_vec(sol.pressure_range);
    doc["envelope_lower"] = from_vec(sol.c_lower);
    doc["envelope_upper"] = from_vec(sol.c_upper);
    doc["range_violation"] = sol.range_violation;
    doc["violating_nodes"] = sol.violating_nodes;

    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << doc.dump(1) << "\n";
}

SolutionFile load_solution(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "cannot open file");
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& err) {
        throw ParseError(path, 0, err.what());
    }
    SolutionFile sol;
    sol.network = doc.value("network", "");
    sol.scenario = doc.value("scenario", "");
    sol.algorithm = doc.value("algorithm", "");
    sol.delta = doc["delta"].is_string() ? kUnbounded : doc["delta"].get<double>();
    sol.objective = doc["objective"].get<double>();
    sol.scc.threshold_velocity = doc["scc"]["threshold_velocity"].get<double>();
    sol.scc.steepness = doc["scc"]["steepness"].get<double>();
    sol.scc_window = doc["scc_window"].get<std::vector<int>>();
    for (const json& s : doc["stages"])
        sol.traj.stages.push_back({to_vec(s["q"]), to_vec(s["h"]), to_vec(s["eta"]),
                                   to_vec(s["alpha"])});
    if (doc.contains("h_bar")) {
        const json& hb = doc["h_bar"];
        if (!hb.empty()) {
            sol.h_bar.resize(hb.size(), hb[0].size());
            for (size_t t = 0; t < hb.size(); ++t)
                sol.h_bar.row(t) = to_vec(hb[t]).transpose();
        }
    }
    sol.pressure_range = to_vec(doc["pressure_range"]);
    sol.c_lower = to_vec(doc["envelope_lower"]);
    sol.c_upper = to_vec(doc["envelope_upper"]);
    sol.range_violation = doc["range_violation"].get<double>();
    sol.violating_nodes = doc["violating_nodes"].get<int>();
    return sol;
}

void write_trace(const IterationTrace& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << "iter,outer,primal,consensus,normalized,dual_surrogate,z_stability,objective,"
           "z_norm,beta,rho,stages_converged,stage_iterations\n";
    for (const IterRecord& r : trace.records) {
        out << r.iter << "," << r.outer << "," << fmt(r.primal) << "," << fmt(r.consensus) << ","
            << fmt(r.normalized) << "," << fmt(r.dual_surrogate) << "," << fmt(r.z_stability)
            << "," << fmt(r.objective) << "," << fmt(r.z_norm) << "," << fmt(r.beta) << ","
            << fmt(r.rho) << "," << r.stages_converged << "," << r.stage_iterations << "\n";
    }
    for (const std::string& note : trace.annotations) out << "# " << note << "\n";
}

void write_outer_trace(const IterationTrace& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << "m,beta,rho,z_norm,restart_identity,amplified\n";
    for (const OuterRecord& r : trace.outer_records)
        out << r.m << "," << fmt(r.beta) << "," << fmt(r.rho) << "," << fmt(r.z_norm) << ","
            << fmt(r.restart_identity) << "," << (r.amplified ? 1 : 0) << "\n";
}

void RunConfig::validate() const {
    if (network_path.empty() || scenario_path.empty())
        throw ParameterError("network and scenario paths are required");
    if (!(beta1 > 0.0)) throw ParameterError("beta1 must be positive");
    if (rho && !(*rho > 0.0)) throw ParameterError("rho must be positive");
    if (!(eps_primal > 0.0)) throw ParameterError("eps_primal must be positive");
    if (!(delta > 0.0)) throw ParameterError("delta must be positive (use inf to disable)");
    if (k_max < 1 || m_max < 1) throw ParameterError("iteration limits must be at least 1");
    scc.validate();
}

namespace {

int env_workers() {
    if (const char* env = std::getenv("WDN_WORKERS")) {
        const int w = std::atoi(env);
        if (w > 0) return w;
    }
    return 0;
}

struct LoadedInputs {
    Network net;
    Scenario scen;
    Incidence inc;
    Bounds bounds;
    Trajectory baseline;
};

LoadedInputs load_inputs(const RunConfig& config) {
    LoadedInputs in;
    in.net = load_network(config.network_path);
    in.scen = load_scenario(config.scenario_path, in.net);
    if (config.scc_window) {
        in.scen.scc_window = *config.scc_window;
        in.scen.validate(in.net);
    }
    in.inc = build_incidence(in.net);
    in.bounds = make_bounds(in.net, in.scen);
    in.baseline = feasible_start(in.net, in.inc, in.scen, in.bounds);
    return in;
}

void check_delta(const RunConfig& config, const LoadedInputs& in) {
    const DeltaCheck check = validate_delta(head_matrix(in.baseline), config.delta);
    if (!check.feasible)
        throw InvariantError(
            "delta " + fmt(config.delta) + " m is below the no-control pressure range " +
            fmt(check.baseline_range) + " m; binding node '" +
            in.net.junction_names[check.binding_node] + "'");
}

void write_summary(const json& doc, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << doc.dump(1) << "\n";
}

json base_summary(const RunConfig& config) {
    json doc;
    doc["kind"] = "summary";
    doc["algorithm"] = algorithm_name(config.algorithm);
    doc["network_file"] = config.network_path;
    doc["scenario_file"] = config.scenario_path;
    if (std::isfinite(config.delta))
        doc["delta"] = config.delta;
    else
        doc["delta"] = "inf";
    doc["eps_primal"] = config.eps_primal;
    doc["workers"] = config.workers;
    doc["seed"] = config.seed;
    return doc;
}

SolutionFile make_solution_file(const RunConfig& config, const LoadedInputs& in,
                                const Trajectory& traj, double objective, const Vec& c_lower,
                                const Vec& c_upper) {
    SolutionFile sol;
    sol.network = in.net.name;
    sol.scenario = in.scen.name;
    sol.algorithm = algorithm_name(config.algorithm);
    sol.delta = config.delta;
    sol.objective = objective;
    sol.scc = config.scc;
    sol.scc_window = in.scen.scc_window;
    sol.traj = traj;
    const Mat h = head_matrix(traj);
    sol.pressure_range = (h.colwise().maxCoeff() - h.colwise().minCoeff()).transpose();
    sol.c_lower = c_lower;
    sol.c_upper = c_upper;
    const RangeViolation viol = range_violation(h, config.delta);
    sol.range_violation = viol.max_violation;
    sol.violating_nodes = viol.violating_nodes;
    return sol;
}

/// Core of run(): everything but the error handling, so sweep can reuse it.
int execute(const RunConfig& config, SweepRow* row) {
    RunConfig cfg = config;
    if (cfg.workers == 0) cfg.workers = env_workers();
    cfg.validate();

    const fs::path dir(cfg.output_dir);
    fs::create_directories(dir);

    LoadedInputs in = load_inputs(cfg);

    json summary = base_summary(cfg);
    const std::string solution_path = (dir / "solution.json").string();
    const std::string trace_path = (dir / "trace.csv").string();
    const std::string summary_path = (dir / "summary.json").string();

    if (cfg.algorithm == Algorithm::simulate) {
        const auto sim_start = std::chrono::steady_clock::now();
        const double objective = total_objective(in.baseline, in.scen, in.net, cfg.scc);
        const Mat h = head_matrix(in.baseline);
        const SolutionFile sol =
            make_solution_file(cfg, in, in.baseline, objective, h.colwise().minCoeff().transpose(),
                               h.colwise().maxCoeff().transpose());
        write_solution(sol, solution_path);
        summary["objective"] = objective;
        summary["iterations"] = 0;
        summary["converged"] = true;
        summary["status"] = "converged";
        summary["max_range_violation"] = sol.range_violation;
        summary["violating_nodes"] = sol.violating_nodes;
        summary["wall_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - sim_start).count();
        summary["files"] = {{"solution", "solution.json"}};
        write_summary(summary, summary_path);
        if (row) *row = {cfg.beta1, "converged", 0, objective, sol.range_violation, 0.0, ""};
        return 0;
    }

    check_delta(cfg, in);

    ControlProblem problem;
    problem.net = &in.net;
    problem.inc = &in.inc;
    problem.scen = &in.scen;
    problem.bounds = &in.bounds;
    problem.coupling = {cfg.delta};
    problem.scc = cfg.scc;
    problem.start = &in.baseline;

    if (cfg.algorithm == Algorithm::centralized) {
        AlmOptions opts = cfg.stage_options;
        opts.max_inner = std::max(opts.max_inner, 2000);
        opts.max_outer = std::max(opts.max_outer, 60);
        const CentralizedResult res = solve_centralized(problem, opts);
        const SolutionFile sol = make_solution_file(cfg, in, res.traj, res.objective,
                                                    res.c_lower, res.c_upper);
        write_solution(sol, solution_path);
        summary["objective"] = res.objective;
        summary["iterations"] = res.report.inner_iterations;
        summary["converged"] = res.converged;
        summary["status"] = res.converged ? "converged" : "iteration-limit";
        summary["max_range_violation"] = sol.range_violation;
        summary["violating_nodes"] = sol.violating_nodes;
        summary["wall_seconds"] = res.wall_seconds;
        summary["files"] = {{"solution", "solution.json"}};
        write_summary(summary, summary_path);
        if (row)
            *row = {cfg.beta1, res.converged ? "converged" : "iteration-limit",
                    res.report.inner_iterations, res.objective, sol.range_violation,
                    res.wall_seconds, ""};
        return res.converged ? 0 : 2;
    }

    SolveResult res;
    if (cfg.algorithm == Algorithm::standard) {
        StandardConfig sc;
        sc.rho = cfg.rho ? *cfg.rho : 2.0 * cfg.beta1;
        sc.eps_primal = cfg.eps_primal;
        sc.eps_dual = cfg.eps_dual ? *cfg.eps_dual : cfg.eps_primal;
        sc.k_max = cfg.k_max;
        sc.workers = cfg.workers;
        sc.stage_options = cfg.stage_options;
        res = run_standard(problem, sc);
        summary["rho"] = sc.rho;
    } else {
        TwoLevelConfig tc;
        tc.beta1 = cfg.beta1;
        tc.gamma = cfg.gamma;
        tc.omega = cfg.omega;
        tc.beta_cap = cfg.beta_cap;
        tc.lambda_lo = cfg.lambda_lo;
        tc.lambda_hi = cfg.lambda_hi;
        tc.eps_primal = cfg.eps_primal;
        tc.z_stability_tol = cfg.z_stability_tol;
        tc.k_max = cfg.k_max;
        tc.m_max = cfg.m_max;
        tc.workers = cfg.workers;
        tc.stage_options = cfg.stage_options;
        res = run_two_level(problem, tc);
        summary["beta1"] = cfg.beta1;
        summary["outer_iterations"] = res.outer_iterations();
        write_outer_trace(res.trace, (dir / "outer.csv").string());
    }

    const Mat hb = res.state.h_bar;
    SolutionFile sol =
        make_solution_file(cfg, in, res.traj(), res.objective, hb.colwise().minCoeff().transpose(),
                           hb.colwise().maxCoeff().transpose());
    sol.h_bar = hb;
    write_solution(sol, solution_path);
    write_trace(res.trace, trace_path);

    const char* status = res.status == SolveStatus::converged       ? "converged"
                         : res.status == SolveStatus::iteration_limit ? "iteration-limit"
                                                                      : "stage-failure";
    summary["objective"] = res.objective;
    summary["iterations"] = res.iterations();
    summary["converged"] = res.converged;
    summary["status"] = status;
    summary["max_range_violation"] = res.violation.max_violation;
    summary["violating_nodes"] = res.violation.violating_nodes;
    summary["wall_seconds"] = res.wall_seconds;
    if (!res.message.empty()) summary["message"] = res.message;
    summary["files"] = {{"solution", "solution.json"}, {"trace", "trace.csv"}};
    write_summary(summary, summary_path);

    if (row)
        *row = {cfg.beta1,        status,           res.iterations(), res.objective,
                res.violation.max_violation, res.wall_seconds, ""};
    if (res.status == SolveStatus::stage_failure) return 1;
    return res.converged ? 0 : 2;
}

}  // namespace

int run(const RunConfig& config) {
    try {
        return execute(config, nullptr);
    } catch (const Error& err) {
        json doc;
        doc["kind"] = "error";
        doc["error_class"] = typeid(err).name();
        doc["message"] = err.what();
        std::cerr << "error: " << err.what() << "\n";
        try {
            fs::create_directories(config.output_dir);
            write_summary(doc, (fs::path(config.output_dir) / "error.json").string());
        } catch (...) {
        }
        return 1;
    }
}

std::vector<SweepRow> sweep(const RunConfig& config, const std::vector<double>& beta1_list) {
    if (beta1_list.empty()) throw ParameterError("sweep needs at least one beta1 value");
    if (config.algorithm != Algorithm::standard && config.algorithm != Algorithm::two_level)
        throw ParameterError("sweep applies to the standard or two-level algorithms");

    std::vector<SweepRow> rows;
    rows.reserve(beta1_list.size());
    for (double beta1 : beta1_list) {
        RunConfig cfg = config;
        cfg.beta1 = beta1;
        cfg.rho.reset();  // standard ADMM sweeps use rho = 2*beta1
        cfg.output_dir = (fs::path(config.output_dir) / ("beta_" + fmt_short(beta1))).string();
        SweepRow row;
        row.beta1 = beta1;
        try {
            execute(cfg, &row);
        } catch (const Error& err) {
            row.status = "error";
            row.error = err.what();
        }
        rows.push_back(std::move(row));
    }

    fs::create_directories(config.output_dir);
    std::ofstream out(fs::path(config.output_dir) / "sweep.csv");
    out << "beta1,status,iterations,objective,max_violation,wall_seconds,error\n";
    for (const SweepRow& r : rows)
        out << fmt(r.beta1) << "," << r.status << "," << r.iterations << "," << fmt(r.objective)
            << "," << fmt(r.max_violation) << "," << fmt(r.wall_seconds) << ",\"" << r.error
            << "\"\n";
    return rows;
}

int validate(const RunConfig& config) {
    try {
        LoadedInputs in = load_inputs(config);
        const DeltaCheck check = validate_delta(head_matrix(in.baseline), config.delta);
        std::cout << "network '" << in.net.name << "': " << in.net.junction_count
                  << " junctions, " << in.net.source_count << " sources, " << in.net.link_count()
                  << " links, " << in.net.pcv_count() << " PCV, " << in.net.afv_count()
                  << " AFV\n";
        std::cout << "scenario '" << in.scen.name << "': " << in.scen.horizon << " steps of "
                  << in.scen.step_minutes << " min\n";
        std::cout << "no-control pressure range: " << fmt(check.baseline_range) << " m at node '"
                  << in.net.junction_names[check.binding_node] << "'\n";
        if (!check.feasible) {
            std::cerr << "error: delta " << fmt(config.delta)
                      << " m is below the no-control pressure range " << fmt(check.baseline_range)
                      << " m; binding node '" << in.net.junction_names[check.binding_node]
                      << "'\n";
            return 1;
        }
        std::cout << "delta " << (std::isfinite(config.delta) ? fmt(config.delta) : "inf")
                  << " is attainable\n";
        return 0;
    } catch (const Error& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
}

}  // namespace wdn
