#pragma once

#include <optional>
#include <string>
#include <vector>

#include "wdn/admm.hpp"
#include "wdn/centralized.hpp"

namespace wdn {

inline constexpr double kLpsToM3s = 1e-3;

Network load_network(const std::string& path);
void save_network(const Network& net, const std::string& path);

Scenario load_scenario(const std::string& path, const Network& net);
void save_scenario(const Scenario& scen, const Network& net, const std::string& path);

enum class Algorithm { simulate, standard, two_level, centralized };

std::string algorithm_name(Algorithm alg);

struct RunConfig {
    Algorithm algorithm = Algorithm::simulate;
    std::string network_path;
    std::string scenario_path;
    std::string output_dir = ".";
    double delta = kUnbounded;  // m
    double beta1 = 0.1;
    std::optional<double> rho;       // standard ADMM; defaults to 2*beta1
    double gamma = 1.25;
    double omega = 0.75;
    double beta_cap = 1e5;
    double lambda_lo = -1e5;
    double lambda_hi = 1e5;
    double eps_primal = 1e-2;
    std::optional<double> eps_dual;  // standard ADMM; defaults to eps_primal
    double z_stability_tol = 1e-5;
    int k_max = 1000;
    int m_max = 200;
    int workers = 0;  // 0: WDN_WORKERS env var, then hardware concurrency
    unsigned seed = 0;
    SccParams scc;
    std::optional<std::vector<int>> scc_window;  // overrides the scenario's window
    AlmOptions stage_options;

    void validate() const;
};

/// Round-trippable dump of a solve (or simulation) written as JSON.
struct SolutionFile {
    std::string network, scenario, algorithm;
    double delta = kUnbounded;
    double objective = 0.0;
    SccParams scc;
    std::vector<int> scc_window;
    Trajectory traj;
    Mat h_bar;                // coordinated head copy (empty for simulations)
    Vec pressure_range;       // per node over the horizon
    Vec c_lower, c_upper;     // envelope
    double range_violation = 0.0;
    int violating_nodes = 0;
};

void write_solution(const SolutionFile& sol, const std::string& path);
SolutionFile load_solution(const std::string& path);

void write_trace(const IterationTrace& trace, const std::string& path);
void write_outer_trace(const IterationTrace& trace, const std::string& path);

struct SweepRow {
    double beta1 = 0.0;
    std::string status;
    int iterations = 0;
    double objective = 0.0;
    double max_violation = 0.0;
    double wall_seconds = 0.0;
    std::string error;
};

/// Loads inputs, runs the configured algorithm, writes solution + trace +
/// summary under output_dir. Exit codes: 0 converged, 2 not converged,
/// 1 error.
int run(const RunConfig& config);

/// Repeats run() across initial penalties (standard ADMM uses rho = 2*beta1);
/// failures are recorded per row and the sweep continues.
std::vector<SweepRow> sweep(const RunConfig& config, const std::vector<double>& beta1_list);

/// Validation entry point: checks files, bounds, and the no-control range
/// against delta. Returns 0 when everything is usable.
int validate(const RunConfig& config);

}  // namespace wdn
