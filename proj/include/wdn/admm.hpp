#pragma once

#include <string>
#include <vector>

#include "wdn/coupling.hpp"
#include "wdn/stage_nlp.hpp"

namespace wdn {

struct StandardConfig {
    double rho = 2.0;  // fixed penalty, conventionally 2 * beta1
    double eps_primal = 1e-2;
    double eps_dual = 1e-2;  // same sqrt(n_n n_t) scaling as the primal test
    int k_max = 1000;
    int workers = 0;  // 0 = hardware concurrency
    AlmOptions stage_options;
};

struct TwoLevelConfig {
    double beta1 = 1.0;
    double gamma = 1.25;
    double omega = 0.75;
    double beta_cap = 1e5;
    double lambda_lo = -1e5;
    double lambda_hi = 1e5;
    double eps_primal = 1e-2;
    double z_stability_tol = 1e-5;
    int k_max = 1000;  // inner sweeps per outer iteration
    int m_max = 200;
    int workers = 0;
    AlmOptions stage_options;

    void validate() const;
};

/// Everything a distributed solve needs; all pointees outlive the run.
struct ControlProblem {
    const Network* net = nullptr;
    const Incidence* inc = nullptr;
    const Scenario* scen = nullptr;
    const Bounds* bounds = nullptr;
    CouplingSpec coupling;
    SccParams scc;
    const Trajectory* start = nullptr;  // feasible (no-control) trajectory
};

struct ConsensusState {
    Trajectory traj;
    Mat h;       // n_t x n_n local heads
    Mat h_bar;   // global copy
    Mat z;       // slacks (identically zero in standard mode)
    Mat y;       // consensus duals
    Mat lambda;  // slack duals (two-level only)
    double rho = 0.0;
    double beta = 0.0;
    int k = 0;  // cumulative stage-solve sweeps
    int m = 0;  // outer iterations

    void reset(const Trajectory& start, int nt, int nn);
};

struct IterRecord {
    int iter = 0;   // cumulative sweep count
    int outer = 0;  // 0 for standard ADMM
    double primal = 0.0;      // ||h - h_bar||
    double consensus = 0.0;   // ||h - h_bar + z||
    double normalized = 0.0;  // primal / sqrt(n_n n_t)
    double dual_surrogate = 0.0;
    double z_stability = 0.0;
    double objective = 0.0;
    double z_norm = 0.0;
    double beta = 0.0;
    double rho = 0.0;
    double seconds = 0.0;  // since the run started; kept out of the trace file
    int stages_converged = 0;
    int stage_iterations = 0;
};

struct OuterRecord {
    int m = 0;
    double beta = 0.0;  // beta^m in effect during the inner loop
    double rho = 0.0;   // 2 * beta^m
    double z_norm = 0.0;
    double restart_identity = 0.0;  // ||lambda + beta z0 + y0||_inf at restart
    bool amplified = false;
};

struct IterationTrace {
    int nn = 0, nt = 0;
    std::vector<IterRecord> records;
    std::vector<OuterRecord> outer_records;
    std::vector<std::string> annotations;
};

enum class SolveStatus { converged, iteration_limit, stage_failure };

struct SolveResult {
    ConsensusState state;
    SolveStatus status = SolveStatus::converged;
    bool converged = false;
    double objective = 0.0;
    RangeViolation violation;
    IterationTrace trace;
    double wall_seconds = 0.0;
    std::string message;

    const Trajectory& traj() const { return state.traj; }
    int iterations() const { return state.k; }
    int outer_iterations() const { return state.m; }
};

// Elementwise update steps shared by both drivers.
Mat z_update(const Mat& h, const Mat& h_bar, const Mat& y, const Mat& lambda, double beta,
             double rho);
Mat dual_update_y(const Mat& y, const Mat& h, const Mat& h_bar, const Mat& z, double rho);
Mat lambda_update(const Mat& lambda, const Mat& z, double beta, double lo, double hi);
double beta_update(double beta, double z_norm, double prev_z_norm, double gamma, double omega,
                   double cap);

double total_objective(const Trajectory& traj, const Scenario& scen, const Network& net,
                       const SccParams& params);

SolveResult run_standard(const ControlProblem& problem, const StandardConfig& config);
SolveResult run_two_level(const ControlProblem& problem, const TwoLevelConfig& config);

}  // namespace wdn
