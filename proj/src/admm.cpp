#include "wdn/admm.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace wdn {

namespace {

using Clock = std::chrono::steady_clock;

int resolve_workers(int requested, int jobs) {
    int workers = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
    if (workers < 1) workers = 1;
    return std::min(workers, jobs);
}

/// Runs fn(0..n-1) on a bounded pool; results land in caller-owned slots so
/// the outcome is independent of scheduling.
void parallel_stages(int n, int workers, const std::function<void(int)>& fn) {
    workers = resolve_workers(workers, n);
    if (workers <= 1) {
        for (int t = 0; t < n; ++t) fn(t);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const int t = next.fetch_add(1);
                if (t >= n) return;
                try {
                    fn(t);
                } catch (...) {
                    std::scoped_lock lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

struct SweepOutcome {
    int converged_stages = 0;
    int total_iterations = 0;
    std::string error;
};

/// One parallel first-block update: solves every stage problem in place.
SweepOutcome stage_sweep(const ControlProblem& problem, Trajectory& traj, Mat& h, const Mat& h_bar,
                         const Mat& z, const Mat& y, double rho, const AlmOptions& stage_opts,
                         int workers) {
    const int nt = problem.scen->horizon;
    std::vector<KktReport> reports(nt);
    std::vector<std::string> errors(nt);

    parallel_stages(nt, workers, [&](int t) {
        try {
            const StageProblem prob = make_stage_problem(
                *problem.net, *problem.inc, *problem.scen, *problem.bounds, problem.scc, t,
                h_bar.row(t).transpose(), z.row(t).transpose(), y.row(t).transpose(), rho);
            auto [state, report] = solve_stage(prob, traj.stages[t], stage_opts);
            traj.stages[t] = std::move(state);
            reports[t] = report;
        } catch (const Error& err) {
            errors[t] = err.what();
        }
    });

    SweepOutcome outcome;
    for (int t = 0; t < nt; ++t) {
        if (!errors[t].empty() && outcome.error.empty())
            outcome.error = "stage " + std::to_string(t + 1) + ": " + errors[t];
        outcome.converged_stages += reports[t].converged ? 1 : 0;
        outcome.total_iterations += reports[t].iterations;
        h.row(t) = traj.stages[t].h.transpose();
    }
    return outcome;
}

/// Flags 50-iteration stretches without primal progress; the run continues.
struct StallMonitor {
    double best = kUnbounded;
    int since_best = 0;

    bool feed(double primal) {
        if (primal < best) {
            best = primal;
            since_best = 0;
            return false;
        }
        if (++since_best >= 50) {
            since_best = 0;
            return true;
        }
        return false;
    }
};

}  // namespace

void ConsensusState::reset(const Trajectory& start, int nt, int nn) {
    traj = start;
    h = head_matrix(traj);
    h_bar = h;
    z = Mat::Zero(nt, nn);
    y = Mat::Zero(nt, nn);
    lambda = Mat::Zero(nt, nn);
    k = 0;
    m = 0;
}

void TwoLevelConfig::validate() const {
    if (!(beta1 > 0.0)) throw ParameterError("beta1 must be positive");
    if (!(gamma > 1.0)) throw ParameterError("gamma must exceed 1");
    if (!(omega >= 0.0 && omega < 1.0)) throw ParameterError("omega must lie in [0, 1)");
    if (!(lambda_lo < lambda_hi)) throw ParameterError("lambda bounds must be ordered");
    if (!(eps_primal > 0.0)) throw ParameterError("eps_primal must be positive");
    if (k_max < 1 || m_max < 1) throw ParameterError("iteration limits must be at least 1");
}

Mat z_update(const Mat& h, const Mat& h_bar, const Mat& y, const Mat& lambda, double beta,
             double rho) {
    if (!(beta + rho > 0.0)) throw ParameterError("z update requires beta + rho > 0");
    return -(lambda + y + rho * (h - h_bar)) / (beta + rho);
}

Mat dual_update_y(const Mat& y, const Mat& h, const Mat& h_bar, const Mat& z, double rho) {
    return y + rho * (h - h_bar + z);
}

Mat lambda_update(const Mat& lambda, const Mat& z, double beta, double lo, double hi) {
    if (!(lo < hi)) throw ParameterError("lambda bounds must be ordered");
    return (lambda + beta * z).cwiseMax(lo).cwiseMin(hi);
}

double beta_update(double beta, double z_norm, double prev_z_norm, double gamma, double omega,
                   double cap) {
    if (!(gamma > 1.0)) throw ParameterError("gamma must exceed 1");
    if (!(omega >= 0.0 && omega < 1.0)) throw ParameterError("omega must lie in [0, 1)");
    return z_norm > omega * prev_z_norm ? std::min(cap, gamma * beta) : beta;
}

double total_objective(const Trajectory& traj, const Scenario& scen, const Network& net,
                       const SccParams& params) {
    double total = 0.0;
    for (int t = 0; t < traj.size(); ++t) {
        const StageObjective f = stage_objective(t, scen, net, params);
        total += f.value(traj.stages[t].q, traj.stages[t].h);
    }
    return total;
}

SolveResult run_standard(const ControlProblem& problem, const StandardConfig& config) {
    if (!(config.rho > 0.0)) throw ParameterError("standard ADMM requires rho > 0");
    if (config.k_max < 1) throw ParameterError("k_max must be at least 1");

    const auto t0 = Clock::now();
    const int nt = problem.scen->horizon;
    const int nn = problem.net->junction_count;
    const double scale = std::sqrt(static_cast<double>(nn) * nt);

    SolveResult result;
    ConsensusState& st = result.state;
    st.reset(*problem.start, nt, nn);
    st.rho = config.rho;
    st.beta = config.rho / 2.0;
    result.trace.nn = nn;
    result.trace.nt = nt;

    StallMonitor stall;
    result.status = SolveStatus::iteration_limit;

    // With the range constraint switched off the coordination mirrors the
    // local heads exactly, so the consensus machinery degenerates: one sweep
    // of unpenalized stage solves is the exact solution.
    const bool degenerate = !problem.coupling.active();

    for (int k = 1; k <= config.k_max; ++k) {
        const SweepOutcome sweep =
            stage_sweep(problem, st.traj, st.h, st.h_bar, st.z, st.y,
                        degenerate ? 0.0 : config.rho, config.stage_options, config.workers);
        if (!sweep.error.empty()) {
            result.status = SolveStatus::stage_failure;
            result.message = sweep.error;
            break;
        }

        const Mat h_bar_prev = st.h_bar;
        st.h_bar = coordinate(st.h, st.z, st.y, config.rho, problem.coupling);
        st.y = dual_update_y(st.y, st.h, st.h_bar, st.z, config.rho);
        st.k = k;

        IterRecord rec;
        rec.iter = k;
        rec.primal = (st.h - st.h_bar).norm();
        rec.consensus = rec.primal;
        rec.normalized = rec.primal / scale;
        rec.dual_surrogate = config.rho * (st.h_bar - h_bar_prev).norm();
        rec.objective = total_objective(st.traj, *problem.scen, *problem.net, problem.scc);
        rec.beta = config.rho / 2.0;
        rec.rho = config.rho;
        rec.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
        rec.stages_converged = sweep.converged_stages;
        rec.stage_iterations = sweep.total_iterations;
        result.trace.records.push_back(rec);

        if (stall.feed(rec.primal))
            result.trace.annotations.push_back("primal residual made no progress over 50 iterations ending at " +
                                               std::to_string(k));

        const bool primal_ok = rec.primal <= scale * config.eps_primal;
        const bool dual_ok = degenerate || !std::isfinite(config.eps_dual) ||
                             rec.dual_surrogate <= scale * config.eps_dual;
        if (primal_ok && dual_ok) {
            result.status = SolveStatus::converged;
            break;
        }
    }

    result.converged = result.status == SolveStatus::converged;
    result.objective = total_objective(st.traj, *problem.scen, *problem.net, problem.scc);
    result.violation = range_violation(st.h, problem.coupling.delta);
    result.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    if (result.status == SolveStatus::iteration_limit)
        result.message = "primal residual above tolerance after " +
                         std::to_string(config.k_max) + " iterations";
    return result;
}

SolveResult run_two_level(const ControlProblem& problem, const TwoLevelConfig& config) {
    config.validate();

    const auto t0 = Clock::now();
    const int nt = problem.scen->horizon;
    const int nn = problem.net->junction_count;
    const double scale = std::sqrt(static_cast<double>(nn) * nt);

    SolveResult result;
    ConsensusState& st = result.state;
    st.reset(*problem.start, nt, nn);
    st.beta = config.beta1;

    result.trace.nn = nn;
    result.trace.nt = nt;

    double prev_outer_z_norm = 0.0;  // z is initialized to zero
    StallMonitor stall;
    result.status = SolveStatus::iteration_limit;
    bool aborted = false;

    for (int m = 1; m <= config.m_max && !aborted; ++m) {
        st.rho = 2.0 * st.beta;
        st.z.setZero();
        st.y = -st.lambda;
        st.h_bar = st.h;

        OuterRecord outer;
        outer.m = m;
        outer.beta = st.beta;
        outer.rho = st.rho;
        outer.restart_identity =
            (st.lambda + st.beta * st.z + st.y).lpNorm<Eigen::Infinity>();

        const double inner_tol = scale * config.eps_primal / m;
        for (int k = 0; k < config.k_max; ++k) {
            const double rho_stage = k == 0 ? 0.0 : st.rho;
            const SweepOutcome sweep =
                stage_sweep(problem, st.traj, st.h, st.h_bar, st.z, st.y, rho_stage,
                            config.stage_options, config.workers);
            if (!sweep.error.empty()) {
                result.status = SolveStatus::stage_failure;
                result.message = sweep.error;
                aborted = true;
                break;
            }

            const Mat coupled_prev = st.h_bar + st.z;
            st.h_bar = coordinate(st.h, st.z, st.y, st.rho, problem.coupling);
            const Mat z_prev = st.z;
            st.z = z_update(st.h, st.h_bar, st.y, st.lambda, st.beta, st.rho);
            st.y = dual_update_y(st.y, st.h, st.h_bar, st.z, st.rho);
            ++st.k;

            IterRecord rec;
            rec.iter = st.k;
            rec.outer = m;
            rec.primal = (st.h - st.h_bar).norm();
            rec.consensus = (st.h - st.h_bar + st.z).norm();
            rec.normalized = rec.primal / scale;
            rec.dual_surrogate = st.rho * (st.h_bar + st.z - coupled_prev).norm();
            rec.z_stability = st.rho * (st.z - z_prev).norm();
            rec.objective = total_objective(st.traj, *problem.scen, *problem.net, problem.scc);
            rec.z_norm = st.z.norm();
            rec.beta = st.beta;
            rec.rho = st.rho;
            rec.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
            rec.stages_converged = sweep.converged_stages;
            rec.stage_iterations = sweep.total_iterations;
            result.trace.records.push_back(rec);

            if (stall.feed(rec.primal))
                result.trace.annotations.push_back(
                    "primal residual made no progress over 50 iterations ending at " +
                    std::to_string(st.k));

            if (rec.consensus <= inner_tol || rec.z_stability <= config.z_stability_tol) break;
        }
        if (aborted) break;

        const double z_norm = st.z.norm();
        outer.z_norm = z_norm;
        outer.amplified = z_norm > config.omega * prev_outer_z_norm;
        result.trace.outer_records.push_back(outer);

        st.lambda = lambda_update(st.lambda, st.z, st.beta, config.lambda_lo, config.lambda_hi);
        st.beta = beta_update(st.beta, z_norm, prev_outer_z_norm, config.gamma, config.omega,
                              config.beta_cap);
        prev_outer_z_norm = z_norm;
        st.m = m;

        if ((st.h - st.h_bar).norm() <= scale * config.eps_primal) {
            result.status = SolveStatus::converged;
            break;
        }
    }

    result.converged = result.status == SolveStatus::converged;
    result.objective = total_objective(st.traj, *problem.scen, *problem.net, problem.scc);
    result.violation = range_violation(st.h, problem.coupling.delta);
    result.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    if (result.status == SolveStatus::iteration_limit)
        result.message = "outer primal residual above tolerance after " +
                         std::to_string(config.m_max) + " outer iterations";
    return result;
}

}  // namespace wdn
