#include <CLI11.hpp>

#include <iostream>
#include <sstream>

#include "wdn/io.hpp"

namespace {

double parse_delta(const std::string& text) {
    if (text == "inf" || text == "Inf" || text == "INF") return wdn::kUnbounded;
    return std::stod(text);
}

std::vector<int> parse_window(const std::string& text) {
    std::vector<int> window;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) if (!item.empty()) window.push_back(std::stoi(item));
    return window;
}

void add_common(CLI::App* cmd, wdn::RunConfig& cfg, std::string& delta_text,
                std::string& window_text) {
    cmd->add_option("-n,--network", cfg.network_path, "network file")->required();
    cmd->add_option("-s,--scenario", cfg.scenario_path, "scenario file")->required();
    cmd->add_option("-o,--out-dir", cfg.output_dir, "output directory");
    cmd->add_option("--delta", delta_text, "pressure range tolerance in m, or 'inf'");
    cmd->add_option("--scc-window", window_text, "comma-separated 1-based SCC steps");
    cmd->add_option("--v-threshold", cfg.scc.threshold_velocity, "self-cleaning velocity, m/s");
    cmd->add_option("--scc-steepness", cfg.scc.steepness, "logistic steepness");
    cmd->add_option("--workers", cfg.workers, "stage solver threads (0: WDN_WORKERS or cores)");
    cmd->add_option("--seed", cfg.seed, "seed recorded in the summary");
}

void add_solver(CLI::App* cmd, wdn::RunConfig& cfg, double& rho, double& eps_dual) {
    cmd->add_option("--beta1", cfg.beta1, "initial penalty parameter");
    cmd->add_option("--rho", rho, "fixed penalty for standard ADMM (default 2*beta1)");
    cmd->add_option("--gamma", cfg.gamma, "penalty amplification factor");
    cmd->add_option("--omega", cfg.omega, "slack decrease threshold");
    cmd->add_option("--beta-cap", cfg.beta_cap, "largest allowed beta");
    cmd->add_option("--eps-primal", cfg.eps_primal, "primal tolerance");
    cmd->add_option("--eps-dual", eps_dual, "dual tolerance for standard ADMM (off by default)");
    cmd->add_option("--k-max", cfg.k_max, "inner iteration limit");
    cmd->add_option("--m-max", cfg.m_max, "outer iteration limit");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Optimal pressure / self-cleaning control for water networks"};
    app.require_subcommand(1);

    wdn::RunConfig cfg;
    std::string delta_text = "inf";
    std::string window_text;
    std::string algorithm = "two-level";
    std::string beta_list_text;
    double rho = 0.0, eps_dual = 0.0;

    CLI::App* simulate = app.add_subcommand("simulate", "no-control hydraulic simulation");
    add_common(simulate, cfg, delta_text, window_text);

    CLI::App* solve = app.add_subcommand("solve", "optimize the control schedule");
    add_common(solve, cfg, delta_text, window_text);
    add_solver(solve, cfg, rho, eps_dual);
    solve->add_option("-a,--algorithm", algorithm,
                      "standard | two-level | centralized");

    CLI::App* sweep_cmd = app.add_subcommand("sweep", "repeat a solve across beta1 values");
    add_common(sweep_cmd, cfg, delta_text, window_text);
    add_solver(sweep_cmd, cfg, rho, eps_dual);
    sweep_cmd->add_option("-a,--algorithm", algorithm, "standard | two-level");
    sweep_cmd->add_option("--beta1-list", beta_list_text, "comma-separated beta1 values")
        ->required();

    CLI::App* validate_cmd = app.add_subcommand("validate", "check inputs and delta feasibility");
    add_common(validate_cmd, cfg, delta_text, window_text);

    CLI11_PARSE(app, argc, argv);

    try {
        cfg.delta = parse_delta(delta_text);
        if (!window_text.empty()) cfg.scc_window = parse_window(window_text);
        if (solve->count("--rho") || sweep_cmd->count("--rho")) cfg.rho = rho;
        if (solve->count("--eps-dual") || sweep_cmd->count("--eps-dual")) cfg.eps_dual = eps_dual;

        if (algorithm == "standard")
            cfg.algorithm = wdn::Algorithm::standard;
        else if (algorithm == "two-level")
            cfg.algorithm = wdn::Algorithm::two_level;
        else if (algorithm == "centralized")
            cfg.algorithm = wdn::Algorithm::centralized;
        else
            throw wdn::ParameterError("unknown algorithm '" + algorithm + "'");

        if (simulate->parsed()) {
            cfg.algorithm = wdn::Algorithm::simulate;
            return wdn::run(cfg);
        }
        if (solve->parsed()) return wdn::run(cfg);
        if (validate_cmd->parsed()) return wdn::validate(cfg);
        if (sweep_cmd->parsed()) {
            if (cfg.algorithm == wdn::Algorithm::centralized)
                throw wdn::ParameterError("sweep applies to standard or two-level");
            std::vector<double> betas;
            std::stringstream ss(beta_list_text);
            std::string item;
            while (std::getline(ss, item, ',')) if (!item.empty()) betas.push_back(std::stod(item));
            const auto rows = wdn::sweep(cfg, betas);
            std::cout << "beta1       status            iter   objective      max_viol\n";
            bool all_ok = true;
            for (const auto& r : rows) {
                std::printf("%-11g %-17s %-6d %-14.6g %-10.4g %s\n", r.beta1, r.status.c_str(),
                            r.iterations, r.objective, r.max_violation, r.error.c_str());
                all_ok = all_ok && r.status == "converged";
            }
            return all_ok ? 0 : 2;
        }
    } catch (const wdn::Error& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
    return 0;
}
