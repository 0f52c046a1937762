#ifndef FOKKERFIT_PIPELINE_HPP
#define FOKKERFIT_PIPELINE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "fokkerfit/common.hpp"

namespace fokkerfit {

/// Learning parameters derived from the precision/confidence pair.
struct Schedule {
    double epsilon = 0.0;
    double delta = 0.0;
    int m = 1;
    int n = 1;
    double T = 1.0;

    int M = 0;
    int N = 0;
    double R = 0.0;
    double lambda = 0.0;
    double h_Q = 0.0;

    nlohmann::json to_json() const;
};

/// M = eps^{-1/m}/4 and N = eps^{-(2+n/(2m))} as closest integers,
/// R = eps^{-1/(2m)}, lambda = log(1/(delta eps)) eps^2,
/// h_Q = min(1, (log(1/(delta eps))^{1/2} eps)^{1/(2m-1)}),
/// with floors M >= max(2, ceil(2T)) and N >= 1.
Schedule make_schedule(double epsilon, double delta, int m, int n, double T);

/// Flat INI-style config with [simulate], [fit], [validate] sections.
/// Unknown sections or keys are errors; every field has a default.
struct RunConfig {
    // [simulate]
    std::string family = "ou";
    double theta = 1.0;
    double sigma2 = 0.5;
    double alpha = 0.5;
    double r_star = 3.0;
    int n = 1;
    double T = 1.0;
    double sim_dt = 1e-3;
    std::uint64_t seed = 42;
    std::string law = "gaussian";
    std::vector<double> law_mean = {1.0};
    double law_var = 0.0625;
    double law_radius = 1.0;
    // [simulate] overrides of the scheduled sampling sizes (0 = use schedule)
    int M_override = 0;
    int N_override = 0;

    // [fit]
    double epsilon = 0.2;
    double delta = 0.1;
    int m = 1;
    double R_override = 0.0;
    double lambda_override = -1.0;
    double h_q_override = 0.0;
    int q_cap = 5000;
    int space_panels = 0;
    int space_order = 10;
    double time_rel_tol = 1e-6;
    int max_time_intervals = 96;
    double kernel_lengthscale = 1.0;
    int max_iters = 50000;

    // [validate]
    int grid_nx = 241;
    int grid_nt = 33;
    double grid_halfwidth = 0.0;  // 0 = r_star
    double fp_dt = 0.0;           // 0 = auto
    int gap_probes = 20;

    nlohmann::json to_json() const;
};

RunConfig parse_config(const std::string& path);

struct StageTimes {
    double simulate = 0.0, density = 0.0, centers = 0.0, assemble = 0.0, solve = 0.0,
           validate = 0.0;
};

struct RunReport {
    Schedule schedule;
    std::uint64_t seed = 0;
    int Q = 0;
    double L_phat = 0.0;
    double lp_objective = 0.0;
    int solver_iterations = 0;
    std::string solver_termination;
    double E = 0.0;
    double gap_max_lhs = 0.0;
    double gap_rhs_at_max = 0.0;
    int gap_probes = 0;
    bool gap_all_bounded = false;
    StageTimes seconds;
    nlohmann::json artifacts;

    nlohmann::json to_json() const;
    void save(const std::string& path) const;
};

/// Full pass: simulate -> density -> centers -> assemble -> solve ->
/// fp-validate, persisting every intermediate under out_dir.
RunReport run(const RunConfig& cfg, const std::string& out_dir);

/// Stage subsets used by the CLI subcommands.
void run_simulate(const RunConfig& cfg, const std::string& out_dir);
void run_fit(const RunConfig& cfg, const std::string& out_dir);
RunReport run_validate(const RunConfig& cfg, const std::string& out_dir);

/// Cross-run tables: CSV (epsilon vs metrics) plus a JSON summary with
/// log-log slope fits. All runs must share the state dimension.
void report(const std::vector<std::string>& run_dirs, const std::string& out_dir);

}  // namespace fokkerfit

#endif
