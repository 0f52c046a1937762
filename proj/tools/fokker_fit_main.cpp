#include <CLI11.hpp>
#include <cstdio>
#include <iostream>

#include "fokkerfit/pipeline.hpp"

using namespace fokkerfit;

namespace {

struct CommonFlags {
    std::string config;
    std::string out = "out";
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 1;
    double epsilon = 0.0;
    double delta = 0.0;
};

RunConfig load_config(const CommonFlags& fl) {
    RunConfig cfg = fl.config.empty() ? RunConfig{} : parse_config(fl.config);
    if (fl.seed_set) cfg.seed = fl.seed;
    if (fl.epsilon > 0.0) cfg.epsilon = fl.epsilon;
    if (fl.delta > 0.0) cfg.delta = fl.delta;
    return cfg;
}

void add_common(CLI::App* cmd, CommonFlags& fl, bool with_out = true) {
    cmd->add_option("--config", fl.config, "Run configuration file");
    if (with_out) cmd->add_option("--out", fl.out, "Output directory");
    cmd->add_option("--seed", fl.seed, "Override the simulation seed")
        ->each([&fl](const std::string&) { fl.seed_set = true; });
    cmd->add_option("--threads", fl.threads, "Worker cap for parallel stages");
    cmd->add_option("--epsilon", fl.epsilon, "Override precision epsilon");
    cmd->add_option("--delta", fl.delta, "Override confidence delta");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Drift/diffusion identification via Fokker-Planck fitting"};
    app.require_subcommand(1);

    CommonFlags fl;
    int sched_m = 1, sched_n = 1;
    double sched_T = 1.0;
    std::vector<std::string> report_dirs;

    auto* c_sim = app.add_subcommand("simulate", "Generate and persist an observation dataset");
    add_common(c_sim, fl);
    auto* c_fit = app.add_subcommand("fit", "Fit coefficients to a persisted dataset");
    add_common(c_fit, fl);
    auto* c_val = app.add_subcommand("validate", "Forward-solve and score learned coefficients");
    add_common(c_val, fl);
    auto* c_run = app.add_subcommand("run", "Full simulate/fit/validate pass");
    add_common(c_run, fl);
    auto* c_sched = app.add_subcommand("schedule", "Print the learning-parameter schedule");
    add_common(c_sched, fl, false);
    c_sched->add_option("--m", sched_m, "Coefficient smoothness index");
    c_sched->add_option("--n", sched_n, "State dimension");
    c_sched->add_option("--T", sched_T, "Horizon time");
    auto* c_rep = app.add_subcommand("report", "Aggregate tables across completed runs");
    c_rep->add_option("dirs", report_dirs, "Run directories")->required();
    c_rep->add_option("--out", fl.out, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        set_max_threads(fl.threads);
        if (c_sim->parsed()) {
            run_simulate(load_config(fl), fl.out);
        } else if (c_fit->parsed()) {
            run_fit(load_config(fl), fl.out);
        } else if (c_val->parsed()) {
            RunReport rep = run_validate(load_config(fl), fl.out);
            std::cout << rep.to_json().dump(2) << "\n";
        } else if (c_run->parsed()) {
            RunReport rep = run(load_config(fl), fl.out);
            std::cout << rep.to_json().dump(2) << "\n";
        } else if (c_sched->parsed()) {
            double eps = fl.epsilon > 0.0 ? fl.epsilon : 0.2;
            double del = fl.delta > 0.0 ? fl.delta : 0.1;
            std::cout << make_schedule(eps, del, sched_m, sched_n, sched_T).to_json().dump(2)
                      << "\n";
        } else if (c_rep->parsed()) {
            report(report_dirs, fl.out);
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const BudgetError& e) {
        std::fprintf(stderr, "budget exceeded: %s\n", e.what());
        return 4;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}
