// Command-line front end: run, check, oracle, paths.
#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "lrm/experiment.hpp"

namespace {

int cmd_run(const std::string& path) {
    const auto cfg = lrm::load_config(path);
    const auto res = lrm::run_experiment(cfg);
    const auto dir = lrm::output_directory(cfg);
    auto files = lrm::write_artifacts(res, dir);
    if (cfg.outputs.paths_csv || cfg.outputs.prices_csv) {
        for (auto& f : lrm::write_path_dump(cfg, dir)) {
            files.push_back(f);
        }
    }
    std::cout << lrm::criteria_csv_header() << '\n';
    for (const auto& h : res.hedges) {
        std::cout << lrm::criteria_csv_row(h.label, h.liquid, h.classical) << '\n';
    }
    for (const auto& w : res.warnings) {
        std::cerr << "warning: " << w << '\n';
    }
    for (const auto& f : files) {
        std::cerr << "wrote " << f.string() << '\n';
    }
    return 0;
}

int cmd_check(const std::string& path) {
    const auto cfg = lrm::load_config(path);
    const auto res = lrm::run_condition_check(cfg);
    const auto files = lrm::write_condition_artifacts(cfg, res, lrm::output_directory(cfg));
    bool pass = true;
    for (std::size_t i = 0; i < res.hedges.size(); ++i) {
        std::cout << "hedge " << res.hedges[i] << '\n';
        for (const auto& c : res.reports[i].checks) {
            std::printf("  %-32s %-4s worst=%.9g threshold=%.12g evaluated=%zu degenerate=%zu\n",
                        c.name.c_str(), c.pass ? "pass" : "FAIL", c.worst, c.threshold,
                        c.evaluated, c.degenerate);
        }
        pass = pass && res.reports[i].all_pass();
    }
    for (const auto& f : files) {
        std::cerr << "wrote " << f.string() << '\n';
    }
    return pass ? 0 : 2;
}

int cmd_oracle() {
    const auto rep = lrm::run_oracle_suite();
    for (const auto& c : rep.cases) {
        std::printf("%-4s %-40s err=%.3g  %s\n", c.pass ? "pass" : "FAIL", c.name.c_str(),
                    c.max_error, c.detail.c_str());
    }
    return rep.all_pass() ? 0 : 1;
}

int cmd_paths(const std::string& path) {
    const auto cfg = lrm::load_config(path);
    for (const auto& f : lrm::write_path_dump(cfg, lrm::output_directory(cfg))) {
        std::cerr << "wrote " << f.string() << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Locally risk-minimizing hedging of electricity futures under illiquidity"};
    app.require_subcommand(1);
    std::string config;
    auto* run = app.add_subcommand("run", "solve both strategies and write all artifacts");
    run->add_option("config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    auto* check = app.add_subcommand("check", "evaluate the structural conditions without solving");
    check->add_option("config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    auto* oracle = app.add_subcommand("oracle", "compare the engine with the enumeration oracle");
    auto* paths = app.add_subcommand("paths", "dump simulated factor, spot and futures paths");
    paths->add_option("config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            return cmd_run(config);
        }
        if (*check) {
            return cmd_check(config);
        }
        if (*oracle) {
            return cmd_oracle();
        }
        if (*paths) {
            return cmd_paths(config);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
