#include "optexec/experiments.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

namespace {

enum ExitCode { kOk = 0, kIoError = 1, kConfigError = 2, kNumericError = 3 };

std::vector<optexec::ResidualPoint> parse_points(const std::vector<std::string>& specs) {
    std::vector<optexec::ResidualPoint> points;
    std::vector<std::string> problems;
    for (const auto& spec : specs) {
        const auto colon = spec.find(':');
        try {
            if (colon == std::string::npos) throw std::invalid_argument("missing ':'");
            points.push_back({std::stod(spec.substr(0, colon)), std::stod(spec.substr(colon + 1))});
        } catch (const std::exception&) {
            problems.push_back("--point '" + spec + "': expected <t>:<phi>");
        }
    }
    if (!problems.empty()) throw optexec::ConfigError(problems);
    return points;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Optimal execution under price impact: DP solver, closed forms, HJB and MC checks"};
    app.set_version_flag("--version", std::string(OPTEXEC_VERSION));
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    unsigned threads = optexec::hardware_threads();
    app.add_option("--config", config_path, "experiment config (JSON)")->required();
    app.add_option("--out", out_dir, "output directory (default: the config's outputs)");
    app.add_option("--seed", seed, "override mc.seed");
    app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

    auto* solve = app.add_subcommand("solve", "solve the DP and write the value grid");

    auto* figures = app.add_subcommand("figures", "strategy, holdings, surface and region CSVs");
    std::vector<double> phi_list{1.0, 10.0, 100.0};
    figures->add_option("--phi", phi_list, "holdings to plot")->delimiter(',');

    auto* converge = app.add_subcommand("converge", "DP values across n against a reference");
    std::vector<int> n_list{25, 50, 100, 200, 400};
    converge->add_option("--n", n_list, "resolutions, ascending")->delimiter(',');

    auto* mc = app.add_subcommand("mc", "Monte Carlo value of a fixed strategy");
    std::string mc_strategy = "dp";
    mc->add_option("--strategy", mc_strategy, "dp or closed_form")
        ->check(CLI::IsMember({"dp", "closed_form"}));

    auto* hjb = app.add_subcommand("hjb-check", "HJB residuals of closed forms and the DP grid");
    std::vector<std::string> point_specs;
    hjb->add_option("--point", point_specs, "sample point <t>:<phi> (repeatable)");

    auto* sellout = app.add_subcommand("sellout-compare", "sandwich check against the sell-out DP");

    CLI11_PARSE(app, argc, argv);

    try {
        auto config = optexec::load_config(config_path);
        if (seed) config.mc.seed = *seed;
        const optexec::RunOptions options{out_dir.empty() ? config.outputs : std::filesystem::path(out_dir), threads};

        if (*solve) {
            const auto grid = optexec::cmd_solve(config, options);
            std::cout << "value " << optexec::csv::format(grid.interpolate(grid.k_max(), config.market.phi0()))
                      << '\n';
        } else if (*figures) {
            optexec::cmd_figures(config, phi_list, options);
        } else if (*converge) {
            if (!std::is_sorted(n_list.begin(), n_list.end())) {
                throw optexec::ConfigError({"--n: resolutions must be ascending"});
            }
            for (const auto& row : optexec::cmd_converge(config, n_list, options)) {
                std::cout << row.n << ' ' << optexec::csv::format(row.value) << '\n';
            }
        } else if (*mc) {
            const auto which = mc_strategy == "dp" ? optexec::McStrategy::dp_playout
                                                   : optexec::McStrategy::closed_form;
            const auto est = optexec::cmd_mc(config, which, options);
            std::cout << "mean " << optexec::csv::format(est.mean) << " stderr "
                      << optexec::csv::format(est.standard_error) << '\n';
        } else if (*hjb) {
            const auto points = point_specs.empty() ? optexec::default_residual_points(config)
                                                    : parse_points(point_specs);
            for (const auto& r : optexec::cmd_hjb_check(config, points, options)) {
                std::cout << optexec::to_string(r.region) << ' ' << optexec::csv::format(r.t) << ' '
                          << optexec::csv::format(r.phi) << ' ' << optexec::csv::format(r.residual)
                          << '\n';
            }
        } else if (*sellout) {
            const auto report = optexec::cmd_sellout_compare(config, options);
            std::cout << "violations " << report.violations << '\n';
        }
    } catch (const optexec::ConfigError& e) {
        std::cerr << e.what() << '\n';
        return kConfigError;
    } catch (const optexec::NumericAssertionError& e) {
        std::cerr << e.what() << '\n';
        return kNumericError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kIoError;
    }
    return kOk;
}
