#pragma once

#include "optexec/analytic_solutions.hpp"
#include "optexec/csv.hpp"
#include "optexec/dp_engine.hpp"
#include "optexec/hjb_checker.hpp"
#include "optexec/impact_model.hpp"
#include "optexec/mc_simulator.hpp"
#include "optexec/price_dynamics.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#ifndef OPTEXEC_VERSION
#define OPTEXEC_VERSION "unknown"
#endif

namespace optexec {

inline constexpr int kSchemaVersion = 1;

/// Every problem found while validating a config, not just the first.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> problems)
        : std::runtime_error(join(problems)), problems_(std::move(problems)) {}

    const std::vector<std::string>& problems() const noexcept { return problems_; }

private:
    static std::string join(const std::vector<std::string>& problems) {
        std::string out = "invalid config:";
        for (const auto& p : problems) out += "\n  - " + p;
        return out;
    }

    std::vector<std::string> problems_;
};

/// A computed quantity missed a tolerance the command asserts.
class NumericAssertionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct DpConfig {
    int n = 500;
    std::size_t phi_grid_size = 2000;   // intervals
    std::size_t psi_grid_size = 2001;   // dense candidates
    std::optional<int> k_max;           // default [n * horizon]

    PsiSearch psi() const { return {psi_grid_size, PsiSearch{}.golden_iterations}; }
};

struct ExperimentConfig {
    std::string name;
    MarketParams market;
    ImpactSpec impact;
    DpConfig dp;
    SimConfig mc;
    std::filesystem::path outputs;
    nlohmann::json source;  // the parsed document, echoed into summaries

    int steps() const { return dp.k_max.value_or(steps_for(dp.n, market.horizon())); }
};

namespace detail {

class Problems {
public:
    void add(std::string p) { list_.push_back(std::move(p)); }
    bool empty() const { return list_.empty(); }
    [[noreturn]] void raise() { throw ConfigError(std::move(list_)); }

    void unknown_keys(const nlohmann::json& obj, const std::string& where,
                      std::initializer_list<const char*> allowed) {
        for (const auto& [key, value] : obj.items()) {
            (void)value;
            if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
                add(where + ": unknown field '" + key + "'");
            }
        }
    }

    std::optional<double> number(const nlohmann::json& obj, const std::string& where, const char* key,
                                 bool required, std::function<bool(double)> ok = {},
                                 const char* rule = "") {
        if (!obj.contains(key)) {
            if (required) add(where + "." + key + ": missing");
            return std::nullopt;
        }
        const auto& v = obj.at(key);
        if (!v.is_number()) {
            add(where + "." + key + ": expected a number");
            return std::nullopt;
        }
        const double x = v.get<double>();
        if (ok && !ok(x)) {
            add(where + "." + key + ": " + rule);
            return std::nullopt;
        }
        return x;
    }

private:
    std::vector<std::string> list_;
};

inline bool positive_integer(double x) { return x >= 1.0 && std::floor(x) == x; }

}  // namespace detail

/// Parses and validates an experiment config. Unknown fields are errors.
inline ExperimentConfig parse_config(const nlohmann::json& doc) {
    detail::Problems problems;
    if (!doc.is_object()) {
        problems.add("config: expected a JSON object");
        problems.raise();
    }
    problems.unknown_keys(doc, "config",
                          {"schema_version", "name", "market", "impact", "dp", "mc", "outputs"});
    if (!doc.contains("schema_version")) {
        problems.add("config.schema_version: missing");
    } else if (doc.at("schema_version") != kSchemaVersion) {
        problems.add("config.schema_version: expected " + std::to_string(kSchemaVersion));
    }
    std::string name = "experiment";
    if (doc.contains("name")) {
        if (doc.at("name").is_string()) {
            name = doc.at("name").get<std::string>();
        } else {
            problems.add("config.name: expected a string");
        }
    }

    std::optional<MarketParams> market;
    if (!doc.contains("market") || !doc.at("market").is_object()) {
        problems.add("config.market: missing or not an object");
    } else {
        const auto& m = doc.at("market");
        problems.unknown_keys(m, "market", {"mu", "sigma", "s0", "phi0", "horizon"});
        const auto mu = problems.number(m, "market", "mu", true);
        const auto sigma = problems.number(m, "market", "sigma", true,
                                           [](double x) { return x >= 0.0; }, "must be >= 0");
        const auto s0 = problems.number(m, "market", "s0", true,
                                        [](double x) { return x >= 0.0; }, "must be >= 0");
        const auto phi0 = problems.number(m, "market", "phi0", true,
                                          [](double x) { return x > 0.0; }, "must be > 0");
        const auto horizon = problems.number(m, "market", "horizon", false,
                                             [](double x) { return x > 0.0 && x <= 1.0; },
                                             "must lie in (0, 1]");
        if (mu && sigma && !(*mu - 0.5 * *sigma * *sigma > 0.0)) {
            problems.add("market: mu - sigma^2/2 must be > 0");
        } else if (mu && sigma && s0 && phi0 && (horizon || !m.contains("horizon"))) {
            market.emplace(*mu, *sigma, *s0, *phi0, horizon.value_or(1.0));
        }
    }

    std::optional<ImpactSpec> impact;
    if (!doc.contains("impact")) {
        problems.add("config.impact: missing");
    } else {
        try {
            impact = impact_spec_from_json(doc.at("impact"));
        } catch (const std::exception& e) {
            problems.add(e.what());
        }
    }

    DpConfig dp;
    if (doc.contains("dp")) {
        const auto& d = doc.at("dp");
        if (!d.is_object()) {
            problems.add("config.dp: expected an object");
        } else {
            problems.unknown_keys(d, "dp", {"n", "phi_grid_size", "psi_grid_size", "k_max"});
            if (auto v = problems.number(d, "dp", "n", false, detail::positive_integer,
                                         "must be a positive integer")) {
                dp.n = static_cast<int>(*v);
            }
            if (auto v = problems.number(d, "dp", "phi_grid_size", false, detail::positive_integer,
                                         "must be a positive integer")) {
                dp.phi_grid_size = static_cast<std::size_t>(*v);
            }
            if (auto v = problems.number(d, "dp", "psi_grid_size", false,
                                         [](double x) { return detail::positive_integer(x) && x >= 2; },
                                         "must be an integer >= 2")) {
                dp.psi_grid_size = static_cast<std::size_t>(*v);
            }
            if (auto v = problems.number(d, "dp", "k_max", false,
                                         [](double x) { return x >= 0 && std::floor(x) == x; },
                                         "must be a non-negative integer")) {
                dp.k_max = static_cast<int>(*v);
            }
            if (dp.k_max && *dp.k_max > dp.n) problems.add("dp.k_max: must not exceed dp.n");
        }
    }

    SimConfig mc;
    if (doc.contains("mc")) {
        const auto& c = doc.at("mc");
        if (!c.is_object()) {
            problems.add("config.mc: expected an object");
        } else {
            problems.unknown_keys(c, "mc", {"paths", "seed", "dt_fine", "utility"});
            if (auto v = problems.number(c, "mc", "paths", false, detail::positive_integer,
                                         "must be a positive integer")) {
                mc.paths = static_cast<std::int64_t>(*v);
            }
            if (c.contains("seed")) {
                if (c.at("seed").is_number_unsigned()) {
                    mc.seed = c.at("seed").get<std::uint64_t>();
                } else {
                    problems.add("mc.seed: expected a non-negative integer");
                }
            }
            if (auto v = problems.number(c, "mc", "dt_fine", false, [](double x) { return x > 0.0; },
                                         "must be > 0")) {
                mc.dt_fine = *v;
            }
            if (c.contains("utility")) {
                const auto& u = c.at("utility");
                if (u == "risk_neutral") {
                    mc.utility = RiskNeutral{};
                } else if (u.is_object()) {
                    try {
                        problems.unknown_keys(u, "mc.utility",
                                              {"kind", "w", "s", "u_empty", "u_full", "phi_max",
                                               "growth_constant", "growth_exponent"});
                        if (u.value("kind", std::string{}) != "tabulated") {
                            throw std::invalid_argument("mc.utility.kind: expected \"tabulated\"");
                        }
                        auto flat = [&](const char* key) {
                            std::vector<double> out;
                            for (const auto& row : u.at(key)) {
                                for (const auto& x : row) out.push_back(x.get<double>());
                            }
                            return out;
                        };
                        mc.utility = TabulatedUtility(
                            u.at("w").get<std::vector<double>>(), u.at("s").get<std::vector<double>>(),
                            flat("u_empty"), flat("u_full"), u.at("phi_max").get<double>(),
                            u.value("growth_constant", 1.0), u.value("growth_exponent", 1));
                    } catch (const std::exception& e) {
                        problems.add(std::string("mc.utility: ") + e.what());
                    }
                } else {
                    problems.add("mc.utility: expected \"risk_neutral\" or a tabulated object");
                }
            }
        }
    }
    if (market && dp.n > 0 && mc.dt_fine > 1.0 / dp.n) {
        problems.add("mc.dt_fine: must not exceed 1/dp.n");
    }

    std::filesystem::path outputs = "out";
    if (doc.contains("outputs")) {
        if (doc.at("outputs").is_string()) {
            outputs = doc.at("outputs").get<std::string>();
        } else {
            problems.add("config.outputs: expected a path string");
        }
    }

    if (!problems.empty() || !market || !impact) problems.raise();
    return ExperimentConfig{name, *market, *impact, dp, mc, outputs, doc};
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError({"cannot open config file '" + path.string() + "'"});
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError({"'" + path.string() + "': " + e.what()});
    }
    return parse_config(doc);
}

struct RunOptions {
    std::filesystem::path out;
    unsigned threads = 1;
};

namespace detail {

inline std::ofstream open_output(const std::filesystem::path& dir, const std::string& file) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create directory '" + dir.string() + "': " + ec.message());
    const auto path = dir / file;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    return out;
}

inline void write_json(const std::filesystem::path& dir, const std::string& file,
                       const nlohmann::json& doc) {
    auto out = open_output(dir, file);
    out << doc.dump(2) << '\n';
}

inline PhiGrid grid_for(const ExperimentConfig& config, double phi_max) {
    return PhiGrid::uniform(phi_max, config.dp.phi_grid_size);
}

inline double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

inline std::string phi_label(double phi) { return csv::format(phi); }

}  // namespace detail

/// Solves the configured DP; writes value_grid.csv, policy.csv and summary.json.
inline ValueGrid cmd_solve(const ExperimentConfig& config, const RunOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    const auto grid = solve_backward(config.market, config.impact, config.dp.n, config.steps(),
                                     detail::grid_for(config, config.market.phi0()), config.dp.psi(),
                                     options.threads);
    const double runtime = detail::seconds_since(start);
    {
        auto out = detail::open_output(options.out, "value_grid.csv");
        write_csv(out, grid);
    }
    {
        auto out = detail::open_output(options.out, "policy.csv");
        write_csv(out, playout(grid, config.market.phi0()).strategy, config.market.phi0());
    }
    const double f = grid.interpolate(grid.k_max(), config.market.phi0());
    const auto problems = check_invariants(grid);
    nlohmann::json summary{
        {"config", config.source},
        {"version", OPTEXEC_VERSION},
        {"runtime_seconds", runtime},
        {"t", static_cast<double>(grid.k_max()) / grid.n()},
        {"phi", config.market.phi0()},
        {"value", f},
        {"value_at_s0", value_at(grid, grid.k_max(), 0.0, config.market.phi0(), config.market.s0())},
        {"grid", {{"n", grid.n()},
                  {"k_max", grid.k_max()},
                  {"phi_grid_size", config.dp.phi_grid_size},
                  {"psi_grid_size", config.dp.psi_grid_size}}},
        {"invariant_failures", problems}};
    detail::write_json(options.out, "summary.json", summary);
    if (!problems.empty()) {
        throw NumericAssertionError("solve: grid invariants failed: " + problems.front());
    }
    return grid;
}

/// Figure data: per-phi strategy/holdings files, the f surface and the
/// region map.
inline void cmd_figures(const ExperimentConfig& config, std::span<const double> phi_list,
                        const RunOptions& options, const QuadStrategyOptions& quad = {}) {
    if (phi_list.empty()) throw ConfigError({"figures: empty phi list"});
    const double t = config.market.horizon();
    const double mu = config.market.mu_tilde();
    const bool quadratic = config.impact.kind() == ImpactKind::log_quadratic;
    std::optional<ValueGrid> largest;
    const double phi_top = *std::max_element(phi_list.begin(), phi_list.end());

    for (double phi : phi_list) {
        if (!(phi > 0.0)) throw ConfigError({"figures: phi values must be > 0"});
        const auto params = config.market.with_phi0(phi);
        auto grid = solve_backward(params, config.impact, config.dp.n, config.steps(),
                                   detail::grid_for(config, phi), config.dp.psi(), options.threads);
        const auto play = playout(grid, phi);

        std::optional<ExecutionStrategy> analytic;
        std::optional<Region> region;
        if (quadratic) {
            region = classify_region(t, phi, config.impact.alpha(), mu).label;
            analytic = quad_strategy(t, phi, config.impact.alpha(), mu, quad);
        }
        {
            auto out = detail::open_output(options.out, "strategy_phi" + detail::phi_label(phi) + ".csv");
            csv::Writer w(out, {"r", "zeta_numeric", "zeta_analytic"});
            for (std::size_t l = 0; l < play.blocks.size(); ++l) {
                const double r = play.strategy.times()[l];
                std::optional<double> exact;
                if (analytic && region == Region::C) {
                    exact = analytic->rate_at(r);
                } else if (analytic && region == Region::A && r <= t - quad.eps_trunc) {
                    exact = region_a_rate(t, r, config.impact.alpha(), mu);
                }
                w.cell(r).cell(play.strategy.rates()[l]).cell(exact);
                w.end_row();
            }
        }
        {
            auto out = detail::open_output(options.out, "holdings_phi" + detail::phi_label(phi) + ".csv");
            csv::Writer w(out, {"r", "phi_r"});
            for (std::size_t l = 0; l < play.holdings.size(); ++l) {
                w.cell(static_cast<double>(l) / grid.n()).cell(play.holdings[l]);
                w.end_row();
            }
        }
        if (phi == phi_top) largest.emplace(std::move(grid));
    }

    {
        auto out = detail::open_output(options.out, "f_surface.csv");
        csv::Writer w(out, {"t", "phi", "f"});
        const auto& grid = *largest;
        const int t_stride = std::max(1, grid.k_max() / 50);
        const std::size_t phi_stride = std::max<std::size_t>(1, (grid.phi_grid().size() - 1) / 50);
        for (int k = 0; k <= grid.k_max(); k += t_stride) {
            for (std::size_t i = 0; i < grid.phi_grid().size(); i += phi_stride) {
                w.cell(static_cast<double>(k) / grid.n()).cell(grid.phi_grid()[i]).cell(grid.F(k, i));
                w.end_row();
            }
        }
    }
    {
        auto out = detail::open_output(options.out, "regions.csv");
        csv::Writer w(out, {"t", "phi", "region", "boundary_a", "boundary_c", "value_closed_form"});
        if (quadratic) {
            for (int a = 1; a <= 50; ++a) {
                const double tt = t * a / 50.0;
                for (int b = 0; b <= 50; ++b) {
                    write_region_row(w, tt, phi_top * b / 50.0, config.impact.alpha(), mu);
                }
            }
        }
    }
}

inline std::vector<ConvergenceRow> cmd_converge(const ExperimentConfig& config,
                                                std::span<const int> n_list,
                                                const RunOptions& options) {
    const auto rows = convergence_table(config.market, config.impact, config.market.horizon(),
                                        config.market.phi0(), n_list,
                                        DpSettings{config.dp.phi_grid_size, config.dp.psi()},
                                        options.threads);
    auto out = detail::open_output(options.out, "convergence.csv");
    write_csv(out, rows);
    return rows;
}

enum class McStrategy { dp_playout, closed_form };

/// Monte Carlo valuation of the DP playout (discrete dynamics) or of the
/// closed-form strategy (continuous dynamics).
inline Estimate cmd_mc(const ExperimentConfig& config, McStrategy which, const RunOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    std::vector<ExecutionOutcome> outcomes;
    std::string label;
    if (which == McStrategy::dp_playout) {
        const auto grid = solve_backward(config.market, config.impact, config.dp.n, config.steps(),
                                         detail::grid_for(config, config.market.phi0()),
                                         config.dp.psi(), options.threads);
        const auto play = playout(grid, config.market.phi0());
        outcomes = run_discrete(config.market, config.impact, config.dp.n, play.blocks, config.mc,
                                0.0, options.threads);
        label = "dp_playout";
    } else {
        const double t = config.market.horizon();
        const double phi = config.market.phi0();
        std::optional<ExecutionStrategy> strategy;
        if (config.impact.kind() == ImpactKind::log_quadratic) {
            strategy = quad_strategy(t, phi, config.impact.alpha(), config.market.mu_tilde());
            if (!strategy) {
                throw ConfigError({"mc: no closed-form strategy in region B for this (t, phi)"});
            }
        } else if (config.impact.kind() == ImpactKind::log_linear) {
            const double delta = 1.0 / config.dp.n;  // near-block liquidation phi/delta on [0, delta]
            strategy = ExecutionStrategy({0.0, delta, t}, {phi / delta, 0.0});
        } else {
            throw ConfigError({"mc: closed-form strategy needs a log_linear or log_quadratic impact"});
        }
        outcomes = run_continuous(config.market, config.impact, *strategy, config.mc, 0.0,
                                  options.threads);
        label = "closed_form";
    }
    const auto estimate = estimate_value(outcomes, config.mc);
    {
        auto out = detail::open_output(options.out, "outcomes.csv");
        write_csv(out, outcomes);
    }
    detail::write_json(options.out, "mc_summary.json",
                       {{"config", config.source},
                        {"version", OPTEXEC_VERSION},
                        {"runtime_seconds", detail::seconds_since(start)},
                        {"strategy", label},
                        {"paths", config.mc.paths},
                        {"seed", config.mc.seed},
                        {"mean", estimate.mean},
                        {"standard_error", estimate.standard_error}});
    return estimate;
}

struct ResidualPoint {
    double t;
    double phi;
};

struct ResidualRow {
    double t;
    double phi;
    Region region;
    double residual;
    double dt;
    double dphi;
    bool from_grid;
};

struct HjbTolerances {
    double closed_form = 1e-6;
    double grid = 0.05;
    double closed_form_step = 1e-4;
    double grid_phi_cells = 20;  // dphi in phi-grid cells for grid-backed points
};

/// Default sweep: closed-form points in regions A and C at t in {t/2, t}
/// and one DP-backed region-B point at the horizon.
inline std::vector<ResidualPoint> default_residual_points(const ExperimentConfig& config) {
    const double mu = config.market.mu_tilde();
    const double alpha = config.impact.alpha();
    const double t = config.market.horizon();
    const double a = region_boundary_a(t, alpha, mu);
    const double c = region_boundary_c(t, alpha, mu);
    const double a_half = region_boundary_a(0.5 * t, alpha, mu);
    const double c_half = region_boundary_c(0.5 * t, alpha, mu);
    return {{t, 3.5 * a},       {0.5 * t, 2.0 * a_half}, {t, 0.45 * c},
            {0.5 * t, 0.5 * c_half}, {t, std::sqrt(a * c)}};
}

/// HJB residuals of the reduced value: closed forms in regions A and C, the
/// solved DP grid in region B. Writes hjb_residuals.csv and throws
/// NumericAssertionError when a tolerance is missed.
inline std::vector<ResidualRow> cmd_hjb_check(const ExperimentConfig& config,
                                              std::span<const ResidualPoint> points,
                                              const RunOptions& options,
                                              const HjbTolerances& tol = {}) {
    if (config.impact.kind() != ImpactKind::log_quadratic) {
        throw ConfigError({"hjb-check: needs a log_quadratic impact"});
    }
    const double alpha = config.impact.alpha();
    const double mu = config.market.mu_tilde();
    std::vector<ResidualRow> rows;
    std::optional<ValueGrid> grid;
    double grid_phi_max = 0.0;
    for (const auto& p : points) {
        if (classify_region(p.t, p.phi, alpha, mu).label == Region::B) {
            grid_phi_max = std::max(grid_phi_max, p.phi);
        }
    }
    if (grid_phi_max > 0.0) {
        const double phi_max = 2.0 * grid_phi_max;
        grid.emplace(solve_backward(config.market.with_phi0(phi_max), config.impact, config.dp.n,
                                    config.steps(), detail::grid_for(config, phi_max), config.dp.psi(),
                                    options.threads));
    }
    for (const auto& p : points) {
        const auto region = classify_region(p.t, p.phi, alpha, mu).label;
        if (region == Region::B) {
            const GridFunction f(*grid);
            const DifferenceSteps steps{1.0 / config.dp.n,
                                        tol.grid_phi_cells * grid->phi_grid().max() /
                                            static_cast<double>(config.dp.phi_grid_size)};
            rows.push_back({p.t, p.phi, region,
                            reduced_residual(f, p.t, p.phi, alpha, mu, steps, f.t_max(), f.phi_max()),
                            steps.dt, steps.dphi, true});
        } else {
            auto f = [&](double t, double phi) { return *quad_value(t, 0.0, phi, 1.0, alpha, mu); };
            const DifferenceSteps steps{tol.closed_form_step, tol.closed_form_step};
            rows.push_back({p.t, p.phi, region, reduced_residual(f, p.t, p.phi, alpha, mu, steps),
                            steps.dt, steps.dphi, false});
        }
    }
    {
        auto out = detail::open_output(options.out, "hjb_residuals.csv");
        csv::Writer w(out, {"t", "phi", "region", "residual", "delta_t", "delta_phi"});
        for (const auto& r : rows) {
            w.cell(r.t).cell(r.phi).cell(to_string(r.region)).cell(r.residual).cell(r.dt).cell(r.dphi);
            w.end_row();
        }
    }
    for (const auto& r : rows) {
        const double limit = r.from_grid ? tol.grid : tol.closed_form;
        if (!(std::abs(r.residual) <= limit)) {
            std::ostringstream msg;
            msg << "hjb-check: |R| = " << std::abs(r.residual) << " > " << limit << " at t=" << r.t
                << ", phi=" << r.phi;
            throw NumericAssertionError(msg.str());
        }
    }
    return rows;
}

struct SelloutReport {
    std::size_t violations = 0;
    double free_value = 0.0;
    double sellout_value = 0.0;
};

/// Unconstrained vs sell-out DP: writes sellout.csv (per k, phi the sandwich
/// F[k-1] <= F_SO[k] <= F[k]) and sellout_summary.json; throws
/// NumericAssertionError on any sandwich violation.
inline SelloutReport cmd_sellout_compare(const ExperimentConfig& config, const RunOptions& options) {
    const auto phi_grid = detail::grid_for(config, config.market.phi0());
    const auto free = solve_backward(config.market, config.impact, config.dp.n, config.steps(), phi_grid,
                                     config.dp.psi(), options.threads);
    const auto so = solve_backward_sellout(config.market, config.impact, config.dp.n, config.steps(),
                                           phi_grid, config.dp.psi(), options.threads);
    SelloutReport report;
    report.violations = count_sandwich_violations(free, so);
    report.free_value = free.interpolate(free.k_max(), config.market.phi0());
    report.sellout_value = so.interpolate(so.k_max(), config.market.phi0());
    {
        auto out = detail::open_output(options.out, "sellout.csv");
        csv::Writer w(out, {"k", "phi", "F_prev", "F_sellout", "F"});
        for (int k = 1; k <= free.k_max(); ++k) {
            for (std::size_t i = 0; i < phi_grid.size(); ++i) {
                w.cell(k).cell(phi_grid[i]).cell(free.F(k - 1, i)).cell(so.F(k, i)).cell(free.F(k, i));
                w.end_row();
            }
        }
    }
    detail::write_json(options.out, "sellout_summary.json",
                       {{"config", config.source},
                        {"version", OPTEXEC_VERSION},
                        {"violations", report.violations},
                        {"value", report.free_value},
                        {"value_sellout", report.sellout_value}});
    if (report.violations > 0) {
        throw NumericAssertionError("sellout-compare: " + std::to_string(report.violations) +
                                    " sandwich violations");
    }
    return report;
}

}  // namespace optexec
