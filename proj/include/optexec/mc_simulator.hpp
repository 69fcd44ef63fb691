#pragma once

#include "optexec/analytic_solutions.hpp"
#include "optexec/csv.hpp"
#include "optexec/dp_engine.hpp"
#include "optexec/impact_model.hpp"
#include "optexec/parallel.hpp"
#include "optexec/price_dynamics.hpp"
#include "optexec/strategy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

namespace optexec {

struct RiskNeutral {
    double operator()(double w, double /*phi*/, double /*s*/) const { return w; }
};

/// Utility tabulated on a (w, s) lattice at phi = 0 and at phi = phi_max,
/// bilinear in (w, s), linear in phi, constant beyond the lattice.
/// Values must be non-negative and non-decreasing in every argument.
class TabulatedUtility {
public:
    TabulatedUtility(std::vector<double> w_nodes, std::vector<double> s_nodes,
                     std::vector<double> empty, std::vector<double> full, double phi_max,
                     double growth_constant = 1.0, int growth_exponent = 1)
        : w_(std::move(w_nodes)), s_(std::move(s_nodes)), empty_(std::move(empty)),
          full_(std::move(full)), phi_max_(phi_max), growth_constant_(growth_constant),
          growth_exponent_(growth_exponent) {
        if (w_.size() < 2 || s_.size() < 2) throw std::domain_error("TabulatedUtility: need 2x2 lattice");
        if (empty_.size() != w_.size() * s_.size() || full_.size() != empty_.size()) {
            throw std::domain_error("TabulatedUtility: value table size mismatch");
        }
        if (!(phi_max > 0.0)) throw std::domain_error("TabulatedUtility: phi_max must be > 0");
        auto increasing = [](const std::vector<double>& v) {
            return std::adjacent_find(v.begin(), v.end(), std::greater_equal<>()) == v.end();
        };
        if (!increasing(w_) || !increasing(s_)) {
            throw std::domain_error("TabulatedUtility: lattice nodes must be strictly increasing");
        }
        for (std::size_t i = 0; i < w_.size(); ++i) {
            for (std::size_t j = 0; j < s_.size(); ++j) {
                const double e = at(empty_, i, j);
                const double f = at(full_, i, j);
                bool ok = e >= 0.0 && f >= e;
                if (i > 0) ok = ok && e >= at(empty_, i - 1, j) && f >= at(full_, i - 1, j);
                if (j > 0) ok = ok && e >= at(empty_, i, j - 1) && f >= at(full_, i, j - 1);
                if (!ok) throw std::domain_error("TabulatedUtility: values must be >= 0 and non-decreasing");
            }
        }
    }

    double operator()(double w, double phi, double s) const {
        const double lambda = std::clamp(phi / phi_max_, 0.0, 1.0);
        const double lo = bilinear(empty_, w, s);
        return lo + (bilinear(full_, w, s) - lo) * lambda;
    }

    double growth_constant() const noexcept { return growth_constant_; }
    int growth_exponent() const noexcept { return growth_exponent_; }

private:
    double at(const std::vector<double>& v, std::size_t i, std::size_t j) const {
        return v[i * s_.size() + j];
    }

    static std::pair<std::size_t, double> locate(const std::vector<double>& nodes, double x) {
        if (x <= nodes.front()) return {0, 0.0};
        if (x >= nodes.back()) return {nodes.size() - 2, 1.0};
        const auto it = std::upper_bound(nodes.begin(), nodes.end(), x);
        const auto j = static_cast<std::size_t>(it - nodes.begin()) - 1;
        return {j, (x - nodes[j]) / (nodes[j + 1] - nodes[j])};
    }

    double bilinear(const std::vector<double>& v, double w, double s) const {
        const auto [i, a] = locate(w_, w);
        const auto [j, b] = locate(s_, s);
        const double lo = at(v, i, j) + (at(v, i, j + 1) - at(v, i, j)) * b;
        const double hi = at(v, i + 1, j) + (at(v, i + 1, j + 1) - at(v, i + 1, j)) * b;
        return lo + (hi - lo) * a;
    }

    std::vector<double> w_;
    std::vector<double> s_;
    std::vector<double> empty_;
    std::vector<double> full_;
    double phi_max_;
    double growth_constant_;  // recorded only
    int growth_exponent_;     // recorded only
};

using Utility = std::variant<RiskNeutral, TabulatedUtility>;

inline double evaluate_utility(const Utility& u, double w, double phi, double s) {
    return std::visit([&](const auto& fn) { return fn(w, phi, s); }, u);
}

struct SimConfig {
    std::int64_t paths = 10000;
    std::uint64_t seed = 1;
    double dt_fine = 1e-3;
    Utility utility = RiskNeutral{};
};

struct ExecutionOutcome {
    double terminal_w = 0.0;
    double terminal_phi = 0.0;
    double terminal_s = 0.0;
    std::int64_t path_id = 0;
};

namespace detail {

inline void check_sim_config(const SimConfig& config) {
    if (config.paths <= 0) throw std::domain_error("SimConfig: paths must be positive");
    if (!(config.dt_fine > 0.0)) throw std::domain_error("SimConfig: dt_fine must be > 0");
}

}  // namespace detail

/// Plays fixed blocks psi_l through the discrete dynamics: at each step the
/// block depresses the log price by g_n(psi), is sold at the depressed price,
/// then the log price takes one exact step of 1/n.
inline std::vector<ExecutionOutcome> run_discrete(const MarketParams& params, const ImpactSpec& spec,
                                                  int n, std::span<const double> blocks,
                                                  const SimConfig& config, double w0 = 0.0,
                                                  unsigned threads = 1) {
    detail::check_sim_config(config);
    if (n <= 0) throw std::domain_error("run_discrete: n must be positive");
    double sold = 0.0;
    for (double psi : blocks) {
        if (!(psi >= 0.0)) throw std::domain_error("run_discrete: blocks must be >= 0");
        sold += psi;
    }
    if (sold > params.phi0() + 1e-12) throw std::domain_error("run_discrete: blocks exceed phi0");

    const double dt = 1.0 / static_cast<double>(n);
    std::vector<ExecutionOutcome> outcomes(static_cast<std::size_t>(config.paths));
    parallel_for(outcomes.size(), threads, [&](std::size_t path) {
        NormalStream normal(config.seed, path);
        PathState state{0.0, w0, params.phi0(),
                        params.s0() > 0.0 ? std::optional<double>(std::log(params.s0())) : std::nullopt};
        for (double psi : blocks) {
            const double impact = spec.g_n(n, psi);
            const double z = normal();
            if (state.x) {
                state.x = apply_impact(*state.x, impact);
                state.w += psi * std::exp(*state.x);
                state.x = step_log_price(params, *state.x, dt, z);
            }
            state.phi = std::max(state.phi - psi, 0.0);
            state.time += dt;
        }
        outcomes[path] = {state.w, state.phi, state.price(), static_cast<std::int64_t>(path)};
    });
    return outcomes;
}

/// Plays a piecewise-constant rate through the continuous dynamics in log
/// space: dX = sigma dB - (mu + g(zeta)) dr with exact Gaussian increments,
/// cash accruing zeta S dr at the left point of each sub-step. Each piece is
/// split into ceil(len / dt_fine) equal sub-steps; zero-rate pieces take a
/// single exact step. After the strategy ends the price diffuses to the
/// horizon.
inline std::vector<ExecutionOutcome> run_continuous(const MarketParams& params,
                                                    const ImpactSpec& spec,
                                                    const ExecutionStrategy& strategy,
                                                    const SimConfig& config, double w0 = 0.0,
                                                    unsigned threads = 1) {
    detail::check_sim_config(config);
    strategy.require_admissible(params.phi0(), 1e-9);
    if (!strategy.empty() && (strategy.start() < 0.0 || strategy.end() > params.horizon() + 1e-12)) {
        throw std::domain_error("run_continuous: strategy must lie within [0, horizon]");
    }

    struct Segment {
        double rate;
        double dt;
        std::int64_t steps;
    };
    std::vector<Segment> segments;
    double clock = 0.0;
    auto idle_until = [&](double until) {
        if (until > clock + 1e-15) segments.push_back({0.0, until - clock, 1});
        clock = std::max(clock, until);
    };
    for (std::size_t i = 0; i < strategy.pieces(); ++i) {
        idle_until(strategy.times()[i]);
        const double len = strategy.length(i);
        const double rate = strategy.rates()[i];
        if (rate == 0.0) {
            segments.push_back({0.0, len, 1});
        } else {
            const auto steps = static_cast<std::int64_t>(std::ceil(len / config.dt_fine - 1e-9));
            segments.push_back({rate, len / static_cast<double>(steps), std::max<std::int64_t>(steps, 1)});
        }
        clock = strategy.times()[i + 1];
    }
    idle_until(params.horizon());

    const double sold = strategy.total();
    std::vector<ExecutionOutcome> outcomes(static_cast<std::size_t>(config.paths));
    parallel_for(outcomes.size(), threads, [&](std::size_t path) {
        NormalStream normal(config.seed, path);
        PathState state{0.0, w0, params.phi0(),
                        params.s0() > 0.0 ? std::optional<double>(std::log(params.s0())) : std::nullopt};
        for (const auto& seg : segments) {
            const double impact_drift = spec.g(seg.rate);
            const double sd = params.sigma() * std::sqrt(seg.dt);
            for (std::int64_t j = 0; j < seg.steps; ++j) {
                const double z = normal();
                if (state.x) {
                    state.w += seg.rate * std::exp(*state.x) * seg.dt;
                    state.x = *state.x + sd * z - (params.mu() + impact_drift) * seg.dt;
                }
                state.time += seg.dt;
            }
        }
        state.phi = std::max(params.phi0() - sold, 0.0);
        outcomes[path] = {state.w, state.phi, state.price(), static_cast<std::int64_t>(path)};
    });
    return outcomes;
}

struct Estimate {
    double mean = 0.0;
    double standard_error = 0.0;
};

/// Sample mean and standard error (n - 1 normalisation) of u over outcomes.
inline Estimate estimate_value(std::span<const ExecutionOutcome> outcomes, const SimConfig& config) {
    if (outcomes.empty()) throw std::domain_error("estimate_value: no outcomes");
    const auto count = static_cast<double>(outcomes.size());
    double mean = 0.0;
    for (const auto& o : outcomes) {
        mean += evaluate_utility(config.utility, o.terminal_w, o.terminal_phi, o.terminal_s);
    }
    mean /= count;
    if (outcomes.size() == 1) return {mean, 0.0};
    double ss = 0.0;
    for (const auto& o : outcomes) {
        const double d = evaluate_utility(config.utility, o.terminal_w, o.terminal_phi, o.terminal_s) - mean;
        ss += d * d;
    }
    return {mean, std::sqrt(ss / (count - 1.0) / count)};
}

/// Replaces the strategy on (t - delta, t] by selling whatever is still held
/// at t - delta at the constant rate phi_{t-delta} / delta.
inline ExecutionStrategy append_sellout_tail(const ExecutionStrategy& strategy, double phi_start,
                                             double t, double delta) {
    if (!(delta > 0.0 && delta < t)) throw std::domain_error("append_sellout_tail: need 0 < delta < t");
    const double cut = t - delta;
    std::vector<double> times;
    std::vector<double> rates;
    for (std::size_t i = 0; i < strategy.pieces() && strategy.times()[i] < cut; ++i) {
        if (times.empty() && strategy.times()[i] > 0.0) {
            times.push_back(0.0);
            rates.push_back(0.0);
        }
        times.push_back(strategy.times()[i]);
        rates.push_back(strategy.rates()[i]);
    }
    if (times.empty()) {
        times.push_back(0.0);
        rates.push_back(0.0);
    }
    const double remaining = std::max(phi_start - strategy.sold_by(cut), 0.0);
    times.push_back(cut);
    rates.push_back(remaining / delta);
    times.push_back(t);
    return ExecutionStrategy(std::move(times), std::move(rates));
}

struct ConvergenceRow {
    int n;
    double value;
    double reference;
    double abs_gap;
};

struct DpSettings {
    std::size_t phi_intervals = 2000;
    PsiSearch psi{};
};

/// Closed-form continuous value f(t, phi) per unit price when one is known.
inline std::optional<double> closed_form_reference(const ImpactSpec& spec, double mu_tilde, double t,
                                                   double phi) {
    switch (spec.kind()) {
        case ImpactKind::log_linear: return linear_value(spec.alpha(), 0.0, phi, 1.0);
        case ImpactKind::log_quadratic: return quad_value(t, 0.0, phi, 1.0, spec.alpha(), mu_tilde);
        case ImpactKind::custom: break;
    }
    return std::nullopt;
}

inline int steps_for(int n, double t) {
    return static_cast<int>(std::floor(static_cast<double>(n) * t + 1e-9));
}

/// Discrete values F^n_{[nt]}(phi) for each n against the continuous limit:
/// the closed form where known, otherwise a first-order Richardson
/// extrapolation of the two finest rows.
inline std::vector<ConvergenceRow> convergence_table(const MarketParams& params, const ImpactSpec& spec,
                                                     double t, double phi, std::span<const int> n_list,
                                                     const DpSettings& settings = {},
                                                     unsigned threads = 1) {
    if (n_list.empty()) return {};
    if (!std::is_sorted(n_list.begin(), n_list.end()) ||
        std::adjacent_find(n_list.begin(), n_list.end()) != n_list.end()) {
        throw std::domain_error("convergence_table: n_list must be strictly ascending");
    }
    if (!(t > 0.0 && t <= params.horizon())) throw std::domain_error("convergence_table: t out of range");
    const auto grid = PhiGrid::uniform(params.phi0(), settings.phi_intervals);
    std::vector<ConvergenceRow> rows;
    for (int n : n_list) {
        const int k = steps_for(n, t);
        const auto solved = solve_backward(params, spec, n, k, grid, settings.psi, threads);
        rows.push_back({n, solved.interpolate(k, phi), 0.0, 0.0});
    }
    std::optional<double> reference = closed_form_reference(spec, params.mu_tilde(), t, phi);
    if (!reference) {
        if (rows.size() >= 2) {
            const auto& fine = rows[rows.size() - 1];
            const auto& coarse = rows[rows.size() - 2];
            const double ratio = static_cast<double>(coarse.n) / (fine.n - coarse.n);
            reference = fine.value + (fine.value - coarse.value) * ratio;
        } else {
            reference = rows.back().value;
        }
    }
    for (auto& row : rows) {
        row.reference = *reference;
        row.abs_gap = std::abs(row.value - *reference);
    }
    return rows;
}

inline void write_csv(std::ostream& os, std::span<const ExecutionOutcome> outcomes) {
    csv::Writer out(os, {"path_id", "terminal_w", "terminal_phi", "terminal_s"});
    for (const auto& o : outcomes) {
        out.cell(o.path_id).cell(o.terminal_w).cell(o.terminal_phi).cell(o.terminal_s);
        out.end_row();
    }
}

inline void write_csv(std::ostream& os, std::span<const ConvergenceRow> rows) {
    csv::Writer out(os, {"n", "value", "reference", "abs_gap"});
    for (const auto& r : rows) {
        out.cell(r.n).cell(r.value).cell(r.reference).cell(r.abs_gap);
        out.end_row();
    }
}

}  // namespace optexec
