#pragma once

#include "optexec/csv.hpp"
#include "optexec/impact_model.hpp"
#include "optexec/numeric.hpp"
#include "optexec/parallel.hpp"
#include "optexec/price_dynamics.hpp"
#include "optexec/strategy.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace optexec {

/// Block-size search: `dense_points` equally spaced candidates on [0, phi]
/// (both ends included), then golden-section refinement on the two dense
/// cells around the best candidate.
struct PsiSearch {
    std::size_t dense_points = 2001;
    int golden_iterations = 60;
};

/// Backward-induction result for the risk-neutral reduced value
/// V^n_k(w, phi, s) = w + s F^n_k(phi), layers k = 0..k_max on a phi grid,
/// together with the maximising block size psi_hat. Sell-out grids mark
/// infeasible states with -inf.
class ValueGrid {
public:
    ValueGrid(int n, int k_max, PhiGrid grid, std::vector<double> values,
              std::vector<double> policy, bool sellout)
        : n_(n), k_max_(k_max), grid_(std::move(grid)), values_(std::move(values)),
          policy_(std::move(policy)), sellout_(sellout) {
        const std::size_t expected = static_cast<std::size_t>(k_max_ + 1) * grid_.size();
        if (values_.size() != expected || policy_.size() != expected) {
            throw std::invalid_argument("ValueGrid: layer storage does not match grid");
        }
    }

    int n() const noexcept { return n_; }
    int k_max() const noexcept { return k_max_; }
    bool sellout() const noexcept { return sellout_; }
    const PhiGrid& phi_grid() const noexcept { return grid_; }

    std::span<const double> layer(int k) const { return row(values_, k); }
    std::span<const double> policy(int k) const { return row(policy_, k); }
    double F(int k, std::size_t i) const { return layer(k)[i]; }
    double psi_hat(int k, std::size_t i) const { return policy(k)[i]; }

    double interpolate(int k, double phi) const { return grid_.interpolate(layer(k), phi); }
    double policy_at(int k, double phi) const { return grid_.interpolate(policy(k), phi); }

private:
    std::span<const double> row(const std::vector<double>& data, int k) const {
        if (k < 0 || k > k_max_) throw std::out_of_range("ValueGrid: layer out of range");
        return std::span<const double>(data).subspan(static_cast<std::size_t>(k) * grid_.size(),
                                                     grid_.size());
    }

    int n_;
    int k_max_;
    PhiGrid grid_;
    std::vector<double> values_;
    std::vector<double> policy_;
    bool sellout_;
};

namespace detail {

/// Calls fn with a cheap callable psi -> g_n(psi) specialised per impact kind.
template <typename Fn>
decltype(auto) with_block_impact(const ImpactSpec& spec, int n, Fn&& fn) {
    switch (spec.kind()) {
        case ImpactKind::log_linear: {
            const double a = spec.alpha_n(n);
            return fn([a](double psi) { return a * psi; });
        }
        case ImpactKind::log_quadratic: {
            const double a = spec.alpha_n(n);
            return fn([a](double psi) { return a * psi * psi; });
        }
        case ImpactKind::custom: break;
    }
    return fn([&spec, n](double psi) { return spec.g_n(n, psi); });
}

/// One backward step: F_k(phi) = max_{psi in [0, phi]}
///   exp(-g_n(psi)) (psi + carry F_{k-1}(phi - psi)),  carry = exp(-mu_tilde / n).
template <typename BlockImpact>
void solve_layer(const PhiGrid& grid, const BlockImpact& block_impact, double carry,
                 const PsiSearch& search, std::span<const double> prev,
                 std::span<const double> prev_policy, std::span<double> out,
                 std::span<double> policy, unsigned threads) {
    const std::size_t dense = std::max<std::size_t>(search.dense_points, 2);
    std::vector<double> fraction(dense);
    for (std::size_t m = 0; m < dense; ++m) {
        fraction[m] = static_cast<double>(m) / static_cast<double>(dense - 1);
    }
    fraction.back() = 1.0;

    auto objective = [&](double phi, double psi) {
        const double rest = grid.interpolate(prev, phi - psi);
        if (rest == -kInfinity) return -kInfinity;
        return std::exp(-block_impact(psi)) * (psi + carry * rest);
    };

    parallel_for(grid.size(), threads, [&](std::size_t i) {
        const double phi = grid[i];
        double best_psi = 0.0;
        double best = objective(phi, 0.0);
        if (phi > 0.0) {
            std::size_t best_m = 0;
            for (std::size_t m = 1; m < dense; ++m) {
                const double psi = phi * fraction[m];
                const double v = objective(phi, psi);
                if (v > best) {
                    best = v;
                    best_psi = psi;
                    best_m = m;
                }
            }
            if (best > -kInfinity && search.golden_iterations > 0) {
                const double lo = phi * fraction[best_m == 0 ? 0 : best_m - 1];
                const double hi = phi * fraction[std::min(best_m + 1, dense - 1)];
                const auto refined = numeric::golden_section_max(
                    [&](double psi) { return objective(phi, psi); }, lo, hi,
                    search.golden_iterations);
                if (refined.value > best) {
                    best = refined.value;
                    best_psi = refined.x;
                }
            }
            // Warm start from the previous layer's maximiser at the same phi.
            const double warm = std::min(prev_policy[i], phi);
            const double warm_value = objective(phi, warm);
            if (warm_value > best) {
                best = warm_value;
                best_psi = warm;
            }
        }
        out[i] = best;
        policy[i] = best_psi;
    });

    // The maximiser at the next-smaller phi stays feasible here.
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double candidate = policy[i - 1];
        const double v = objective(grid[i], candidate);
        if (v > out[i]) {
            out[i] = v;
            policy[i] = candidate;
        }
    }
}

inline void check_solve_inputs(const MarketParams& params, int n, int steps, const PhiGrid& grid) {
    if (n <= 0) throw std::domain_error("solve_backward: n must be positive");
    if (steps < 0 || steps > n) throw std::domain_error("solve_backward: need 0 <= k_max <= n");
    if (std::abs(grid.max() - params.phi0()) > 1e-12 * params.phi0()) {
        throw std::domain_error("solve_backward: phi grid must cover [0, phi0]");
    }
}

inline ValueGrid run_backward(const MarketParams& params, const ImpactSpec& spec, int n, int steps,
                              const PhiGrid& grid, std::span<const double> terminal,
                              std::span<const double> terminal_policy, bool sellout,
                              const PsiSearch& search, unsigned threads) {
    check_solve_inputs(params, n, steps, grid);
    const std::size_t width = grid.size();
    if (terminal.size() != width) throw std::domain_error("solve_backward: terminal layer size");
    std::vector<double> values(static_cast<std::size_t>(steps + 1) * width);
    std::vector<double> policy(values.size(), 0.0);
    std::copy(terminal.begin(), terminal.end(), values.begin());
    if (!terminal_policy.empty()) {
        if (terminal_policy.size() != width) throw std::domain_error("solve_backward: policy size");
        std::copy(terminal_policy.begin(), terminal_policy.end(), policy.begin());
    }
    const double carry = expected_price_factor(params, 1.0 / static_cast<double>(n));
    with_block_impact(spec, n, [&](const auto& block_impact) {
        for (int k = 1; k <= steps; ++k) {
            const auto offset = static_cast<std::size_t>(k) * width;
            std::span<const double> prev(values.data() + offset - width, width);
            std::span<const double> prev_policy(policy.data() + offset - width, width);
            solve_layer(grid, block_impact, carry, search, prev, prev_policy,
                        std::span<double>(values.data() + offset, width),
                        std::span<double>(policy.data() + offset, width), threads);
        }
    });
    return ValueGrid(n, steps, grid, std::move(values), std::move(policy), sellout);
}

}  // namespace detail

/// Unconstrained discrete value F^n_k for k = 0..k_max, F^n_0 = 0.
inline ValueGrid solve_backward(const MarketParams& params, const ImpactSpec& spec, int n,
                                int k_max, const PhiGrid& grid, const PsiSearch& search = {},
                                unsigned threads = 1) {
    const std::vector<double> zero(grid.size(), 0.0);
    return detail::run_backward(params, spec, n, k_max, grid, zero, {}, false, search, threads);
}

/// Continues the recursion for `steps` layers from a given terminal layer
/// (and, optionally, the maximiser that produced it).
inline ValueGrid solve_backward_from(const MarketParams& params, const ImpactSpec& spec, int n,
                                     int steps, const PhiGrid& grid,
                                     std::span<const double> terminal,
                                     std::span<const double> terminal_policy = {},
                                     const PsiSearch& search = {}, unsigned threads = 1) {
    return detail::run_backward(params, spec, n, steps, grid, terminal, terminal_policy, false,
                                search, threads);
}

/// Sell-out variant: every strategy must liquidate the full holding by the
/// last step, so F^SO_0(phi) = -inf for phi > 0.
inline ValueGrid solve_backward_sellout(const MarketParams& params, const ImpactSpec& spec, int n,
                                        int k_max, const PhiGrid& grid,
                                        const PsiSearch& search = {}, unsigned threads = 1) {
    std::vector<double> terminal(grid.size(), -kInfinity);
    terminal[0] = 0.0;
    return detail::run_backward(params, spec, n, k_max, grid, terminal, {}, true, search, threads);
}

/// V^n_k(w, phi, s) = w + s F^n_k(phi).
inline double value_at(const ValueGrid& grid, int k, double w, double phi, double s) {
    if (k < 0 || k > grid.k_max()) throw std::domain_error("value_at: k out of range");
    if (phi < 0.0 || phi > grid.phi_grid().max()) throw std::domain_error("value_at: phi out of range");
    if (s < 0.0) throw std::domain_error("value_at: s must be >= 0");
    if (s == 0.0) return w;
    return w + s * grid.interpolate(k, phi);
}

struct Playout {
    ExecutionStrategy strategy;   // rate n psi_l on [l/n, (l+1)/n)
    std::vector<double> blocks;   // psi_l, l = 0..k_max-1
    std::vector<double> holdings; // phi_l, l = 0..k_max
};

/// Forward walk of the solved policy: psi_l = psi_hat[k_max - l](phi_l).
inline Playout playout(const ValueGrid& grid, double phi_start) {
    if (phi_start < 0.0 || phi_start > grid.phi_grid().max()) {
        throw std::domain_error("playout: phi_start out of range");
    }
    const int steps = grid.k_max();
    const double n = static_cast<double>(grid.n());
    Playout out;
    out.blocks.reserve(static_cast<std::size_t>(steps));
    out.holdings.reserve(static_cast<std::size_t>(steps) + 1);
    std::vector<double> times;
    std::vector<double> rates;
    double phi = phi_start;
    out.holdings.push_back(phi);
    times.push_back(0.0);
    for (int l = 0; l < steps; ++l) {
        const double psi = std::clamp(grid.policy_at(steps - l, phi), 0.0, phi);
        out.blocks.push_back(psi);
        rates.push_back(n * psi);
        times.push_back(static_cast<double>(l + 1) / n);
        phi -= psi;
        out.holdings.push_back(phi);
    }
    if (steps > 0) out.strategy = ExecutionStrategy(std::move(times), std::move(rates));
    return out;
}

/// Relative slack for comparisons between independently rounded grid values.
inline constexpr double kGridRoundoff = 1e-12;

inline bool exceeds(double lhs, double rhs, double rel = kGridRoundoff) {
    if (lhs == -kInfinity) return false;
    if (rhs == -kInfinity) return true;
    return lhs > rhs + rel * std::max({1.0, std::abs(lhs), std::abs(rhs)});
}

/// Structural invariants of an unconstrained grid; one message per failed
/// kind of check (empty when all hold).
inline std::vector<std::string> check_invariants(const ValueGrid& grid) {
    std::vector<std::string> problems;
    const auto& phi = grid.phi_grid();
    auto note = [&](bool failed, const char* what) {
        if (failed) problems.emplace_back(what);
    };
    bool zero_layer = false, zero_phi = false, psi_range = false, mono_k = false, mono_phi = false,
         above_phi = false;
    for (int k = 0; k <= grid.k_max(); ++k) {
        const auto f = grid.layer(k);
        const auto psi = grid.policy(k);
        zero_phi |= f[0] != 0.0;
        for (std::size_t i = 0; i < phi.size(); ++i) {
            if (k == 0) zero_layer |= f[i] != 0.0;
            psi_range |= psi[i] < 0.0 || psi[i] > phi[i];
            above_phi |= exceeds(f[i], phi[i]);
            if (i > 0) mono_phi |= exceeds(f[i - 1], f[i]);
            if (k > 0) mono_k |= exceeds(grid.F(k - 1, i), f[i]);
        }
    }
    note(zero_layer, "F[0] is not identically zero");
    note(zero_phi, "F[k](0) is not zero");
    note(psi_range, "psi_hat outside [0, phi]");
    note(mono_k, "F decreases in k");
    note(mono_phi, "F decreases in phi");
    note(above_phi, "F exceeds phi");
    return problems;
}

/// Grid points where F[k-1] <= F_SO[k] <= F[k] fails, for k = 1..k_max.
inline std::size_t count_sandwich_violations(const ValueGrid& free, const ValueGrid& sellout) {
    if (free.k_max() != sellout.k_max() || free.phi_grid().size() != sellout.phi_grid().size()) {
        throw std::domain_error("count_sandwich_violations: grids differ in shape");
    }
    std::size_t violations = 0;
    for (int k = 1; k <= free.k_max(); ++k) {
        for (std::size_t i = 0; i < free.phi_grid().size(); ++i) {
            const double so = sellout.F(k, i);
            if (exceeds(free.F(k - 1, i), so) || exceeds(so, free.F(k, i))) ++violations;
        }
    }
    return violations;
}

/// `k,phi,F,psi_hat`, k ascending then phi ascending.
inline void write_csv(std::ostream& os, const ValueGrid& grid) {
    csv::Writer out(os, {"k", "phi", "F", "psi_hat"});
    for (int k = 0; k <= grid.k_max(); ++k) {
        const auto values = grid.layer(k);
        const auto policy = grid.policy(k);
        for (std::size_t i = 0; i < grid.phi_grid().size(); ++i) {
            out.cell(k).cell(grid.phi_grid()[i]).cell(values[i]).cell(policy[i]);
            out.end_row();
        }
    }
}

/// `r,zeta,phi_remaining`: one row per piece start plus a closing row at the
/// strategy end (rate 0).
inline void write_csv(std::ostream& os, const ExecutionStrategy& strategy, double phi_start) {
    csv::Writer out(os, {"r", "zeta", "phi_remaining"});
    if (strategy.empty()) return;
    double phi = phi_start;
    for (std::size_t i = 0; i < strategy.pieces(); ++i) {
        out.cell(strategy.times()[i]).cell(strategy.rates()[i]).cell(phi);
        out.end_row();
        phi -= strategy.rates()[i] * strategy.length(i);
    }
    out.cell(strategy.end()).cell(0.0).cell(std::max(phi, 0.0));
    out.end_row();
}

}  // namespace optexec
