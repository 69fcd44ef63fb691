#pragma once

#include "optexec/csv.hpp"
#include "optexec/impact_model.hpp"
#include "optexec/numeric.hpp"
#include "optexec/strategy.hpp"

#include <cmath>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace optexec {

/// Right limit at t = 0 of the risk-neutral value when h(inf) is finite:
/// selling phi infinitely fast yields w + s (1 - e^{-h(inf) phi}) / h(inf).
inline double ju(double h_infinity, double w, double phi, double s) {
    if (std::isinf(h_infinity)) {
        throw std::domain_error("ju: only defined for finite h(inf)");
    }
    if (h_infinity < 0.0) throw std::domain_error("ju: h(inf) must be >= 0");
    if (h_infinity == 0.0) return w + phi * s;
    return w + s * (-std::expm1(-h_infinity * phi)) / h_infinity;
}

/// Continuous-time value under log-linear impact (independent of t > 0).
inline double linear_value(double alpha, double w, double phi, double s) {
    if (!(alpha > 0.0)) throw std::domain_error("linear_value: alpha must be > 0");
    return w + s * (-std::expm1(-alpha * phi)) / alpha;
}

enum class Region { A, B, C };

inline const char* to_string(Region r) {
    switch (r) {
        case Region::A: return "A";
        case Region::B: return "B";
        case Region::C: return "C";
    }
    return "?";
}

/// Log-quadratic (t, phi) classification.
///   A: phi >= arctanh(sqrt(1 - e^{-2 mu t})) / sqrt(alpha mu)  (cannot finish)
///   C: phi <= sqrt(mu / alpha) t                               (finishes early)
///   B: in between, no closed form.
struct RegionLabel {
    Region label;
    double boundary_a;
    double boundary_c;
};

inline double region_boundary_a(double t, double alpha, double mu_tilde) {
    const double x = std::sqrt(-std::expm1(-2.0 * mu_tilde * t));
    return numeric::arctanh_guarded(x) / std::sqrt(alpha * mu_tilde);
}

inline double region_boundary_c(double t, double alpha, double mu_tilde) {
    return std::sqrt(mu_tilde / alpha) * t;
}

inline RegionLabel classify_region(double t, double phi, double alpha, double mu_tilde) {
    if (!(t > 0.0)) throw std::domain_error("classify_region: t must be > 0");
    if (!(alpha > 0.0) || !(mu_tilde > 0.0)) {
        throw std::domain_error("classify_region: alpha and mu_tilde must be > 0");
    }
    RegionLabel r{Region::B, region_boundary_a(t, alpha, mu_tilde),
                  region_boundary_c(t, alpha, mu_tilde)};
    if (phi >= r.boundary_a) {
        r.label = Region::A;
    } else if (phi <= r.boundary_c) {
        r.label = Region::C;
    }
    return r;
}

/// Closed-form log-quadratic value in regions A and C; nullopt in region B.
inline std::optional<double> quad_value(double t, double w, double phi, double s, double alpha,
                                        double mu_tilde) {
    const auto region = classify_region(t, phi, alpha, mu_tilde);
    const double root = std::sqrt(alpha * mu_tilde);
    switch (region.label) {
        case Region::A:
            return w + s * std::sqrt(-std::expm1(-2.0 * mu_tilde * t)) / (2.0 * root);
        case Region::C:
            return w + s * (-std::expm1(-2.0 * root * phi)) / (2.0 * root);
        case Region::B: break;
    }
    return std::nullopt;
}

/// Shares the region-A rate sells over the last tau units of time:
/// arccosh(e^{mu tau}) / sqrt(alpha mu).
inline double region_a_sold_within(double tau, double alpha, double mu_tilde) {
    const double x = mu_tilde * tau;
    return std::log1p(std::expm1(x) + std::sqrt(std::expm1(2.0 * x))) / std::sqrt(alpha * mu_tilde);
}

/// Region-A optimal rate at elapsed time r < t.
inline double region_a_rate(double t, double r, double alpha, double mu_tilde) {
    return std::sqrt(mu_tilde / (alpha * -std::expm1(-2.0 * mu_tilde * (t - r))));
}

struct QuadStrategyOptions {
    std::size_t pieces = 2000;  // region A resolution
    double eps_trunc = 1e-3;    // region A stops selling at t - eps_trunc
};

/// Optimal log-quadratic strategy in regions A and C; nullopt in region B.
/// Region C: constant sqrt(mu/alpha) until phi is gone. Region A: cell
/// averages of the increasing rate on cells uniform in sqrt(t - r), ending at
/// t - eps_trunc with a zero-rate tail; the holdings the truncation leaves
/// unsold are phi - total().
inline std::optional<ExecutionStrategy> quad_strategy(double t, double phi, double alpha,
                                                      double mu_tilde,
                                                      const QuadStrategyOptions& options = {}) {
    const auto region = classify_region(t, phi, alpha, mu_tilde);
    if (region.label == Region::B) return std::nullopt;
    if (region.label == Region::C) {
        const double rate = std::sqrt(mu_tilde / alpha);
        const double stop = phi / rate;
        if (stop <= 0.0) return ExecutionStrategy::idle(t);
        if (stop >= t) return ExecutionStrategy({0.0, t}, {rate});
        return ExecutionStrategy({0.0, stop, t}, {rate, 0.0});
    }
    if (!(options.eps_trunc > 0.0 && options.eps_trunc < t) || options.pieces == 0) {
        throw std::domain_error("quad_strategy: need 0 < eps_trunc < t and pieces > 0");
    }
    const std::size_t m = options.pieces;
    const double u_hi = std::sqrt(t);
    const double u_lo = std::sqrt(options.eps_trunc);
    std::vector<double> times(m + 2);
    std::vector<double> rates(m + 1);
    std::vector<double> tau(m + 1);
    for (std::size_t j = 0; j <= m; ++j) {
        const double u = u_hi - (u_hi - u_lo) * static_cast<double>(j) / static_cast<double>(m);
        tau[j] = j == 0 ? t : (j == m ? options.eps_trunc : u * u);
        times[j] = t - tau[j];
    }
    times[0] = 0.0;
    times[m + 1] = t;
    for (std::size_t j = 0; j < m; ++j) {
        const double sold = region_a_sold_within(tau[j], alpha, mu_tilde) -
                            region_a_sold_within(tau[j + 1], alpha, mu_tilde);
        rates[j] = sold / (times[j + 1] - times[j]);
    }
    rates[m] = 0.0;
    return ExecutionStrategy(std::move(times), std::move(rates));
}

/// Expected proceeds per unit initial price of a fixed deterministic strategy,
///   int zeta_r exp(-mu r - int_0^r g(zeta_v) dv) dr,
/// integrated exactly on each constant piece.
inline double objective_f(const ExecutionStrategy& strategy, const ImpactSpec& spec,
                          double mu_tilde) {
    if (strategy.empty()) return 0.0;
    double log_price = -mu_tilde * strategy.start();
    double total = 0.0;
    for (std::size_t i = 0; i < strategy.pieces(); ++i) {
        const double rate = strategy.rates()[i];
        const double len = strategy.length(i);
        const double decay = mu_tilde + spec.g(rate);
        if (rate > 0.0) {
            const double integral = decay > 0.0 ? -std::expm1(-decay * len) / decay : len;
            total += rate * std::exp(log_price) * integral;
        }
        log_price -= decay * len;
    }
    return total;
}

/// `t,phi,region,boundary_a,boundary_c,value_closed_form` for one point
/// (risk-neutral, w = 0, s = 1; blank value in region B).
inline void write_region_row(csv::Writer& out, double t, double phi, double alpha, double mu_tilde) {
    const auto region = classify_region(t, phi, alpha, mu_tilde);
    out.cell(t).cell(phi).cell(to_string(region.label)).cell(region.boundary_a)
        .cell(region.boundary_c).cell(quad_value(t, 0.0, phi, 1.0, alpha, mu_tilde));
    out.end_row();
}

}  // namespace optexec
