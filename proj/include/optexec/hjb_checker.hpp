#pragma once

#include "optexec/dp_engine.hpp"
#include "optexec/impact_model.hpp"
#include "optexec/numeric.hpp"
#include "optexec/price_dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace optexec {

/// First and second order jet at a state z = (w, phi, s). Only X_ss enters the
/// Hamiltonian; the full symmetric matrix is kept for completeness.
struct JetPoint {
    std::array<double, 3> z{};                 // (w, phi, s)
    std::array<double, 3> p{};                 // (p_w, p_phi, p_s)
    std::array<std::array<double, 3>, 3> X{};  // second derivatives, (w, phi, s) order

    double z_s() const noexcept { return z[2]; }
    double p_w() const noexcept { return p[0]; }
    double p_phi() const noexcept { return p[1]; }
    double p_s() const noexcept { return p[2]; }
    double X_ss() const noexcept { return X[2][2]; }
};

/// Maximiser of zeta (z_s p_w - p_phi) - g(zeta) z_s p_s over zeta >= 0.
/// Returns +inf when p_s = 0 and selling is profitable at the margin.
inline double zeta_star(const JetPoint& point, const ImpactSpec& spec) {
    if (!spec.strictly_increasing_h() || !std::isinf(spec.h_infinity())) {
        throw std::domain_error("zeta_star: needs strictly increasing h with h(inf) = inf");
    }
    if (point.p_s() < 0.0) throw std::domain_error("zeta_star: p_s must be >= 0");
    const double margin = point.z_s() * point.p_w() - point.p_phi();
    if (point.p_s() == 0.0 || point.z_s() == 0.0) return margin > 0.0 ? kInfinity : 0.0;
    const double y = margin / (point.z_s() * point.p_s());
    return spec.h_inverse(std::max(y, spec.h(0.0)));
}

namespace detail {

inline double control_gain(const JetPoint& point, const ImpactSpec& spec, double zeta) {
    const double margin = point.z_s() * point.p_w() - point.p_phi();
    return std::max(zeta * margin - spec.g(zeta) * point.z_s() * point.p_s(), 0.0);
}

inline double diffusion_drift(const JetPoint& point, const MarketParams& params) {
    const double s = point.z_s();
    const double sigma_hat = s * params.sigma();
    const double b_hat = -s * params.mu_tilde();
    return 0.5 * sigma_hat * sigma_hat * point.X_ss() + b_hat * point.p_s();
}

}  // namespace detail

/// F(z, p, X) = -sup_{zeta >= 0} { 1/2 sigma_hat^2 X_ss + b_hat p_s
///                                 + zeta (z_s p_w - p_phi) - g(zeta) z_s p_s },
/// with sigma_hat(s) = s sigma, b_hat(s) = -s mu_tilde. -inf where zeta* is +inf.
inline double hamiltonian(const JetPoint& point, const ImpactSpec& spec, const MarketParams& params) {
    const double zeta = zeta_star(point, spec);
    if (std::isinf(zeta)) return -kInfinity;
    return -(detail::diffusion_drift(point, params) + detail::control_gain(point, spec, zeta));
}

/// The supremum inside F restricted to 0 <= zeta <= cap. The control term is
/// concave in zeta for convex g, so the constrained maximiser is min(zeta*, cap).
inline double truncated_supremum(const JetPoint& point, const ImpactSpec& spec,
                                 const MarketParams& params, double cap) {
    if (!(cap >= 0.0)) throw std::domain_error("truncated_supremum: cap must be >= 0");
    const double zeta = std::min(zeta_star(point, spec), cap);
    return detail::diffusion_drift(point, params) + detail::control_gain(point, spec, zeta);
}

struct DifferenceSteps {
    double dt = 1e-4;
    double dphi = 1e-4;
};

/// Residual of the HJB equation for v = w + s f(t, phi) with g = alpha zeta^2,
/// divided by s:
///   R = f_t + mu f - (1 - f_phi)^2 / (4 alpha f)   if f_phi < 1
///   R = f_t + mu f                                 otherwise.
/// Derivatives are central differences, falling back to second-order one-sided
/// stencils within a step of the domain edge (t_max, phi_max, phi = 0).
template <typename Fn>
double reduced_residual(Fn&& f, double t, double phi, double alpha, double mu_tilde,
                        DifferenceSteps steps, double t_max = kInfinity,
                        double phi_max = kInfinity) {
    if (!(steps.dt > 0.0) || !(steps.dphi > 0.0)) {
        throw std::domain_error("reduced_residual: steps must be > 0");
    }
    const double value = f(t, phi);
    if (!(value > 0.0)) throw std::domain_error("reduced_residual: f must be > 0 at the point");

    auto derivative = [&](auto&& along, double x, double h, double lo, double hi) {
        if (x + h <= hi && x - h >= lo) return (along(x + h) - along(x - h)) / (2.0 * h);
        if (x + h > hi) return (3.0 * along(x) - 4.0 * along(x - h) + along(x - 2.0 * h)) / (2.0 * h);
        return (-3.0 * along(x) + 4.0 * along(x + h) - along(x + 2.0 * h)) / (2.0 * h);
    };
    const double f_t = derivative([&](double s) { return f(s, phi); }, t, steps.dt, 0.0, t_max);
    const double f_phi =
        derivative([&](double x) { return f(t, x); }, phi, steps.dphi, 0.0, phi_max);

    double r = f_t + mu_tilde * value;
    if (f_phi < 1.0) r -= (1.0 - f_phi) * (1.0 - f_phi) / (4.0 * alpha * value);
    return r;
}

/// f(t, phi) read from a solved grid: layer k = t n, linear in k and phi.
class GridFunction {
public:
    explicit GridFunction(const ValueGrid& grid) : grid_(grid) {}

    double operator()(double t, double phi) const {
        const double k = t * static_cast<double>(grid_.n());
        const double k_clamped = std::clamp(k, 0.0, static_cast<double>(grid_.k_max()));
        const int lo = std::min(static_cast<int>(k_clamped), std::max(grid_.k_max() - 1, 0));
        const double w = grid_.k_max() == 0 ? 0.0 : k_clamped - lo;
        const double a = grid_.interpolate(lo, phi);
        if (w == 0.0) return a;
        return a + (grid_.interpolate(lo + 1, phi) - a) * w;
    }

    double t_max() const { return static_cast<double>(grid_.k_max()) / grid_.n(); }
    double phi_max() const { return grid_.phi_grid().max(); }

private:
    const ValueGrid& grid_;
};

}  // namespace optexec
