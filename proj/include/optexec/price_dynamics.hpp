#pragma once

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>

namespace optexec {

/// Constant-coefficient market: log price dY = sigma dB - mu dt.
/// mu_tilde = mu - sigma^2 / 2 is the effective drift of the price level and
/// must be positive.
class MarketParams {
public:
    MarketParams(double mu, double sigma, double s0, double phi0, double horizon = 1.0)
        : mu_(mu), sigma_(sigma), s0_(s0), phi0_(phi0), horizon_(horizon) {
        if (!std::isfinite(mu)) throw std::domain_error("MarketParams: mu must be finite");
        if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
            throw std::domain_error("MarketParams: sigma must be finite and >= 0");
        }
        if (!(mu_tilde() > 0.0)) throw std::domain_error("MarketParams: mu - sigma^2/2 must be > 0");
        if (!(s0 >= 0.0) || !std::isfinite(s0)) throw std::domain_error("MarketParams: s0 must be >= 0");
        if (!(phi0 > 0.0) || !std::isfinite(phi0)) throw std::domain_error("MarketParams: phi0 must be > 0");
        if (!(horizon > 0.0 && horizon <= 1.0)) {
            throw std::domain_error("MarketParams: horizon must lie in (0, 1]");
        }
    }

    /// Build from the effective drift; mu is set to mu_tilde + sigma^2 / 2.
    static MarketParams from_mu_tilde(double mu_tilde, double sigma, double s0, double phi0,
                                      double horizon = 1.0) {
        return MarketParams(mu_tilde + 0.5 * sigma * sigma, sigma, s0, phi0, horizon);
    }

    double mu() const noexcept { return mu_; }
    double sigma() const noexcept { return sigma_; }
    double mu_tilde() const noexcept { return mu_ - 0.5 * sigma_ * sigma_; }
    double s0() const noexcept { return s0_; }
    double phi0() const noexcept { return phi0_; }
    double horizon() const noexcept { return horizon_; }

    MarketParams with_phi0(double phi0) const { return {mu_, sigma_, s0_, phi0, horizon_}; }
    MarketParams with_sigma_at_fixed_mu_tilde(double sigma) const {
        return from_mu_tilde(mu_tilde(), sigma, s0_, phi0_, horizon_);
    }

private:
    double mu_;
    double sigma_;
    double s0_;
    double phi0_;
    double horizon_;
};

/// (time, cash, shares, log price). An empty log price is the absorbing
/// zero-price state.
struct PathState {
    double time = 0.0;
    double w = 0.0;
    double phi = 0.0;
    std::optional<double> x;

    double price() const { return x ? std::exp(*x) : 0.0; }
};

/// Exact transition of the log price over dt given a standard normal draw.
inline double step_log_price(const MarketParams& params, double x, double dt, double z) {
    if (!(dt > 0.0)) throw std::domain_error("step_log_price: dt must be > 0");
    return x + params.sigma() * std::sqrt(dt) * z - params.mu() * dt;
}

/// E[exp(Y(dt) - x)] = exp(-mu_tilde dt).
inline double expected_price_factor(const MarketParams& params, double dt) {
    if (!(dt >= 0.0)) throw std::domain_error("expected_price_factor: dt must be >= 0");
    return std::exp(-params.mu_tilde() * dt);
}

inline double apply_impact(double x, double impact_amount) {
    if (!(impact_amount >= 0.0)) throw std::domain_error("apply_impact: impact must be >= 0");
    return x - impact_amount;
}

/// Per-stream normal generator. Streams are keyed by (root seed, stream id),
/// so a path's draws do not depend on how paths are split across workers.
class NormalStream {
public:
    NormalStream(std::uint64_t seed, std::uint64_t stream)
        : engine_(mix(seed, stream)) {}

    double operator()() { return normal_(engine_); }

private:
    static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
        // splitmix64 finaliser over the combined key
        std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

inline void to_json(nlohmann::json& j, const MarketParams& p) {
    j = nlohmann::json{{"mu", p.mu()},
                       {"sigma", p.sigma()},
                       {"s0", p.s0()},
                       {"phi0", p.phi0()},
                       {"horizon", p.horizon()}};
}

inline MarketParams market_params_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("market: expected an object");
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (key != "mu" && key != "sigma" && key != "s0" && key != "phi0" && key != "horizon") {
            throw std::invalid_argument("market: unknown field '" + key + "'");
        }
    }
    for (const char* key : {"mu", "sigma", "s0", "phi0"}) {
        if (!j.contains(key)) throw std::invalid_argument(std::string("market: missing '") + key + "'");
    }
    return MarketParams(j.at("mu").get<double>(), j.at("sigma").get<double>(),
                        j.at("s0").get<double>(), j.at("phi0").get<double>(),
                        j.value("horizon", 1.0));
}

}  // namespace optexec
