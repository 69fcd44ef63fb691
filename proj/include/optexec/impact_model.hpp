#pragma once

#include "optexec/numeric.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace optexec {

enum class ImpactKind { log_linear, log_quadratic, custom };

/// Discrete impact coefficient alpha_n as a function of the step count n:
///   alpha_n = base(n) + offset + offset_over_n / n,
/// where base(n) is alpha, n * alpha, or a fixed constant.
struct AlphaSchedule {
    enum class Base { alpha, n_alpha, constant };

    Base base = Base::alpha;
    double constant = 0.0;
    double offset = 0.0;
    double offset_over_n = 0.0;

    double at(int n, double alpha) const {
        double b = 0.0;
        switch (base) {
            case Base::alpha: b = alpha; break;
            case Base::n_alpha: b = static_cast<double>(n) * alpha; break;
            case Base::constant: b = constant; break;
        }
        return b + offset + offset_over_n / static_cast<double>(n);
    }

    friend bool operator==(const AlphaSchedule&, const AlphaSchedule&) = default;
};

/// Market-impact model: the continuous impact slope h, its integral
/// g(zeta) = int_0^zeta h, and the per-step block impact g_n(psi).
///
/// LogLinear:    h = alpha,          g = alpha zeta,    g_n = alpha_n psi
/// LogQuadratic: h = 2 alpha zeta,   g = alpha zeta^2,  g_n = alpha_n psi^2
/// Custom:       h tabulated (linear interpolation),    g_n = g(n psi) / n
class ImpactSpec {
public:
    static ImpactSpec log_linear(double alpha, AlphaSchedule schedule = {}) {
        if (!(alpha > 0.0)) throw std::domain_error("log_linear impact: alpha must be > 0");
        ImpactSpec spec;
        spec.kind_ = ImpactKind::log_linear;
        spec.alpha_ = alpha;
        spec.schedule_ = schedule;
        spec.h_infinity_ = alpha;
        return spec;
    }

    static ImpactSpec log_quadratic(double alpha,
                                    AlphaSchedule schedule = {AlphaSchedule::Base::n_alpha}) {
        if (!(alpha > 0.0)) throw std::domain_error("log_quadratic impact: alpha must be > 0");
        ImpactSpec spec;
        spec.kind_ = ImpactKind::log_quadratic;
        spec.alpha_ = alpha;
        spec.schedule_ = schedule;
        spec.h_infinity_ = kInfinity;
        return spec;
    }

    /// `table` holds (zeta, h(zeta)) pairs starting at zeta = 0.
    static ImpactSpec custom(std::vector<std::pair<double, double>> table, double h_infinity) {
        if (table.empty()) throw std::domain_error("custom impact: empty h table");
        if (table.front().first != 0.0) {
            throw std::domain_error("custom impact: h table must start at zeta = 0");
        }
        for (std::size_t i = 0; i < table.size(); ++i) {
            if (!std::isfinite(table[i].second) || table[i].second < 0.0) {
                throw std::domain_error("custom impact: h values must be finite and >= 0");
            }
            if (i > 0 && !(table[i].first > table[i - 1].first)) {
                throw std::domain_error("custom impact: zeta nodes must be strictly increasing");
            }
            if (i > 0 && table[i].second < table[i - 1].second) {
                throw std::domain_error("custom impact: h must be non-decreasing");
            }
        }
        if (!(h_infinity >= table.back().second)) {
            throw std::domain_error("custom impact: h_infinity below the last tabulated h");
        }
        ImpactSpec spec;
        spec.kind_ = ImpactKind::custom;
        spec.table_ = std::move(table);
        spec.h_infinity_ = h_infinity;
        spec.build_cumulative();
        return spec;
    }

    ImpactKind kind() const noexcept { return kind_; }
    double alpha() const noexcept { return alpha_; }
    const AlphaSchedule& schedule() const noexcept { return schedule_; }
    double h_infinity() const noexcept { return h_infinity_; }
    std::span<const std::pair<double, double>> h_table() const noexcept { return table_; }

    double alpha_n(int n) const { return schedule_.at(n, alpha_); }

    double h(double zeta) const {
        switch (kind_) {
            case ImpactKind::log_linear: return alpha_;
            case ImpactKind::log_quadratic: return 2.0 * alpha_ * zeta;
            case ImpactKind::custom: break;
        }
        if (table_.size() == 1) return table_.front().second;
        const std::size_t j = segment_of(zeta);
        const auto [z0, h0] = table_[j];
        const auto [z1, h1] = table_[j + 1];
        return h0 + (h1 - h0) * (zeta - z0) / (z1 - z0);
    }

    /// g(zeta). Custom kind evaluates the piecewise-quadratic antiderivative from
    /// node prefix sums; `integrate_h` is the quadrature route.
    double g(double zeta) const {
        switch (kind_) {
            case ImpactKind::log_linear: return alpha_ * zeta;
            case ImpactKind::log_quadratic: return alpha_ * zeta * zeta;
            case ImpactKind::custom: break;
        }
        if (table_.size() == 1) return table_.front().second * zeta;
        const std::size_t j = segment_of(zeta);
        const double z0 = table_[j].first;
        return cumulative_[j] + 0.5 * (h(z0) + h(zeta)) * (zeta - z0);
    }

    double g_n(int n, double psi) const {
        switch (kind_) {
            case ImpactKind::log_linear: return alpha_n(n) * psi;
            case ImpactKind::log_quadratic: return alpha_n(n) * psi * psi;
            case ImpactKind::custom: break;
        }
        const double nd = static_cast<double>(n);
        return g(nd * psi) / nd;
    }

    /// d/dpsi g_n. Closed form for the built-in kinds; central difference
    /// (forward near 0) with step 1e-6 * phi_scale for Custom.
    double dg_n(int n, double psi, double phi_scale = 1.0) const {
        switch (kind_) {
            case ImpactKind::log_linear: return alpha_n(n);
            case ImpactKind::log_quadratic: return 2.0 * alpha_n(n) * psi;
            case ImpactKind::custom: break;
        }
        const double step = 1e-6 * phi_scale;
        if (psi < step) return (g_n(n, psi + step) - g_n(n, psi)) / step;
        return (g_n(n, psi + step) - g_n(n, psi - step)) / (2.0 * step);
    }

    bool strictly_increasing_h() const {
        switch (kind_) {
            case ImpactKind::log_linear: return false;
            case ImpactKind::log_quadratic: return true;
            case ImpactKind::custom: break;
        }
        for (std::size_t i = 1; i < table_.size(); ++i) {
            if (!(table_[i].second > table_[i - 1].second)) return false;
        }
        return table_.size() > 1;
    }

    /// h^{-1}(y) for strictly increasing h. Analytic for LogQuadratic, bisection
    /// with geometric bracket growth (1e-10 relative) for Custom.
    double h_inverse(double y) const {
        if (!strictly_increasing_h()) {
            throw std::domain_error("h_inverse: h is not strictly increasing");
        }
        if (y <= h(0.0)) return 0.0;
        if (kind_ == ImpactKind::log_quadratic) return y / (2.0 * alpha_);
        double lo = 0.0;
        double hi = std::max(table_.back().first, 1.0);
        while (h(hi) < y) {
            lo = hi;
            hi *= 2.0;
            if (!std::isfinite(hi)) throw std::domain_error("h_inverse: target above h range");
        }
        while (hi - lo > 1e-10 * std::max(hi, 1e-300)) {
            const double mid = 0.5 * (lo + hi);
            (h(mid) < y ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    }

private:
    ImpactSpec() = default;

    std::size_t segment_of(double zeta) const {
        const auto it = std::upper_bound(table_.begin(), table_.end(), zeta,
                                         [](double z, const auto& node) { return z < node.first; });
        const auto idx = static_cast<std::size_t>(it - table_.begin());
        return std::clamp<std::size_t>(idx == 0 ? 0 : idx - 1, 0, table_.size() - 2);
    }

    void build_cumulative() {
        cumulative_.assign(table_.size(), 0.0);
        for (std::size_t j = 1; j < table_.size(); ++j) {
            cumulative_[j] = cumulative_[j - 1] +
                             0.5 * (table_[j - 1].second + table_[j].second) *
                                 (table_[j].first - table_[j - 1].first);
        }
    }

    ImpactKind kind_ = ImpactKind::log_linear;
    double alpha_ = 0.0;
    AlphaSchedule schedule_{};
    double h_infinity_ = 0.0;
    std::vector<std::pair<double, double>> table_;
    std::vector<double> cumulative_;
};

/// g(zeta) by quadrature of h. Exact closed forms for the built-in kinds;
/// Custom integrates each table segment with Richardson-checked Simpson.
inline double integrate_h(const ImpactSpec& spec, double zeta) {
    if (zeta < 0.0) throw std::domain_error("integrate_h: zeta must be >= 0");
    switch (spec.kind()) {
        case ImpactKind::log_linear: return spec.alpha() * zeta;
        case ImpactKind::log_quadratic: return spec.alpha() * zeta * zeta;
        case ImpactKind::custom: break;
    }
    auto h = [&](double z) { return spec.h(z); };
    double total = 0.0;
    double from = 0.0;
    for (const auto& [node, value] : spec.h_table()) {
        (void)value;
        if (node <= from) continue;
        if (node >= zeta) break;
        total += numeric::integrate_richardson(h, from, node);
        from = node;
    }
    if (zeta > from) total += numeric::integrate_richardson(h, from, zeta);
    return total;
}

/// max over the grid of |d/dpsi g_n(psi) - h(n psi)|.
inline double condition_A_deviation(const ImpactSpec& spec, int n, std::span<const double> grid) {
    if (grid.empty()) throw std::domain_error("condition_A_deviation: empty grid");
    if (n <= 0) throw std::domain_error("condition_A_deviation: n must be positive");
    const double phi_scale = std::max(1.0, *std::max_element(grid.begin(), grid.end()));
    double worst = 0.0;
    for (double psi : grid) {
        const double dev = std::abs(spec.dg_n(n, psi, phi_scale) - spec.h(n * psi));
        worst = std::max(worst, dev);
    }
    return worst;
}

/// max over the grid of |g_n(psi)/psi - g(n psi)/(n psi)|.
inline double epsilon_n(const ImpactSpec& spec, int n, std::span<const double> grid) {
    if (grid.empty()) throw std::domain_error("epsilon_n: empty grid");
    if (n <= 0) throw std::domain_error("epsilon_n: n must be positive");
    const double nd = static_cast<double>(n);
    double worst = 0.0;
    for (double psi : grid) {
        if (!(psi > 0.0)) throw std::domain_error("epsilon_n: grid must exclude psi <= 0");
        const double dev = std::abs(spec.g_n(n, psi) / psi - spec.g(nd * psi) / (nd * psi));
        worst = std::max(worst, dev);
    }
    return worst;
}

// JSON: {"kind": "log_linear"|"log_quadratic"|"custom", "alpha": x,
//        "alpha_n": "n*alpha"|"alpha"|x|{"base","offset","offset_over_n"},
//        "h_table": [[zeta, h], ...], "h_infinity": x|"inf"}

inline nlohmann::json to_json_value(double x) {
    if (std::isinf(x)) return "inf";
    return x;
}

inline void to_json(nlohmann::json& j, const AlphaSchedule& s) {
    const bool plain = s.offset == 0.0 && s.offset_over_n == 0.0;
    if (plain && s.base == AlphaSchedule::Base::alpha) {
        j = "alpha";
    } else if (plain && s.base == AlphaSchedule::Base::n_alpha) {
        j = "n*alpha";
    } else if (plain && s.base == AlphaSchedule::Base::constant) {
        j = s.constant;
    } else {
        j = nlohmann::json::object();
        if (s.base == AlphaSchedule::Base::constant) {
            j["base"] = s.constant;
        } else {
            j["base"] = s.base == AlphaSchedule::Base::alpha ? "alpha" : "n*alpha";
        }
        j["offset"] = s.offset;
        j["offset_over_n"] = s.offset_over_n;
    }
}

inline AlphaSchedule alpha_schedule_from_json(const nlohmann::json& j) {
    AlphaSchedule s;
    auto base_from = [&](const nlohmann::json& b) {
        if (b.is_number()) {
            s.base = AlphaSchedule::Base::constant;
            s.constant = b.get<double>();
        } else if (b == "alpha") {
            s.base = AlphaSchedule::Base::alpha;
        } else if (b == "n*alpha") {
            s.base = AlphaSchedule::Base::n_alpha;
        } else {
            throw std::invalid_argument("alpha_n: expected \"alpha\", \"n*alpha\" or a number");
        }
    };
    if (j.is_object()) {
        for (const auto& [key, value] : j.items()) {
            if (key == "base") {
                base_from(value);
            } else if (key == "offset") {
                s.offset = value.get<double>();
            } else if (key == "offset_over_n") {
                s.offset_over_n = value.get<double>();
            } else {
                throw std::invalid_argument("alpha_n: unknown field '" + key + "'");
            }
        }
    } else {
        base_from(j);
    }
    return s;
}

inline void to_json(nlohmann::json& j, const ImpactSpec& spec) {
    switch (spec.kind()) {
        case ImpactKind::log_linear: j["kind"] = "log_linear"; break;
        case ImpactKind::log_quadratic: j["kind"] = "log_quadratic"; break;
        case ImpactKind::custom: j["kind"] = "custom"; break;
    }
    if (spec.kind() == ImpactKind::custom) {
        auto table = nlohmann::json::array();
        for (const auto& [z, h] : spec.h_table()) table.push_back({z, h});
        j["h_table"] = table;
    } else {
        j["alpha"] = spec.alpha();
        j["alpha_n"] = spec.schedule();
    }
    j["h_infinity"] = to_json_value(spec.h_infinity());
}

inline double number_or_inf(const nlohmann::json& j, const char* what) {
    if (j.is_string() && j == "inf") return kInfinity;
    if (!j.is_number()) throw std::invalid_argument(std::string(what) + ": expected number or \"inf\"");
    return j.get<double>();
}

inline ImpactSpec impact_spec_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("impact: expected an object");
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (key != "kind" && key != "alpha" && key != "alpha_n" && key != "h_table" &&
            key != "h_infinity") {
            throw std::invalid_argument("impact: unknown field '" + key + "'");
        }
    }
    if (!j.contains("kind")) throw std::invalid_argument("impact: missing 'kind'");
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "custom") {
        if (!j.contains("h_table")) throw std::invalid_argument("impact: custom kind needs 'h_table'");
        if (!j.contains("h_infinity")) {
            throw std::invalid_argument("impact: custom kind needs 'h_infinity'");
        }
        std::vector<std::pair<double, double>> table;
        for (const auto& row : j.at("h_table")) {
            if (!row.is_array() || row.size() != 2) {
                throw std::invalid_argument("impact: h_table rows must be [zeta, h]");
            }
            table.emplace_back(row[0].get<double>(), row[1].get<double>());
        }
        return ImpactSpec::custom(std::move(table), number_or_inf(j.at("h_infinity"), "h_infinity"));
    }
    if (kind != "log_linear" && kind != "log_quadratic") {
        throw std::invalid_argument("impact: unknown kind '" + kind + "'");
    }
    if (!j.contains("alpha")) throw std::invalid_argument("impact: missing 'alpha'");
    const double alpha = j.at("alpha").get<double>();
    const bool linear = kind == "log_linear";
    AlphaSchedule schedule = linear ? AlphaSchedule{} : AlphaSchedule{AlphaSchedule::Base::n_alpha};
    if (j.contains("alpha_n")) schedule = alpha_schedule_from_json(j.at("alpha_n"));
    ImpactSpec spec = linear ? ImpactSpec::log_linear(alpha, schedule)
                             : ImpactSpec::log_quadratic(alpha, schedule);
    if (j.contains("h_infinity")) {
        const double declared = number_or_inf(j.at("h_infinity"), "h_infinity");
        if (declared != spec.h_infinity()) {
            throw std::invalid_argument("impact: h_infinity inconsistent with kind");
        }
    }
    return spec;
}

}  // namespace optexec
