#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace optexec {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

namespace numeric {

/// Composite Simpson on [a, b] with interval doubling. Stops once the
/// Richardson correction |S_2m - S_m| / 15 drops below `tol`, and returns the
/// extrapolated value.
template <typename Fn>
double integrate_richardson(Fn&& f, double a, double b, double tol = 1e-12,
                            int max_doublings = 24) {
    if (b == a) return 0.0;
    auto simpson = [&](std::size_t m) {
        const double h = (b - a) / static_cast<double>(2 * m);
        double odd = 0.0;
        double even = 0.0;
        for (std::size_t i = 1; i < 2 * m; ++i) {
            const double v = f(a + h * static_cast<double>(i));
            (i % 2 ? odd : even) += v;
        }
        return h / 3.0 * (f(a) + f(b) + 4.0 * odd + 2.0 * even);
    };
    std::size_t m = 2;
    double coarse = simpson(m);
    for (int it = 0; it < max_doublings; ++it) {
        m *= 2;
        const double fine = simpson(m);
        const double correction = (fine - coarse) / 15.0;
        if (std::abs(correction) < tol) return fine + correction;
        coarse = fine;
    }
    throw std::runtime_error("integrate_richardson: no convergence");
}

struct GoldenResult {
    double x;
    double value;
};

/// Golden-section search for a maximum of `f` on [lo, hi]. Assumes
/// unimodality on the bracket; the caller owns the global search.
template <typename Fn>
GoldenResult golden_section_max(Fn&& f, double lo, double hi, int iterations) {
    constexpr double kInvPhi = 0.6180339887498948482;
    double a = lo;
    double b = hi;
    double c = b - kInvPhi * (b - a);
    double d = a + kInvPhi * (b - a);
    double fc = f(c);
    double fd = f(d);
    for (int i = 0; i < iterations && b - a > 0.0; ++i) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - kInvPhi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + kInvPhi * (b - a);
            fd = f(d);
        }
    }
    return fc >= fd ? GoldenResult{c, fc} : GoldenResult{d, fd};
}

/// arctanh(x) as 0.5 ln((1+x)/(1-x)); +inf once x is within 1e-15 of 1.
inline double arctanh_guarded(double x) {
    if (x >= 1.0 - 1e-15) return kInfinity;
    return 0.5 * std::log((1.0 + x) / (1.0 - x));
}

}  // namespace numeric

/// Sorted share grid on [0, phi_max]. Uniform grids locate in O(1).
class PhiGrid {
public:
    struct Bracket {
        std::size_t lo;
        double weight;  // in [0, 1], toward lo + 1
    };

    static PhiGrid uniform(double phi_max, std::size_t intervals) {
        if (!(phi_max > 0.0) || intervals == 0) {
            throw std::domain_error("PhiGrid::uniform: need phi_max > 0 and intervals > 0");
        }
        std::vector<double> nodes(intervals + 1);
        for (std::size_t i = 0; i <= intervals; ++i) {
            nodes[i] = phi_max * static_cast<double>(i) / static_cast<double>(intervals);
        }
        nodes.back() = phi_max;
        PhiGrid grid(std::move(nodes));
        return grid;
    }

    explicit PhiGrid(std::vector<double> nodes) : nodes_(std::move(nodes)) {
        if (nodes_.size() < 2) throw std::domain_error("PhiGrid: need at least two nodes");
        if (nodes_.front() != 0.0) throw std::domain_error("PhiGrid: first node must be 0");
        for (std::size_t i = 1; i < nodes_.size(); ++i) {
            if (!(nodes_[i] > nodes_[i - 1])) {
                throw std::domain_error("PhiGrid: nodes must be strictly increasing");
            }
        }
        const double h = nodes_.back() / static_cast<double>(nodes_.size() - 1);
        uniform_ = true;
        for (std::size_t i = 0; i < nodes_.size() && uniform_; ++i) {
            uniform_ = std::abs(nodes_[i] - h * static_cast<double>(i)) <= 1e-12 * nodes_.back();
        }
        spacing_ = h;
    }

    std::size_t size() const noexcept { return nodes_.size(); }
    double operator[](std::size_t i) const noexcept { return nodes_[i]; }
    double max() const noexcept { return nodes_.back(); }
    bool is_uniform() const noexcept { return uniform_; }
    std::span<const double> nodes() const noexcept { return nodes_; }

    Bracket locate(double x) const noexcept {
        const std::size_t last = nodes_.size() - 1;
        if (!(x > 0.0)) return {0, 0.0};
        if (x >= nodes_[last]) return {last - 1, 1.0};
        std::size_t j;
        if (uniform_) {
            j = std::min(static_cast<std::size_t>(x / spacing_), last - 1);
        } else {
            j = static_cast<std::size_t>(std::upper_bound(nodes_.begin(), nodes_.end(), x) -
                                         nodes_.begin()) - 1;
        }
        const double w = (x - nodes_[j]) / (nodes_[j + 1] - nodes_[j]);
        return {j, std::clamp(w, 0.0, 1.0)};
    }

    /// Linear interpolation of node values. A -inf endpoint poisons the whole
    /// cell except the exact opposite node.
    double interpolate(std::span<const double> values, double x) const noexcept {
        const auto [j, w] = locate(x);
        if (w == 0.0) return values[j];
        if (w == 1.0) return values[j + 1];
        const double a = values[j];
        const double b = values[j + 1];
        if (std::isinf(a) || std::isinf(b)) return -kInfinity;
        return a + (b - a) * w;
    }

private:
    std::vector<double> nodes_;
    double spacing_ = 0.0;
    bool uniform_ = false;
};

}  // namespace optexec
