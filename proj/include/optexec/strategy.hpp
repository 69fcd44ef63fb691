#pragma once

#include <algorithm>
#include <cmath>
#include <ostream>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace optexec {

/// Deterministic piecewise-constant sell-rate path: rate `rates[i]` on
/// [times[i], times[i+1]).
class ExecutionStrategy {
public:
    ExecutionStrategy() = default;

    ExecutionStrategy(std::vector<double> times, std::vector<double> rates)
        : times_(std::move(times)), rates_(std::move(rates)) {
        if (times_.size() != rates_.size() + 1) {
            throw std::domain_error("ExecutionStrategy: need one more breakpoint than rates");
        }
        for (std::size_t i = 1; i < times_.size(); ++i) {
            if (!(times_[i] > times_[i - 1])) {
                throw std::domain_error("ExecutionStrategy: breakpoints must be strictly increasing");
            }
        }
        for (double r : rates_) {
            if (!(r >= 0.0) || !std::isfinite(r)) {
                throw std::domain_error("ExecutionStrategy: rates must be finite and >= 0");
            }
        }
    }

    /// Zero rate on [0, horizon].
    static ExecutionStrategy idle(double horizon) { return {{0.0, horizon}, {0.0}}; }

    std::span<const double> times() const noexcept { return times_; }
    std::span<const double> rates() const noexcept { return rates_; }
    std::size_t pieces() const noexcept { return rates_.size(); }
    bool empty() const noexcept { return rates_.empty(); }
    double start() const noexcept { return times_.empty() ? 0.0 : times_.front(); }
    double end() const noexcept { return times_.empty() ? 0.0 : times_.back(); }
    double length(std::size_t i) const noexcept { return times_[i + 1] - times_[i]; }

    double total() const noexcept {
        double sum = 0.0;
        for (std::size_t i = 0; i < rates_.size(); ++i) sum += rates_[i] * length(i);
        return sum;
    }

    /// Shares sold on [start, r].
    double sold_by(double r) const noexcept {
        double sum = 0.0;
        for (std::size_t i = 0; i < rates_.size() && times_[i] < r; ++i) {
            sum += rates_[i] * (std::min(r, times_[i + 1]) - times_[i]);
        }
        return sum;
    }

    double rate_at(double r) const noexcept {
        if (empty() || r < times_.front() || r >= times_.back()) return 0.0;
        const auto it = std::upper_bound(times_.begin(), times_.end(), r);
        return rates_[static_cast<std::size_t>(it - times_.begin()) - 1];
    }

    void require_admissible(double phi0, double tolerance = 1e-12) const {
        if (total() > phi0 + tolerance) {
            throw std::domain_error("ExecutionStrategy: sells more than the endowment");
        }
    }

private:
    std::vector<double> times_;
    std::vector<double> rates_;
};

}  // namespace optexec
