#include "optexec/mc_simulator.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <vector>

using optexec::ExecutionOutcome;
using optexec::ExecutionStrategy;
using optexec::ImpactSpec;
using optexec::MarketParams;
using optexec::SimConfig;

namespace {

constexpr double kAlpha = 0.01;
constexpr double kMu = 0.05;

SimConfig config(std::int64_t paths, std::uint64_t seed = 1, double dt = 1e-3) {
    SimConfig c;
    c.paths = paths;
    c.seed = seed;
    c.dt_fine = dt;
    return c;
}

ExecutionStrategy zeta_hat_c(double phi) {
    return *optexec::quad_strategy(1.0, phi, kAlpha, kMu);
}

}  // namespace

TEST(RunDiscrete, SingleBlockHandComputation) {
    const MarketParams params(1e-12, 0.0, 2.0, 30.0);
    const std::vector<double> blocks{30.0};
    const auto out = optexec::run_discrete(params, ImpactSpec::log_linear(kAlpha), 10, blocks, config(5), 1.5);
    for (const auto& o : out) {
        EXPECT_NEAR(o.terminal_w, 1.5 + 30.0 * 2.0 * std::exp(-0.3), 1e-12);
        EXPECT_EQ(o.terminal_w, out.front().terminal_w);
        EXPECT_EQ(o.terminal_phi, 0.0);
    }
}

TEST(RunDiscrete, ZeroBlocks) {
    const MarketParams params(kMu, 0.2, 1.0, 3.0);
    const auto out = optexec::run_discrete(params, ImpactSpec::log_linear(kAlpha), 10, {}, config(4), 2.0);
    for (const auto& o : out) {
        EXPECT_EQ(o.terminal_w, 2.0);
        EXPECT_EQ(o.terminal_phi, 3.0);
    }
}

TEST(RunDiscrete, InadmissibleBlocks) {
    const MarketParams params(kMu, 0.0, 1.0, 1.0);
    const std::vector<double> negative{0.5, -0.1};
    const std::vector<double> too_many{0.6, 0.5};
    EXPECT_THROW(optexec::run_discrete(params, ImpactSpec::log_linear(kAlpha), 10, negative, config(1)),
                 std::domain_error);
    EXPECT_THROW(optexec::run_discrete(params, ImpactSpec::log_linear(kAlpha), 10, too_many, config(1)),
                 std::domain_error);
}

TEST(RunDiscrete, DpPlayoutMatchesDpValue) {
    const MarketParams params(kMu, 0.0, 1.0, 1.0);
    const auto spec = ImpactSpec::log_quadratic(kAlpha);
    const auto grid = optexec::solve_backward(params, spec, 500, 500, optexec::PhiGrid::uniform(1.0, 2000), {},
                                              optexec::hardware_threads());
    const auto play = optexec::playout(grid, 1.0);
    const auto out = optexec::run_discrete(params, spec, 500, play.blocks, config(3));
    const auto est = optexec::estimate_value(out, config(3));
    EXPECT_NEAR(est.mean, 0.978, 1e-3);
    EXPECT_NEAR(est.mean, grid.interpolate(500, 1.0), 1e-6);
    EXPECT_EQ(est.standard_error, 0.0);
}

TEST(RunDiscrete, LargerImpactLowersProceedsPathwise) {
    const MarketParams params(kMu, 0.3, 1.0, 5.0);
    const std::vector<double> blocks(20, 0.2);
    const auto lo = optexec::run_discrete(params, ImpactSpec::log_quadratic(0.01), 20, blocks, config(200, 9));
    const auto hi = optexec::run_discrete(params, ImpactSpec::log_quadratic(0.02), 20, blocks, config(200, 9));
    for (std::size_t i = 0; i < lo.size(); ++i) EXPECT_LT(hi[i].terminal_w, lo[i].terminal_w);
}

TEST(RunContinuous, IdleLognormalMean) {
    const MarketParams params(0.095, 0.3, 1.0, 1.0);
    const auto cfg = config(100000, 5);
    const auto out = optexec::run_continuous(params, ImpactSpec::log_quadratic(kAlpha),
                                             ExecutionStrategy::idle(1.0), cfg, 0.0, optexec::hardware_threads());
    double mean = 0.0;
    for (const auto& o : out) mean += o.terminal_s;
    mean /= out.size();
    double ss = 0.0;
    for (const auto& o : out) ss += (o.terminal_s - mean) * (o.terminal_s - mean);
    const double se = std::sqrt(ss / (out.size() - 1) / out.size());
    EXPECT_LE(std::abs(mean - std::exp(-kMu)), 4 * se);
}

TEST(RunContinuous, ZetaHatCDeterministic) {
    const MarketParams params(kMu, 0.0, 1.0, 1.0);
    const auto out = optexec::run_continuous(params, ImpactSpec::log_quadratic(kAlpha), zeta_hat_c(1.0), config(2));
    EXPECT_NEAR(out.front().terminal_w, 0.97797, 1e-3);
    EXPECT_NEAR(out.front().terminal_phi, 0.0, 1e-9);
    EXPECT_EQ(out.front().terminal_w, out.back().terminal_w);
}

TEST(RunContinuous, ConvergesToObjective) {
    const MarketParams params(kMu, 0.0, 1.0, 1.0);
    const auto spec = ImpactSpec::log_quadratic(kAlpha);
    const auto s = zeta_hat_c(1.0);
    const double exact = optexec::objective_f(s, spec, kMu);
    double prev = optexec::kInfinity;
    for (double dt : {1e-2, 1e-3, 1e-4}) {
        const double gap = std::abs(optexec::run_continuous(params, spec, s, config(1, 1, dt)).front().terminal_w - exact);
        EXPECT_LT(gap, prev);
        prev = gap;
    }
}

TEST(RunContinuous, DiscreteAgreementAsNGrows) {
    const MarketParams params(kMu, 0.0, 1.0, 1.0);
    const auto spec = ImpactSpec::log_quadratic(kAlpha);
    double prev = optexec::kInfinity;
    for (int n : {50, 100, 200, 400}) {
        // sell 1/3 of phi over [0, 0.5) at a rate aligned with both grids
        std::vector<double> blocks(n / 2, (1.0 / 3.0) / (n / 2));
        const ExecutionStrategy s({0.0, 0.5, 1.0}, {2.0 / 3.0, 0.0});
        const double disc = optexec::run_discrete(params, spec, n, blocks, config(1)).front().terminal_w;
        const double cont = optexec::run_continuous(params, spec, s, config(1, 1, 1.0 / n)).front().terminal_w;
        const double gap = std::abs(disc - cont);
        EXPECT_LT(gap, prev) << n;
        prev = gap;
    }
}

TEST(RunContinuous, SigmaInvarianceOfMean) {
    const auto spec = ImpactSpec::log_quadratic(kAlpha);
    const auto s = zeta_hat_c(1.0);
    std::vector<optexec::Estimate> estimates;
    for (double sigma : {0.0, 0.1, 0.3}) {
        const auto params = MarketParams::from_mu_tilde(kMu, sigma, 1.0, 1.0);
        const auto cfg = config(20000, 3);
        estimates.push_back(optexec::estimate_value(
            optexec::run_continuous(params, spec, s, cfg, 0.0, optexec::hardware_threads()), cfg));
    }
    for (const auto& a : estimates) {
        for (const auto& b : estimates) {
            EXPECT_LE(std::abs(a.mean - b.mean), 4 * std::hypot(a.standard_error, b.standard_error) + 1e-3);
        }
    }
}

TEST(RunContinuous, ThreadCountDoesNotChangePaths) {
    const auto params = MarketParams::from_mu_tilde(kMu, 0.3, 1.0, 1.0);
    const auto spec = ImpactSpec::log_quadratic(kAlpha);
    const auto a = optexec::run_continuous(params, spec, zeta_hat_c(1.0), config(64, 8, 1e-2), 0.0, 1);
    const auto b = optexec::run_continuous(params, spec, zeta_hat_c(1.0), config(64, 8, 1e-2), 0.0, 5);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].terminal_w, b[i].terminal_w);
        EXPECT_EQ(a[i].path_id, static_cast<std::int64_t>(i));
    }
}

TEST(RunContinuous, RejectsOverselling) {
    const MarketParams params(kMu, 0.0, 1.0, 1.0);
    EXPECT_THROW(optexec::run_continuous(params, ImpactSpec::log_quadratic(kAlpha),
                                         ExecutionStrategy({0.0, 1.0}, {2.0}), config(1)),
                 std::domain_error);
}

TEST(EstimateValue, HandArithmetic) {
    const std::vector<ExecutionOutcome> same{{3.0, 0, 1, 0}, {3.0, 0, 1, 1}};
    const auto a = optexec::estimate_value(same, config(2));
    EXPECT_EQ(a.mean, 3.0);
    EXPECT_EQ(a.standard_error, 0.0);
    const std::vector<ExecutionOutcome> two{{0.0, 0, 1, 0}, {2.0, 0, 1, 1}};
    const auto b = optexec::estimate_value(two, config(2));
    EXPECT_DOUBLE_EQ(b.mean, 1.0);
    EXPECT_DOUBLE_EQ(b.standard_error, 1.0);
    EXPECT_THROW(optexec::estimate_value(std::vector<ExecutionOutcome>{}, config(1)), std::domain_error);
}

TEST(TabulatedUtility, InterpolationAndValidation) {
    const optexec::TabulatedUtility u({0.0, 2.0}, {0.0, 1.0}, {0, 1, 2, 3}, {1, 2, 3, 4}, 10.0);
    EXPECT_DOUBLE_EQ(u(1.0, 0.0, 0.5), 1.5);
    EXPECT_DOUBLE_EQ(u(1.0, 5.0, 0.5), 2.0);
    EXPECT_DOUBLE_EQ(u(9.0, 20.0, 9.0), 4.0);
    EXPECT_THROW(optexec::TabulatedUtility({0.0, 2.0}, {0.0, 1.0}, {0, 1, 2, 0.5}, {1, 2, 3, 4}, 10.0),
                 std::domain_error);
    SimConfig cfg = config(2);
    cfg.utility = u;
    const std::vector<ExecutionOutcome> outcomes{{0.0, 0.0, 0.0, 0}, {2.0, 0.0, 1.0, 1}};
    EXPECT_DOUBLE_EQ(optexec::estimate_value(outcomes, cfg).mean, 1.5);
}

TEST(SelloutTail, ValueGapShrinksWithDelta) {
    const MarketParams params(kMu, 0.0, 1.0, 100.0);
    const auto spec = ImpactSpec::log_quadratic(kAlpha);
    const auto base = *optexec::quad_strategy(1.0, 100.0, kAlpha, kMu);
    const double target = *optexec::quad_value(1.0, 0.0, 100.0, 1.0, kAlpha, kMu);
    double prev = optexec::kInfinity;
    for (double delta : {0.1, 0.01, 0.001}) {
        const auto s = optexec::append_sellout_tail(base, 100.0, 1.0, delta);
        EXPECT_NEAR(s.total(), 100.0, 1e-9);
        const double gap = std::abs(optexec::objective_f(s, spec, kMu) - target);
        EXPECT_LT(gap, prev) << delta;
        prev = gap;
    }
}

TEST(Convergence, LinearGapShrinks) {
    const MarketParams params(kMu, 0.0, 1.0, 100.0);
    const std::vector<int> n_list{10, 20, 40, 80};
    const auto rows = optexec::convergence_table(params, ImpactSpec::log_linear(kAlpha), 1.0, 100.0, n_list,
                                                 {400, {401, 60}}, optexec::hardware_threads());
    ASSERT_EQ(rows.size(), 4u);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        EXPECT_GT(rows[i].value, rows[i - 1].value);
        EXPECT_LT(rows[i].abs_gap, rows[i - 1].abs_gap);
        EXPECT_NEAR(rows[i].reference, 63.212, 1e-3);
    }
}

TEST(Convergence, QuadraticRegionCAndSingleRow) {
    const MarketParams params(kMu, 0.0, 1.0, 1.0);
    const std::vector<int> n_list{25, 50, 100, 200, 400};
    const auto rows = optexec::convergence_table(params, ImpactSpec::log_quadratic(kAlpha), 1.0, 1.0, n_list,
                                                 {1000, {}}, optexec::hardware_threads());
    for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_LT(rows[i].abs_gap, rows[i - 1].abs_gap);
    const std::vector<int> single{1};
    const auto one = optexec::convergence_table(params, ImpactSpec::log_quadratic(kAlpha), 1.0, 1.0, single);
    ASSERT_EQ(one.size(), 1u);
    // single block: max psi exp(-alpha psi^2) over [0, 1], attained at psi = 1
    EXPECT_NEAR(one.front().value, std::exp(-kAlpha), 1e-12);
    std::ostringstream os;
    optexec::write_csv(os, one);
    EXPECT_EQ(os.str().substr(0, 25), "n,value,reference,abs_gap");
}

TEST(Convergence, CustomUsesExtrapolation) {
    const MarketParams params(kMu, 0.0, 1.0, 5.0);
    const auto spec = optexec::ImpactSpec::custom({{0.0, 0.0}, {5.0, 0.1}, {20.0, 0.6}}, optexec::kInfinity);
    const std::vector<int> n_list{20, 40};
    const auto rows = optexec::convergence_table(params, spec, 1.0, 5.0, n_list, {200, {201, 40}});
    EXPECT_NEAR(rows[0].reference, rows[1].value + (rows[1].value - rows[0].value), 1e-12);
}
