#include "optexec/dp_engine.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using optexec::ImpactSpec;
using optexec::MarketParams;
using optexec::PhiGrid;

namespace {

const MarketParams kMarket(0.05, 0.0, 1.0, 1.0);

double closed_form_c(double phi) {
    const double r = std::sqrt(0.01 * 0.05);
    return -std::expm1(-2.0 * r * phi) / (2.0 * r);
}

// max over psi in [0, x] of psi exp(-a psi^2): interior optimum at 1/sqrt(2a).
double single_block_quadratic(double a, double x) {
    const double psi = std::min(x, 1.0 / std::sqrt(2.0 * a));
    return psi * std::exp(-a * psi * psi);
}

}  // namespace

TEST(SolveBackward, ZeroStepsGivesZeroGrid) {
    const auto grid = optexec::solve_backward(kMarket, ImpactSpec::log_quadratic(0.01), 10, 0,
                                              PhiGrid::uniform(1.0, 20));
    EXPECT_EQ(grid.k_max(), 0);
    for (std::size_t i = 0; i < 21; ++i) EXPECT_EQ(grid.F(0, i), 0.0);
    std::ostringstream os;
    optexec::write_csv(os, grid);
    EXPECT_EQ(os.str().substr(0, 15), "k,phi,F,psi_hat");
}

TEST(SolveBackward, SingleBlockLinearOracle) {
    const MarketParams params(0.05, 0.0, 1.0, 100.0);
    const auto grid = optexec::solve_backward(params, ImpactSpec::log_linear(0.01), 1, 1,
                                              PhiGrid::uniform(100.0, 100));
    // independent dense scan over psi
    double best = 0.0;
    for (int i = 0; i <= 1000000; ++i) {
        const double psi = 100.0 * i / 1000000.0;
        best = std::max(best, psi * std::exp(-0.01 * psi));
    }
    EXPECT_NEAR(grid.interpolate(1, 100.0), best, 1e-9);
    EXPECT_NEAR(best, 36.788, 1e-3);
    EXPECT_NEAR(grid.psi_hat(1, 100), 100.0, 1e-9);
}

TEST(SolveBackward, TwoStepNestedOracle) {
    const int n = 4;
    const double a = 0.01 * n;  // alpha_n = n alpha
    const double phi0 = 8.0;
    const MarketParams params(0.05, 0.0, 1.0, phi0);
    const auto grid = optexec::solve_backward(params, ImpactSpec::log_quadratic(0.01), n, 2,
                                              PhiGrid::uniform(phi0, 2000));
    const double carry = std::exp(-0.05 / n);
    for (double phi : {0.5, 3.0, 6.0, 8.0}) {
        double best = 0.0;
        const int m = 200000;
        for (int i = 0; i <= m; ++i) {
            const double psi = phi * i / m;
            best = std::max(best, std::exp(-a * psi * psi) *
                                      (psi + carry * single_block_quadratic(a, phi - psi)));
        }
        EXPECT_NEAR(grid.interpolate(2, phi), best, 1e-6 * std::max(1.0, best)) << phi;
        EXPECT_NEAR(grid.interpolate(1, phi), single_block_quadratic(a, phi), 1e-12) << phi;
    }
}

TEST(SolveBackward, RegionCValueAtFullResolution) {
    const auto grid = optexec::solve_backward(kMarket, ImpactSpec::log_quadratic(0.01), 500, 500,
                                              PhiGrid::uniform(1.0, 2000), {}, optexec::hardware_threads());
    EXPECT_NEAR(grid.interpolate(500, 1.0), 0.9780, 1e-3);
    EXPECT_NEAR(grid.interpolate(500, 1.0), closed_form_c(1.0), 1e-3);
    EXPECT_TRUE(optexec::check_invariants(grid).empty());

    EXPECT_EQ(optexec::value_at(grid, 7, 5.0, 0.3, 0.0), 5.0);
    EXPECT_EQ(optexec::value_at(grid, 0, 2.0, 1.0, 7.0), 2.0);
    EXPECT_NEAR(optexec::value_at(grid, 500, 0.0, 1.0, 3.0), 2.934, 2e-3);

    const auto play = optexec::playout(grid, 1.0);
    const double rate = std::sqrt(5.0);
    const double stop = 1.0 / rate;
    for (std::size_t l = 0; l < play.blocks.size(); ++l) {
        const double r = static_cast<double>(l) / 500;
        if (r + 0.02 < stop) {
            EXPECT_NEAR(play.strategy.rates()[l], rate, 0.05 * rate) << r;
        }
        if (r > stop + 0.02) {
            EXPECT_NEAR(play.strategy.rates()[l], 0.0, 1e-3) << r;
        }
    }
}

TEST(SolveBackward, CoarseCrossCheck) {
    const auto fine = optexec::solve_backward(kMarket, ImpactSpec::log_quadratic(0.01), 200, 200,
                                              PhiGrid::uniform(1.0, 400), {}, optexec::hardware_threads());
    const auto coarse = optexec::solve_backward(kMarket, ImpactSpec::log_quadratic(0.01), 100, 100,
                                                PhiGrid::uniform(1.0, 400), {}, optexec::hardware_threads());
    EXPECT_NEAR(fine.interpolate(200, 1.0), coarse.interpolate(100, 1.0), 5e-3);
    EXPECT_NEAR(coarse.interpolate(100, 1.0), closed_form_c(1.0), 1e-2);
}

TEST(SolveBackward, RejectsBadInput) {
    const auto spec = ImpactSpec::log_quadratic(0.01);
    EXPECT_THROW(optexec::solve_backward(kMarket, spec, 10, 11, PhiGrid::uniform(1.0, 10)), std::domain_error);
    EXPECT_THROW(optexec::solve_backward(kMarket, spec, 0, 0, PhiGrid::uniform(1.0, 10)), std::domain_error);
    EXPECT_THROW(optexec::solve_backward(kMarket, spec, 10, 5, PhiGrid::uniform(2.0, 10)), std::domain_error);
}

TEST(SolveBackward, ThreadCountDoesNotChangeResult) {
    const MarketParams params(0.05, 0.0, 1.0, 10.0);
    const auto spec = ImpactSpec::log_quadratic(0.01);
    const auto one = optexec::solve_backward(params, spec, 40, 40, PhiGrid::uniform(10.0, 200), {}, 1);
    const auto many = optexec::solve_backward(params, spec, 40, 40, PhiGrid::uniform(10.0, 200), {}, 4);
    for (int k = 0; k <= 40; ++k) {
        for (std::size_t i = 0; i <= 200; ++i) {
            ASSERT_EQ(one.F(k, i), many.F(k, i));
            ASSERT_EQ(one.psi_hat(k, i), many.psi_hat(k, i));
        }
    }
}

TEST(SolveBackward, SemigroupComposition) {
    const MarketParams params(0.05, 0.0, 1.0, 20.0);
    const PhiGrid phi = PhiGrid::uniform(20.0, 200);
    for (const auto& spec : {ImpactSpec::log_quadratic(0.01), ImpactSpec::log_linear(0.01)}) {
        const auto whole = optexec::solve_backward(params, spec, 16, 16, phi);
        const auto head = optexec::solve_backward(params, spec, 16, 6, phi);
        const auto tail = optexec::solve_backward_from(params, spec, 16, 10, phi, head.layer(6), head.policy(6));
        for (std::size_t i = 0; i < phi.size(); ++i) {
            EXPECT_NEAR(whole.F(16, i), tail.F(10, i), 1e-12);
        }
    }
}

TEST(SolveBackward, LinearBoundAndMonotone) {
    const MarketParams params(0.05, 0.0, 1.0, 100.0);
    const auto grid = optexec::solve_backward(params, ImpactSpec::log_linear(0.01), 50, 50,
                                              PhiGrid::uniform(100.0, 500), {}, optexec::hardware_threads());
    EXPECT_TRUE(optexec::check_invariants(grid).empty());
    for (int k = 0; k <= 50; ++k) {
        for (std::size_t i = 0; i <= 500; ++i) {
            const double phi = grid.phi_grid()[i];
            EXPECT_LE(grid.F(k, i), -std::expm1(-0.01 * phi) / 0.01 + 1e-9);
        }
    }
}

TEST(Sellout, ForcedSingleBlock) {
    const MarketParams params(0.05, 0.0, 1.0, 50.0);
    const auto so = optexec::solve_backward_sellout(params, ImpactSpec::log_linear(0.01), 1, 1,
                                                    PhiGrid::uniform(50.0, 100));
    EXPECT_NEAR(so.interpolate(1, 50.0), 50.0 * std::exp(-0.5), 1e-12);
    EXPECT_NEAR(so.interpolate(1, 50.0), 30.327, 1e-3);
    EXPECT_EQ(so.F(1, 0), 0.0);
    EXPECT_EQ(so.F(0, 3), -optexec::kInfinity);
}

TEST(Sellout, ZeroHoldingsAlwaysZero) {
    const auto so = optexec::solve_backward_sellout(kMarket, ImpactSpec::log_quadratic(0.01), 20, 20,
                                                    PhiGrid::uniform(1.0, 50));
    for (int k = 0; k <= 20; ++k) EXPECT_EQ(so.F(k, 0), 0.0);
}

TEST(Sellout, SandwichAndLimit) {
    const PhiGrid phi = PhiGrid::uniform(1.0, 2000);
    const auto spec = ImpactSpec::log_quadratic(0.01);
    const unsigned threads = optexec::hardware_threads();
    const auto free = optexec::solve_backward(kMarket, spec, 500, 500, phi, {}, threads);
    const auto so = optexec::solve_backward_sellout(kMarket, spec, 500, 500, phi, {}, threads);
    EXPECT_EQ(optexec::count_sandwich_violations(free, so), 0u);
    EXPECT_NEAR(so.interpolate(500, 1.0), free.interpolate(500, 1.0), 1e-2);
}

TEST(ValueAt, RangeAndScale) {
    const MarketParams params(0.05, 0.0, 1.0, 10.0);
    const auto grid = optexec::solve_backward(params, ImpactSpec::log_quadratic(0.01), 20, 20,
                                              PhiGrid::uniform(10.0, 100));
    EXPECT_THROW(optexec::value_at(grid, 21, 0.0, 1.0, 1.0), std::domain_error);
    EXPECT_THROW(optexec::value_at(grid, -1, 0.0, 1.0, 1.0), std::domain_error);
    EXPECT_THROW(optexec::value_at(grid, 5, 0.0, 10.5, 1.0), std::domain_error);
    EXPECT_THROW(optexec::value_at(grid, 5, 0.0, -0.1, 1.0), std::domain_error);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const int k = static_cast<int>(u(rng) * 20);
        const double w = 10 * u(rng) - 5;
        const double phi = 10 * u(rng);
        const double s = 3 * u(rng);
        EXPECT_NEAR(optexec::value_at(grid, k, w, phi, s), w + s * optexec::value_at(grid, k, 0.0, phi, 1.0), 1e-12);
    }
}

TEST(Playout, BlocksAndHoldingsConsistent) {
    const MarketParams params(0.05, 0.0, 1.0, 10.0);
    const auto grid = optexec::solve_backward(params, ImpactSpec::log_quadratic(0.01), 50, 50,
                                              PhiGrid::uniform(10.0, 400));
    const auto play = optexec::playout(grid, 10.0);
    ASSERT_EQ(play.blocks.size(), 50u);
    ASSERT_EQ(play.holdings.size(), 51u);
    for (std::size_t l = 0; l < 50; ++l) {
        EXPECT_GE(play.blocks[l], 0.0);
        EXPECT_NEAR(play.holdings[l + 1], play.holdings[l] - play.blocks[l], 1e-15);
        EXPECT_NEAR(play.strategy.rates()[l], 50 * play.blocks[l], 1e-12);
    }
    EXPECT_GE(play.holdings.back(), -1e-12);
    std::ostringstream os;
    optexec::write_csv(os, play.strategy, 10.0);
    EXPECT_EQ(os.str().substr(0, 20), "r,zeta,phi_remaining");
}

TEST(Invariants, DetectsCorruption) {
    const PhiGrid phi = PhiGrid::uniform(1.0, 2);
    std::vector<double> values{0, 0, 0, 0, 0.5, 0.4};
    std::vector<double> policy{0, 0, 0, 0, 0.5, 1.0};
    const optexec::ValueGrid bad(1, 1, phi, values, policy, false);
    const auto problems = optexec::check_invariants(bad);
    ASSERT_EQ(problems.size(), 1u);
    EXPECT_EQ(problems.front(), "F decreases in phi");
}
