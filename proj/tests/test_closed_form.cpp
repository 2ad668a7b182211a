#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "bubblelab/closed_form.hpp"
#include "bubblelab/core.hpp"

using namespace bubblelab;
using Catch::Approx;

namespace {

// Independent oracle: the Euler equation U_y P_t = U_z (P_{t+1} + D_{t+1})
// at the stated allocation, checked with the log-utility kernel in level
// terms. Returns the largest relative residual over the horizon.
double log_olg_euler_residual(const LogOlgSolution& sol, const TrendedPath& dividends,
                              double beta, std::size_t upto) {
    const auto kernel = UtilityKernel::cobb_douglas(beta);
    double worst = 0.0;
    for (std::size_t t = 0; t + 1 <= upto; ++t) {
        const double y = sol.young.value(t);
        const double z = sol.old.value(t + 1);
        const UtilityValues v = utility_eval(kernel, y, z);
        const double lhs = v.U_y * sol.prices.value(t);
        const double rhs = v.U_z * (sol.prices.value(t + 1) + dividends.value(t + 1));
        worst = std::max(worst, std::abs(lhs - rhs) / std::abs(lhs));
    }
    return worst;
}

double max_noarb_residual(const TrendedPath& prices, const TrendedPath& dividends,
                          const std::vector<double>& rates, std::size_t upto) {
    double worst = 0.0;
    for (std::size_t t = 0; t + 1 <= upto; ++t) {
        const double lhs = prices.value(t) * rates[t];
        const double rhs = prices.value(t + 1) + dividends.value(t + 1);
        worst = std::max(worst, std::abs(lhs - rhs) / std::abs(prices.value(t)));
    }
    return worst;
}

}  // namespace

TEST_CASE("log OLG: shrinking dividends produce a bubble") {
    const std::size_t T = 400;
    const auto a = TrendedPath::geometric(1.0, 1.0, T);
    const auto D = TrendedPath::geometric(1.0, 0.5, T);
    const auto sol = solve_log_olg(a, D, 0.5);
    for (std::size_t t = 0; t <= T; t += 50) CHECK(sol.prices.value(t) == 0.5);
    CHECK(sol.verdict.cls == BubbleClass::Bubbly);
    CHECK(log_olg_euler_residual(sol, D, 0.5, 120) <= 1e-12);
}

TEST_CASE("log OLG: constant dividends stay fundamental") {
    const std::size_t T = 400;
    const auto a = TrendedPath::geometric(1.0, 1.0, T);
    const auto D = TrendedPath::geometric(0.1, 1.0, T);
    const auto sol = solve_log_olg(a, D, 0.5);
    CHECK(sol.prices.value(7) == 0.5);
    CHECK(sol.verdict.cls == BubbleClass::Fundamental);
    CHECK(log_olg_euler_residual(sol, D, 0.5, 120) <= 1e-12);
}

TEST_CASE("log OLG: growing endowments against slower dividends") {
    const std::size_t T = 400;
    const auto a = TrendedPath::geometric(1.0, 1.02, T);
    const auto D = TrendedPath::geometric(1.0, 1.01, T);
    const auto sol = solve_log_olg(a, D, 0.9);
    CHECK(sol.prices.levels[0] == Approx(0.9).epsilon(1e-15));
    CHECK(sol.prices.growth == 1.02);
    CHECK(sol.verdict.cls == BubbleClass::Bubbly);
    CHECK(log_olg_euler_residual(sol, D, 0.9, 120) <= 1e-12);
}

TEST_CASE("log OLG: verdict matches the dividend-to-endowment rule across families") {
    const std::size_t T = 400;
    struct Family { double Ga, Gd; };
    const std::vector<Family> families{
        {1.00, 0.50}, {1.00, 0.90}, {1.02, 1.01}, {1.05, 1.00}, {1.10, 1.08},
        {1.00, 1.00}, {1.02, 1.02}, {0.99, 0.99}, {1.00, 1.04}, {1.01, 1.05}};
    for (const auto& f : families) {
        const auto a = TrendedPath::geometric(1.0, f.Ga, T);
        const auto D = TrendedPath::geometric(0.3, f.Gd, T);
        const auto sol = solve_log_olg(a, D, 0.6);
        const auto expected =
            f.Gd < f.Ga ? BubbleClass::Bubbly : BubbleClass::Fundamental;
        INFO("Ga=" << f.Ga << " Gd=" << f.Gd);
        CHECK(sol.verdict.cls == expected);
    }
}

TEST_CASE("log OLG: market clearing and validation") {
    const std::size_t T = 50;
    const auto a = TrendedPath::geometric(2.0, 1.03, T);
    const auto D = TrendedPath::geometric(0.2, 1.01, T);
    const auto sol = solve_log_olg(a, D, 0.7);
    for (std::size_t t = 0; t <= T; ++t) {
        const double lhs = sol.young.value(t) + sol.old.value(t);
        const double rhs = a.value(t) + D.value(t);
        CHECK(lhs == Approx(rhs).epsilon(1e-12));
    }
    auto bad = a;
    bad.levels[3] = 0.0;
    CHECK_THROWS_AS(solve_log_olg(bad, D, 0.7), std::domain_error);
    CHECK_THROWS_AS(solve_log_olg(a, D, 1.0), std::invalid_argument);
}

TEST_CASE("linear-utility growth economy equilibrium") {
    const std::size_t T = 400;
    const auto sol = solve_wilson(1.0, 0.0, 1.5, 1.0, 1.2, 0.9, T);
    CHECK(sol.prices.value(0) == Approx(1.0).epsilon(1e-15));
    CHECK(sol.prices.value(1) == Approx(1.5).epsilon(1e-15));
    CHECK(sol.prices.value(2) == Approx(2.25).epsilon(1e-15));
    CHECK(sol.verdict.cls == BubbleClass::Bubbly);
    // Young consume nothing along the equilibrium.
    for (std::size_t t = 0; t <= T; t += 80) CHECK(sol.young.value(t) == 0.0);
    // The rate chain stays above both the growth factor and 1/beta, and
    // declines toward G. Strict ordering is only checkable while the
    // dividend increment is above 1 ulp of G.
    for (std::size_t t = 0; t + 1 < T; ++t) {
        CHECK(sol.rates[t] >= 1.5);
        CHECK(sol.rates[t] > 1.0 / 0.9);
        if (t + 1 < 150)
            CHECK(sol.rates[t] > sol.rates[t + 1]);
        else
            CHECK(sol.rates[t] >= sol.rates[t + 1]);
    }
    CHECK(max_noarb_residual(sol.prices, sol.dividends, sol.rates, 200) <= 1e-10);
}

TEST_CASE("linear-utility economy rejects parameters outside its regime") {
    CHECK_THROWS_AS(solve_wilson(1.0, 0.0, 1.5, 1.0, 1.05, 0.9, 100), SolverError);
    CHECK_THROWS_AS(solve_wilson(1.0, 0.0, 1.1, 1.0, 1.2, 0.9, 100), SolverError);
}

TEST_CASE("constant-price two-agent economy with log utility") {
    // Hand solution of beta/(b+P) = 1/(a-P): P = (beta a - b)/(1 + beta).
    const auto sol = solve_bewley_money(2.0, 1.0, 0.9, CRRAPeriodUtility(1.0));
    CHECK(sol.P == Approx(0.8 / 1.9).epsilon(1e-12));
    CHECK(sol.euler_residual <= 1e-12);
    CHECK(sol.euler_slack >= 0.0);
}

TEST_CASE("constant-price two-agent economy with gamma = 2") {
    // 0.9/(1+P)^2 = 1/(2-P)^2 reduces to sqrt(0.9)(2-P) = 1+P.
    const double root = (2.0 * std::sqrt(0.9) - 1.0) / (1.0 + std::sqrt(0.9));
    const auto sol = solve_bewley_money(2.0, 1.0, 0.9, CRRAPeriodUtility(2.0));
    CHECK(sol.P == Approx(root).epsilon(1e-12));
    CHECK(sol.euler_residual <= 1e-12);
    CHECK(sol.euler_slack >= 0.0);
}

TEST_CASE("constant-price economy refuses the autarky region") {
    CHECK_THROWS_AS(solve_bewley_money(1.01, 1.0, 0.5, CRRAPeriodUtility(1.0)),
                    SolverError);
}

TEST_CASE("growing two-agent economy, gamma = 2") {
    const BewleySpec spec(0.96, 2.0, 1.02, 1.0, 0.5, 0.005);
    REQUIRE(spec.flag_tvc());
    REQUIRE(spec.flag_p_pos());
    REQUIRE(spec.flag_D_small());
    const std::size_t T = 400;
    const auto sol = solve_bewley_growth(spec, T);
    const double m = std::sqrt(0.96 / 1.02);
    CHECK(m == Approx(0.970143).epsilon(1e-6));
    CHECK(sol.p == Approx((m - 0.5) / (1.0 + m)).epsilon(1e-12));
    CHECK(sol.p == Approx(0.238634).margin(5e-7));
    CHECK(sol.fundamental == Approx(0.25).epsilon(1e-12));
    CHECK(sol.prices.value(0) == Approx(0.25 + 0.238634).margin(5e-7));
    CHECK(sol.rich_euler_residual <= 1e-12);
    CHECK(sol.poor_euler_slack >= 0.0);
    CHECK(sol.contraction_factor < 1.0);
    CHECK(sol.verdict.cls == BubbleClass::Bubbly);
    CHECK(max_noarb_residual(sol.prices, sol.dividends, sol.rates, 200) <= 1e-10);

    // Transversality: (beta)^t u'(c_t) P_t contracts like (beta G^(1-gamma))^t;
    // compare same-parity dates so the alternating consumption cancels.
    const CRRAPeriodUtility u(2.0);
    double factor = 1.0;
    double prev = u.u_prime(spec.a - sol.p) * sol.prices.value(0);
    for (std::size_t t = 1; t <= 40; ++t) {
        factor *= spec.beta;
        const double c =
            ((t % 2 == 0) ? (spec.a - sol.p) : (spec.b + sol.p)) * std::pow(spec.G, double(t));
        const double term = factor * u.u_prime(c) * sol.prices.value(t);
        if (t % 2 == 0) {
            CHECK(term < prev);
            prev = term;
        }
    }
}

TEST_CASE("growing two-agent economy clears the goods market") {
    const BewleySpec spec(0.96, 2.0, 1.02, 1.0, 0.5, 0.005);
    const auto sol = solve_bewley_growth(spec, 100);
    // Consumption (a-p)G^t + (b+p)G^t exhausts endowments plus the dividend:
    // the implied endowments are e_r = a G^t + D/(G-1), e_p = b G^t - GD/(G-1).
    for (std::size_t t = 0; t <= 100; t += 10) {
        const double scale = std::pow(spec.G, double(t));
        const double consumption = (spec.a - sol.p) * scale + (spec.b + sol.p) * scale;
        const double e_rich = spec.a * scale + spec.D / (spec.G - 1.0);
        const double e_poor = spec.b * scale - spec.G * spec.D / (spec.G - 1.0);
        CHECK(e_poor > 0.0);
        CHECK(consumption == Approx(e_rich + e_poor + spec.D).epsilon(1e-12));
    }
}

TEST_CASE("growing two-agent economy, log utility") {
    const BewleySpec spec(0.9, 1.0, 1.05, 2.0, 1.0, 0.01);
    const auto sol = solve_bewley_growth(spec, 400);
    // With gamma = 1 the bubble weight reduces to (beta a - b)/(1 + beta).
    CHECK(sol.p == Approx(0.8 / 1.9).epsilon(1e-12));
    CHECK(sol.fundamental == Approx(0.2).epsilon(1e-12));
    CHECK(sol.verdict.cls == BubbleClass::Bubbly);
    CHECK(sol.rich_euler_residual <= 1e-12);
    CHECK(sol.poor_euler_slack >= 0.0);
}

TEST_CASE("growing two-agent economy flag violations") {
    // b on the bubble-weight boundary (zero weight needs strict inequality).
    const double m = std::sqrt(0.96 / 1.02);
    CHECK_THROWS_WITH(
        solve_bewley_growth(BewleySpec(0.96, 2.0, 1.02, 1.0, m * (1.0 + 1e-9), 0.001), 100),
        Catch::Matchers::ContainsSubstring("flag_p_pos"));
    // Dividend too large for the poor agent's implied endowment.
    CHECK_THROWS_WITH(solve_bewley_growth(BewleySpec(0.96, 2.0, 1.02, 1.0, 0.5, 0.2), 100),
                      Catch::Matchers::ContainsSubstring("flag_D_small"));
    // Explosive discounted growth.
    CHECK_THROWS_WITH(solve_bewley_growth(BewleySpec(0.99, 0.5, 1.2, 1.0, 0.5, 0.005), 100),
                      Catch::Matchers::ContainsSubstring("flag_tvc"));
    // gamma = 0 rejected outright.
    CHECK_THROWS_AS(solve_bewley_growth(BewleySpec(0.9, 0.0, 1.05, 1.0, 0.5, 0.005), 100),
                    SolverError);
}
