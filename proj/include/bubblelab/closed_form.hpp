#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "bubblelab/core.hpp"
#include "bubblelab/errors.hpp"
#include "bubblelab/pricing.hpp"
#include "bubblelab/rootfind.hpp"

namespace bubblelab {

// Exact equilibrium constructors for the fully solvable economies. They are
// deliverables in their own right and double as oracles for the generic
// saddle-path machinery. Finite-horizon verdicts always pass through
// detect_bubble so closed-form and shot paths are judged by one code path.

// ---------------------------------------------------------------------------
// Log-utility OLG: the young save the fraction beta of their endowment, so
// P_t = beta * a_t regardless of the dividend stream, and the asset is
// bubbly exactly when sum D_t / a_t converges. Arbitrary positive endowment
// and non-negative dividend sequences are accepted.
// ---------------------------------------------------------------------------

struct LogOlgSolution {
    TrendedPath prices;        // beta * a_t, trend of the endowments
    TrendedPath young;         // (1-beta) a_t
    TrendedPath old;           // beta a_t + D_t, expressed in the endowment trend
    std::vector<double> rates; // R_t implied by the Euler equation
    BubbleVerdict verdict;
};

inline LogOlgSolution solve_log_olg(const TrendedPath& endowments,
                                    const TrendedPath& dividends, double beta,
                                    double margin = kDetectorMargin) {
    if (!(beta > 0.0 && beta < 1.0))
        throw std::invalid_argument("solve_log_olg: beta must be in (0,1)");
    const std::size_t T = endowments.horizon();
    if (dividends.horizon() != T)
        throw std::invalid_argument("solve_log_olg: horizons differ");
    for (double a : endowments.levels)
        if (!(a > 0.0)) throw std::domain_error("solve_log_olg: endowments must be positive");
    for (double d : dividends.levels)
        if (d < 0.0) throw std::domain_error("solve_log_olg: dividends must be non-negative");

    LogOlgSolution sol;
    sol.prices = TrendedPath(endowments.growth, endowments.levels);
    sol.young = TrendedPath(endowments.growth, endowments.levels);
    sol.old = TrendedPath(endowments.growth, endowments.levels);
    const double ratio = dividends.growth / endowments.growth;
    double scale = 1.0;
    for (std::size_t t = 0; t <= T; ++t) {
        sol.prices.levels[t] = beta * endowments.levels[t];
        sol.young.levels[t] = (1.0 - beta) * endowments.levels[t];
        sol.old.levels[t] =
            beta * endowments.levels[t] + dividends.levels[t] * scale;
        scale *= ratio;
    }
    sol.rates.resize(T);
    for (std::size_t t = 0; t < T; ++t) {
        // R_t = (P_{t+1} + D_{t+1}) / P_t in detrended terms.
        sol.rates[t] = sol.old.levels[t + 1] / sol.prices.levels[t] * endowments.growth;
    }
    sol.verdict = detect_bubble(sol.prices, dividends, margin);
    return sol;
}

// ---------------------------------------------------------------------------
// Linear-utility OLG economy: under 1/beta < Gd < G the young are priced out
// of the asset entirely, P_t = a G^t, and the equilibrium is bubbly. Outside
// that regime the construction is invalid and refused.
// ---------------------------------------------------------------------------

struct WilsonSolution {
    TrendedPath prices;        // a G^t
    TrendedPath dividends;     // D Gd^t
    std::vector<double> rates; // R_t = (a G^{t+1} + D Gd^{t+1}) / (a G^t)
    TrendedPath young;         // identically zero
    TrendedPath old;           // (a+b) G^t + D Gd^t in the G trend
    BubbleVerdict verdict;
};

inline WilsonSolution solve_wilson(double a, double b, double G, double D, double Gd,
                                   double beta, std::size_t horizon,
                                   double margin = kDetectorMargin) {
    if (!(a > 0.0) || !(b >= 0.0) || !(D > 0.0))
        throw std::invalid_argument("solve_wilson: need a > 0, b >= 0, D > 0");
    if (!(beta > 0.0 && beta < 1.0))
        throw std::invalid_argument("solve_wilson: beta must be in (0,1)");
    if (!(1.0 / beta < Gd && Gd < G))
        throw SolverError("solve_wilson: outside regime, need 1/beta < Gd < G");

    WilsonSolution sol;
    sol.prices = TrendedPath::geometric(a, G, horizon);
    sol.dividends = TrendedPath::geometric(D, Gd, horizon);
    sol.young = TrendedPath::geometric(0.0, G, horizon);
    sol.old = TrendedPath(G, std::vector<double>(horizon + 1));
    sol.rates.resize(horizon);
    const double ratio = Gd / G;
    double scale = 1.0;  // (Gd/G)^t
    for (std::size_t t = 0; t <= horizon; ++t) {
        sol.old.levels[t] = (a + b) + D * scale;
        if (t < horizon) sol.rates[t] = G + (D / a) * Gd * scale;
        scale *= ratio;
    }
    sol.verdict = detect_bubble(sol.prices, sol.dividends, margin);
    return sol;
}

// ---------------------------------------------------------------------------
// Two-agent economy with alternating endowments and a fixed asset supply.
//
// Money economy (constant price): the equilibrium price solves
//   g(P) = beta u'(b+P) - u'(a-P) = 0
// on (0, a); g is strictly decreasing, so bisection is exact. The economy is
// valid only when autarky fails, i.e. u'(a) < beta u'(b).
// ---------------------------------------------------------------------------

struct BewleyMoneySolution {
    double P = 0.0;
    double rich_consumption = 0.0;  // a - P
    double poor_consumption = 0.0;  // b + P
    double euler_residual = 0.0;    // |u'(a-P) - beta u'(b+P)|
    double euler_slack = 0.0;       // u'(b+P) - beta u'(a-P), >= 0
};

template <class MarginalUtility>
BewleyMoneySolution solve_bewley_money_with(double a, double b, double beta,
                                            MarginalUtility&& u_prime) {
    if (!(a > b && b >= 0.0))
        throw std::invalid_argument("solve_bewley_money: need a > b >= 0");
    if (!(beta > 0.0 && beta < 1.0))
        throw std::invalid_argument("solve_bewley_money: beta must be in (0,1)");
    if (!(u_prime(a) < beta * u_prime(b)))
        throw SolverError(
            "solve_bewley_money: u'(a) >= beta u'(b); autarky is the equilibrium "
            "candidate and the constant-price construction does not apply");

    const double eps = 1e-12 * a;
    const auto g = [&](double P) { return beta * u_prime(b + P) - u_prime(a - P); };
    const BisectResult root = bisect(g, eps, a - eps);

    BewleyMoneySolution sol;
    sol.P = root.root;
    sol.rich_consumption = a - sol.P;
    sol.poor_consumption = b + sol.P;
    sol.euler_residual =
        std::abs(u_prime(sol.rich_consumption) - beta * u_prime(sol.poor_consumption));
    sol.euler_slack =
        u_prime(sol.poor_consumption) - beta * u_prime(sol.rich_consumption);
    return sol;
}

inline BewleyMoneySolution solve_bewley_money(double a, double b, double beta,
                                              const CRRAPeriodUtility& u) {
    return solve_bewley_money_with(a, b, beta,
                                   [&u](double c) { return u.u_prime(c); });
}

// ---------------------------------------------------------------------------
// Growing two-agent economy. With CRRA gamma, discount beta, growth G > 1
// and constant dividend D, the conjectured constant-rate equilibrium carries
//
//   m = (beta G^(1-gamma))^(1/gamma)
//   p = (a m - b) / (1 + m)
//   P_t = D/(G-1) + p G^t,     R = G,
//
// valid when the transversality contraction beta G^(1-gamma) < 1, the bubble
// weight is positive (beta G^(1-gamma) > (b/a)^gamma), and the dividend is
// small enough that the poor agent's implied endowment stays positive
// (G D/(G-1) < b).
// ---------------------------------------------------------------------------

struct BewleySpec {
    double beta;   // discount factor in (0,1)
    double gamma;  // CRRA coefficient, >= 0 at the type level
    double G;      // growth factor
    double a;      // rich endowment level
    double b;      // poor endowment level, a > b >= 0
    double D;      // dividend level, >= 0

    BewleySpec(double beta_, double gamma_, double G_, double a_, double b_, double D_)
        : beta(beta_), gamma(gamma_), G(G_), a(a_), b(b_), D(D_) {
        if (!(beta > 0.0 && beta < 1.0))
            throw std::invalid_argument("BewleySpec: beta must be in (0,1)");
        if (!(gamma >= 0.0)) throw std::invalid_argument("BewleySpec: gamma must be >= 0");
        if (!(G > 0.0)) throw std::invalid_argument("BewleySpec: G must be positive");
        if (!(a > b && b >= 0.0)) throw std::invalid_argument("BewleySpec: need a > b >= 0");
        if (!(D >= 0.0)) throw std::invalid_argument("BewleySpec: D must be non-negative");
    }

    double contraction() const { return beta * std::pow(G, 1.0 - gamma); }
    bool flag_tvc() const { return contraction() < 1.0; }
    bool flag_p_pos() const { return contraction() > std::pow(b / a, gamma); }
    bool flag_D_small() const { return G > 1.0 && D > 0.0 && G * D / (G - 1.0) < b; }
};

struct BewleyGrowthSolution {
    double p = 0.0;                 // detrended bubble weight
    double fundamental = 0.0;       // D / (G - 1)
    TrendedPath prices;             // levels D/((G-1) G^t) + p against trend G
    TrendedPath dividends;          // constant D
    std::vector<double> rates;      // identically G
    double rich_euler_residual = 0.0;
    double poor_euler_slack = 0.0;
    double contraction_factor = 0.0;  // beta G^(1-gamma)
    BubbleVerdict verdict;
};

inline BewleyGrowthSolution solve_bewley_growth(const BewleySpec& spec,
                                                std::size_t horizon,
                                                double margin = kDetectorMargin) {
    if (spec.gamma == 0.0)
        throw SolverError("solve_bewley_growth: gamma = 0 is not supported "
                          "(the bubble-weight exponent 1/gamma is undefined)");
    if (!(spec.G > 1.0))
        throw SolverError("solve_bewley_growth: requires G > 1");
    if (!(spec.D > 0.0))
        throw SolverError("solve_bewley_growth: requires D > 0");
    if (!spec.flag_tvc())
        throw SolverError("solve_bewley_growth: flag_tvc violated "
                          "(beta G^(1-gamma) >= 1)");
    if (!spec.flag_p_pos())
        throw SolverError("solve_bewley_growth: flag_p_pos violated "
                          "(beta G^(1-gamma) <= (b/a)^gamma)");
    if (!spec.flag_D_small())
        throw SolverError("solve_bewley_growth: flag_D_small violated "
                          "(G D/(G-1) >= b)");

    BewleyGrowthSolution sol;
    const double m = std::pow(spec.contraction(), 1.0 / spec.gamma);
    sol.p = (spec.a * m - spec.b) / (1.0 + m);
    sol.fundamental = spec.D / (spec.G - 1.0);
    sol.contraction_factor = spec.contraction();

    sol.prices = TrendedPath(spec.G, std::vector<double>(horizon + 1));
    sol.dividends = TrendedPath::geometric(spec.D, 1.0, horizon);
    double inv_growth = 1.0;  // G^{-t}
    for (std::size_t t = 0; t <= horizon; ++t) {
        sol.prices.levels[t] = sol.fundamental * inv_growth + sol.p;
        inv_growth /= spec.G;
    }
    sol.rates.assign(horizon, spec.G);

    const double ratio_rich = (spec.b + sol.p) / (spec.a - sol.p) * spec.G;
    const double ratio_poor = (spec.a - sol.p) / (spec.b + sol.p) * spec.G;
    sol.rich_euler_residual =
        std::abs(spec.beta * spec.G * std::pow(ratio_rich, -spec.gamma) - 1.0);
    sol.poor_euler_slack =
        1.0 - spec.beta * spec.G * std::pow(ratio_poor, -spec.gamma);
    if (sol.rich_euler_residual > 1e-12)
        throw ResidualError("solve_bewley_growth: rich Euler residual above 1e-12");
    if (sol.poor_euler_slack < -1e-12)
        throw ResidualError("solve_bewley_growth: poor Euler inequality violated");

    sol.verdict = detect_bubble(sol.prices, sol.dividends, margin);
    return sol;
}

}  // namespace bubblelab
