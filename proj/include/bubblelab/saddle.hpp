#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "bubblelab/core.hpp"
#include "bubblelab/errors.hpp"
#include "bubblelab/rootfind.hpp"

namespace bubblelab {

// ---------------------------------------------------------------------------
// Detrended autonomous price dynamics.
//
// The Euler equation U_y(y_t, z_{t+1}) P_t = U_z(y_t, z_{t+1}) (P_{t+1} +
// D_{t+1}) becomes autonomous in the state xi = (xi1, xi2) where xi1 is the
// detrended price and xi2 = (Gd/G)^t:
//
//   Fundamental variant (price detrended by Gd, xi1 = P_t / Gd^t):
//     Phi1(xi, eta) = Gd (eta1 + D) U_z - xi1 U_y = 0
//     evaluated at (y, z) = (a - xi1 xi2, G b + Gd (eta1 + D) xi2)
//
//   Bubbly variant (price detrended by G, xi1 = P_t / G^t):
//     Phi1(xi, eta) = G (eta1 + D eta2) U_z - xi1 U_y = 0
//     evaluated at (y, z) = (a - xi1, G (b + eta1 + D eta2))
//
// and in both variants eta2 = (Gd/G) xi2 exactly.
// ---------------------------------------------------------------------------

enum class Variant { Fundamental, Bubbly };

struct State {
    double xi1;
    double xi2;
};

struct DetrendedSystem {
    Variant variant;
    GrowthEconomy econ;
    UtilityKernel kernel;

    double trend() const { return variant == Variant::Fundamental ? econ.Gd : econ.G; }
    double xi2_decay() const { return econ.Gd / econ.G; }
};

struct SteadyStateReport {
    bool exists = false;
    bool boundary = false;  // bubbly weight exactly zero (b/a = w_b*)
    double xi1_star = std::numeric_limits<double>::quiet_NaN();
    double lambda1 = std::numeric_limits<double>::quiet_NaN();
    double lambda2 = std::numeric_limits<double>::quiet_NaN();
    double slope = std::numeric_limits<double>::quiet_NaN();  // d xi1 / d xi2 along the stable direction
    // Bubbly variant: scalars d, n of the implicit-function step, plus the
    // contraction at the degenerate steady state xi1 = 0.
    double d_value = std::numeric_limits<double>::quiet_NaN();
    double n_value = std::numeric_limits<double>::quiet_NaN();
    double corner_lambda1 = std::numeric_limits<double>::quiet_NaN();
    bool saddle = false;
    bool singular_d = false;
    bool resonant = false;
};

// ---------------------------------------------------------------------------
// Threshold income ratios: the unique w with (U_y/U_z)(1, G w) = target.
// The marginal-rate ratio is strictly increasing in w, so an expanding
// bracket plus bisection pins the root to machine accuracy.
// ---------------------------------------------------------------------------

inline double threshold_w(const UtilityKernel& kernel, double G, double target) {
    if (!(target > 0.0))
        throw std::invalid_argument("threshold_w: target must be positive");
    const auto f = [&](double w) { return mrs_ratio(kernel, 1.0, G * w) - target; };

    double lo = 1e-12, hi = 1.0;
    int tries = 0;
    while (f(lo) > 0.0 && tries++ < 64) lo *= 1e-3;
    if (f(lo) > 0.0)
        throw SolverError("threshold_w: threshold unattainable (ratio stays above target)");
    tries = 0;
    while (f(hi) < 0.0 && tries++ < 64) hi *= 2.0;
    if (f(hi) < 0.0)
        throw SolverError("threshold_w: threshold unattainable (ratio stays below target)");

    const BisectResult root = bisect(f, lo, hi);
    if (std::abs(root.residual) > 1e-12 * std::max(1.0, target))
        throw SolverError("threshold_w: bisection residual above tolerance");
    return root.root;
}

// ---------------------------------------------------------------------------
// Steady states.
//
// Fundamental variant: xi2* = 0 and
//   xi1* = Gd D U_z / (U_y - Gd U_z) at (a, G b),
// which exists exactly when Gd < (U_y/U_z)(a, G b).
//
// Bubbly variant: xi2* = 0 and either xi1* = 0 or
//   (U_y/U_z)(a - xi1*, G (b + xi1*)) = G,
// equivalently xi1* = (w_b* a - b) / (1 + w_b*), positive iff b/a < w_b*.
// ---------------------------------------------------------------------------

inline SteadyStateReport steady_state(const DetrendedSystem& system) {
    const GrowthEconomy& e = system.econ;
    SteadyStateReport report;
    // The marginal-rate ratio vanishes as old consumption goes to zero, so
    // b = 0 admits no fundamental steady state and gives a fully
    // contracting degenerate corner.
    const auto corner_contraction = [&]() {
        return e.b > 0.0
                   ? mrs_ratio(system.kernel, e.a, e.G * e.b) / e.G
                   : 0.0;
    };
    if (system.variant == Variant::Fundamental) {
        if (e.b == 0.0) return report;
        const UtilityValues v = utility_eval(system.kernel, e.a, e.G * e.b);
        const double gap = v.U_y - e.Gd * v.U_z;
        report.exists = gap > 0.0;
        if (report.exists) report.xi1_star = e.Gd * e.D * v.U_z / gap;
        return report;
    }

    const double wb = threshold_w(system.kernel, e.G, e.G);
    const double xi1 = (wb * e.a - e.b) / (1.0 + wb);
    report.exists = xi1 > 0.0;
    report.boundary = xi1 == 0.0;
    report.corner_lambda1 = corner_contraction();
    if (!report.exists) return report;
    report.xi1_star = xi1;

    const UtilityValues v = utility_eval(system.kernel, e.a - xi1, e.G * (e.b + xi1));
    report.d_value = e.G * (v.U_z + e.G * xi1 * v.U_zz - xi1 * v.U_yz);
    report.n_value = e.G * xi1 * v.U_yz + v.U_y - xi1 * v.U_yy;
    report.singular_d = std::abs(report.d_value) <= 1e-10 * std::abs(report.n_value);
    if (!report.singular_d) {
        const double ratio = report.n_value / report.d_value;
        report.resonant = std::abs(std::abs(ratio) - 1.0) <= 1e-8;
    }
    return report;
}

// ---------------------------------------------------------------------------
// Linearization at the steady state. Both one-step maps have an upper
// triangular Jacobian, so the eigenvalues are analytic:
//
//   Fundamental:  lambda1 = U_y / (Gd U_z) at (a, G b),   lambda2 = Gd/G,
//                 off-diagonal c = -(xi1*^2 U_yy - 2 xi1* Gd (xi1*+D) U_yz
//                                   + (Gd (xi1*+D))^2 U_zz) / (Gd U_z)
//   Bubbly:       lambda1 = n/d,  lambda2 = Gd/G,  off-diagonal -D Gd / G
//
// and the stable-eigenvector slope is c / (lambda2 - lambda1).
// ---------------------------------------------------------------------------

inline SteadyStateReport linearize(const DetrendedSystem& system,
                                   SteadyStateReport report) {
    const GrowthEconomy& e = system.econ;
    if (!report.exists)
        throw SolverError("linearize: steady state does not exist");
    report.lambda2 = e.Gd / e.G;

    double off_diagonal;
    if (system.variant == Variant::Fundamental) {
        const UtilityValues v = utility_eval(system.kernel, e.a, e.G * e.b);
        report.lambda1 = v.U_y / (e.Gd * v.U_z);
        const double x = report.xi1_star;
        const double gd_pd = e.Gd * (x + e.D);
        off_diagonal =
            -(x * x * v.U_yy - 2.0 * x * gd_pd * v.U_yz + gd_pd * gd_pd * v.U_zz) /
            (e.Gd * v.U_z);
    } else {
        if (report.singular_d)
            throw SolverError("linearize: d = 0, implicit function theorem inapplicable");
        report.lambda1 = report.n_value / report.d_value;
        off_diagonal = -e.D * e.Gd / e.G;
    }
    report.slope = off_diagonal / (report.lambda2 - report.lambda1);
    report.saddle = std::abs(report.lambda1) > 1.0 && report.lambda2 > 0.0 &&
                    report.lambda2 < 1.0;
    return report;
}

// ---------------------------------------------------------------------------
// One forward step of the implicit system: eta2 is exact, eta1 is the
// bracketed root of Phi1 in the next price, refined to machine-width
// brackets so downstream Euler residuals sit at rounding level.
// ---------------------------------------------------------------------------

inline State forward_step(const DetrendedSystem& system, const State& xi) {
    const GrowthEconomy& e = system.econ;
    const double eta2 = system.xi2_decay() * xi.xi2;

    const bool fundamental = system.variant == Variant::Fundamental;
    const double y = fundamental ? e.a - xi.xi1 * xi.xi2 : e.a - xi.xi1;
    if (!(y > 0.0)) throw SolverError("forward_step: path infeasible (young consumption)");

    const auto phi1 = [&](double eta1) {
        double z, payout;
        if (fundamental) {
            payout = e.Gd * (eta1 + e.D);
            z = e.G * e.b + payout * xi.xi2;
        } else {
            payout = e.G * (eta1 + e.D * eta2);
            z = e.G * (e.b + eta1 + e.D * eta2);
        }
        if (!(z > 0.0)) return -xi.xi1 * 1e300;  // below any admissible payout
        const UtilityValues v = utility_eval(system.kernel, y, z);
        return payout * v.U_z - xi.xi1 * v.U_y;
    };

    // A positive Phi1 at eta1 = 0 puts the root at a negative next price;
    // otherwise the payout term dominates for large eta1 and upward
    // expansion finds the crossing.
    if (phi1(0.0) > 0.0)
        throw SolverError("forward_step: path infeasible (price would turn negative)");
    const double scale = std::max({1.0, xi.xi1, e.a});
    BisectResult root = bisect_expanding(phi1, 0.0, scale, 1e12 * scale);

    // Residual check relative to the equation's own scale.
    {
        double z, payout;
        if (fundamental) {
            payout = e.Gd * (root.root + e.D);
            z = e.G * e.b + payout * xi.xi2;
        } else {
            payout = e.G * (root.root + e.D * eta2);
            z = e.G * (e.b + root.root + e.D * eta2);
        }
        const UtilityValues v = utility_eval(system.kernel, y, z);
        const double mag = std::max(std::abs(payout * v.U_z), std::abs(xi.xi1 * v.U_y));
        if (mag > 0.0 && std::abs(root.residual) > 1e-12 * mag)
            throw ResidualError("forward_step: Euler residual above 1e-12 relative");
    }
    return State{root.root, eta2};
}

// ---------------------------------------------------------------------------
// Backward extension: given next-period price, dividend and old endowment,
// today's price is the unique root of
//
//   g(P) = (U_z/U_y)(a_t - P, b' + P' + D') (P' + D') - P
//
// on (0, a_t); g is strictly decreasing, so bisection applies.
// ---------------------------------------------------------------------------

inline double extend_backward(const UtilityKernel& kernel, double a_t, double b_next,
                              double D_next, double P_next) {
    if (!(P_next > 0.0))
        throw std::invalid_argument("extend_backward: next price must be positive");
    if (!(a_t > 0.0))
        throw std::invalid_argument("extend_backward: young endowment must be positive");
    const double payout = P_next + D_next;
    const double z = b_next + payout;
    const auto g = [&](double P) {
        return payout / mrs_ratio(kernel, a_t - P, z) - P;
    };
    const double eps = 1e-15 * a_t;
    const BisectResult root = bisect(g, eps, a_t - eps);
    if (std::abs(root.residual) > 1e-12 * a_t)
        throw ResidualError("extend_backward: residual above 1e-12 of endowment scale");
    return root.root;
}

// ---------------------------------------------------------------------------
// Saddle-path shooting.
//
// The saddle has one unstable direction, so the unique converging choice of
// xi1(t0) is bracketed by the escape direction of the forward orbit: starts
// above the stable manifold blow up through the unstable eigenvalue, starts
// below crash toward zero. Bisection on the initial price with the escape
// side as the predicate converges to the manifold, after which the orbit is
// extended backwards to date 0 through the exact Euler equation.
// ---------------------------------------------------------------------------

struct StablePathOptions {
    std::optional<int> t0;          // override for the linearization start date
    std::optional<double> tube_radius;
    int max_shoot_iter = 200;
};

struct StablePathResult {
    std::vector<State> states;  // xi(t), t = 0..horizon
    TrendedPath prices;         // xi1(t) against the variant trend
    TrendedPath dividends;      // D against Gd
    int t0 = 0;
    SteadyStateReport report;
    bool uniqueness_not_guaranteed = false;  // bubbly variant with d < 0
};

namespace detail {

// Default linearization start: the first date where xi2 has decayed well
// inside the neighborhood in which the linear slope approximates the
// manifold.
inline int default_t0(const DetrendedSystem& system, double xi1_star) {
    const GrowthEconomy& e = system.econ;
    const double threshold = 0.05 * std::min(1.0, xi1_star / std::max(e.D, 1.0));
    const double decay = system.xi2_decay();
    int t0 = 0;
    double xi2 = 1.0;
    while (xi2 > threshold && t0 < 100000) {
        xi2 *= decay;
        ++t0;
    }
    return t0;
}

// Departure side of the orbit started at xi: +1 above / -1 below, decided
// by tube escape (or infeasibility) when it happens and otherwise by the
// final deviation, whose sign flips exactly at the stable manifold. A
// survive-only predicate would leave a whole interval of accepted starts
// whose width the unstable eigenvalue turns into visible end-of-horizon
// drift.
inline int escape_side(const DetrendedSystem& system, State xi, double xi1_star,
                       double tube, int steps) {
    double dev = xi.xi1 - xi1_star;
    for (int s = 0; s < steps; ++s) {
        dev = xi.xi1 - xi1_star;
        if (std::abs(dev) > tube) return dev > 0.0 ? +1 : -1;
        try {
            xi = forward_step(system, xi);
        } catch (const SolverError&) {
            return dev >= 0.0 ? +1 : -1;
        }
    }
    dev = xi.xi1 - xi1_star;
    if (dev == 0.0) return 0;
    return dev > 0.0 ? +1 : -1;
}

}  // namespace detail

inline StablePathResult stable_path(const DetrendedSystem& system, std::size_t horizon,
                                    const StablePathOptions& options = {}) {
    const GrowthEconomy& e = system.econ;
    StablePathResult out;
    out.report = linearize(system, steady_state(system));
    if (!out.report.saddle)
        throw SolverError("stable_path: steady state is not a saddle");
    if (system.variant == Variant::Bubbly && out.report.d_value < 0.0)
        out.uniqueness_not_guaranteed = true;

    const double xi1_star = out.report.xi1_star;
    double tube = options.tube_radius.value_or(0.5 * xi1_star);
    if (system.variant == Variant::Bubbly) tube = std::max(tube, 1e-3 * e.a);

    int t0 = options.t0.value_or(detail::default_t0(system, xi1_star));
    if (!options.t0) {
        // Shooting cannot hold an orbit inside the tube once one ulp of
        // start error has been amplified past the tube radius, so the
        // shooting date moves out (deeper into the linearization
        // neighborhood) and the exact backward extension covers the longer
        // early segment instead.
        const double ulp = std::numeric_limits<double>::epsilon() *
                           std::max(std::abs(xi1_star), tube);
        const double growth = std::log(std::abs(out.report.lambda1));
        if (growth > 0.0) {
            const int max_window = std::max(
                4, int(std::floor(std::log(tube / (4.0 * ulp)) / growth)));
            if (int(horizon) - t0 > max_window) t0 = int(horizon) - max_window;
        }
    }
    if (t0 < 0 || std::size_t(t0) >= horizon)
        throw std::invalid_argument("stable_path: t0 must lie inside the horizon");
    out.t0 = t0;

    const double decay = system.xi2_decay();
    double xi2_t0 = 1.0;
    for (int s = 0; s < t0; ++s) xi2_t0 *= decay;

    const int tube_steps = int(horizon) - t0;
    double xi1_t0;
    if (xi2_t0 == 0.0) {
        xi1_t0 = xi1_star;  // degenerate start: the orbit is the steady state
    } else {
        const double guess = xi1_star + out.report.slope * xi2_t0;
        double lo = std::max(guess - 0.5 * tube, 0.0);
        double hi = guess + 0.5 * tube;
        int expand = 0;
        while (detail::escape_side(system, {lo, xi2_t0}, xi1_star, tube, tube_steps) > 0 &&
               expand++ < 60)
            lo = std::max(lo - 0.5 * tube, 0.0);
        expand = 0;
        while (detail::escape_side(system, {hi, xi2_t0}, xi1_star, tube, tube_steps) < 0 &&
               expand++ < 60)
            hi += 0.5 * tube;
        int side_lo = detail::escape_side(system, {lo, xi2_t0}, xi1_star, tube, tube_steps);
        int side_hi = detail::escape_side(system, {hi, xi2_t0}, xi1_star, tube, tube_steps);
        if (side_lo > 0 || side_hi < 0)
            throw SolverError("stable_path: stable manifold not found in bracket");

        for (int it = 0; it < options.max_shoot_iter; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            const int side =
                detail::escape_side(system, {mid, xi2_t0}, xi1_star, tube, tube_steps);
            if (side == 0) {
                lo = hi = mid;  // orbit survives the whole window
                break;
            }
            (side < 0 ? lo : hi) = mid;
        }
        xi1_t0 = 0.5 * (lo + hi);
    }

    // Forward orbit from t0.
    out.states.assign(horizon + 1, State{xi1_star, 0.0});
    out.states[std::size_t(t0)] = State{xi1_t0, xi2_t0};
    try {
        for (std::size_t t = std::size_t(t0); t < horizon; ++t)
            out.states[t + 1] = forward_step(system, out.states[t]);
    } catch (const SolverError&) {
        throw SolverError(
            "stable_path: orbit left the feasible region before the horizon; "
            "the unstable eigenvalue exceeds what double precision can track "
            "over this window");
    }

    // Backward extension to date 0 through the exact Euler equation, in
    // level terms (magnitudes stay modest at these dates).
    const double trend = system.trend();
    if (t0 > 0) {
        double P_next = xi1_t0 * std::pow(trend, double(t0));
        if (!std::isfinite(P_next) || !std::isfinite(e.a * std::pow(e.G, double(t0))))
            throw SolverError("stable_path: level quantities overflow at t0; lower t0");
        for (int t = t0 - 1; t >= 0; --t) {
            const double a_t = e.a * std::pow(e.G, double(t));
            const double b_next = e.b * std::pow(e.G, double(t + 1));
            const double D_next = e.D * std::pow(e.Gd, double(t + 1));
            const double P_t = extend_backward(system.kernel, a_t, b_next, D_next, P_next);
            out.states[std::size_t(t)] =
                State{P_t / std::pow(trend, double(t)), std::pow(decay, double(t))};
            P_next = P_t;
        }
    }
    // xi2 column rebuilt exactly as the geometric recursion.
    double xi2 = 1.0;
    for (std::size_t t = 0; t <= horizon; ++t) {
        out.states[t].xi2 = xi2;
        xi2 *= decay;
    }

    out.prices = TrendedPath(trend, std::vector<double>(horizon + 1));
    for (std::size_t t = 0; t <= horizon; ++t) out.prices.levels[t] = out.states[t].xi1;
    out.dividends = TrendedPath::geometric(e.D, e.Gd, horizon);
    return out;
}

// ---------------------------------------------------------------------------
// Long-run regime classification by the old-to-young income ratio w = b/a:
// below w_f* no fundamental equilibrium exists (every equilibrium is
// bubbly), between w_f* and w_b* fundamental and bubbly equilibria coexist,
// above w_b* only the fundamental limit remains.
// ---------------------------------------------------------------------------

enum class Regime { BubbleNecessity, Coexistence, FundamentalOnly, KnifeEdge };

inline const char* to_string(Regime r) {
    switch (r) {
        case Regime::BubbleNecessity: return "bubble_necessity";
        case Regime::Coexistence: return "coexistence";
        case Regime::FundamentalOnly: return "fundamental_only";
        default: return "knife_edge";
    }
}

struct RegimeReport {
    double w = 0.0;
    double w_f_star = 0.0;
    double w_b_star = 0.0;
    Regime regime = Regime::KnifeEdge;
    bool knife_edge = false;
    bool fundamental_ss_exists = false;  // Gd < (U_y/U_z)(a, G b)
    // Stationary-economy comparison: the autarky rate against the dividend
    // growth factor and 1. Necessity needs R < Gd < 1 when G = 1.
    double autarky_rate = 0.0;
    bool stationary_necessity = false;
};

inline RegimeReport classify_regime(const GrowthEconomy& econ,
                                    const UtilityKernel& kernel) {
    RegimeReport report;
    report.w = econ.w();
    report.w_f_star = threshold_w(kernel, econ.G, econ.Gd);
    report.w_b_star = threshold_w(kernel, econ.G, econ.G);
    // The marginal-rate ratio vanishes as old consumption goes to zero, so a
    // zero old endowment rules the fundamental steady state out directly.
    report.fundamental_ss_exists =
        econ.b > 0.0 && econ.Gd < mrs_ratio(kernel, econ.a, econ.G * econ.b);
    report.autarky_rate = econ.b > 0.0 ? mrs_ratio(kernel, econ.a, econ.b) : 0.0;
    report.stationary_necessity =
        econ.G == 1.0 && report.autarky_rate < econ.Gd && econ.Gd < 1.0;

    const double tol = 1e-10;
    if (std::abs(report.w - report.w_f_star) <= tol ||
        std::abs(report.w - report.w_b_star) <= tol) {
        report.knife_edge = true;
        report.regime = Regime::KnifeEdge;
        return report;
    }
    if (report.w < report.w_f_star)
        report.regime = Regime::BubbleNecessity;
    else if (report.w < report.w_b_star)
        report.regime = Regime::Coexistence;
    else
        report.regime = Regime::FundamentalOnly;
    return report;
}

}  // namespace bubblelab
