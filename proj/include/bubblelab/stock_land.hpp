#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "bubblelab/core.hpp"
#include "bubblelab/errors.hpp"
#include "bubblelab/pricing.hpp"
#include "bubblelab/series.hpp"

namespace bubblelab {

// ---------------------------------------------------------------------------
// CES production with exact marginal products:
//
//   F(K,L) = (alpha K^r + (1-alpha) L^r)^(1/r),  r = 1 - 1/sigma
//   F_K    = (alpha K^r + (1-alpha) L^r)^(1/(sigma-1)) alpha K^(-1/sigma)
//   F_L    = (alpha K^r + (1-alpha) L^r)^(1/(sigma-1)) (1-alpha) L^(-1/sigma)
//
// and factor income ratio F_K K / (F_L L) = alpha/(1-alpha) (K/L)^(1-1/sigma).
// sigma = 1 dispatches to Cobb-Douglas K^alpha L^(1-alpha).
// ---------------------------------------------------------------------------

struct CesValues {
    double F;
    double F_K;
    double F_L;
    double factor_ratio;  // F_K K / (F_L L)
};

inline CesValues ces_eval(double alpha, double sigma, double K, double L) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("ces_eval: alpha must be in (0,1)");
    if (!(sigma > 0.0)) throw std::invalid_argument("ces_eval: sigma must be positive");
    if (!(K > 0.0 && L > 0.0))
        throw std::domain_error("ces_eval: inputs must be positive");

    CesValues v{};
    if (sigma == 1.0) {
        v.F = std::pow(K, alpha) * std::pow(L, 1.0 - alpha);
        v.F_K = alpha * v.F / K;
        v.F_L = (1.0 - alpha) * v.F / L;
        v.factor_ratio = alpha / (1.0 - alpha);
        return v;
    }
    const double r = 1.0 - 1.0 / sigma;
    const double A = alpha * std::pow(K, r) + (1.0 - alpha) * std::pow(L, r);
    v.F = std::pow(A, 1.0 / r);
    const double scale = v.F / A;  // A^(1/r - 1) = A^(1/(sigma-1)) adjusted
    v.F_K = alpha * std::pow(K, r - 1.0) * scale;
    v.F_L = (1.0 - alpha) * std::pow(L, r - 1.0) * scale;
    v.factor_ratio = alpha / (1.0 - alpha) * std::pow(K / L, r);
    return v;
}

// ---------------------------------------------------------------------------
// Two-sector economy: a capital-intensive sector paying rents into stock
// shares and a land sector paying rents per unit of land, with exogenous
// geometric factor paths.
// ---------------------------------------------------------------------------

struct TwoSectorEconomy {
    double alpha;  // CES capital share parameter in (0,1)
    double sigma;  // elasticity of substitution, > 0
    double K0, L0; // initial capital and labor, > 0
    double D0;     // initial land dividend per unit, > 0
    double GK, GL, GX;  // growth factors for capital, labor, land rent
    double N;      // stock shares outstanding, > 0
    double X;      // land supply, > 0
    double beta;   // young savings share in (0,1)

    void validate() const {
        if (!(alpha > 0.0 && alpha < 1.0))
            throw std::invalid_argument("TwoSectorEconomy: alpha must be in (0,1)");
        if (!(sigma > 0.0)) throw std::invalid_argument("TwoSectorEconomy: sigma > 0 required");
        if (!(K0 > 0.0 && L0 > 0.0))
            throw std::invalid_argument("TwoSectorEconomy: K0, L0 must be positive");
        if (!(D0 > 0.0)) throw std::invalid_argument("TwoSectorEconomy: D0 must be positive");
        if (!(GK > 0.0 && GL > 0.0 && GX > 0.0))
            throw std::invalid_argument("TwoSectorEconomy: growth factors must be positive");
        if (!(N > 0.0 && X > 0.0))
            throw std::invalid_argument("TwoSectorEconomy: N, X must be positive");
        if (!(beta > 0.0 && beta < 1.0))
            throw std::invalid_argument("TwoSectorEconomy: beta must be in (0,1)");
    }
};

// Aggregate simulation: factor prices, the savings-determined aggregate
// asset value S_t = beta F_L L_t, the aggregate dividend E_t = r_t K_t +
// D_t X, and the implied rates R_t = (S_{t+1} + E_{t+1}) / S_t. Everything
// homogeneous of degree <= 1 is evaluated on inputs detrended by the labor
// trend, so the levels stay bounded at any horizon.
struct AggregateSim {
    TwoSectorEconomy econ;
    TrendedPath S;             // aggregate asset value, trend GL
    TrendedPath E;             // aggregate dividend, trend GL
    std::vector<double> rates; // R_0 .. R_{T-1}
    ArrowDebreuLadder ladder;
    std::vector<double> rental; // r_t = F_K(K_t, L_t)
    std::vector<double> wage;   // w_t = F_L(K_t, L_t)
};

inline AggregateSim simulate_aggregate(const TwoSectorEconomy& econ, std::size_t T) {
    econ.validate();
    if (T < 2) throw std::invalid_argument("simulate_aggregate: horizon must be >= 2");

    AggregateSim sim;
    sim.econ = econ;
    sim.S = TrendedPath(econ.GL, std::vector<double>(T + 1));
    sim.E = TrendedPath(econ.GL, std::vector<double>(T + 1));
    sim.rental.resize(T + 1);
    sim.wage.resize(T + 1);

    // K detrended by GL grows at GK/GL; D detrended by GL at GX/GL.
    double K_tilde = econ.K0;
    double D_tilde = econ.D0;
    const double k_ratio = econ.GK / econ.GL;
    const double d_ratio = econ.GX / econ.GL;
    for (std::size_t t = 0; t <= T; ++t) {
        const CesValues f = ces_eval(econ.alpha, econ.sigma, K_tilde, econ.L0);
        sim.rental[t] = f.F_K;  // degree-0 in (K, L): equals F_K at levels
        sim.wage[t] = f.F_L;
        sim.S.levels[t] = econ.beta * f.F_L * econ.L0;
        sim.E.levels[t] = f.F_K * K_tilde + D_tilde * econ.X;
        K_tilde *= k_ratio;
        D_tilde *= d_ratio;
    }

    sim.rates.resize(T);
    for (std::size_t t = 0; t < T; ++t)
        sim.rates[t] =
            econ.GL * (sim.S.levels[t + 1] + sim.E.levels[t + 1]) / sim.S.levels[t];
    sim.ladder = ladder_from_rates(sim.rates);
    return sim;
}

// ---------------------------------------------------------------------------
// Aggregate bubble test. The analytic rule (valid for sigma < 1): there is a
// bubble exactly when GK > GL > GX. The numeric route feeds (S_t, E_t) to
// the dividend-yield detector; the two must agree away from knife edges.
// ---------------------------------------------------------------------------

enum class AnalyticVerdict { Bubbly, Fundamental, Boundary, NotCovered };

inline const char* to_string(AnalyticVerdict v) {
    switch (v) {
        case AnalyticVerdict::Bubbly: return "bubbly";
        case AnalyticVerdict::Fundamental: return "fundamental";
        case AnalyticVerdict::Boundary: return "boundary";
        default: return "not_covered";
    }
}

struct TwoSectorVerdicts {
    AnalyticVerdict analytic = AnalyticVerdict::NotCovered;
    BubbleVerdict numeric;
    bool agree = false;
};

inline TwoSectorVerdicts classify_two_sector(const TwoSectorEconomy& econ, std::size_t T,
                                             double margin = kDetectorMargin) {
    const AggregateSim sim = simulate_aggregate(econ, T);
    TwoSectorVerdicts out;
    out.numeric = detect_bubble(sim.S, sim.E, margin);
    if (econ.sigma >= 1.0) {
        out.analytic = AnalyticVerdict::NotCovered;
        return out;
    }
    if (econ.GK == econ.GL || econ.GL == econ.GX) {
        out.analytic = AnalyticVerdict::Boundary;
        return out;
    }
    out.analytic = (econ.GK > econ.GL && econ.GL > econ.GX)
                       ? AnalyticVerdict::Bubbly
                       : AnalyticVerdict::Fundamental;
    out.agree = (out.analytic == AnalyticVerdict::Bubbly &&
                 out.numeric.cls == BubbleClass::Bubbly) ||
                (out.analytic == AnalyticVerdict::Fundamental &&
                 out.numeric.cls == BubbleClass::Fundamental);
    return out;
}

// ---------------------------------------------------------------------------
// Bubble substitution: the aggregate bubble B_t = S_t - (V^S_t N + V^L_t X)
// grows at the risk-free rate and can sit on the stock, the land, or any
// convex split theta without touching the allocation:
//
//   Q_t = V^S_t + (theta/N) B_t,      P_t = V^L_t + ((1-theta)/X) B_t.
// ---------------------------------------------------------------------------

struct BubbleDecomposition {
    double theta = 0.0;
    std::vector<double> VS;  // per-share stock fundamental (levels)
    std::vector<double> VL;  // per-unit land fundamental (levels)
    std::vector<double> B;   // aggregate bubble (levels)
    std::vector<double> Q;   // stock price per share (levels)
    std::vector<double> P;   // land price per unit (levels)
    bool clamped = false;     // tail noise drove B_t slightly negative
    bool negligible = false;  // bubble below the tail-estimation noise floor
    double max_noarb_residual = 0.0;
};

inline BubbleDecomposition decompose_bubble(const AggregateSim& sim, double theta,
                                            const TailPolicy& policy = {}) {
    if (!(theta >= 0.0 && theta <= 1.0))
        throw std::invalid_argument("decompose_bubble: theta must lie in [0,1]");
    const TwoSectorEconomy& econ = sim.econ;
    const std::size_t T = sim.S.horizon();
    if (!(sim.ladder.q.back() >= std::numeric_limits<double>::min()))
        throw SolverError("decompose_bubble: discount factors underflow at this horizon");

    // Discounted dividend flows for the two assets, in levels.
    std::vector<double> stock_flow(T + 1, 0.0), land_flow(T + 1, 0.0);
    double K_level = econ.K0;
    double D_level = econ.D0;
    for (std::size_t s = 0; s <= T; ++s) {
        stock_flow[s] = sim.ladder.q[s] * sim.rental[s] * K_level;
        land_flow[s] = sim.ladder.q[s] * D_level;
        K_level *= econ.GK;
        D_level *= econ.GX;
    }

    struct TailEstimate {
        double tail;
        double dispersion;
    };
    const auto value_curve = [&](const std::vector<double>& flow,
                                 std::vector<double>& out) -> TailEstimate {
        const std::size_t w0 = window_start(T, policy.window_fraction);
        const std::span<const double> window(flow.data() + w0, T + 1 - w0);
        const GeometricFit fit = fit_geometric_ratio(window, policy.dispersion_tol);
        if (!fit.valid)
            throw SolverError("decompose_bubble: discounted flows are not "
                              "asymptotically geometric at this horizon");
        if (fit.ratio >= 1.0)
            throw SolverError("decompose_bubble: fundamental value divergent");
        const double tail = geometric_tail(flow[T], fit.ratio);
        double suffix = tail;
        out.assign(T + 1, 0.0);
        out[T] = suffix;
        for (std::size_t s = T; s-- > 0;) {
            suffix += flow[s + 1];
            out[s] = suffix;
        }
        return {tail, fit.dispersion};
    };

    BubbleDecomposition dec;
    dec.theta = theta;
    std::vector<double> stock_pv, land_pv;  // discounted from date 0
    const TailEstimate stock_est = value_curve(stock_flow, stock_pv);
    const TailEstimate land_est = value_curve(land_flow, land_pv);
    const double stock_tail = stock_est.tail;
    const double land_tail = land_est.tail;

    // q_t B_t is constant along the no-arbitrage path, so the bubble is the
    // single discounted terminal gap scaled back up. Evaluating S_t - V_t
    // date by date instead would bury a small bubble under the cancellation
    // noise of two near-equal present values.
    double discounted_bubble =
        sim.ladder.q[T] * sim.S.value(T) - stock_tail - land_tail * econ.X;
    for (std::size_t t = 0; t <= T; ++t) {
        const double rel = discounted_bubble / (sim.ladder.q[t] * sim.S.value(t));
        if (rel < -1e-8)
            throw ResidualError("decompose_bubble: bubble component negative "
                                "beyond tail-estimation tolerance");
    }
    if (discounted_bubble < 0.0) {
        discounted_bubble = 0.0;
        dec.clamped = true;
    }
    // A terminal gap at or below the tail-fit accuracy cannot be told apart
    // from a vanishing bubble at this horizon.
    const double fit_noise = std::max({stock_est.dispersion, land_est.dispersion, 1e-12});
    dec.negligible =
        discounted_bubble <= 4.0 * fit_noise * (stock_tail + land_tail * econ.X);

    dec.VS.resize(T + 1);
    dec.VL.resize(T + 1);
    dec.B.resize(T + 1);
    dec.Q.resize(T + 1);
    dec.P.resize(T + 1);
    for (std::size_t t = 0; t <= T; ++t) {
        dec.VS[t] = stock_pv[t] / (sim.ladder.q[t] * econ.N);
        dec.VL[t] = land_pv[t] / sim.ladder.q[t];
        const double B = discounted_bubble / sim.ladder.q[t];
        dec.B[t] = B;
        dec.Q[t] = dec.VS[t] + theta / econ.N * B;
        dec.P[t] = dec.VL[t] + (1.0 - theta) / econ.X * B;
    }

    // Both assets must earn the common rate.
    double K_next = econ.K0 * econ.GK;
    double D_next = econ.D0 * econ.GX;
    for (std::size_t t = 0; t < T; ++t) {
        const double R = sim.rates[t];
        const double stock_R = (dec.Q[t + 1] + sim.rental[t + 1] * K_next / econ.N) / dec.Q[t];
        const double land_R = (dec.P[t + 1] + D_next) / dec.P[t];
        dec.max_noarb_residual = std::max(
            {dec.max_noarb_residual, std::abs(stock_R - R) / R, std::abs(land_R - R) / R});
        K_next *= econ.GK;
        D_next *= econ.GX;
    }
    if (dec.max_noarb_residual > 1e-8)
        throw ResidualError("decompose_bubble: no-arbitrage residual above 1e-8");
    return dec;
}

}  // namespace bubblelab
