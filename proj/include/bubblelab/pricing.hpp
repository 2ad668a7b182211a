#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "bubblelab/core.hpp"
#include "bubblelab/errors.hpp"
#include "bubblelab/series.hpp"

namespace bubblelab {

// Default band half-width around ratio 1 inside which a fitted yield ratio
// is considered too close to the knife edge to call. Narrow enough that an
// adjacent-growth-factor pair like 1.06/1.08 still classifies.
inline constexpr double kDetectorMargin = 0.005;

// ---------------------------------------------------------------------------
// Arrow-Debreu ladder: date-0 good prices q_0 = 1, q_{t+1} = q_t / R_t.
// ---------------------------------------------------------------------------

struct ArrowDebreuLadder {
    std::vector<double> q;      // q_0 .. q_T, q_0 = 1
    std::vector<double> rates;  // R_0 .. R_{T-1}

    std::size_t horizon() const { return q.empty() ? 0 : q.size() - 1; }
};

inline ArrowDebreuLadder ladder_from_rates(std::span<const double> rates) {
    ArrowDebreuLadder ladder;
    ladder.q.reserve(rates.size() + 1);
    ladder.rates.assign(rates.begin(), rates.end());
    ladder.q.push_back(1.0);
    for (double R : rates) {
        if (!(R > 0.0))
            throw std::domain_error("ladder_from_rates: rates must be positive");
        ladder.q.push_back(ladder.q.back() / R);
    }
    return ladder;
}

// ---------------------------------------------------------------------------
// Present value of a dividend stream under an Arrow-Debreu ladder:
//
//   V_t = (1/q_t) ( sum_{s=t+1}^{T} q_s D_s + tail )
//
// with the tail extrapolated geometrically from the fitted limiting ratio of
// q_s D_s. A fitted ratio >= 1 means the discounted dividend terms do not
// vanish and the present value diverges.
// ---------------------------------------------------------------------------

struct TailPolicy {
    double window_fraction = 1.0 / 3.0;
    double dispersion_tol = 0.05;
};

struct FundamentalValueResult {
    std::vector<double> V;  // V_0 .. V_T (levels); meaningless when divergent
    bool divergent = false;
    GeometricFit fit;       // fit of q_s D_s over the trailing window
    double tail = 0.0;      // tail estimate appended past T
};

inline FundamentalValueResult fundamental_value(const ArrowDebreuLadder& ladder,
                                                const TrendedPath& dividends,
                                                const TailPolicy& policy = {}) {
    const std::size_t T = dividends.horizon();
    if (ladder.horizon() < T)
        throw std::invalid_argument("fundamental_value: ladder horizon too short");

    std::vector<double> x(T + 1, 0.0);  // x_s = q_s D_s
    for (std::size_t s = 0; s <= T; ++s) x[s] = ladder.q[s] * dividends.value(s);

    FundamentalValueResult out;
    const std::size_t w0 = window_start(T, policy.window_fraction);
    const std::span<const double> window(x.data() + w0, T + 1 - w0);
    const bool window_zero =
        std::all_of(window.begin(), window.end(), [](double v) { return v == 0.0; });
    if (window_zero) {
        out.fit.ratio = 0.0;
        out.fit.dispersion = 0.0;
        out.fit.valid = true;
        out.tail = 0.0;
    } else {
        out.fit = fit_geometric_ratio(window, policy.dispersion_tol);
        if (out.fit.valid && out.fit.ratio >= 1.0) {
            out.divergent = true;
            return out;
        }
        out.tail = out.fit.valid ? geometric_tail(x[T], out.fit.ratio) : 0.0;
    }

    // Suffix sums of x give every V_t in one backward pass.
    out.V.assign(T + 1, 0.0);
    double suffix = out.tail;
    for (std::size_t s = T + 1; s-- > 1;) {
        suffix += x[s];
        out.V[s - 1] = suffix / ladder.q[s - 1];
    }
    // V_T carries only the extrapolated tail.
    out.V[T] = out.tail / ladder.q[T];
    return out;
}

// ---------------------------------------------------------------------------
// Bubble component: the limit of q_T P_T estimated from the discounted price
// series itself. Along a no-arbitrage path the decrements of u_t = q_t P_t
// equal q_t D_t, so the neglected tail of the dividend sum is recovered from
// the fitted ratio of the decrements, and
//
//   B_0 = lim q_T P_T  ~=  u_T - tail,     B_t = B_0 / q_t.
// ---------------------------------------------------------------------------

struct BubbleComponentResult {
    double B0 = 0.0;
    std::vector<double> B;  // B_t = B0 / q_t
    bool no_bubble = false;
    bool inconclusive = false;
    double discounted_terminal = 0.0;  // u_T = q_T P_T
    GeometricFit fit;                  // fit of the decrements of u_t
};

inline BubbleComponentResult bubble_component(const TrendedPath& prices,
                                              const ArrowDebreuLadder& ladder,
                                              const TailPolicy& policy = {}) {
    const std::size_t T = prices.horizon();
    if (ladder.horizon() < T)
        throw std::invalid_argument("bubble_component: ladder horizon too short");

    std::vector<double> u(T + 1);
    for (std::size_t t = 0; t <= T; ++t) u[t] = ladder.q[t] * prices.value(t);

    BubbleComponentResult out;
    out.discounted_terminal = u[T];

    std::vector<double> delta(T);  // u_{t-1} - u_t for t = 1..T
    const double noise = 1e-14 * u[0];
    bool negative = false;
    for (std::size_t t = 1; t <= T; ++t) {
        delta[t - 1] = u[t - 1] - u[t];
        if (delta[t - 1] < -noise) negative = true;
        if (delta[t - 1] < 0.0) delta[t - 1] = 0.0;
    }
    if (negative) {
        // Discounted prices are not monotone: not a no-arbitrage path.
        out.inconclusive = true;
        return out;
    }

    const std::size_t w0 = window_start(T - 1, 0.25);  // last quarter of decrements
    const std::span<const double> window(delta.data() + w0, delta.size() - w0);
    // Decrements at the cancellation floor of u carry no information; when
    // the whole window sits there, the discounted price has converged and
    // the neglected tail is negligible against u_0.
    const double negligible = 1e-12 * u[0];
    const double wmax = *std::max_element(window.begin(), window.end());
    double tail = 0.0;
    if (wmax <= negligible) {
        out.fit.ratio = 0.0;
        out.fit.dispersion = 0.0;
        out.fit.valid = true;
    } else {
        out.fit = fit_geometric_ratio(window, policy.dispersion_tol);
        if (!out.fit.valid) {
            out.inconclusive = true;
            return out;
        }
        tail = geometric_tail(delta.back(), out.fit.ratio);
        if (!std::isfinite(tail)) {
            // Decrements not vanishing geometrically at this horizon; the
            // limit cannot be pinned down, but it is bounded by [0, u_T].
            tail = u[T];
        }
    }

    out.B0 = std::max(u[T] - tail, 0.0);
    out.no_bubble = out.B0 <= 1e-6 * u[0];
    out.B.resize(T + 1);
    for (std::size_t t = 0; t <= T; ++t) out.B[t] = out.B0 / ladder.q[t];
    return out;
}

// ---------------------------------------------------------------------------
// Dividend-yield bubble detector: the asset is bubbly exactly when the yield
// series D_t/P_t is summable, decided at finite horizon from the fitted
// limiting ratio of the yields over the trailing third.
// ---------------------------------------------------------------------------

inline BubbleVerdict detect_bubble(const TrendedPath& prices,
                                   const TrendedPath& dividends,
                                   double margin = kDetectorMargin) {
    const std::size_t T = prices.horizon();
    if (dividends.horizon() != T)
        throw std::invalid_argument("detect_bubble: price and dividend horizons differ");
    if (T < 3)
        throw std::invalid_argument("detect_bubble: horizon too short");

    // Yields computed from detrended levels with an iterated trend ratio, so
    // no level ever leaves the representable range.
    std::vector<double> y(T + 1, 0.0);
    const double trend_ratio = dividends.growth / prices.growth;
    double scale = 1.0;
    for (std::size_t t = 0; t <= T; ++t) {
        if (!(prices.levels[t] > 0.0))
            throw std::domain_error("detect_bubble: prices must be positive");
        if (dividends.levels[t] < 0.0)
            throw std::domain_error("detect_bubble: dividends must be non-negative");
        y[t] = dividends.levels[t] / prices.levels[t] * scale;
        scale *= trend_ratio;
    }

    BubbleVerdict verdict;
    for (std::size_t t = 1; t <= T; ++t) verdict.partial_sum += y[t];

    const std::size_t w0 = window_start(T);
    const std::span<const double> window(y.data() + w0, T + 1 - w0);
    const bool all_zero =
        std::all_of(window.begin(), window.end(), [](double v) { return v == 0.0; });
    const bool any_zero =
        std::any_of(window.begin(), window.end(), [](double v) { return v == 0.0; });

    if (all_zero) {
        // Pure bubble: zero dividends, positive price, zero fundamental value.
        verdict.cls = BubbleClass::Bubbly;
        verdict.tail_ratio = 0.0;
        verdict.tail_bound = 0.0;
        return verdict;
    }
    if (any_zero) {
        verdict.cls = BubbleClass::Inconclusive;
        return verdict;
    }

    const GeometricFit fit = fit_geometric_ratio(window);
    verdict.tail_ratio = fit.ratio;
    verdict.tail_bound = fit.valid
                             ? geometric_tail(y[T], fit.ratio)
                             : std::numeric_limits<double>::infinity();
    if (!fit.valid) {
        verdict.cls = BubbleClass::Inconclusive;
        return verdict;
    }
    if (fit.ratio < 1.0 - margin) {
        verdict.cls = BubbleClass::Bubbly;
    } else {
        // Yields are not vanishing geometrically: the sum keeps growing.
        verdict.cls = BubbleClass::Fundamental;
    }
    return verdict;
}

// ---------------------------------------------------------------------------
// Variable-share firm accounting. Primitives are the share path S_t, cash
// flow path C_t, one-period rates and the initial stock price; the stock
// price and dividend per share are propagated jointly from
//
//   p_{t+1} + d_{t+1} = R_t p_t                (no arbitrage)
//   p_{t+1} S_{t+1} + C_{t+1} = R_t p_t S_t    (accounting identity)
//
// A share/cash-flow configuration forcing d_t < 0 is reported, not repaired.
// ---------------------------------------------------------------------------

struct FirmSeries {
    std::vector<double> shares;     // S_0 .. S_T
    std::vector<double> cashflow;   // C_1 .. C_T
    std::vector<double> price;      // p_0 .. p_T per share
    std::vector<double> dividend;   // d_1 .. d_T per share
    std::vector<double> firm_value; // P_t = p_t S_t
    std::vector<double> rates;      // R_0 .. R_{T-1}
    bool negative_dividend = false;
    bool nonpositive_price = false;
    double max_accounting_residual = 0.0;

    std::size_t horizon() const { return shares.empty() ? 0 : shares.size() - 1; }
};

inline FirmSeries firm_accounting(std::span<const double> shares,
                                  std::span<const double> cashflows,
                                  std::span<const double> rates, double p0) {
    const std::size_t T = shares.empty() ? 0 : shares.size() - 1;
    if (T == 0) throw std::invalid_argument("firm_accounting: need at least two dates");
    if (cashflows.size() != T || rates.size() != T)
        throw std::invalid_argument("firm_accounting: cashflows and rates must have length T");
    for (double s : shares)
        if (!(s > 0.0)) throw std::domain_error("firm_accounting: shares must be positive");
    for (double R : rates)
        if (!(R > 0.0)) throw std::domain_error("firm_accounting: rates must be positive");
    if (!(p0 > 0.0)) throw std::domain_error("firm_accounting: p0 must be positive");

    FirmSeries fs;
    fs.shares.assign(shares.begin(), shares.end());
    fs.cashflow.assign(cashflows.begin(), cashflows.end());
    fs.rates.assign(rates.begin(), rates.end());
    fs.price.assign(T + 1, 0.0);
    fs.dividend.assign(T, 0.0);
    fs.firm_value.assign(T + 1, 0.0);

    fs.price[0] = p0;
    fs.firm_value[0] = p0 * fs.shares[0];
    // Running forward-error envelope of the price recursion. The recursion
    // amplifies rounding by R_t S_t / S_{t+1} per step, so an exactly-zero
    // dividend reappears as same-order noise in p_{t+1} + d_{t+1} - R_t p_t
    // and must be snapped against this envelope, not against plain ulps.
    const double eps = std::numeric_limits<double>::epsilon();
    double env = eps * std::abs(p0);
    for (std::size_t t = 0; t < T; ++t) {
        const double gross = fs.rates[t] * fs.price[t];           // p_{t+1} + d_{t+1}
        const double next_p = (gross * fs.shares[t] - fs.cashflow[t]) / fs.shares[t + 1];
        double next_d = gross - next_p;
        const double env_next =
            fs.rates[t] * (fs.shares[t] / fs.shares[t + 1]) * env + 4.0 * eps * std::abs(next_p);
        if (std::abs(next_d) <= fs.rates[t] * env + env_next) next_d = 0.0;
        env = env_next;
        fs.price[t + 1] = next_p;
        fs.dividend[t] = next_d;
        fs.firm_value[t + 1] = next_p * fs.shares[t + 1];
        if (next_d < 0.0) fs.negative_dividend = true;
        if (!(next_p > 0.0)) fs.nonpositive_price = true;

        // Residual of p_{t+1} S_{t+1} + C_{t+1} = (p_{t+1} + d_{t+1}) S_t.
        const double lhs = next_p * fs.shares[t + 1] + fs.cashflow[t];
        const double rhs = gross * fs.shares[t];
        const double res = std::abs(lhs - rhs) / std::max(std::abs(rhs), 1e-300);
        fs.max_accounting_residual = std::max(fs.max_accounting_residual, res);
    }
    if (fs.max_accounting_residual > 1e-10)
        throw ResidualError("firm_accounting: accounting identity residual above 1e-10");
    return fs;
}

// Finite-horizon share-path trend, the computable stand-in for the
// liminf/limsup cases of the share-limit rules. Oscillating share counts are
// reported as not classifiable.
enum class ShareTrend { Bounded, ShrinksToZero, GrowsUnbounded, NotClassifiable };

inline const char* to_string(ShareTrend s) {
    switch (s) {
        case ShareTrend::Bounded: return "bounded";
        case ShareTrend::ShrinksToZero: return "shrinks_to_zero";
        case ShareTrend::GrowsUnbounded: return "grows_unbounded";
        default: return "not_classifiable";
    }
}

struct FirmBubbleReport {
    BubbleVerdict stock;
    BubbleVerdict value;
    ShareTrend share_trend = ShareTrend::NotClassifiable;
    bool stock_forced_fundamental = false;
    bool value_forced_fundamental = false;
    bool consistent = true;  // forced verdicts agree with the series tests
};

inline FirmBubbleReport classify_firm_bubbles(const FirmSeries& fs,
                                              double margin = kDetectorMargin) {
    const std::size_t T = fs.horizon();
    FirmBubbleReport report;

    // Stock test on (p_t, d_t), firm-value test on (P_t, C_t). The t = 0
    // entries of dividends/cash flow do not enter yield sums, which start
    // at t = 1.
    std::vector<double> d_full(T + 1, 0.0), c_full(T + 1, 0.0);
    std::copy(fs.dividend.begin(), fs.dividend.end(), d_full.begin() + 1);
    std::copy(fs.cashflow.begin(), fs.cashflow.end(), c_full.begin() + 1);
    report.stock = detect_bubble(TrendedPath::from_values(fs.price),
                                 TrendedPath::from_values(d_full), margin);
    report.value = detect_bubble(TrendedPath::from_values(fs.firm_value),
                                 TrendedPath::from_values(c_full), margin);

    const std::size_t w0 = window_start(T);
    const std::span<const double> window(fs.shares.data() + w0, T + 1 - w0);
    const GeometricFit fit = fit_geometric_ratio(window);
    if (fit.valid) {
        if (fit.ratio < 1.0 - margin)
            report.share_trend = ShareTrend::ShrinksToZero;
        else if (fit.ratio > 1.0 + margin)
            report.share_trend = ShareTrend::GrowsUnbounded;
        else
            report.share_trend = ShareTrend::Bounded;
    }

    switch (report.share_trend) {
        case ShareTrend::ShrinksToZero:
            report.value_forced_fundamental = true;
            report.consistent = report.value.cls != BubbleClass::Bubbly;
            report.value.cls = BubbleClass::Fundamental;
            break;
        case ShareTrend::GrowsUnbounded:
            report.stock_forced_fundamental = true;
            report.consistent = report.stock.cls != BubbleClass::Bubbly;
            report.stock.cls = BubbleClass::Fundamental;
            break;
        case ShareTrend::Bounded:
            // Bounded shares: a stock bubble and a firm-value bubble are the
            // same event.
            report.consistent = report.stock.cls == report.value.cls;
            break;
        default:
            break;
    }
    return report;
}

// ---------------------------------------------------------------------------
// Sandwich bound from the yield telescoping identity: along a positive-price
// path,  1 + sum_{t<=T} D_t/P_t <= q_0 P_0 / (q_T P_T) <= exp(sum D_t/P_t).
// Returns the largest relative slack violation (0 when both inequalities
// hold).
// ---------------------------------------------------------------------------

inline double sandwich_violation(std::span<const double> prices,
                                 std::span<const double> dividends,
                                 const ArrowDebreuLadder& ladder, std::size_t T) {
    double sum = 0.0;
    for (std::size_t t = 1; t <= T; ++t) sum += dividends[t] / prices[t];
    const double mid = (ladder.q[0] * prices[0]) / (ladder.q[T] * prices[T]);
    const double lo = 1.0 + sum;
    const double hi = std::exp(sum);
    double violation = 0.0;
    if (lo > mid) violation = std::max(violation, (lo - mid) / mid);
    if (mid > hi) violation = std::max(violation, (mid - hi) / hi);
    return violation;
}

}  // namespace bubblelab
