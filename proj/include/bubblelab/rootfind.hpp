#pragma once

#include <cmath>
#include <functional>
#include <limits>

#include "bubblelab/errors.hpp"

namespace bubblelab {

struct BisectResult {
    double root;
    double residual;
    int iterations;
};

/// Bisection on [lo, hi]; f(lo) and f(hi) must have opposite (weak) signs.
/// Runs to machine-width brackets, so the residual is limited only by the
/// conditioning of f near the root.
template <class F>
BisectResult bisect(F&& f, double lo, double hi, int max_iter = 200) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return {lo, 0.0, 0};
    if (fhi == 0.0) return {hi, 0.0, 0};
    if ((flo > 0.0) == (fhi > 0.0))
        throw SolverError("bisect: bracket does not enclose a sign change");
    int it = 0;
    double mid = 0.5 * (lo + hi);
    double fmid = f(mid);
    while (it < max_iter) {
        mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;  // bracket at machine width
        fmid = f(mid);
        if (fmid == 0.0) break;
        if ((fmid > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
        ++it;
    }
    return {mid, fmid, it};
}

/// Bisection with upward bracket expansion: starting from [lo, hi], doubles
/// the width of the interval (up to `max_expand` times, capped at `hi_cap`)
/// until f changes sign across it.
template <class F>
BisectResult bisect_expanding(F&& f, double lo, double hi, double hi_cap,
                              int max_expand = 200, int max_iter = 200) {
    double flo = f(lo);
    double fhi = f(hi);
    int n = 0;
    while ((flo > 0.0) == (fhi > 0.0) && n < max_expand && hi < hi_cap) {
        const double width = hi - lo;
        hi = std::min(hi + 2.0 * width, hi_cap);
        fhi = f(hi);
        ++n;
    }
    if ((flo > 0.0) == (fhi > 0.0))
        throw SolverError("bisect: no sign change found inside expanded bracket");
    return bisect(f, lo, hi, max_iter);
}

}  // namespace bubblelab
