#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace bubblelab {

// Geometric tail machinery shared by the detector and the present-value
// routines. A decided-at-finite-horizon limit needs a fitted limiting ratio
// of the terms and a bound on how geometric the window actually is.

struct GeometricFit {
    double ratio = std::numeric_limits<double>::quiet_NaN();
    double dispersion = std::numeric_limits<double>::infinity();
    bool valid = false;
};

/// Fit the limiting ratio of a strictly positive sequence as the geometric
/// mean of successive ratios over the window. `dispersion` is the largest
/// deviation of an individual log-ratio from the fitted log-ratio; a window
/// that oscillates instead of settling produces an invalid fit.
inline GeometricFit fit_geometric_ratio(std::span<const double> window,
                                        double dispersion_tol = 0.05) {
    GeometricFit fit;
    if (window.size() < 3) return fit;
    for (double x : window)
        if (!(x > 0.0)) return fit;

    const std::size_t m = window.size() - 1;
    std::vector<double> logr(m);
    double mean = 0.0;
    for (std::size_t s = 0; s < m; ++s) {
        logr[s] = std::log(window[s + 1] / window[s]);
        mean += logr[s];
    }
    mean /= double(m);
    double disp = 0.0;
    for (double l : logr) disp = std::max(disp, std::abs(l - mean));

    fit.ratio = std::exp(mean);
    fit.dispersion = disp;
    fit.valid = disp <= dispersion_tol;
    return fit;
}

/// Geometric bound on the neglected tail sum_{s>T} of a series whose last
/// term is `last` and whose terms shrink by `ratio`: last * r/(1-r),
/// infinite once r >= 1.
inline double geometric_tail(double last, double ratio) {
    if (!(ratio < 1.0)) return std::numeric_limits<double>::infinity();
    if (ratio <= 0.0) return 0.0;
    return last * ratio / (1.0 - ratio);
}

/// First index of the trailing window covering the final `fraction` of a
/// series with last index T.
inline std::size_t window_start(std::size_t T, double fraction = 1.0 / 3.0) {
    const auto span = std::size_t(double(T) * fraction);
    return T > span ? T - span : 0;
}

}  // namespace bubblelab
