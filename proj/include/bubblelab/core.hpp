#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "bubblelab/errors.hpp"

namespace bubblelab {

// ---------------------------------------------------------------------------
// Utility kernels
//
// Two-period homothetic utility over (y, z) = (young, old) consumption,
// normalized to be homogeneous of degree 1:
//
//   Cobb-Douglas:  U(y,z) = y^(1-beta) * z^beta
//   CES:           U(y,z) = ((1-beta) y^r + beta z^r)^(1/r),  r = 1 - 1/eps
//
// where beta in (0,1) weights old-age consumption and eps > 0 is the
// intertemporal substitution elasticity. eps = 1 is the Cobb-Douglas limit
// and is dispatched analytically at construction.
//
// Second partials follow from the shared curvature identities of the family
// (k = 1/eps, k = 1 for Cobb-Douglas):
//
//   U_yz =  k U_y U_z / U
//   U_yy = -k U_y U_z z / (y U)
//   U_zz = -k U_y U_z y / (z U)
//
// which make the Euler identity U = y U_y + z U_z and the degree-0
// homogeneity of the marginal-rate ratio U_y/U_z exact by construction.
// ---------------------------------------------------------------------------

struct UtilityValues {
    double U;
    double U_y;
    double U_z;
    double U_yy;
    double U_yz;
    double U_zz;
};

class UtilityKernel {
  public:
    enum class Family { CobbDouglas, CES };

    static UtilityKernel cobb_douglas(double beta) {
        require_beta(beta);
        UtilityKernel k;
        k.family_ = Family::CobbDouglas;
        k.beta_ = beta;
        k.eps_ = 1.0;
        return k;
    }

    static UtilityKernel ces(double beta, double eps) {
        require_beta(beta);
        if (!(eps > 0.0))
            throw std::invalid_argument("ces: eps must be positive");
        if (eps == 1.0) return cobb_douglas(beta);
        UtilityKernel k;
        k.family_ = Family::CES;
        k.beta_ = beta;
        k.eps_ = eps;
        return k;
    }

    Family family() const { return family_; }
    double beta() const { return beta_; }
    double eps() const { return eps_; }

    // U_y(0,z) stays finite for CES with eps < 1 (the limit is
    // (1-beta)^(1/(1-1/eps))), so the marginal-utility blow-up at the axes
    // holds only for eps >= 1 and for Cobb-Douglas.
    bool inada_satisfied() const {
        return family_ == Family::CobbDouglas || eps_ >= 1.0;
    }

  private:
    static void require_beta(double beta) {
        if (!(beta > 0.0 && beta < 1.0))
            throw std::invalid_argument("utility kernel: beta must be in (0,1)");
    }

    Family family_ = Family::CobbDouglas;
    double beta_ = 0.5;
    double eps_ = 1.0;
};

namespace detail {
inline void require_interior(double y, double z) {
    if (!(y > 0.0) || !(z > 0.0))
        throw std::domain_error("utility kernel: consumption must be positive");
}
}  // namespace detail

/// Evaluate U and its exact first and second partial derivatives at (y, z).
inline UtilityValues utility_eval(const UtilityKernel& kernel, double y, double z) {
    detail::require_interior(y, z);
    const double beta = kernel.beta();
    UtilityValues v{};
    double k;  // curvature 1/eps
    if (kernel.family() == UtilityKernel::Family::CobbDouglas) {
        v.U = std::pow(y, 1.0 - beta) * std::pow(z, beta);
        v.U_y = (1.0 - beta) * v.U / y;
        v.U_z = beta * v.U / z;
        k = 1.0;
    } else {
        const double r = 1.0 - 1.0 / kernel.eps();
        const double A = (1.0 - beta) * std::pow(y, r) + beta * std::pow(z, r);
        v.U = std::pow(A, 1.0 / r);
        const double scale = v.U / A;  // A^(1/r - 1)
        v.U_y = (1.0 - beta) * std::pow(y, r - 1.0) * scale;
        v.U_z = beta * std::pow(z, r - 1.0) * scale;
        k = 1.0 / kernel.eps();
    }
    const double cross = k * v.U_y * v.U_z / v.U;
    v.U_yz = cross;
    v.U_yy = -cross * z / y;
    v.U_zz = -cross * y / z;
    return v;
}

/// Marginal-rate ratio U_y/U_z, homogeneous of degree 0:
/// ((1-beta)/beta) * (z/y)^(1/eps).
inline double mrs_ratio(const UtilityKernel& kernel, double y, double z) {
    detail::require_interior(y, z);
    const double beta = kernel.beta();
    return (1.0 - beta) / beta * std::pow(z / y, 1.0 / kernel.eps());
}

// ---------------------------------------------------------------------------
// CRRA period utility for the infinite-horizon economies.
// ---------------------------------------------------------------------------

struct CRRAPeriodUtility {
    double gamma;  // relative risk aversion, > 0; gamma = 1 is logarithmic

    explicit CRRAPeriodUtility(double g) : gamma(g) {
        if (!(g > 0.0))
            throw std::invalid_argument("CRRAPeriodUtility: gamma must be positive");
    }

    double u(double c) const {
        if (!(c > 0.0)) throw std::domain_error("CRRA: consumption must be positive");
        if (gamma == 1.0) return std::log(c);
        return std::pow(c, 1.0 - gamma) / (1.0 - gamma);
    }

    double u_prime(double c) const {
        if (!(c > 0.0)) throw std::domain_error("CRRA: consumption must be positive");
        return std::pow(c, -gamma);
    }

    double u_second(double c) const {
        if (!(c > 0.0)) throw std::domain_error("CRRA: consumption must be positive");
        return -gamma * std::pow(c, -gamma - 1.0);
    }
};

// ---------------------------------------------------------------------------
// Endowment and dividend primitives: young endowment a*G^t, old endowment
// b*G^t, dividend D*Gd^t with 0 < Gd < G.
// ---------------------------------------------------------------------------

struct GrowthEconomy {
    double a;   // young endowment level, > 0
    double b;   // old endowment level, >= 0
    double G;   // endowment growth factor, > 0
    double D;   // dividend level, > 0
    double Gd;  // dividend growth factor, 0 < Gd < G

    GrowthEconomy(double a_, double b_, double G_, double D_, double Gd_)
        : a(a_), b(b_), G(G_), D(D_), Gd(Gd_) {
        if (!(a > 0.0)) throw std::invalid_argument("GrowthEconomy: a must be positive");
        if (!(b >= 0.0)) throw std::invalid_argument("GrowthEconomy: b must be non-negative");
        if (!(G > 0.0)) throw std::invalid_argument("GrowthEconomy: G must be positive");
        if (!(D > 0.0)) throw std::invalid_argument("GrowthEconomy: D must be positive");
        if (!(Gd > 0.0 && Gd < G))
            throw std::invalid_argument("GrowthEconomy: need 0 < Gd < G");
    }

    /// Old-to-young income ratio b/a.
    double w() const { return b / a; }

    double young_endowment(std::size_t t) const { return a * std::pow(G, double(t)); }
    double old_endowment(std::size_t t) const { return b * std::pow(G, double(t)); }
    double dividend(std::size_t t) const { return D * std::pow(Gd, double(t)); }
};

// ---------------------------------------------------------------------------
// TrendedPath: a series x_t * growth^t stored as (growth, detrended levels)
// so long horizons never leave the representable range.
// ---------------------------------------------------------------------------

struct TrendedPath {
    double growth = 1.0;
    std::vector<double> levels;

    TrendedPath() = default;
    TrendedPath(double g, std::vector<double> lv) : growth(g), levels(std::move(lv)) {
        if (!(growth > 0.0))
            throw std::invalid_argument("TrendedPath: growth factor must be positive");
    }

    /// Constant detrended level: value(t) = level * growth^t.
    static TrendedPath geometric(double level, double growth, std::size_t horizon) {
        return TrendedPath(growth, std::vector<double>(horizon + 1, level));
    }

    /// Raw values, trend 1.
    static TrendedPath from_values(std::vector<double> v) {
        return TrendedPath(1.0, std::move(v));
    }

    std::size_t horizon() const {
        return levels.empty() ? 0 : levels.size() - 1;
    }

    double value(std::size_t t) const {
        return levels.at(t) * std::pow(growth, double(t));
    }

    /// Re-express against a new trend, leaving represented values unchanged.
    TrendedPath retrended(double new_growth) const {
        if (!(new_growth > 0.0))
            throw std::invalid_argument("TrendedPath: growth factor must be positive");
        TrendedPath out(new_growth, levels);
        const double ratio = growth / new_growth;
        double scale = 1.0;
        for (std::size_t t = 0; t < out.levels.size(); ++t) {
            out.levels[t] *= scale;
            scale *= ratio;
        }
        return out;
    }
};

// ---------------------------------------------------------------------------
// Bubble verdict carried by the dividend-yield detector.
// ---------------------------------------------------------------------------

enum class BubbleClass { Fundamental, Bubbly, Inconclusive };

inline const char* to_string(BubbleClass c) {
    switch (c) {
        case BubbleClass::Fundamental: return "fundamental";
        case BubbleClass::Bubbly: return "bubbly";
        default: return "inconclusive";
    }
}

struct BubbleVerdict {
    BubbleClass cls = BubbleClass::Inconclusive;
    double partial_sum = 0.0;  // sum_{t=1}^{T} D_t / P_t
    double tail_ratio = std::numeric_limits<double>::quiet_NaN();
    double tail_bound = std::numeric_limits<double>::infinity();
};

}  // namespace bubblelab
