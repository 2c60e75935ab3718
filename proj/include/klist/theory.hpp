// theory.hpp — closed-form quantities for k-list estimation.
//
// Centralized side: the high-rate law D1(k) ≈ G_d · k^{−2/d} · E[J(Y)],
// where J is the Zador functional of the posterior density and G_d is the
// Zador–Gersho constant (exact at d=1, best-known lattice NSM values at
// d=4 and d=10, d/(2πe) proxy elsewhere).
//
// Decentralized side: the small-ball converse.  If the averaged estimator
// error satisfies P(‖Z‖² ≤ a) ≤ C·a^α for a ≤ a0, then the best-of-k
// distortion is at least e^{−1/α}·(1/(C(1+αk)))^{1/α}, valid once the
// truncation point a* = (1/(C(1+αk)))^{1/α} falls inside [0, a0].
// Specializations: bounded densities (α = d/2), the isotropic Gaussian
// model (closed form in σ_G²), and radial power-law densities
// (α = (d+β)/2, two-sided).

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "klist/model.hpp"
#include "klist/quadrature.hpp"

namespace klist {

/// Volume of the d-dimensional Euclidean unit ball, π^{d/2}/Γ(d/2+1).
[[nodiscard]] inline double unit_ball_volume(std::size_t d) {
    if (d == 0)
        throw std::invalid_argument("unit_ball_volume: d must be >= 1");
    const double half_d = 0.5 * static_cast<double>(d);
    return std::pow(std::numbers::pi, half_d) / std::tgamma(half_d + 1.0);
}

/// Surface area of the unit sphere in R^d: S_d = d·V_d.
[[nodiscard]] inline double unit_sphere_area(std::size_t d) {
    return static_cast<double>(d) * unit_ball_volume(d);
}

// ---------------------------------------------------------------------------
// Zador–Gersho constants.
// ---------------------------------------------------------------------------

enum class GdProvenance {
    exact,         ///< closed form (d = 1 only)
    lattice_proxy, ///< best reported lattice normalized second moment × d
    large_d_proxy, ///< asymptotic d/(2πe)
};

[[nodiscard]] inline std::string to_string(GdProvenance p) {
    switch (p) {
    case GdProvenance::exact: return "exact";
    case GdProvenance::lattice_proxy: return "lattice_proxy";
    case GdProvenance::large_d_proxy: return "large_d_proxy";
    }
    return "unknown";
}

/// Table of G_d values with per-entry provenance.  The built-in table holds
/// the three dimensions with citable values (G_1 exact; G_4, G_10 from the
/// D4 and D10+ lattice NSMs, already multiplied by d); lookups at other
/// dimensions fall back to the large-d proxy d/(2πe).
struct ZadorConstants {
    struct Entry {
        double value;
        GdProvenance provenance;
    };

    std::map<std::size_t, Entry> table;

    [[nodiscard]] static const ZadorConstants& builtin() {
        static const ZadorConstants instance{{
            {1, {1.0 / 12.0, GdProvenance::exact}},
            {4, {0.30641294, GdProvenance::lattice_proxy}},
            {10, {0.70813818, GdProvenance::lattice_proxy}},
        }};
        return instance;
    }

    [[nodiscard]] Entry lookup(std::size_t d) const {
        if (d == 0)
            throw std::invalid_argument("ZadorConstants::lookup: d must be >= 1");
        if (const auto it = table.find(d); it != table.end())
            return it->second;
        return Entry{static_cast<double>(d) / (2.0 * std::numbers::pi * std::numbers::e),
                     GdProvenance::large_d_proxy};
    }
};

// ---------------------------------------------------------------------------
// Centralized (high-rate) side.
// ---------------------------------------------------------------------------

/// Zador functional of a Gaussian density with covariance Σ, as a function
/// of the geometric-mean eigenvalue det_sigma_pow = det(Σ)^{1/d}:
/// 2π · det(Σ)^{1/d} · ((d+2)/d)^{(d+2)/2}.  For isotropic Σ = σ²I pass σ².
[[nodiscard]] inline double zador_gaussian_functional(std::size_t d, double det_sigma_pow) {
    if (d == 0)
        throw std::invalid_argument("zador_gaussian_functional: d must be >= 1");
    if (!(det_sigma_pow > 0.0) || !std::isfinite(det_sigma_pow))
        throw std::invalid_argument("zador_gaussian_functional: det_sigma_pow must be positive");
    const double dd = static_cast<double>(d);
    return 2.0 * std::numbers::pi * det_sigma_pow * std::pow((dd + 2.0) / dd, 0.5 * (dd + 2.0));
}

/// Leading term of the centralized distortion: G · k^{−2/d} · mean_functional.
/// The o(k^{−2/d}) remainder is not modeled.
[[nodiscard]] inline double d1_highrate(std::size_t d, std::uint64_t k, double G,
                                        double mean_functional) {
    if (d == 0 || k == 0)
        throw std::invalid_argument("d1_highrate: d and k must be >= 1");
    if (!(G > 0.0) || !(mean_functional > 0.0))
        throw std::invalid_argument("d1_highrate: G and mean_functional must be positive");
    return G * std::pow(static_cast<double>(k), -2.0 / static_cast<double>(d)) * mean_functional;
}

/// Gaussian specialization: the posterior of the isotropic model has
/// observation-independent covariance σ_{X|Y}²·I, so E[J(Y)] = J.
[[nodiscard]] inline double d1_highrate_gaussian(const GaussianModel& model, std::uint64_t k) {
    const auto G = ZadorConstants::builtin().lookup(model.dim);
    return d1_highrate(model.dim, k, G.value,
                       zador_gaussian_functional(model.dim, model.posterior_var()));
}

/// Scalar coefficient c(y) = (1/12)·(∫ f(x|y)^{1/3} dx)³ by adaptive
/// quadrature over [lo, hi]; D1(k) ≈ c(y)/k² at d = 1.
template <typename Pdf>
[[nodiscard]] double scalar_posterior_coefficient(Pdf&& pdf, double lo, double hi,
                                                  double rel_tol = 1e-10) {
    const QuadratureResult cube_root =
        integrate_adaptive([&](double x) { return std::cbrt(pdf(x)); }, lo, hi, rel_tol);
    return cube_root.value * cube_root.value * cube_root.value / 12.0;
}

// ---------------------------------------------------------------------------
// Decentralized (small-ball) side.
// ---------------------------------------------------------------------------

/// Parameters of an averaged small-ball condition P(W ≤ a) ≤ C·a^α,
/// asserted for 0 ≤ a ≤ a0.
struct SmallBallParams {
    SmallBallParams(double C_, double alpha_, double a0_) : C(C_), alpha(alpha_), a0(a0_) {
        if (!(C > 0.0) || !std::isfinite(C))
            throw std::invalid_argument("SmallBallParams: C must be positive and finite");
        if (!(alpha > 0.0) || !std::isfinite(alpha))
            throw std::invalid_argument("SmallBallParams: alpha must be positive and finite");
        if (!(a0 > 0.0)) // +infinity is allowed: a global condition
            throw std::invalid_argument("SmallBallParams: a0 must be positive");
    }

    double C;
    double alpha;
    double a0;
};

/// Truncation point a* = (1/(C(1+αk)))^{1/α} — the maximizer of
/// a·(1−C·a^α)^k after relaxation, and the bound's admissibility gate.
[[nodiscard]] inline double smallball_truncation_point(const SmallBallParams& p,
                                                       std::uint64_t k) {
    if (k == 0)
        throw std::invalid_argument("smallball_truncation_point: k must be >= 1");
    return std::pow(1.0 / (p.C * (1.0 + p.alpha * static_cast<double>(k))), 1.0 / p.alpha);
}

/// Lower bound on the best-of-k distortion: e^{−1/α}·(1/(C(1+αk)))^{1/α}.
/// Throws std::domain_error when a* exceeds a0 (k too small for an
/// admissible truncation point; nothing is asserted there).
[[nodiscard]] inline double d2_smallball_lower(const SmallBallParams& p, std::uint64_t k) {
    const double a_star = smallball_truncation_point(p, k);
    if (a_star > p.a0)
        throw std::domain_error(
            "d2_smallball_lower: k too small for admissible truncation point (a* = " +
            std::to_string(a_star) + " exceeds a0 = " + std::to_string(p.a0) + ")");
    return std::exp(-1.0 / p.alpha) * a_star;
}

/// Bounded-density specialization: error density ≤ M on the r-ball gives
/// P(W ≤ a) ≤ M·V_d·a^{d/2} for a ≤ r², i.e. α = d/2, C = M·V_d, a0 = r².
[[nodiscard]] inline double d2_bounded_density_lower(std::size_t d, double M, double r,
                                                     std::uint64_t k) {
    if (!(M > 0.0) || !(r > 0.0))
        throw std::invalid_argument("d2_bounded_density_lower: M and r must be positive");
    return d2_smallball_lower(
        SmallBallParams{M * unit_ball_volume(d), 0.5 * static_cast<double>(d), r * r}, k);
}

/// Isotropic-Gaussian specialization.  Conditionally on X the estimator
/// error is Gaussian with covariance σ_G²·I, so the density bound
/// M = (2πσ_G²)^{−d/2} is global (a0 = ∞) and the bound closes to
/// e^{−2/d}·2πσ_G²/(V_d^{2/d}·(1+dk/2)^{2/d}); at d = 1 this is
/// 2πσ_G²/(e²(k+2)²).
[[nodiscard]] inline double gaussian_d2_lower(const GaussianModel& model, std::uint64_t k) {
    if (k == 0)
        throw std::invalid_argument("gaussian_d2_lower: k must be >= 1");
    const double d = static_cast<double>(model.dim);
    const double denom =
        std::pow(unit_ball_volume(model.dim) * (1.0 + 0.5 * d * static_cast<double>(k)),
                 2.0 / d);
    return std::exp(-2.0 / d) * 2.0 * std::numbers::pi * model.sigma_g2() / denom;
}

/// Two-sided small-ball bounds for a radial power-law density: if
/// c_min·‖z‖^β ≤ f(z) ≤ c_max·‖z‖^β near the origin, then for a in the
/// validity range P(W ≤ a) lies in S_d/(d+β)·[c_min, c_max]·a^{(d+β)/2}.
[[nodiscard]] inline std::pair<double, double>
powerlaw_smallball_bounds(std::size_t d, double beta, double c_min, double c_max, double a) {
    if (d == 0)
        throw std::invalid_argument("powerlaw_smallball_bounds: d must be >= 1");
    if (!(beta > -static_cast<double>(d)))
        throw std::invalid_argument(
            "powerlaw_smallball_bounds: beta must exceed -d (the radial integral diverges)");
    if (!(c_min >= 0.0) || !(c_max >= c_min))
        throw std::invalid_argument("powerlaw_smallball_bounds: need 0 <= c_min <= c_max");
    if (!(a >= 0.0))
        throw std::invalid_argument("powerlaw_smallball_bounds: a must be nonnegative");
    const double dpb = static_cast<double>(d) + beta;
    const double shape = unit_sphere_area(d) / dpb * std::pow(a, 0.5 * dpb);
    return {c_min * shape, c_max * shape};
}

/// Normalizing constant c of the density f(z) = c·‖z‖^β on the r_max-ball:
/// c = (d+β)/(S_d·r_max^{d+β}).  With this c the Lemma-style small-ball
/// bounds above hold with equality for every a ≤ r_max².
[[nodiscard]] inline double powerlaw_density_coefficient(std::size_t d, double beta,
                                                         double r_max) {
    if (!(r_max > 0.0))
        throw std::invalid_argument("powerlaw_density_coefficient: r_max must be positive");
    const double dpb = static_cast<double>(d) + beta;
    if (!(dpb > 0.0))
        throw std::invalid_argument("powerlaw_density_coefficient: beta must exceed -d");
    return dpb / (unit_sphere_area(d) * std::pow(r_max, dpb));
}

/// Exact E[min of k i.i.d. W] for the power-law model, via the Beta
/// integral: P(W > a) = 1 − (√a/r_max)^{d+β} gives
/// E = r_max²·Γ(1+q)·k!/Γ(1+q+k) with q = 2/(d+β).
[[nodiscard]] inline double powerlaw_min_expectation(const PowerLawErrorModel& model,
                                                     std::uint64_t k) {
    if (k == 0)
        throw std::invalid_argument("powerlaw_min_expectation: k must be >= 1");
    const double q = 2.0 / (static_cast<double>(model.dim) + model.beta);
    const double kk = static_cast<double>(k);
    return model.r_max * model.r_max *
           std::exp(std::lgamma(1.0 + q) + std::lgamma(kk + 1.0) - std::lgamma(1.0 + q + kk));
}

// ---------------------------------------------------------------------------
// Theory curves (plumbing toward CSV/plots).
// ---------------------------------------------------------------------------

enum class TheoryKind {
    d1_highrate,
    d2_lower_bound,
};

[[nodiscard]] inline std::string to_string(TheoryKind kind) {
    return kind == TheoryKind::d1_highrate ? "d1_highrate" : "d2_lower_bound";
}

struct TheoryCurve {
    TheoryKind kind;
    std::vector<std::pair<std::uint64_t, double>> points;
    std::string params_digest; ///< textual record of every input

    void validate() const {
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (!(points[i].second > 0.0))
                throw std::logic_error("TheoryCurve: values must be positive");
            if (i > 0 && points[i].first <= points[i - 1].first)
                throw std::logic_error("TheoryCurve: k must be strictly increasing");
        }
    }
};

namespace detail {
inline std::string gaussian_digest(const char* kind, const GaussianModel& model) {
    std::ostringstream out;
    out << kind << " d=" << model.dim << " sigma_x2=" << model.sigma_x2
        << " sigma_n2=" << model.sigma_n2;
    return out.str();
}
} // namespace detail

[[nodiscard]] inline TheoryCurve d1_highrate_curve(const GaussianModel& model,
                                                   const std::vector<std::uint64_t>& k_grid) {
    const auto G = ZadorConstants::builtin().lookup(model.dim);
    std::ostringstream digest;
    digest << detail::gaussian_digest("d1_highrate", model) << " G=" << G.value << "("
           << to_string(G.provenance) << ")";
    TheoryCurve curve{TheoryKind::d1_highrate, {}, digest.str()};
    curve.points.reserve(k_grid.size());
    for (const std::uint64_t k : k_grid)
        curve.points.emplace_back(k, d1_highrate_gaussian(model, k));
    curve.validate();
    return curve;
}

[[nodiscard]] inline TheoryCurve gaussian_d2_lower_curve(const GaussianModel& model,
                                                         const std::vector<std::uint64_t>& k_grid) {
    TheoryCurve curve{TheoryKind::d2_lower_bound, {},
                      detail::gaussian_digest("d2_lower_bound", model)};
    curve.points.reserve(k_grid.size());
    for (const std::uint64_t k : k_grid)
        curve.points.emplace_back(k, gaussian_d2_lower(model, k));
    curve.validate();
    return curve;
}

} // namespace klist
