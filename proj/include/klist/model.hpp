// model.hpp — the two error models driving every experiment.
//
// GaussianModel: X ~ N(0, σ_X² I_d), Y = X + N with N ~ N(0, σ_N² I_d)
// independent of X.  All posterior quantities are isotropic and available in
// closed form:
//
//   gain          σ_X² / (σ_X² + σ_N²)           (MMSE estimator is gain·Y)
//   posterior_var σ_X² σ_N² / (σ_X² + σ_N²)      (per coordinate, X | Y)
//   sigma_g2      gain² · σ_N²                   (per-coordinate variance of
//                                                 the estimator error gain·N)
//
// PowerLawErrorModel: an error vector Z supported on the centered ball of
// radius r_max with density proportional to ‖z‖^β, so that
// P(‖Z‖² ≤ a) = (√a / r_max)^{d+β} exactly for 0 ≤ a ≤ r_max².

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "klist/seed.hpp"

namespace klist {

struct GaussianModel {
    GaussianModel(std::size_t dim_, double sigma_x2_, double sigma_n2_)
        : dim(dim_), sigma_x2(sigma_x2_), sigma_n2(sigma_n2_) {
        if (dim == 0)
            throw std::invalid_argument("GaussianModel: dim must be >= 1");
        if (!(sigma_x2 > 0.0) || !std::isfinite(sigma_x2))
            throw std::invalid_argument("GaussianModel: sigma_x2 must be positive and finite");
        if (!(sigma_n2 > 0.0) || !std::isfinite(sigma_n2))
            throw std::invalid_argument("GaussianModel: sigma_n2 must be positive and finite");
    }

    std::size_t dim;
    double sigma_x2; ///< prior variance per coordinate
    double sigma_n2; ///< observation-noise variance per coordinate

    [[nodiscard]] double gain() const noexcept { return sigma_x2 / (sigma_x2 + sigma_n2); }

    [[nodiscard]] double posterior_var() const noexcept {
        return sigma_x2 * sigma_n2 / (sigma_x2 + sigma_n2);
    }

    /// Variance per coordinate of the MMSE estimator's own randomness,
    /// gain²·σ_N²; equals σ_X⁴σ_N²/(σ_X²+σ_N²)² and is invariant under
    /// σ_N² ↔ σ_X⁴/σ_N² (the noise-duality used in the experiments).
    [[nodiscard]] double sigma_g2() const noexcept {
        const double g = gain();
        return g * g * sigma_n2;
    }
};

struct PowerLawErrorModel {
    PowerLawErrorModel(std::size_t dim_, double beta_, double r_max_)
        : dim(dim_), beta(beta_), r_max(r_max_) {
        if (dim == 0)
            throw std::invalid_argument("PowerLawErrorModel: dim must be >= 1");
        // beta ≤ −d makes ∫‖z‖^β near 0 divergent: no such density exists.
        if (!(beta > -static_cast<double>(dim)) || !std::isfinite(beta))
            throw std::invalid_argument("PowerLawErrorModel: beta must be > -dim and finite");
        if (!(r_max > 0.0) || !std::isfinite(r_max))
            throw std::invalid_argument("PowerLawErrorModel: r_max must be positive and finite");
    }

    std::size_t dim;
    double beta;  ///< radial density exponent: f(z) ∝ ‖z‖^β
    double r_max; ///< support radius

    /// P(‖Z‖² ≤ a), exact: clamp((√a/r_max)^{d+β}, 0, 1).
    [[nodiscard]] double sqnorm_cdf(double a) const noexcept {
        if (a <= 0.0)
            return 0.0;
        const double ratio = std::sqrt(a) / r_max;
        if (ratio >= 1.0)
            return 1.0;
        return std::pow(ratio, static_cast<double>(dim) + beta);
    }
};

// ---------------------------------------------------------------------------
// Sampling.  Each operation has a stream-based form (no allocation, for hot
// loops) and a seed-based convenience form.  Draw orders are part of the
// reproducibility contract and never change:
//   sample_prior          d normals
//   sample_observation    d normals (noise only)
//   sample_powerlaw_error 1 uniform (radius), then d normals (direction)
// ---------------------------------------------------------------------------

inline void sample_prior(const GaussianModel& model, RandomStream& stream,
                         std::span<double> out) {
    if (out.size() != model.dim)
        throw std::invalid_argument("sample_prior: output span must have length dim");
    stream.fill_normal(out);
    const double s = std::sqrt(model.sigma_x2);
    for (double& v : out)
        v *= s;
}

[[nodiscard]] inline std::vector<double> sample_prior(const GaussianModel& model,
                                                      const Seed& seed) {
    std::vector<double> x(model.dim);
    RandomStream stream(seed);
    sample_prior(model, stream, x);
    return x;
}

inline void sample_observation(const GaussianModel& model, std::span<const double> x,
                               RandomStream& stream, std::span<double> out) {
    if (x.size() != model.dim || out.size() != model.dim)
        throw std::invalid_argument("sample_observation: spans must have length dim");
    stream.fill_normal(out);
    const double s = std::sqrt(model.sigma_n2);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = x[i] + s * out[i];
}

[[nodiscard]] inline std::vector<double> sample_observation(const GaussianModel& model,
                                                            std::span<const double> x,
                                                            const Seed& seed) {
    std::vector<double> y(model.dim);
    RandomStream stream(seed);
    sample_observation(model, x, stream, y);
    return y;
}

/// Posterior mean E[X | Y = y] = gain · y.
[[nodiscard]] inline std::vector<double> mmse_estimate(const GaussianModel& model,
                                                       std::span<const double> y) {
    if (y.size() != model.dim)
        throw std::invalid_argument("mmse_estimate: y must have length dim");
    std::vector<double> est(y.begin(), y.end());
    const double g = model.gain();
    for (double& v : est)
        v *= g;
    return est;
}

/// Draw Z with density ∝ ‖z‖^β on the r_max-ball: radius r_max·U^{1/(d+β)}
/// by inverse CDF, direction uniform on the sphere via normalised Gaussians.
inline void sample_powerlaw_error(const PowerLawErrorModel& model, RandomStream& stream,
                                  std::span<double> out) {
    if (out.size() != model.dim)
        throw std::invalid_argument("sample_powerlaw_error: output span must have length dim");
    const double u = stream.next_unit();
    const double radius =
        model.r_max * std::pow(u, 1.0 / (static_cast<double>(model.dim) + model.beta));
    double norm2 = 0.0;
    do {
        stream.fill_normal(out);
        norm2 = 0.0;
        for (const double v : out)
            norm2 += v * v;
    } while (norm2 == 0.0); // probability zero; guards the division
    const double scale = radius / std::sqrt(norm2);
    for (double& v : out)
        v *= scale;
}

[[nodiscard]] inline std::vector<double> sample_powerlaw_error(const PowerLawErrorModel& model,
                                                               const Seed& seed) {
    std::vector<double> z(model.dim);
    RandomStream stream(seed);
    sample_powerlaw_error(model, stream, z);
    return z;
}

} // namespace klist
