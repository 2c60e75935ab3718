// montecarlo.hpp — seeded estimators for the two distortion curves, the
// empirical small-ball CDF, and log-log exponent fits.
//
// Protocols (fixed, part of the reproducibility contract):
//
//   estimate_d2        per trial: one X, k conditionally independent
//                      observations Y_i = X + N_i, each mapped through the
//                      MMSE rule; record min_i ‖X − gain·Y_i‖².
//   estimate_d1        fit ONE codebook on the zero-mean posterior
//                      N(0, σ_{X|Y}²·I) (the posterior is a translate of it
//                      for every y), then per trial draw fresh (X, Y) and
//                      evaluate the codebook translated to the posterior
//                      mean — realized as nearest-centroid lookup on the
//                      residual X − gain·Y.
//   estimate_smallball empirical CDF of W = ‖Z‖² on a grid, exponent by
//                      least squares on (log a, log P) over fit_range.
//   estimate_d2_generic min of k i.i.d. error draws per trial (exact
//                      semantics for PowerLawErrorModel; for a Gaussian
//                      model the draws are fully independent, i.e. no
//                      shared X across the k candidates).
//
// Every estimator derives one child stream per trial from its Seed and
// reduces with fixed chunk grids + pairwise summation, so results are
// bit-identical for any worker count.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "klist/model.hpp"
#include "klist/parallel.hpp"
#include "klist/quantizer.hpp"
#include "klist/seed.hpp"

namespace klist {

enum class EstimatorKind {
    centralized_d1,
    decentralized_d2,
};

[[nodiscard]] inline std::string to_string(EstimatorKind kind) {
    return kind == EstimatorKind::centralized_d1 ? "d1" : "d2";
}

struct DistortionEstimate {
    double mean = 0.0;
    double std_err = 0.0; ///< sample standard deviation / √trials
    std::uint64_t trials = 0;
    std::uint64_t k = 0;
    EstimatorKind estimator = EstimatorKind::decentralized_d2;
    std::uint64_t seed_root = 0;
};

struct SmallBallEstimate {
    std::vector<double> a_grid;
    std::vector<double> prob; ///< empirical P(W ≤ a) per grid point
    double fitted_alpha = 0.0;
    std::pair<double, double> fit_range{0.0, 0.0}; ///< (a_lo, a_hi) used by the fit
    std::uint64_t trials = 0;
};

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::pair<std::uint64_t, std::uint64_t> k_range{0, 0};
};

/// Error-law handle for the generic estimators: either the Gaussian
/// observation model (error of the MMSE rule) or the synthetic radial
/// power law.
using ErrorModel = std::variant<GaussianModel, PowerLawErrorModel>;

namespace detail {

inline constexpr std::size_t trial_chunk = 256;
inline constexpr std::size_t cheap_trial_chunk = 8192;

struct MeanStdErr {
    double mean;
    double std_err;
};

// Deterministic mean and standard error; consumes `values` (rewrites them
// with squared deviations).
[[nodiscard]] inline MeanStdErr reduce_mean_stderr(std::vector<double>& values) {
    const auto n = static_cast<double>(values.size());
    const double mean = pairwise_sum(values) / n;
    for (double& v : values) {
        const double dev = v - mean;
        v = dev * dev;
    }
    if (values.size() < 2)
        return {mean, 0.0};
    const double sample_var = pairwise_sum(values) / (n - 1.0);
    return {mean, std::sqrt(sample_var / n)};
}

struct Ols {
    double slope;
    double intercept;
    double r_squared;
};

[[nodiscard]] inline Ols ols_fit(std::span<const double> xs, std::span<const double> ys) {
    const auto n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0)
        throw std::invalid_argument("ols_fit: degenerate abscissae (all equal)");
    const double slope = sxy / sxx;
    const double ss_res = syy - slope * sxy;
    const double r2 = syy == 0.0 ? 1.0 : 1.0 - ss_res / syy;
    return {slope, my - slope * mx, std::clamp(r2, 0.0, 1.0)};
}

[[nodiscard]] inline double squared_norm(std::span<const double> v) noexcept {
    double s = 0.0;
    for (const double x : v)
        s += x * x;
    return s;
}

inline void validate_trials(std::uint64_t trials, std::uint64_t minimum, const char* who) {
    if (trials < minimum)
        throw std::invalid_argument(std::string(who) + ": trials must be >= " +
                                    std::to_string(minimum));
}

} // namespace detail

/// Decentralized benchmark: k agents see conditionally i.i.d. observations
/// of the same X and each answers with its MMSE estimate; the score is the
/// best candidate's squared error.
[[nodiscard]] inline DistortionEstimate estimate_d2(const GaussianModel& model, std::uint64_t k,
                                                    std::uint64_t trials, const Seed& seed) {
    detail::validate_trials(trials, 100, "estimate_d2");
    if (k == 0)
        throw std::invalid_argument("estimate_d2: k must be >= 1");
    const double gain = model.gain();
    std::vector<double> values(trials);
    for_each_chunk(trials, detail::trial_chunk,
                   [&](std::size_t, std::size_t begin, std::size_t end) {
                       std::vector<double> x(model.dim), y(model.dim);
                       for (std::size_t t = begin; t < end; ++t) {
                           RandomStream stream(seed.child_key(t));
                           sample_prior(model, stream, x);
                           double best = std::numeric_limits<double>::infinity();
                           for (std::uint64_t i = 0; i < k; ++i) {
                               sample_observation(model, x, stream, y);
                               double err = 0.0;
                               for (std::size_t j = 0; j < model.dim; ++j) {
                                   const double diff = x[j] - gain * y[j];
                                   err += diff * diff;
                               }
                               best = std::min(best, err);
                           }
                           values[t] = best;
                       }
                   });
    const auto [mean, std_err] = detail::reduce_mean_stderr(values);
    return DistortionEstimate{mean, std_err, trials, k, EstimatorKind::decentralized_d2,
                              seed.root()};
}

/// Centralized estimator: one codebook fitted on the zero-mean posterior,
/// evaluated on fresh (X, Y) pairs against the posterior-mean translate.
/// Stream layout: child(0) = training draws, child(1) = fit, child(2) =
/// evaluation (one grandchild per trial).  An optional warm-start codebook
/// initializes the first restart (see kmeans_fit); `fitted_out`, when given,
/// receives the fitted zero-mean codebook.
[[nodiscard]] inline DistortionEstimate
estimate_d1(const GaussianModel& model, std::uint64_t k, std::uint64_t trials,
            const FitConfig& cfg, const Seed& seed, const Codebook* warm_start = nullptr,
            Codebook* fitted_out = nullptr) {
    detail::validate_trials(trials, 100, "estimate_d1");
    if (k == 0)
        throw std::invalid_argument("estimate_d1: k must be >= 1");
    cfg.validate();
    const std::size_t n_train =
        cfg.n_train.value_or(std::max<std::size_t>(200 * k, 100000));

    std::vector<double> train(n_train * model.dim);
    {
        RandomStream train_stream(seed.child(0));
        train_stream.fill_normal(train);
        const double s = std::sqrt(model.posterior_var());
        for (double& v : train)
            v *= s;
    }
    Codebook codebook = kmeans_fit(train, model.dim, static_cast<std::size_t>(k), cfg,
                                   seed.child(1), warm_start);
    train = std::vector<double>(); // release before the evaluation pass

    CentroidIndex index;
    index.assign(codebook.centroids, codebook.k, codebook.dim);
    const Seed eval_seed = seed.child(2);
    const double gain = model.gain();
    std::vector<double> values(trials);
    for_each_chunk(trials, detail::trial_chunk,
                   [&](std::size_t, std::size_t begin, std::size_t end) {
                       std::vector<double> x(model.dim), y(model.dim), residual(model.dim);
                       std::vector<double> scores;
                       for (std::size_t t = begin; t < end; ++t) {
                           RandomStream stream(eval_seed.child_key(t));
                           sample_prior(model, stream, x);
                           sample_observation(model, x, stream, y);
                           for (std::size_t j = 0; j < model.dim; ++j)
                               residual[j] = x[j] - gain * y[j];
                           values[t] = index.nearest(residual, scores).dist2;
                       }
                   });
    const auto [mean, std_err] = detail::reduce_mean_stderr(values);
    if (fitted_out)
        *fitted_out = std::move(codebook);
    return DistortionEstimate{mean, std_err, trials, k, EstimatorKind::centralized_d1,
                              seed.root()};
}

/// Default CDF grid: 16 log-spaced thresholds below the model's natural
/// squared-error scale (d·σ_G² for the Gaussian model, r_max² for the power
/// law; the power-law grid starts at 10^{-2}×scale so empirical counts stay
/// meaningful for β > 0).
[[nodiscard]] inline std::vector<double> default_a_grid(const ErrorModel& error_model) {
    const bool gaussian = std::holds_alternative<GaussianModel>(error_model);
    double scale, lo_decade;
    if (gaussian) {
        const auto& m = std::get<GaussianModel>(error_model);
        scale = static_cast<double>(m.dim) * m.sigma_g2();
        lo_decade = -4.0;
    } else {
        const auto& m = std::get<PowerLawErrorModel>(error_model);
        scale = m.r_max * m.r_max;
        lo_decade = -2.0;
    }
    constexpr std::size_t points = 16;
    std::vector<double> grid(points);
    for (std::size_t j = 0; j < points; ++j)
        grid[j] = scale * std::pow(10.0, lo_decade * (1.0 - static_cast<double>(j) /
                                                                static_cast<double>(points - 1)));
    return grid;
}

/// Empirical small-ball CDF of W = ‖Z‖² (Z drawn through the X, Y pipeline
/// for the Gaussian model, directly for the power law) plus a log-log
/// exponent fit over fit_range = [a_grid.front(), third-largest grid point].
[[nodiscard]] inline SmallBallEstimate estimate_smallball(const ErrorModel& error_model,
                                                          std::uint64_t trials,
                                                          std::vector<double> a_grid,
                                                          const Seed& seed) {
    detail::validate_trials(trials, 10000, "estimate_smallball");
    if (a_grid.empty())
        throw std::invalid_argument("estimate_smallball: a_grid must be nonempty");
    for (std::size_t j = 0; j < a_grid.size(); ++j)
        if (!(a_grid[j] > 0.0) || (j > 0 && a_grid[j] <= a_grid[j - 1]))
            throw std::invalid_argument("estimate_smallball: a_grid must be increasing and positive");

    const std::size_t grid_size = a_grid.size();
    const std::size_t n_chunks =
        (trials + detail::cheap_trial_chunk - 1) / detail::cheap_trial_chunk;
    std::vector<std::vector<std::uint64_t>> chunk_hist(n_chunks);
    for_each_chunk(
        trials, detail::cheap_trial_chunk, [&](std::size_t c, std::size_t begin, std::size_t end) {
            auto& hist = chunk_hist[c];
            hist.assign(grid_size, 0);
            std::visit(
                [&](const auto& m) {
                    using M = std::decay_t<decltype(m)>;
                    std::vector<double> x(m.dim), y(m.dim), z(m.dim);
                    for (std::size_t t = begin; t < end; ++t) {
                        RandomStream stream(seed.child_key(t));
                        double w;
                        if constexpr (std::is_same_v<M, GaussianModel>) {
                            sample_prior(m, stream, x);
                            sample_observation(m, x, stream, y);
                            const double gain = m.gain();
                            for (std::size_t j = 0; j < m.dim; ++j)
                                z[j] = x[j] - gain * y[j];
                            w = detail::squared_norm(z);
                        } else {
                            sample_powerlaw_error(m, stream, z);
                            w = detail::squared_norm(z);
                        }
                        const auto it = std::lower_bound(a_grid.begin(), a_grid.end(), w);
                        if (it != a_grid.end())
                            hist[static_cast<std::size_t>(it - a_grid.begin())] += 1;
                    }
                },
                error_model);
        });

    std::vector<double> prob(grid_size);
    std::uint64_t cumulative = 0;
    for (std::size_t j = 0; j < grid_size; ++j) {
        for (std::size_t c = 0; c < n_chunks; ++c)
            cumulative += chunk_hist[c][j];
        prob[j] = static_cast<double>(cumulative) / static_cast<double>(trials);
    }

    const std::size_t hi_index = grid_size >= 3 ? grid_size - 3 : grid_size - 1;
    const std::pair<double, double> fit_range{a_grid.front(), a_grid[hi_index]};
    std::vector<double> log_a, log_p;
    for (std::size_t j = 0; j <= hi_index; ++j) {
        if (prob[j] > 0.0) {
            log_a.push_back(std::log(a_grid[j]));
            log_p.push_back(std::log(prob[j]));
        }
    }
    if (log_a.size() < 4)
        throw std::runtime_error(
            "estimate_smallball: grid too deep for trial budget (fewer than 4 grid points "
            "with nonzero empirical probability in the fit range)");
    const auto fit = detail::ols_fit(log_a, log_p);
    return SmallBallEstimate{std::move(a_grid), std::move(prob), fit.slope, fit_range, trials};
}

/// Min-of-k over i.i.d. error draws.  Exact protocol for the power-law
/// model (its k candidate errors are i.i.d. by construction); for a
/// Gaussian model each draw uses a fresh (X, N) pair, so the k errors are
/// fully independent — unlike estimate_d2, which shares X across agents.
[[nodiscard]] inline DistortionEstimate estimate_d2_generic(const ErrorModel& error_model,
                                                            std::uint64_t k, std::uint64_t trials,
                                                            const Seed& seed) {
    detail::validate_trials(trials, 100, "estimate_d2_generic");
    if (k == 0)
        throw std::invalid_argument("estimate_d2_generic: k must be >= 1");
    std::vector<double> values(trials);
    for_each_chunk(
        trials, detail::trial_chunk, [&](std::size_t, std::size_t begin, std::size_t end) {
            std::visit(
                [&](const auto& m) {
                    using M = std::decay_t<decltype(m)>;
                    std::vector<double> x(m.dim), y(m.dim), z(m.dim);
                    for (std::size_t t = begin; t < end; ++t) {
                        RandomStream stream(seed.child_key(t));
                        double best = std::numeric_limits<double>::infinity();
                        for (std::uint64_t i = 0; i < k; ++i) {
                            if constexpr (std::is_same_v<M, GaussianModel>) {
                                sample_prior(m, stream, x);
                                sample_observation(m, x, stream, y);
                                const double gain = m.gain();
                                for (std::size_t j = 0; j < m.dim; ++j)
                                    z[j] = x[j] - gain * y[j];
                            } else {
                                sample_powerlaw_error(m, stream, z);
                            }
                            best = std::min(best, detail::squared_norm(z));
                        }
                        values[t] = best;
                    }
                },
                error_model);
        });
    const auto [mean, std_err] = detail::reduce_mean_stderr(values);
    return DistortionEstimate{mean, std_err, trials, k, EstimatorKind::decentralized_d2,
                              seed.root()};
}

/// Ordinary least squares on (ln k, ln value) over the points with k in
/// [k_lo, k_hi].  Requires ≥ 4 points in range, all values positive.
[[nodiscard]] inline SlopeFit
fit_loglog_slope(const std::vector<std::pair<std::uint64_t, double>>& points, std::uint64_t k_lo,
                 std::uint64_t k_hi) {
    std::vector<double> xs, ys;
    for (const auto& [k, value] : points) {
        if (k < k_lo || k > k_hi)
            continue;
        if (!(value > 0.0))
            throw std::invalid_argument("fit_loglog_slope: nonpositive value at k=" +
                                        std::to_string(k));
        xs.push_back(std::log(static_cast<double>(k)));
        ys.push_back(std::log(value));
    }
    if (xs.size() < 4)
        throw std::invalid_argument("fit_loglog_slope: need >= 4 points within k_range");
    const auto fit = detail::ols_fit(xs, ys);
    return SlopeFit{fit.slope, fit.intercept, fit.r_squared, {k_lo, k_hi}};
}

} // namespace klist
