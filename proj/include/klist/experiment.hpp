// experiment.hpp — sweep orchestration: run the (d, σ_N, k) grid, join the
// empirical estimates with the closed-form curves, and emit CSV + SVG + a
// manifest.  Output is deterministic for a fixed spec: seeds derive from
// (seed_root, estimator, d, σ-index, k), rows are ordered by
// (estimator, d, sigma_n, k), files are written atomically, and the
// manifest carries no timestamps.

#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "klist/csv.hpp"
#include "klist/model.hpp"
#include "klist/montecarlo.hpp"
#include "klist/svg.hpp"
#include "klist/theory.hpp"

namespace klist {

inline constexpr std::string_view klist_version = "0.1.0";

/// Powers of two from 1 to 1024: 11 points, an even log covering of the
/// plotted 1..10³ range.
[[nodiscard]] inline std::vector<std::uint64_t> default_k_grid() {
    std::vector<std::uint64_t> grid;
    for (std::uint64_t k = 1; k <= 1024; k *= 2)
        grid.push_back(k);
    return grid;
}

struct ExperimentSpec {
    std::vector<std::size_t> dims{1, 4, 10};
    double sigma_x = 1.0;
    std::vector<double> sigma_n_list{0.2, 1.0, 5.0};
    std::vector<std::uint64_t> k_grid = default_k_grid();
    std::uint64_t trials_d1 = 100000;
    std::uint64_t trials_d2 = 100000;
    FitConfig fit{};
    std::uint64_t seed_root = 1;
    std::filesystem::path out_dir = "results";
    bool emit_plots = true;

    void validate() const {
        if (dims.empty())
            throw std::invalid_argument("ExperimentSpec.dims: must be nonempty");
        for (const std::size_t d : dims)
            if (d == 0)
                throw std::invalid_argument("ExperimentSpec.dims: entries must be >= 1");
        if (!(sigma_x > 0.0))
            throw std::invalid_argument("ExperimentSpec.sigma_x: must be positive");
        if (sigma_n_list.empty())
            throw std::invalid_argument("ExperimentSpec.sigma_n_list: must be nonempty");
        for (const double s : sigma_n_list)
            if (!(s > 0.0))
                throw std::invalid_argument("ExperimentSpec.sigma_n_list: entries must be positive");
        if (k_grid.empty())
            throw std::invalid_argument("ExperimentSpec.k_grid: must be nonempty");
        for (std::size_t i = 0; i < k_grid.size(); ++i) {
            if (k_grid[i] == 0)
                throw std::invalid_argument("ExperimentSpec.k_grid: entries must be >= 1");
            if (i > 0 && k_grid[i] <= k_grid[i - 1])
                throw std::invalid_argument("ExperimentSpec.k_grid: must be strictly increasing");
        }
        if (trials_d1 < 100)
            throw std::invalid_argument("ExperimentSpec.trials_d1: must be >= 100");
        if (trials_d2 < 100)
            throw std::invalid_argument("ExperimentSpec.trials_d2: must be >= 100");
        try {
            fit.validate();
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("ExperimentSpec.fit: " + std::string(e.what()));
        }
        if (out_dir.empty())
            throw std::invalid_argument("ExperimentSpec.out_dir: must be nonempty");
    }
};

namespace detail {

// Fixed estimator tags for seed derivation (stable across releases).
inline constexpr std::uint64_t d1_seed_tag = 1;
inline constexpr std::uint64_t d2_seed_tag = 2;

[[nodiscard]] inline Seed cell_seed(std::uint64_t root, std::uint64_t estimator_tag,
                                    std::size_t d, std::size_t sigma_index, std::uint64_t k) {
    return Seed(root).child(estimator_tag).child(d).child(sigma_index).child(k);
}

[[nodiscard]] inline std::optional<double> try_d2_lower(const GaussianModel& model,
                                                        std::uint64_t k) {
    // The Gaussian bound is always admissible; the guard mirrors the policy
    // that an inadmissible bound leaves the column empty rather than zero.
    try {
        return gaussian_d2_lower(model, k);
    } catch (const std::domain_error&) {
        return std::nullopt;
    }
}

[[nodiscard]] inline std::string manifest_text(const ExperimentSpec& spec) {
    std::ostringstream out;
    out << "tool: klist " << klist_version << "\n";
    out << "dims:";
    for (const auto d : spec.dims)
        out << " " << d;
    out << "\nsigma_x: " << format_double(spec.sigma_x) << "\nsigma_n_list:";
    for (const double s : spec.sigma_n_list)
        out << " " << format_double(s);
    out << "\nk_grid:";
    for (const auto k : spec.k_grid)
        out << " " << k;
    out << "\ntrials_d1: " << spec.trials_d1 << "\ntrials_d2: " << spec.trials_d2;
    out << "\nfit.n_train: "
        << (spec.fit.n_train ? std::to_string(*spec.fit.n_train) : std::string("auto"));
    out << "\nfit.max_iters: " << spec.fit.max_iters;
    out << "\nfit.rel_tol: " << format_double(spec.fit.rel_tol);
    out << "\nfit.restarts: " << spec.fit.restarts;
    out << "\nfit.empty_cell_policy: respawn_at_farthest_point";
    out << "\nseed_root: " << spec.seed_root;
    out << "\nemit_plots: " << (spec.emit_plots ? "true" : "false") << "\n";
    return out.str();
}

} // namespace detail

std::vector<std::filesystem::path> render_plots(const std::filesystem::path& csv_path,
                                                const std::filesystem::path& out_dir);

/// Run the full sweep.  For every (d, σ_N, k): one "d1" row (centralized
/// estimate + high-rate leading term) and one "d2" row (decentralized
/// benchmark + small-ball lower bound).  The centralized fits chain warm
/// starts up the k-grid within each (d, σ_N) cell, which keeps the fitted
/// distortion monotone in k.  Returns the results CSV path.
[[nodiscard]] inline std::filesystem::path run_experiment(const ExperimentSpec& spec) {
    spec.validate();
    std::filesystem::create_directories(spec.out_dir);

    std::vector<ResultRow> rows;
    rows.reserve(2 * spec.dims.size() * spec.sigma_n_list.size() * spec.k_grid.size());
    for (const std::size_t d : spec.dims) {
        for (std::size_t si = 0; si < spec.sigma_n_list.size(); ++si) {
            const double sigma_n = spec.sigma_n_list[si];
            const GaussianModel model(d, spec.sigma_x * spec.sigma_x, sigma_n * sigma_n);

            Codebook previous;
            for (const std::uint64_t k : spec.k_grid) {
                const Codebook* warm = previous.k > 0 ? &previous : nullptr;
                Codebook fitted;
                const DistortionEstimate d1 = estimate_d1(
                    model, k, spec.trials_d1, spec.fit,
                    detail::cell_seed(spec.seed_root, detail::d1_seed_tag, d, si, k), warm,
                    &fitted);
                previous = std::move(fitted);
                rows.push_back(ResultRow{to_string(d1.estimator), d, spec.sigma_x, sigma_n, k,
                                         d1.trials, d1.mean, d1.std_err,
                                         d1_highrate_gaussian(model, k),
                                         to_string(TheoryKind::d1_highrate), spec.seed_root});
            }
            for (const std::uint64_t k : spec.k_grid) {
                const DistortionEstimate d2 = estimate_d2(
                    model, k, spec.trials_d2,
                    detail::cell_seed(spec.seed_root, detail::d2_seed_tag, d, si, k));
                rows.push_back(ResultRow{to_string(d2.estimator), d, spec.sigma_x, sigma_n, k,
                                         d2.trials, d2.mean, d2.std_err,
                                         detail::try_d2_lower(model, k),
                                         to_string(TheoryKind::d2_lower_bound), spec.seed_root});
            }
        }
    }
    std::sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
        return std::tie(a.estimator, a.d, a.sigma_n, a.k) <
               std::tie(b.estimator, b.d, b.sigma_n, b.k);
    });

    const std::filesystem::path csv_path = spec.out_dir / "results.csv";
    atomic_write_file(csv_path, to_csv(rows));
    atomic_write_file(spec.out_dir / "manifest.txt", detail::manifest_text(spec));
    if (spec.emit_plots)
        render_plots(csv_path, spec.out_dir);
    return csv_path;
}

/// One log-log figure per dimension: empirical D1/D2 (markers carrying the
/// CSV values) and the two theory curves, per σ_N.  Returns the SVG paths.
inline std::vector<std::filesystem::path> render_plots(const std::filesystem::path& csv_path,
                                                       const std::filesystem::path& out_dir) {
    const std::vector<ResultRow> rows = read_result_csv(csv_path);
    if (rows.empty())
        throw std::runtime_error("render_plots: " + csv_path.string() + " holds no data rows");
    std::filesystem::create_directories(out_dir);

    std::map<std::size_t, std::vector<const ResultRow*>> by_dim;
    for (const ResultRow& row : rows)
        by_dim[row.d].push_back(&row);

    static const std::vector<std::string> palette{"#1f77b4", "#d62728", "#2ca02c",
                                                  "#9467bd", "#ff7f0e", "#8c564b"};
    std::vector<std::filesystem::path> written;
    for (const auto& [d, dim_rows] : by_dim) {
        std::vector<double> sigmas;
        for (const ResultRow* row : dim_rows)
            if (std::find(sigmas.begin(), sigmas.end(), row->sigma_n) == sigmas.end())
                sigmas.push_back(row->sigma_n);
        std::sort(sigmas.begin(), sigmas.end());

        SvgPlot plot;
        plot.title = "best-of-k distortion, d = " + std::to_string(d);
        for (std::size_t si = 0; si < sigmas.size(); ++si) {
            const std::string& color = palette[si % palette.size()];
            const std::string suffix = " (sigma_n=" + format_double(sigmas[si]) + ")";
            SvgSeries d1_emp{"D1 empirical" + suffix, color, "", true, {}};
            SvgSeries d2_emp{"D2 empirical" + suffix, color, "7,3", true, {}};
            SvgSeries d1_thy{"D1 leading term" + suffix, color, "2,2", false, {}};
            SvgSeries d2_thy{"D2 lower bound" + suffix, color, "10,3,2,3", false, {}};
            for (const ResultRow* row : dim_rows) {
                if (row->sigma_n != sigmas[si])
                    continue;
                const auto point = std::make_pair(static_cast<double>(row->k), row->mean);
                if (row->estimator == "d1") {
                    d1_emp.points.push_back(point);
                    if (row->theory_value)
                        d1_thy.points.emplace_back(static_cast<double>(row->k),
                                                   *row->theory_value);
                } else {
                    d2_emp.points.push_back(point);
                    if (row->theory_value)
                        d2_thy.points.emplace_back(static_cast<double>(row->k),
                                                   *row->theory_value);
                }
            }
            for (auto* series : {&d1_emp, &d2_emp, &d1_thy, &d2_thy}) {
                std::sort(series->points.begin(), series->points.end());
                if (!series->points.empty())
                    plot.series.push_back(std::move(*series));
            }
        }
        const std::filesystem::path path = out_dir / ("fig_d" + std::to_string(d) + ".svg");
        atomic_write_file(path, render_loglog_svg(plot));
        written.push_back(path);
    }
    return written;
}

// ---------------------------------------------------------------------------
// Small-ball runs.
// ---------------------------------------------------------------------------

enum class SmallBallModelKind { gaussian, powerlaw };

struct SmallBallSpec {
    SmallBallModelKind model = SmallBallModelKind::gaussian;
    std::size_t d = 1;
    double sigma_x = 1.0; ///< gaussian only
    double sigma_n = 1.0; ///< gaussian only
    double beta = 1.0;    ///< powerlaw only
    double r_max = 1.0;   ///< powerlaw only
    std::uint64_t trials = 1000000;
    std::vector<double> a_grid; ///< empty = model-dependent default
    std::uint64_t seed_root = 1;
    std::filesystem::path out_dir = "results";

    [[nodiscard]] ErrorModel error_model() const {
        if (model == SmallBallModelKind::gaussian)
            return GaussianModel(d, sigma_x * sigma_x, sigma_n * sigma_n);
        return PowerLawErrorModel(d, beta, r_max);
    }
};

inline constexpr std::string_view smallball_csv_header =
    "model,d,beta,a,prob_empirical,bound_lower,bound_upper,fitted_alpha,alpha_theory";

/// Estimate the small-ball CDF for the selected model and write one CSV row
/// per grid point, joining the empirical probabilities with the two-sided
/// theory bounds (exact for the power law with c_min = c_max; for the
/// Gaussian, the upper bound uses the conditional density cap
/// (2πσ_G²)^{−d/2} and the lower bound the unconditional error density's
/// minimum over the ball).  Returns the CSV path.
[[nodiscard]] inline std::filesystem::path run_smallball(const SmallBallSpec& spec) {
    const ErrorModel error_model = spec.error_model();
    std::filesystem::create_directories(spec.out_dir);
    const std::vector<double> grid =
        spec.a_grid.empty() ? default_a_grid(error_model) : spec.a_grid;
    const SmallBallEstimate est =
        estimate_smallball(error_model, spec.trials, grid, Seed(spec.seed_root));

    const bool gaussian = spec.model == SmallBallModelKind::gaussian;
    const double alpha_theory = gaussian
                                    ? 0.5 * static_cast<double>(spec.d)
                                    : 0.5 * (static_cast<double>(spec.d) + spec.beta);
    std::string out{smallball_csv_header};
    out.push_back('\n');
    for (std::size_t j = 0; j < est.a_grid.size(); ++j) {
        const double a = est.a_grid[j];
        double lo, hi;
        if (gaussian) {
            const auto& m = std::get<GaussianModel>(error_model);
            const double two_pi = 2.0 * std::numbers::pi;
            const double half_d = 0.5 * static_cast<double>(m.dim);
            const double c_max = std::pow(two_pi * m.sigma_g2(), -half_d);
            const double c_min = std::pow(two_pi * m.posterior_var(), -half_d) *
                                 std::exp(-a / (2.0 * m.posterior_var()));
            std::tie(lo, hi) = powerlaw_smallball_bounds(m.dim, 0.0, c_min, c_max, a);
        } else {
            const auto& m = std::get<PowerLawErrorModel>(error_model);
            const double c = powerlaw_density_coefficient(m.dim, m.beta, m.r_max);
            std::tie(lo, hi) = powerlaw_smallball_bounds(m.dim, m.beta, c, c, a);
        }
        out += gaussian ? "gaussian" : "powerlaw";
        out += ',' + std::to_string(spec.d);
        out += ',' + (gaussian ? std::string{} : format_double(spec.beta));
        out += ',' + format_double(a);
        out += ',' + format_double(est.prob[j]);
        out += ',' + format_double(lo);
        out += ',' + format_double(hi);
        out += ',' + format_double(est.fitted_alpha);
        out += ',' + format_double(alpha_theory);
        out.push_back('\n');
    }
    const std::string stem = gaussian ? "smallball_gaussian_d" + std::to_string(spec.d)
                                      : "smallball_powerlaw_d" + std::to_string(spec.d) +
                                            "_beta" + format_double(spec.beta);
    const std::filesystem::path path = spec.out_dir / (stem + ".csv");
    atomic_write_file(path, out);
    return path;
}

} // namespace klist
