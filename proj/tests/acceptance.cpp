// acceptance.cpp — end-to-end acceptance checks for the klist library.
//
// Each criterion prints exactly one line:
//
//   [PASS] 04 benchmark-above-bound (54/54 cells above bound - 3*stderr; 38.1 s)
//
// and the process exits with the number of failed criteria.  The checks mix
// exact closed-form identities, property tests with pinned tolerance bands,
// and full-pipeline determinism; tolerances are fixed here on purpose so a
// regression shows up as a FAIL, not as a silently wider band.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "klist/experiment.hpp"
#include "klist/model.hpp"
#include "klist/montecarlo.hpp"
#include "klist/quantizer.hpp"
#include "klist/seed.hpp"
#include "klist/theory.hpp"

using namespace klist;

namespace {

struct Outcome {
    bool ok = false;
    std::string detail;
};

std::string fmt(const char* format, ...) {
    char buffer[512];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buffer, sizeof(buffer), format, args);
    va_end(args);
    return buffer;
}

// Results shared between criteria so the expensive sweeps run once.
struct SharedState {
    // (dim, sigma index, k) -> decentralized estimate at 1e5 trials.
    std::map<std::tuple<std::size_t, std::size_t, std::uint64_t>, DistortionEstimate> d2_table;
    // Centralized curve per dimension at sigma_n = 1: (k, mean).
    std::map<std::size_t, std::vector<std::pair<std::uint64_t, double>>> d1_curves;
    double d1_slope_dim1 = 0.0; // measured centralized exponent at d = 1
};

const std::vector<std::size_t> kDims{1, 4, 10};
const std::vector<double> kSigmas{0.2, 1.0, 5.0};
const std::vector<std::uint64_t> kBenchmarkK{1, 4, 16, 64, 256, 1024};
const std::vector<std::uint64_t> kCurveK{64, 128, 256, 512, 1024};

// --------------------------------------------------------------- criterion 1
Outcome scalar_closed_form_identity() {
    RandomStream stream(Seed(11));
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
        const double var = 0.01 * std::exp(stream.next_unit() * std::log(1e4));
        const std::uint64_t k = 1 + stream.next_below(1000000);
        const double lhs = d1_highrate(1, k, 1.0 / 12.0, zador_gaussian_functional(1, var));
        const double rhs = std::sqrt(3.0) * std::numbers::pi / 2.0 * var /
                           (static_cast<double>(k) * static_cast<double>(k));
        worst = std::max(worst, std::abs(lhs - rhs) / rhs);
    }
    return {worst <= 1e-12, fmt("max rel err %.2e over 20 draws", worst)};
}

// --------------------------------------------------------------- criterion 2
Outcome functional_quadrature_cross_check() {
    double worst = 0.0;
    for (const double var : {0.1, 0.5, 1.0, 4.0}) {
        const auto pdf = [var](double x) {
            return std::exp(-0.5 * x * x / var) / std::sqrt(2.0 * std::numbers::pi * var);
        };
        const double half_range = 16.0 * std::sqrt(var);
        const double cubed =
            12.0 * scalar_posterior_coefficient(pdf, -half_range, half_range, 1e-9);
        const double closed = zador_gaussian_functional(1, var);
        worst = std::max(worst, std::abs(cubed - closed) / closed);
    }
    return {worst <= 1e-6, fmt("max rel err %.2e over 4 variances", worst)};
}

// --------------------------------------------------------------- criterion 3
Outcome relaxed_maximizer() {
    RandomStream stream(Seed(13));
    int grid_hits = 0, bound_holds = 0;
    const int trials = 50, grid_points = 2001, center = (grid_points - 1) / 2;
    for (int t = 0; t < trials; ++t) {
        const double C = 0.1 * std::exp(stream.next_unit() * std::log(100.0));
        const double alpha = 0.25 * std::exp(stream.next_unit() * std::log(16.0));
        const std::uint64_t k = 1 + stream.next_below(10000);
        const SmallBallParams p{C, alpha, std::numeric_limits<double>::infinity()};
        const double a_star = smallball_truncation_point(p, k);

        // Scan a(1 - C a^alpha)_+^k on a log grid spanning a*/10 .. 10 a*.
        const auto objective = [&](double a) {
            const double base = 1.0 - C * std::pow(a, alpha);
            return base <= 0.0 ? 0.0 : a * std::pow(base, static_cast<double>(k));
        };
        int argmax = 0;
        double best = -1.0;
        for (int j = 0; j < grid_points; ++j) {
            const double a =
                a_star * std::pow(10.0, (j - center) / static_cast<double>(center));
            const double value = objective(a);
            if (value > best) {
                best = value;
                argmax = j;
            }
        }
        grid_hits += std::abs(argmax - center) <= 1 ? 1 : 0;
        bound_holds +=
            objective(a_star) >= d2_smallball_lower(p, k) * (1.0 - 1e-9) ? 1 : 0;
    }
    return {grid_hits == trials && bound_holds == trials,
            fmt("%d/%d grid maximizers within one step, %d/%d bound inequalities hold",
                grid_hits, trials, bound_holds, trials)};
}

// --------------------------------------------------------------- criterion 4
Outcome benchmark_above_bound(SharedState& shared) {
    int cells = 0, ok_cells = 0;
    double worst_margin = std::numeric_limits<double>::infinity();
    for (const std::size_t d : kDims) {
        for (std::size_t si = 0; si < kSigmas.size(); ++si) {
            const GaussianModel model(d, 1.0, kSigmas[si] * kSigmas[si]);
            for (const std::uint64_t k : kBenchmarkK) {
                const Seed seed = Seed(4).child(d).child(si).child(k);
                const DistortionEstimate est = estimate_d2(model, k, 100000, seed);
                shared.d2_table.emplace(std::make_tuple(d, si, k), est);
                const double bound = gaussian_d2_lower(model, k);
                const double margin = (est.mean - bound) / est.std_err;
                worst_margin = std::min(worst_margin, margin);
                ++cells;
                ok_cells += est.mean >= bound - 3.0 * est.std_err ? 1 : 0;
            }
        }
    }
    return {ok_cells == cells,
            fmt("%d/%d cells above bound - 3*stderr (worst margin %+.1f sigma)", ok_cells,
                cells, worst_margin)};
}

// --------------------------------------------------------------- criterion 5
Outcome k1_coincidence(const SharedState& shared) {
    int cells = 0, ok_cells = 0;
    double worst = 0.0;
    for (const std::size_t d : kDims) {
        for (std::size_t si = 0; si < kSigmas.size(); ++si) {
            const GaussianModel model(d, 1.0, kSigmas[si] * kSigmas[si]);
            FitConfig cfg;
            cfg.restarts = 1;
            const DistortionEstimate d1 =
                estimate_d1(model, 1, 100000, cfg, Seed(5).child(d).child(si));
            const DistortionEstimate d2 = shared.d2_table.at(std::make_tuple(d, si, 1ull));
            const double mmse = static_cast<double>(d) * model.posterior_var();
            const double coincide =
                std::abs(d1.mean - d2.mean) / std::hypot(d1.std_err, d2.std_err);
            const double dev1 = std::abs(d1.mean - mmse) / d1.std_err;
            const double dev2 = std::abs(d2.mean - mmse) / d2.std_err;
            worst = std::max({worst, coincide, dev1, dev2});
            ++cells;
            ok_cells += (coincide <= 3.0 && dev1 <= 3.0 && dev2 <= 3.0) ? 1 : 0;
        }
    }
    return {ok_cells == cells,
            fmt("%d/%d cells coincide with the MMSE risk (worst deviation %.2f sigma)",
                ok_cells, cells, worst)};
}

// --------------------------------------------------------------- criterion 6
Outcome centralized_exponents(SharedState& shared) {
    const std::map<std::size_t, std::pair<double, double>> bands{
        {1, {-2.15, -1.85}}, {4, {-0.60, -0.40}}, {10, {-0.28, -0.12}}};
    bool all_ok = true;
    std::string detail;
    for (const std::size_t d : kDims) {
        const GaussianModel model(d, 1.0, 1.0);
        // At d=1 the constant-tracking band (criterion 7) is the binding
        // check, and fresh-sample distortion at the default 200 training
        // samples per cell is dominated by overfitted tail cells (measured
        // ~1.8x the leading term at k=1024).  Give the scalar fits ~1000
        // samples per cell and a deep iteration budget; the exponent bands
        // at d=4 and d=10 are wide enough for the cheaper warm-chained
        // defaults.
        Codebook previous;
        auto& points = shared.d1_curves[d];
        for (const std::uint64_t k : kCurveK) {
            FitConfig cfg;
            const Codebook* warm = nullptr;
            if (d == 1) {
                cfg.restarts = 1;
                cfg.max_iters = 1500;
                cfg.rel_tol = 1e-8;
                cfg.n_train = std::max<std::size_t>(1000 * k, 100000);
            } else {
                cfg.restarts = 2;
                cfg.rel_tol = 1e-5;
                warm = previous.k > 0 ? &previous : nullptr;
            }
            Codebook fitted;
            const DistortionEstimate est = estimate_d1(
                model, k, 20000, cfg, Seed(6).child(d).child(k), warm, &fitted);
            previous = std::move(fitted);
            points.emplace_back(k, est.mean);
        }
        const SlopeFit fit = fit_loglog_slope(points, kCurveK.front(), kCurveK.back());
        if (d == 1)
            shared.d1_slope_dim1 = fit.slope;
        const auto [lo, hi] = bands.at(d);
        const bool ok = fit.slope >= lo && fit.slope <= hi;
        all_ok = all_ok && ok;
        detail += fmt("%sd=%zu slope %.3f in [%.2f, %.2f]%s", detail.empty() ? "" : ", ", d,
                      fit.slope, lo, hi, ok ? "" : " VIOLATED");
    }
    return {all_ok, detail};
}

// --------------------------------------------------------------- criterion 7
Outcome centralized_constant_tracking(const SharedState& shared) {
    const GaussianModel model(1, 1.0, 1.0);
    const auto& points = shared.d1_curves.at(1);
    const auto it = std::find_if(points.begin(), points.end(),
                                 [](const auto& p) { return p.first == 1024; });
    if (it == points.end())
        return {false, "no k=1024 centralized estimate available"};
    const double ratio = it->second / d1_highrate_gaussian(model, 1024);
    return {ratio >= 0.95 && ratio <= 1.35,
            fmt("empirical/leading-term ratio %.4f at k=1024 (band [0.95, 1.35])", ratio)};
}

// --------------------------------------------------------------- criterion 8
Outcome smallball_exponents() {
    struct Case {
        ErrorModel model;
        double target;
        const char* label;
    };
    const std::vector<Case> cases{
        {GaussianModel(1, 1.0, 1.0), 0.5, "gauss d=1"},
        {GaussianModel(2, 1.0, 1.0), 1.0, "gauss d=2"},
        {PowerLawErrorModel(1, 1.0, 1.0), 1.0, "power d=1 b=1"},
        {PowerLawErrorModel(1, 2.0, 1.0), 1.5, "power d=1 b=2"},
    };
    bool all_ok = true;
    std::string detail;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const auto est = estimate_smallball(cases[i].model, 1000000,
                                            default_a_grid(cases[i].model), Seed(8).child(i));
        const bool ok = std::abs(est.fitted_alpha - cases[i].target) <= 0.1;
        all_ok = all_ok && ok;
        detail += fmt("%s%s alpha %.3f (target %.1f)%s", detail.empty() ? "" : ", ",
                      cases[i].label, est.fitted_alpha, cases[i].target,
                      ok ? "" : " VIOLATED");
    }
    return {all_ok, detail};
}

// --------------------------------------------------------------- criterion 9
Outcome vanishing_density_separation(const SharedState& shared) {
    const PowerLawErrorModel model(1, 1.0, 1.0);
    std::vector<std::pair<std::uint64_t, double>> points;
    for (const std::uint64_t k : {8ull, 16ull, 32ull, 64ull, 128ull, 256ull, 512ull}) {
        const auto est = estimate_d2_generic(ErrorModel{model}, k, 100000, Seed(9).child(k));
        points.emplace_back(k, est.mean);
    }
    const SlopeFit fit = fit_loglog_slope(points, 8, 512);
    const bool slope_ok = std::abs(fit.slope - (-1.0)) <= 0.1;
    // Strictly shallower than the measured centralized d = 1 exponent.
    const bool separated = fit.slope > shared.d1_slope_dim1 + 0.5;

    const PowerLawErrorModel uniform(1, 0.0, 1.0);
    const auto check = estimate_d2_generic(ErrorModel{uniform}, 3, 100000, Seed(9).child(99));
    const double exact = powerlaw_min_expectation(uniform, 3); // 2/((k+1)(k+2)) = 0.1
    const bool oracle_ok = std::abs(check.mean - exact) <= 3.0 * check.std_err;
    return {slope_ok && separated && oracle_ok,
            fmt("slope %.3f (target -1.0; centralized %.3f), beta=0 oracle off by %.2f sigma",
                fit.slope, shared.d1_slope_dim1,
                std::abs(check.mean - exact) / check.std_err)};
}

// -------------------------------------------------------------- criterion 10
Outcome noise_duality(const SharedState& shared) {
    const GaussianModel low(1, 1.0, 0.04), high(1, 1.0, 25.0);
    double worst_rel = 0.0;
    for (const std::uint64_t k : default_k_grid()) {
        const double a = gaussian_d2_lower(low, k);
        const double b = gaussian_d2_lower(high, k);
        worst_rel = std::max(worst_rel, std::abs(a - b) / a);
    }
    const bool theory_ok = worst_rel <= 1e-14;

    const auto& emp_low = shared.d2_table.at(std::make_tuple(std::size_t{1}, std::size_t{0},
                                                             std::uint64_t{16}));
    const auto& emp_high = shared.d2_table.at(std::make_tuple(std::size_t{1}, std::size_t{2},
                                                              std::uint64_t{16}));
    const double gap = std::abs(emp_low.mean - emp_high.mean) /
                       std::hypot(emp_low.std_err, emp_high.std_err);
    return {theory_ok && gap > 10.0,
            fmt("bound curves differ by %.1e rel; empirical means %.1f sigma apart at k=16",
                worst_rel, gap)};
}

// -------------------------------------------------------------- criterion 11
Outcome determinism() {
    namespace fs = std::filesystem;
    const fs::path root = "acceptance_out";
    fs::remove_all(root);

    ExperimentSpec spec;
    spec.dims = kDims;
    spec.sigma_n_list = kSigmas;
    spec.k_grid = default_k_grid();
    spec.trials_d1 = 2000;
    spec.trials_d2 = 2000;
    spec.fit.n_train = 4096;
    spec.fit.restarts = 2;
    spec.fit.rel_tol = 1e-5;
    spec.seed_root = 77;
    spec.out_dir = root / "a";
    spec.emit_plots = true;
    const fs::path csv_a = run_experiment(spec);

    spec.out_dir = root / "b";
    spec.emit_plots = false;
    const fs::path csv_b = run_experiment(spec);

    const auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream out;
        out << in.rdbuf();
        return out.str();
    };
    const std::string text_a = slurp(csv_a), text_b = slurp(csv_b);
    const bool bytes_equal = !text_a.empty() && text_a == text_b;
    bool figures = true;
    for (const std::size_t d : kDims)
        figures = figures && fs::exists(root / "a" / ("fig_d" + std::to_string(d) + ".svg"));
    return {bytes_equal && figures,
            fmt("rerun CSV byte-identical (%zu bytes), figures %s", text_a.size(),
                figures ? "present" : "MISSING")};
}

} // namespace

int main() {
    SharedState shared;
    struct Entry {
        const char* name;
        std::function<Outcome()> run;
        double time_limit = 0.0; ///< 0 = unconstrained
    };
    const std::vector<Entry> criteria{
        {"scalar-closed-form-identity", [] { return scalar_closed_form_identity(); }, 1.0},
        {"functional-quadrature-cross-check", [] { return functional_quadrature_cross_check(); },
         5.0},
        {"relaxed-maximizer", [] { return relaxed_maximizer(); }, 10.0},
        {"benchmark-above-bound", [&] { return benchmark_above_bound(shared); }},
        {"k1-coincidence", [&] { return k1_coincidence(shared); }},
        {"centralized-exponents", [&] { return centralized_exponents(shared); }},
        {"centralized-constant-tracking", [&] { return centralized_constant_tracking(shared); }},
        {"smallball-exponents", [] { return smallball_exponents(); }},
        {"vanishing-density-separation", [&] { return vanishing_density_separation(shared); }},
        {"noise-duality", [&] { return noise_duality(shared); }},
        {"determinism", [] { return determinism(); }},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = criteria[i].run();
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (outcome.ok && criteria[i].time_limit > 0.0 && seconds > criteria[i].time_limit) {
            outcome.ok = false;
            outcome.detail += fmt("; exceeded %.0f s budget", criteria[i].time_limit);
        }
        std::printf("[%s] %02zu %s (%s; %.1f s)\n", outcome.ok ? "PASS" : "FAIL", i + 1,
                    criteria[i].name, outcome.detail.c_str(), seconds);
        std::fflush(stdout);
        failures += outcome.ok ? 0 : 1;
    }
    std::printf("%zu criteria, %d failed\n", criteria.size(), failures);
    return failures;
}
