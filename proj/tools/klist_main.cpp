// klist — experiment runner for k-list estimation.
//
// Subcommands:
//   run        sweep (d, sigma_n, k), write results CSV (+ manifest, SVGs)
//   smallball  empirical small-ball CDF for one error model, with bounds
//   plot       re-render SVGs from an existing results CSV
//   theory     print closed-form curve values for one model
//
// All configuration flows through flags or --config (INI-style file with
// [run]/[smallball]/... sections); no environment variables are read.

#include <cstdint>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "klist/experiment.hpp"
#include "klist/parallel.hpp"
#include "klist/theory.hpp"

namespace {

struct RunOptions {
    klist::ExperimentSpec spec;
    std::uint64_t trials_both = 0; ///< --trials shorthand, 0 = keep per-estimator values
    std::size_t n_train = 0;       ///< 0 = automatic (max(200k, 1e5))
};

int do_run(const RunOptions& opts) {
    klist::ExperimentSpec spec = opts.spec;
    if (opts.trials_both != 0) {
        spec.trials_d1 = opts.trials_both;
        spec.trials_d2 = opts.trials_both;
    }
    if (opts.n_train != 0)
        spec.fit.n_train = opts.n_train;
    const auto csv = klist::run_experiment(spec);
    std::cout << "wrote " << csv.string() << "\n";
    if (spec.emit_plots)
        for (const auto d : spec.dims)
            std::cout << "wrote " << (spec.out_dir / ("fig_d" + std::to_string(d) + ".svg")).string()
                      << "\n";
    return 0;
}

int do_smallball(const klist::SmallBallSpec& spec) {
    const auto csv = klist::run_smallball(spec);
    std::cout << "wrote " << csv.string() << "\n";
    return 0;
}

int do_plot(const std::string& csv, const std::string& out_dir) {
    for (const auto& path : klist::render_plots(csv, out_dir))
        std::cout << "wrote " << path.string() << "\n";
    return 0;
}

int do_theory(std::size_t d, double sigma_x, double sigma_n,
              const std::vector<std::uint64_t>& k_values) {
    const klist::GaussianModel model(d, sigma_x * sigma_x, sigma_n * sigma_n);
    const auto G = klist::ZadorConstants::builtin().lookup(d);
    std::cout << "model: d=" << d << " sigma_x=" << klist::format_double(sigma_x)
              << " sigma_n=" << klist::format_double(sigma_n) << "\n"
              << "gain=" << klist::format_double(model.gain())
              << " posterior_var=" << klist::format_double(model.posterior_var())
              << " sigma_g2=" << klist::format_double(model.sigma_g2()) << "\n"
              << "G_d=" << klist::format_double(G.value) << " (" << klist::to_string(G.provenance)
              << ")\n"
              << "k,d1_highrate,d2_lower_bound\n";
    for (const std::uint64_t k : k_values)
        std::cout << k << ',' << klist::format_double(klist::d1_highrate_gaussian(model, k))
                  << ',' << klist::format_double(klist::gaussian_d2_lower(model, k)) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"k-list estimation experiments: centralized vs decentralized distortion"};
    app.set_config("--config", "", "INI config file with [run]/[smallball] sections");
    app.require_subcommand(1);
    std::size_t threads = 0;
    app.add_option("--threads", threads, "worker cap (0 = hardware; results are identical)");

    // --- run ---------------------------------------------------------------
    RunOptions run_opts;
    std::vector<std::uint64_t> k_grid = run_opts.spec.k_grid;
    auto* run = app.add_subcommand("run", "run the (d, sigma_n, k) sweep");
    run->add_option("--d", run_opts.spec.dims, "dimensions to sweep")
        ->delimiter(',')
        ->capture_default_str();
    run->add_option("--sigma-x", run_opts.spec.sigma_x, "prior standard deviation")
        ->capture_default_str();
    run->add_option("--sigma-n", run_opts.spec.sigma_n_list, "noise standard deviations")
        ->delimiter(',')
        ->capture_default_str();
    run->add_option("--k-grid", k_grid, "list sizes k (strictly increasing)")->delimiter(',');
    run->add_option("--trials", run_opts.trials_both, "trials for both estimators");
    run->add_option("--trials-d1", run_opts.spec.trials_d1, "centralized evaluation trials")
        ->capture_default_str();
    run->add_option("--trials-d2", run_opts.spec.trials_d2, "decentralized trials")
        ->capture_default_str();
    run->add_option("--seed", run_opts.spec.seed_root, "seed root")->capture_default_str();
    run->add_option("--out", run_opts.spec.out_dir, "output directory")->capture_default_str();
    run->add_flag("--plots,!--no-plots", run_opts.spec.emit_plots, "render SVG figures")
        ->capture_default_str();
    run->add_option("--restarts", run_opts.spec.fit.restarts, "k-means restarts")
        ->capture_default_str();
    run->add_option("--n-train", run_opts.n_train,
                    "training samples per fit (0 = max(200k, 1e5))");
    run->add_option("--max-iters", run_opts.spec.fit.max_iters, "Lloyd iteration cap")
        ->capture_default_str();
    run->add_option("--rel-tol", run_opts.spec.fit.rel_tol, "Lloyd stop threshold")
        ->capture_default_str();

    // --- smallball ----------------------------------------------------------
    klist::SmallBallSpec sb;
    std::string sb_model = "gaussian";
    auto* smallball = app.add_subcommand("smallball", "empirical small-ball CDF and exponent");
    smallball->add_option("--model", sb_model, "error model")
        ->check(CLI::IsMember({"gaussian", "powerlaw"}))
        ->capture_default_str();
    smallball->add_option("--d", sb.d, "dimension")->capture_default_str();
    smallball->add_option("--sigma-x", sb.sigma_x, "prior sd (gaussian)")->capture_default_str();
    smallball->add_option("--sigma-n", sb.sigma_n, "noise sd (gaussian)")->capture_default_str();
    smallball->add_option("--beta", sb.beta, "radial exponent (powerlaw)")->capture_default_str();
    smallball->add_option("--r-max", sb.r_max, "support radius (powerlaw)")->capture_default_str();
    smallball->add_option("--trials", sb.trials, "sample count")->capture_default_str();
    smallball->add_option("--a-grid", sb.a_grid, "explicit CDF thresholds")->delimiter(',');
    smallball->add_option("--seed", sb.seed_root, "seed root")->capture_default_str();
    smallball->add_option("--out", sb.out_dir, "output directory")->capture_default_str();

    // --- plot ----------------------------------------------------------------
    std::string plot_csv, plot_out = "results";
    auto* plot = app.add_subcommand("plot", "render SVGs from an existing results CSV");
    plot->add_option("--csv", plot_csv, "results CSV path")->required();
    plot->add_option("--out", plot_out, "output directory")->capture_default_str();

    // --- theory ---------------------------------------------------------------
    std::size_t th_d = 1;
    double th_sx = 1.0, th_sn = 1.0;
    std::vector<std::uint64_t> th_k = klist::default_k_grid();
    auto* theory = app.add_subcommand("theory", "print closed-form curve values");
    theory->add_option("--d", th_d, "dimension")->capture_default_str();
    theory->add_option("--sigma-x", th_sx, "prior sd")->capture_default_str();
    theory->add_option("--sigma-n", th_sn, "noise sd")->capture_default_str();
    theory->add_option("--k", th_k, "list sizes")->delimiter(',');

    CLI11_PARSE(app, argc, argv);
    klist::set_max_threads(threads);
    run_opts.spec.k_grid = k_grid;
    sb.model = sb_model == "gaussian" ? klist::SmallBallModelKind::gaussian
                                      : klist::SmallBallModelKind::powerlaw;

    const char* stage = "startup";
    try {
        if (run->parsed()) {
            stage = "run";
            return do_run(run_opts);
        }
        if (smallball->parsed()) {
            stage = "smallball";
            return do_smallball(sb);
        }
        if (plot->parsed()) {
            stage = "plot";
            return do_plot(plot_csv, plot_out);
        }
        stage = "theory";
        return do_theory(th_d, th_sx, th_sn, th_k);
    } catch (const std::exception& e) {
        std::cerr << "klist: " << stage << " failed: " << e.what() << "\n";
        return 1;
    }
}
