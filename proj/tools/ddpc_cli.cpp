#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "ddpc/csv.hpp"
#include "ddpc/harness.hpp"

namespace fs = std::filesystem;
using namespace ddpc;

namespace {

struct CommonOpts {
    std::string config_path;
    uint64_t seed = 0;
    bool seed_set = false;
    std::string variant;
    std::string out_dir;
};

ScenarioConfig load_config(const CommonOpts& opts) {
    ScenarioConfig cfg = opts.config_path.empty() ? ScenarioConfig::paper_sec5()
                                                  : ScenarioConfig::load(opts.config_path);
    if (opts.seed_set) {
        cfg.noise.seed = opts.seed;
        cfg.monte_carlo.base_seed = opts.seed;
    }
    if (!opts.variant.empty()) {
        if (opts.variant == "n_ddpc")
            cfg.control.variant = Variant::n_ddpc;
        else if (opts.variant == "kf_ddpc")
            cfg.control.variant = Variant::kf_ddpc;
        else if (opts.variant == "s_ddpc")
            cfg.control.variant = Variant::s_ddpc;
        else
            throw std::invalid_argument("unknown variant '" + opts.variant + "'");
    }
    if (!opts.out_dir.empty()) cfg.output_dir = opts.out_dir;
    return cfg;
}

int cmd_simulate(const CommonOpts& opts) {
    ScenarioConfig cfg = load_config(opts);
    TrajectoryData data = collect_offline_data(cfg, cfg.monte_carlo.base_seed, 0);
    fs::create_directories(cfg.output_dir);
    const std::string path = cfg.output_dir + "/trajectory.csv";
    write_trajectory_csv(path, data);
    std::cout << "wrote " << path << " (" << data.length() << " samples)\n";
    return 0;
}

int cmd_build(const CommonOpts& opts) {
    ScenarioConfig cfg = load_config(opts);
    TrajectoryData data = collect_offline_data(cfg, cfg.monte_carlo.base_seed, 0);
    PredictorParams params = build_pipeline(cfg, data);
    fs::create_directories(cfg.output_dir);
    params.sm->save(cfg.output_dir + "/signal_matrix.bin");
    params.save(cfg.output_dir + "/predictor.bin");
    RankReport report = check_excitation(*params.sm, cfg.n_x_hint);
    std::cout << "signal matrix: M=" << params.sm->M() << " construction="
              << to_string(params.sm->construction()) << "\n"
              << "excitation: numeric rank " << report.numeric_rank << " / required "
              << report.required_rank << (report.ok ? " (ok)" : " (NOT satisfied)") << "\n"
              << "design " << to_string(params.design.kind)
              << " lambda=" << params.design.lambda << "\n"
              << "wrote " << cfg.output_dir << "/signal_matrix.bin, predictor.bin\n";
    return 0;
}

int cmd_predict(const CommonOpts& opts, int horizon) {
    ScenarioConfig cfg = load_config(opts);
    if (horizon > 0) cfg.control.Lp = horizon;
    TrajectoryData data = collect_offline_data(cfg, cfg.monte_carlo.base_seed, 0);
    PredictorParams params = build_pipeline(cfg, data);

    // Fresh validation rollout: L0 warm-up samples fix the initial condition,
    // the predictor then forecasts the next Lp outputs under the same inputs.
    const int L0 = cfg.control.L0, Lp = cfg.control.Lp;
    const int nu = cfg.model.nu(), nw = cfg.model.nw(), ny = cfg.model.ny();
    const int N = L0 + Lp;
    CounterRng rng(cfg.monte_carlo.base_seed + 1, 777);
    Eigen::MatrixXd u = cfg.data.input_std *
                        draw_noise_cov(Eigen::MatrixXd::Identity(nu, nu),
                                       NoiseKind::gaussian, N, rng);
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(nw, N);
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(ny, N);
    TrajectoryData truth = simulate(cfg.model, Eigen::VectorXd::Zero(cfg.model.nx()), u, w, v);

    QueryCondition q;
    q.u_ini = Eigen::Map<const Eigen::VectorXd>(truth.u.leftCols(L0).data(), nu * L0);
    q.y_ini_bar = Eigen::Map<const Eigen::VectorXd>(truth.y.leftCols(L0).data(), ny * L0);
    q.P_t = cfg.noise.sigma2 * Eigen::MatrixXd::Identity(ny * L0, ny * L0);
    q.w_bar = Eigen::VectorXd::Zero(nw * (L0 + Lp));
    q.Sigma_w = Eigen::MatrixXd::Zero(nw * (L0 + Lp), nw * (L0 + Lp));
    Eigen::VectorXd u_hat =
        Eigen::Map<const Eigen::VectorXd>(truth.u.rightCols(Lp).data(), nu * Lp);

    PredictionResult pred = predict(params, q, u_hat);

    fs::create_directories(cfg.output_dir);
    const std::string path = cfg.output_dir + "/predict.csv";
    CsvWriter csv(path);
    csv.header({"k", "y_hat", "y_true"});
    double max_err = 0.0;
    for (int k = 0; k < Lp; ++k) {
        for (int i = 0; i < ny; ++i) {
            auto row = csv.row();
            row.add(k);
            row.add(pred.y_bar(k * ny + i));
            row.add(truth.y0(i, L0 + k));
            max_err = std::max(max_err, std::abs(pred.y_bar(k * ny + i) - truth.y0(i, L0 + k)));
        }
    }
    std::cout << "wrote " << path << "; max abs prediction error " << max_err << "\n";
    return 0;
}

int cmd_run(const CommonOpts& opts) {
    ScenarioConfig cfg = load_config(opts);
    TrajectoryData data = collect_offline_data(cfg, cfg.monte_carlo.base_seed, 0);
    PredictorParams params = build_pipeline(cfg, data);
    RunOutcome outcome =
        run_single(cfg, params, cfg.monte_carlo.base_seed, 0, cfg.control.variant);
    fs::create_directories(cfg.output_dir);
    const std::string base =
        cfg.output_dir + "/run_0_" + to_string(cfg.control.variant);
    write_log_csv(base + ".csv", outcome.log, cfg.output_constraints, cfg.control);
    if (cfg.control.variant != Variant::n_ddpc)
        write_filter_trace_csv(base + "_filter.csv", outcome.log);
    std::cout << "variant " << to_string(cfg.control.variant)
              << ": true_total_cost=" << format_double(outcome.metric.true_total_cost)
              << " total_violation=" << format_double(outcome.metric.total_violation)
              << " violation_freq=" << format_double(outcome.metric.per_step_violation_freq)
              << " filter_rmse=" << format_double(outcome.metric.filter_rmse)
              << " measured_rmse=" << format_double(outcome.metric.measured_rmse) << "\n"
              << "wrote " << base << ".csv\n";
    return outcome.log.aborted ? 2 : 0;
}

int cmd_montecarlo(const CommonOpts& opts, int runs) {
    ScenarioConfig cfg = load_config(opts);
    if (runs > 0) cfg.monte_carlo.runs = runs;
    RunArtifacts art = run_montecarlo(cfg);
    std::cout << "completed " << cfg.monte_carlo.runs << " runs x 3 variants\n"
              << "wrote " << art.aggregate_path << "\n"
              << "wrote " << art.summary_path << "\n"
              << "wrote " << art.boxplot_path << "\n";
    return 0;
}

int cmd_report(const CommonOpts& opts) {
    ScenarioConfig cfg = load_config(opts);
    report(cfg);
    std::cout << "wrote " << cfg.output_dir << "/fig1_trajectories.csv, fig2_filtering.csv\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stochastic indirect data-driven predictive control harness"};
    app.require_subcommand(1);

    CommonOpts opts;
    int horizon = 0;
    int runs = 0;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", opts.config_path, "scenario config JSON (default: paper-sec5)");
        cmd->add_option("--seed", opts.seed, "override config seed")
            ->each([&](const std::string&) { opts.seed_set = true; });
        cmd->add_option("--variant", opts.variant, "controller variant (n_ddpc|kf_ddpc|s_ddpc)");
        cmd->add_option("--out", opts.out_dir, "output directory override");
    };

    CLI::App* sim = app.add_subcommand("simulate", "generate an offline trajectory");
    add_common(sim);
    CLI::App* build = app.add_subcommand("build", "build signal matrix and predictor caches");
    add_common(build);
    CLI::App* predict_cmd = app.add_subcommand("predict", "validation prediction");
    add_common(predict_cmd);
    predict_cmd->add_option("--horizon", horizon, "prediction horizon override");
    CLI::App* run = app.add_subcommand("run", "one closed-loop run");
    add_common(run);
    CLI::App* mc = app.add_subcommand("montecarlo", "full Monte Carlo campaign");
    add_common(mc);
    mc->add_option("--runs", runs, "number of Monte Carlo runs");
    CLI::App* rep = app.add_subcommand("report", "emit plot-data CSV files");
    add_common(rep);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (sim->parsed()) return cmd_simulate(opts);
        if (build->parsed()) return cmd_build(opts);
        if (predict_cmd->parsed()) return cmd_predict(opts, horizon);
        if (run->parsed()) return cmd_run(opts);
        if (mc->parsed()) return cmd_montecarlo(opts, runs);
        if (rep->parsed()) return cmd_report(opts);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
