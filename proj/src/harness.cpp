#include "ddpc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <thread>

#include "ddpc/csv.hpp"
#include "ddpc/errors.hpp"

namespace ddpc {

namespace fs = std::filesystem;

namespace {

int thread_budget() {
    if (const char* env = std::getenv("DDPC_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Scalar signals keep the bare column name; vector signals get _i suffixes.
std::vector<std::string> numbered(const std::string& base, int dim) {
    std::vector<std::string> out;
    if (dim == 1) {
        out.push_back(base);
    } else {
        for (int i = 0; i < dim; ++i) out.push_back(base + "_" + std::to_string(i));
    }
    return out;
}

// Trajectory files always carry component suffixes (t,u_0..,w_0..,y0_0..,y_0..).
std::vector<std::string> suffixed(const std::string& base, int dim) {
    std::vector<std::string> out;
    for (int i = 0; i < dim; ++i) out.push_back(base + "_" + std::to_string(i));
    return out;
}

}  // namespace

TrajectoryData collect_offline_data(const ScenarioConfig& cfg, uint64_t seed, int run_index) {
    const int N = cfg.data.length;
    const int nu = cfg.model.nu(), nw = cfg.model.nw(), ny = cfg.model.ny();
    const uint64_t base = static_cast<uint64_t>(run_index) * kStreamsPerRun;

    CounterRng u_rng(seed, base + kStreamOfflineInput);
    Eigen::MatrixXd u = cfg.data.input_std *
                        draw_noise_cov(Eigen::MatrixXd::Identity(nu, nu),
                                       NoiseKind::gaussian, N, u_rng);
    Eigen::MatrixXd w_cov = cfg.noise.Sigma_w.rows() >= nw && nw > 0
                                ? Eigen::MatrixXd(cfg.noise.Sigma_w.topLeftCorner(nw, nw))
                                : Eigen::MatrixXd::Zero(nw, nw);
    Eigen::MatrixXd w = draw_noise_cov(w_cov, cfg.noise.distribution, N,
                                       CounterRng(seed, base + kStreamOfflineDisturbance));
    Eigen::MatrixXd v = draw_noise_cov(cfg.noise.sigma2 * Eigen::MatrixXd::Identity(ny, ny),
                                       cfg.noise.distribution, N,
                                       CounterRng(seed, base + kStreamOfflineNoise));
    return simulate(cfg.model, Eigen::VectorXd::Zero(cfg.model.nx()), u, w, v);
}

PredictorParams build_pipeline(const ScenarioConfig& cfg, const TrajectoryData& data) {
    auto sm = std::make_shared<SignalMatrix>(
        cfg.data.construction == Construction::page
            ? SignalMatrix::page(data, cfg.control.L0, cfg.control.Lp)
            : SignalMatrix::hankel(data, cfg.control.L0, cfg.control.Lp));
    RegularizerDesign design;
    if (cfg.design == DesignKind::smm) {
        // The benchmark path precomputes once; smm's query-dependent lambda is
        // resolved against the zero-input query of the first step.
        Eigen::VectorXd zero_u = Eigen::VectorXd::Zero(sm->n_u() * sm->L0());
        Eigen::VectorXd zero_uh = Eigen::VectorXd::Zero(sm->n_u() * sm->Lp());
        Eigen::VectorXd zero_w = Eigen::VectorXd::Zero(sm->n_w() * sm->L());
        Eigen::VectorXd ones_y = Eigen::VectorXd::Ones(sm->n_y() * sm->L0());
        auto pp = pinv_predict(*sm, zero_u, zero_uh, zero_w, ones_y);
        design = resolve_design(DesignKind::smm, *sm, cfg.noise.sigma2, pp.g.squaredNorm());
    } else {
        design = resolve_design(cfg.design, *sm, cfg.noise.sigma2);
    }
    return build_predictor(sm, design, cfg.noise.sigma2);
}

RunOutcome run_single(const ScenarioConfig& cfg, const PredictorParams& params, uint64_t seed,
                      int run_index, Variant variant) {
    ControlConfig control = cfg.control;
    control.variant = variant;
    const uint64_t base = static_cast<uint64_t>(run_index) * kStreamsPerRun;
    NoiseSpec noise = cfg.noise;
    noise.seed = seed;
    Eigen::MatrixXd reference = cfg.reference_trajectory(control.steps + control.Lp);

    RunOutcome out;
    out.run = run_index;
    out.variant = variant;
    out.log = run_closed_loop(cfg.model, params, control, cfg.output_constraints,
                              cfg.input_constraints, reference, noise, control.steps,
                              CounterRng(seed, base + kStreamOnlineDisturbance),
                              CounterRng(seed, base + kStreamOnlineNoise));
    out.metric = metrics(out.log, cfg.output_constraints, control);
    return out;
}

void write_trajectory_csv(const std::string& path, const TrajectoryData& data) {
    CsvWriter csv(path);
    std::vector<std::string> cols{"t"};
    for (const auto& c : suffixed("u", static_cast<int>(data.u.rows()))) cols.push_back(c);
    for (const auto& c : suffixed("w", static_cast<int>(data.w.rows()))) cols.push_back(c);
    for (const auto& c : suffixed("y0", static_cast<int>(data.y0.rows()))) cols.push_back(c);
    for (const auto& c : suffixed("y", static_cast<int>(data.y.rows()))) cols.push_back(c);
    csv.header(cols);
    for (int t = 0; t < data.length(); ++t) {
        auto row = csv.row();
        row.add(t);
        for (int i = 0; i < data.u.rows(); ++i) row.add(data.u(i, t));
        for (int i = 0; i < data.w.rows(); ++i) row.add(data.w(i, t));
        for (int i = 0; i < data.y0.rows(); ++i) row.add(data.y0(i, t));
        for (int i = 0; i < data.y.rows(); ++i) row.add(data.y(i, t));
    }
}

TrajectoryData read_trajectory_csv(const std::string& path, int n_u, int n_w, int n_y) {
    CsvTable table = read_csv(path);
    const int N = static_cast<int>(table.rows.size());
    TrajectoryData data;
    data.u.resize(n_u, N);
    data.w.resize(n_w, N);
    data.y0.resize(n_y, N);
    data.y.resize(n_y, N);
    for (int t = 0; t < N; ++t) {
        const auto& r = table.rows[t];
        int c = 1;
        for (int i = 0; i < n_u; ++i) data.u(i, t) = std::stod(r.at(c++));
        for (int i = 0; i < n_w; ++i) data.w(i, t) = std::stod(r.at(c++));
        for (int i = 0; i < n_y; ++i) data.y0(i, t) = std::stod(r.at(c++));
        for (int i = 0; i < n_y; ++i) data.y(i, t) = std::stod(r.at(c++));
    }
    return data;
}

void write_log_csv(const std::string& path, const ClosedLoopLog& log,
                   const OutputConstraints& oc, const ControlConfig& cfg) {
    CsvWriter csv(path);
    const int nu = static_cast<int>(log.u.rows());
    const int ny = static_cast<int>(log.y.rows());
    std::vector<std::string> cols{"t"};
    for (const auto& c : numbered("u", nu)) cols.push_back(c);
    for (const auto& c : numbered("y", ny)) cols.push_back(c);
    for (const auto& c : numbered("y0", ny)) cols.push_back(c);
    for (const auto& c : numbered("ybar0", ny)) cols.push_back(c);
    cols.insert(cols.end(), {"cost", "violation", "slack", "status"});
    csv.header(cols);
    for (int k = 0; k < log.u.cols(); ++k) {
        Eigen::VectorXd du = log.u.col(k);
        Eigen::VectorXd dy = log.y0.col(k) - log.r.col(k);
        const double cost = du.dot(cfg.R * du) + dy.dot(cfg.Q * dy);
        const double viol =
            oc.rows() > 0 ? (oc.H * log.y.col(k) - oc.q).cwiseMax(0.0).sum() : 0.0;
        auto row = csv.row();
        row.add(k);
        for (int i = 0; i < nu; ++i) row.add(log.u(i, k));
        for (int i = 0; i < ny; ++i) row.add(log.y(i, k));
        for (int i = 0; i < ny; ++i) row.add(log.y0(i, k));
        for (int i = 0; i < ny; ++i) row.add(log.ybar0(i, k));
        row.add(cost);
        row.add(viol);
        row.add(log.slack(k));
        row.add(std::string(to_string(log.status[k])));
    }
}

void write_filter_trace_csv(const std::string& path, const ClosedLoopLog& log) {
    CsvWriter csv(path);
    const int ny = static_cast<int>(log.y.rows());
    std::vector<std::string> cols{"t"};
    for (const auto& c : numbered("prior", ny)) cols.push_back(c);
    for (const auto& c : numbered("posterior", ny)) cols.push_back(c);
    for (const auto& c : numbered("measurement", ny)) cols.push_back(c);
    for (const auto& c : numbered("variance", ny)) cols.push_back(c);
    csv.header(cols);
    for (int k = 0; k < log.u.cols(); ++k) {
        auto row = csv.row();
        row.add(k);
        for (int i = 0; i < ny; ++i) row.add(log.ybar0(i, k));
        for (int i = 0; i < ny; ++i) row.add(log.y_filt(i, k));
        for (int i = 0; i < ny; ++i) row.add(log.y(i, k));
        for (int i = 0; i < ny; ++i) row.add(log.filter_var(i, k));
    }
}

RunArtifacts run_montecarlo(const ScenarioConfig& cfg) {
    fs::create_directories(cfg.output_dir);
    const int runs = cfg.monte_carlo.runs;
    const uint64_t seed = cfg.monte_carlo.base_seed;
    const Variant variants[] = {Variant::n_ddpc, Variant::kf_ddpc, Variant::s_ddpc};

    RunArtifacts art;
    art.runs.resize(static_cast<size_t>(runs) * 3);

    std::atomic<int> next{0};
    auto worker = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= runs) return;
            TrajectoryData data = collect_offline_data(cfg, seed, i);
            PredictorParams params = build_pipeline(cfg, data);
            for (int v = 0; v < 3; ++v)
                art.runs[static_cast<size_t>(i) * 3 + v] =
                    run_single(cfg, params, seed, i, variants[v]);
        }
    };
    const int nthreads = std::min(thread_budget(), runs > 0 ? runs : 1);
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    // single-writer aggregation pass
    art.aggregate_path = cfg.output_dir + "/aggregate.csv";
    CsvWriter agg(art.aggregate_path);
    agg.header({"variant", "run", "seed", "true_total_cost", "total_violation",
                "violation_freq", "filter_rmse", "measured_rmse", "total_slack",
                "solver_failures", "aborted"});
    for (const auto& r : art.runs) {
        auto row = agg.row();
        row.add(std::string(to_string(r.variant)));
        row.add(r.run);
        row.add(static_cast<long>(seed));
        row.add(r.metric.true_total_cost);
        row.add(r.metric.total_violation);
        row.add(r.metric.per_step_violation_freq);
        row.add(r.metric.filter_rmse);
        row.add(r.metric.measured_rmse);
        row.add(r.metric.total_slack);
        row.add(r.log.solver_failures);
        row.add(r.log.aborted ? 1 : 0);
    }

    art.summary_path = cfg.output_dir + "/aggregate_summary.csv";
    {
        CsvWriter summary(art.summary_path);
        summary.header({"variant", "metric", "median", "mean", "min", "max"});
        const char* metric_names[] = {"true_total_cost", "total_violation", "violation_freq",
                                      "filter_rmse", "measured_rmse"};
        for (const Variant v : variants) {
            for (int m = 0; m < 5; ++m) {
                std::vector<double> vals;
                for (const auto& r : art.runs) {
                    if (r.variant != v) continue;
                    const double x = m == 0   ? r.metric.true_total_cost
                                     : m == 1 ? r.metric.total_violation
                                     : m == 2 ? r.metric.per_step_violation_freq
                                     : m == 3 ? r.metric.filter_rmse
                                              : r.metric.measured_rmse;
                    vals.push_back(x);
                }
                if (vals.empty()) continue;
                auto row = summary.row();
                row.add(std::string(to_string(v)));
                row.add(std::string(metric_names[m]));
                row.add(median(vals));
                double mean = 0.0, mn = vals[0], mx = vals[0];
                for (double x : vals) {
                    mean += x;
                    mn = std::min(mn, x);
                    mx = std::max(mx, x);
                }
                row.add(mean / vals.size());
                row.add(mn);
                row.add(mx);
            }
        }
    }

    art.boxplot_path = cfg.output_dir + "/fig3_boxplot.csv";
    {
        CsvWriter box(art.boxplot_path);
        box.header({"variant", "run", "metric", "value"});
        for (const auto& r : art.runs) {
            {
                auto row = box.row();
                row.add(std::string(to_string(r.variant)));
                row.add(r.run);
                row.add(std::string("true_total_cost"));
                row.add(r.metric.true_total_cost);
            }
            auto row = box.row();
            row.add(std::string(to_string(r.variant)));
            row.add(r.run);
            row.add(std::string("total_violation"));
            row.add(r.metric.total_violation);
        }
    }

    for (const auto& r : art.runs) {
        const std::string base =
            cfg.output_dir + "/run_" + std::to_string(r.run) + "_" + to_string(r.variant);
        ControlConfig control = cfg.control;
        control.variant = r.variant;
        write_log_csv(base + ".csv", r.log, cfg.output_constraints, control);
        if (r.variant != Variant::n_ddpc) write_filter_trace_csv(base + "_filter.csv", r.log);
    }
    return art;
}

void report(const ScenarioConfig& cfg) {
    const std::string dir = cfg.output_dir;
    if (!fs::exists(dir + "/aggregate.csv"))
        throw std::runtime_error("no artifacts in " + dir + "; run montecarlo first");

    // Figure 1 surrogate: run-0 closed-loop trajectories of all variants.
    {
        CsvWriter fig1(dir + "/fig1_trajectories.csv");
        std::vector<std::string> cols{"t", "r", "lb", "ub"};
        for (const char* v : {"n_ddpc", "kf_ddpc", "s_ddpc"}) {
            cols.push_back(std::string("y_") + v);
            cols.push_back(std::string("y0_") + v);
        }
        fig1.header(cols);
        CsvTable logs[3];
        bool have = true;
        const char* names[] = {"n_ddpc", "kf_ddpc", "s_ddpc"};
        for (int v = 0; v < 3; ++v) {
            const std::string path = dir + "/run_0_" + names[v] + ".csv";
            if (!fs::exists(path)) {
                have = false;
                break;
            }
            logs[v] = read_csv(path);
        }
        if (have && !logs[0].rows.empty()) {
            Eigen::MatrixXd ref = cfg.reference_trajectory(
                static_cast<int>(logs[0].rows.size()));
            double lb = -1e30, ub = 1e30;
            for (int i = 0; i < cfg.output_constraints.H.rows(); ++i) {
                if (cfg.output_constraints.H(i, 0) > 0)
                    ub = std::min(ub, cfg.output_constraints.q(i) /
                                          cfg.output_constraints.H(i, 0));
                else if (cfg.output_constraints.H(i, 0) < 0)
                    lb = std::max(lb, cfg.output_constraints.q(i) /
                                          cfg.output_constraints.H(i, 0));
            }
            int iy = logs[0].column_index("y");
            if (iy < 0) iy = logs[0].column_index("y_0");
            int iy0 = logs[0].column_index("y0");
            if (iy0 < 0) iy0 = logs[0].column_index("y0_0");
            for (size_t t = 0; t < logs[0].rows.size(); ++t) {
                auto row = fig1.row();
                row.add(static_cast<int>(t));
                row.add(ref(0, static_cast<int>(t)));
                row.add(lb);
                row.add(ub);
                for (int v = 0; v < 3; ++v) {
                    row.add(std::stod(logs[v].rows[t].at(iy)));
                    row.add(std::stod(logs[v].rows[t].at(iy0)));
                }
            }
        }
    }

    // Figure 2 surrogate: filtered vs measured trajectory of the run-0 s_ddpc.
    {
        CsvWriter fig2(dir + "/fig2_filtering.csv");
        fig2.header({"t", "y_true", "y_measured", "y_filtered"});
        const std::string log_path = dir + "/run_0_s_ddpc.csv";
        const std::string trace_path = dir + "/run_0_s_ddpc_filter.csv";
        if (fs::exists(log_path) && fs::exists(trace_path)) {
            CsvTable log = read_csv(log_path);
            CsvTable trace = read_csv(trace_path);
            int iy0 = log.column_index("y0");
            if (iy0 < 0) iy0 = log.column_index("y0_0");
            int im = trace.column_index("measurement");
            if (im < 0) im = trace.column_index("measurement_0");
            int ip = trace.column_index("posterior");
            if (ip < 0) ip = trace.column_index("posterior_0");
            for (size_t t = 0; t < log.rows.size() && t < trace.rows.size(); ++t) {
                auto row = fig2.row();
                row.add(static_cast<int>(t));
                row.add(std::stod(log.rows[t].at(iy0)));
                row.add(std::stod(trace.rows[t].at(im)));
                row.add(std::stod(trace.rows[t].at(ip)));
            }
        }
    }
    // Figure 3 surrogate (fig3_boxplot.csv) is written during aggregation.
}

}  // namespace ddpc
