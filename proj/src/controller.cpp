#include "ddpc/controller.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <cmath>

#include "ddpc/errors.hpp"
#include "ddpc/linalg.hpp"
#include "ddpc/lti.hpp"

namespace ddpc {

namespace {

Eigen::MatrixXd kron_identity(int reps, const Eigen::MatrixXd& block) {
    const int r = static_cast<int>(block.rows()), c = static_cast<int>(block.cols());
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(reps) * r,
                                                static_cast<Eigen::Index>(reps) * c);
    for (int i = 0; i < reps; ++i) out.block(i * r, i * c, r, c) = block;
    return out;
}

// Reference window (r_{t+k})_{k=0}^{Lp-1}, holding the last column beyond the end.
Eigen::VectorXd reference_window(const Eigen::MatrixXd& reference, int t, int Lp) {
    const int ny = static_cast<int>(reference.rows());
    const int total = static_cast<int>(reference.cols());
    Eigen::VectorXd r(ny * Lp);
    for (int k = 0; k < Lp; ++k) {
        const int idx = std::min(t + k, total - 1);
        r.segment(k * ny, ny) = reference.col(idx);
    }
    return r;
}

}  // namespace

const char* to_string(Variant v) {
    switch (v) {
        case Variant::n_ddpc: return "n_ddpc";
        case Variant::kf_ddpc: return "kf_ddpc";
        case Variant::s_ddpc: return "s_ddpc";
    }
    return "unknown";
}

Eigen::MatrixXd OutputConstraints::Hbar(int Lp) const { return kron_identity(Lp, H); }

Eigen::VectorXd OutputConstraints::qbar(int Lp) const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(Lp) * q.size());
    for (int i = 0; i < Lp; ++i) out.segment(i * q.size(), q.size()) = q;
    return out;
}

InputConstraints InputConstraints::box(const Eigen::VectorXd& u_min,
                                       const Eigen::VectorXd& u_max) {
    if (u_min.size() != u_max.size()) throw DimensionError("box bound size mismatch");
    const int nu = static_cast<int>(u_min.size());
    std::vector<std::pair<Eigen::VectorXd, double>> rows;
    for (int i = 0; i < nu; ++i) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(nu);
        if (std::isfinite(u_max(i))) {
            e(i) = 1.0;
            rows.push_back({e, u_max(i)});
        }
        if (std::isfinite(u_min(i))) {
            e = Eigen::VectorXd::Zero(nu);
            e(i) = -1.0;
            rows.push_back({e, -u_min(i)});
        }
    }
    InputConstraints ic;
    ic.Hu.resize(rows.size(), nu);
    ic.qu.resize(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
        ic.Hu.row(i) = rows[i].first.transpose();
        ic.qu(i) = rows[i].second;
    }
    return ic;
}

double mu_factor(double p, int n_y, Tightening tightening, DistributionMode mode) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("p must lie in (0, 1)");
    if (mode == DistributionMode::chebyshev) {
        return tightening == Tightening::elementwise ? std::sqrt(1.0 / (1.0 - p) - 1.0)
                                                     : std::sqrt(n_y / (1.0 - p));
    }
    if (tightening == Tightening::elementwise) {
        boost::math::normal_distribution<double> dist;
        return boost::math::quantile(dist, p);
    }
    boost::math::chi_squared_distribution<double> dist(n_y);
    return std::sqrt(boost::math::quantile(dist, p));
}

QuadraticCost assemble_cost(const PredictorParams& params, const AffineMaps& maps,
                            const QueryCondition& q, const Eigen::VectorXd& r,
                            const ControlConfig& cfg) {
    if (r.size() != maps.y_0.size()) throw DimensionError("reference window size mismatch");
    Eigen::MatrixXd Qbar = kron_identity(cfg.Lp, cfg.Q);
    Eigen::MatrixXd Rbar = kron_identity(cfg.Lp, cfg.R);
    const double w_reg = (Qbar * params.T).trace();

    QuadraticCost cost;
    Eigen::VectorXd y0r = maps.y_0 - r;
    cost.P = 2.0 * (Rbar + maps.Y_u.transpose() * Qbar * maps.Y_u +
                    w_reg * maps.G_u.transpose() * maps.G_u);
    cost.f = 2.0 * (maps.Y_u.transpose() * (Qbar * y0r) + w_reg * (maps.G_u.transpose() * maps.g_0));
    Eigen::MatrixXd fixed_cov = params.gamma_hat * q.P_t * params.gamma_hat.transpose() +
                                params.gamma_w * q.Sigma_w * params.gamma_w.transpose();
    cost.constant = y0r.dot(Qbar * y0r) + w_reg * maps.g_0.squaredNorm() +
                    (Qbar * fixed_cov).trace();
    return cost;
}

QuadraticCost assemble_nominal_cost(const AffineMaps& maps, const Eigen::VectorXd& r,
                                    const ControlConfig& cfg) {
    if (r.size() != maps.y_0.size()) throw DimensionError("reference window size mismatch");
    Eigen::MatrixXd Qbar = kron_identity(cfg.Lp, cfg.Q);
    Eigen::MatrixXd Rbar = kron_identity(cfg.Lp, cfg.R);
    QuadraticCost cost;
    Eigen::VectorXd y0r = maps.y_0 - r;
    cost.P = 2.0 * (Rbar + maps.Y_u.transpose() * Qbar * maps.Y_u);
    cost.f = 2.0 * maps.Y_u.transpose() * (Qbar * y0r);
    cost.constant = y0r.dot(Qbar * y0r);
    return cost;
}

TighteningTerms assemble_tightening(const PredictorParams& params, const OutputConstraints& oc,
                                    const QueryCondition& q, double mu) {
    const int Lp = static_cast<int>(params.T.rows()) / static_cast<int>(oc.H.cols());
    Eigen::MatrixXd Hbar = oc.Hbar(Lp);
    Eigen::MatrixXd fixed_cov = params.gamma_hat * q.P_t * params.gamma_hat.transpose() +
                                params.gamma_w * q.Sigma_w * params.gamma_w.transpose();
    TighteningTerms t;
    t.mu = mu;
    Eigen::VectorXd d1 = (Hbar * fixed_cov * Hbar.transpose()).diagonal();
    Eigen::VectorXd d2 = (Hbar * params.T * Hbar.transpose()).diagonal();
    t.floored_rows = static_cast<int>((d1.array() < 0.0).count() +
                                      (d2.array() < 0.0).count());
    t.c1 = d1.cwiseMax(0.0).cwiseSqrt();
    t.c2 = d2.cwiseMax(0.0).cwiseSqrt();
    return t;
}

StepResult solve_step(const PredictorParams& params, const QueryCondition& q,
                      const OutputConstraints& oc, const InputConstraints& ic,
                      const Eigen::VectorXd& r, const ControlConfig& cfg) {
    AffineMaps maps = predict_affine_maps(params, q);
    const int nuLp = static_cast<int>(maps.G_u.cols());
    const int nu = nuLp / cfg.Lp;
    const int nc = oc.rows() * cfg.Lp;  // slack variables, one per output row
    const int nvar = nuLp + nc;

    const bool tightened = cfg.variant == Variant::s_ddpc;
    QuadraticCost cost = tightened ? assemble_cost(params, maps, q, r, cfg)
                                   : assemble_nominal_cost(maps, r, cfg);
    const double slack_penalty =
        cfg.slack_penalty_scale * (cfg.Q.size() > 0 ? cfg.Q.maxCoeff() : 1.0);

    ConeProgram prog;
    prog.P = Eigen::MatrixXd::Zero(nvar, nvar);
    prog.P.topLeftCorner(nuLp, nuLp) = cost.P;
    prog.f = Eigen::VectorXd::Zero(nvar);
    prog.f.head(nuLp) = cost.f;
    prog.f.tail(nc).setConstant(slack_penalty);
    prog.c0 = cost.constant;

    std::vector<Eigen::VectorXd> lin_rows;
    std::vector<double> lin_rhs;
    auto add_row = [&](const Eigen::VectorXd& row, double rhs) {
        lin_rows.push_back(row);
        lin_rhs.push_back(rhs);
    };

    // slack >= 0
    for (int i = 0; i < nc; ++i) {
        Eigen::VectorXd row = Eigen::VectorXd::Zero(nvar);
        row(nuLp + i) = -1.0;
        add_row(row, 0.0);
    }
    // input constraints per horizon step
    if (ic.bounded()) {
        for (int k = 0; k < cfg.Lp; ++k)
            for (int i = 0; i < ic.Hu.rows(); ++i) {
                Eigen::VectorXd row = Eigen::VectorXd::Zero(nvar);
                row.segment(k * nu, nu) = ic.Hu.row(i).transpose();
                add_row(row, ic.qu(i));
            }
    }

    Eigen::MatrixXd Hbar = oc.Hbar(cfg.Lp);
    Eigen::VectorXd qbar = oc.qbar(cfg.Lp);
    Eigen::MatrixXd HY = Hbar * maps.Y_u;  // nc x nuLp
    Eigen::VectorXd Hy0 = Hbar * maps.y_0;

    if (nc > 0 && !tightened) {
        // plain polytope on the nominal prediction, relaxed by slack
        for (int i = 0; i < nc; ++i) {
            Eigen::VectorXd row = Eigen::VectorXd::Zero(nvar);
            row.head(nuLp) = HY.row(i).transpose();
            row(nuLp + i) = -1.0;
            add_row(row, qbar(i) - Hy0(i));
        }
    } else if (nc > 0) {
        TighteningTerms tt =
            assemble_tightening(params, oc, q, mu_factor(cfg.p, static_cast<int>(oc.H.cols()),
                                                         cfg.tightening, cfg.distribution_mode));
        for (int i = 0; i < nc; ++i) {
            const double scale = tt.mu * tt.c2(i);
            if (scale <= 1e-300) {
                Eigen::VectorXd row = Eigen::VectorXd::Zero(nvar);
                row.head(nuLp) = HY.row(i).transpose();
                row(nuLp + i) = -1.0;
                add_row(row, qbar(i) - Hy0(i) - tt.mu * tt.c1(i));
                continue;
            }
            SocConstraint soc;
            soc.Cmat = Eigen::MatrixXd::Zero(maps.G_u.rows(), nvar);
            soc.Cmat.leftCols(nuLp) = scale * maps.G_u;
            soc.d = scale * maps.g_0;
            soc.a = Eigen::VectorXd::Zero(nvar);
            soc.a.head(nuLp) = -HY.row(i).transpose();
            soc.a(nuLp + i) = 1.0;
            soc.b = qbar(i) - Hy0(i) - tt.mu * tt.c1(i);
            prog.socs.push_back(std::move(soc));
        }
    }

    prog.G.resize(lin_rows.size(), nvar);
    prog.h.resize(lin_rows.size());
    for (size_t i = 0; i < lin_rows.size(); ++i) {
        prog.G.row(i) = lin_rows[i].transpose();
        prog.h(i) = lin_rhs[i];
    }
    prog.Aeq.resize(0, nvar);
    prog.beq.resize(0);

    Solution sol = solve(prog);
    for (int attempt = 0; attempt < cfg.retry_budget && sol.status != SolveStatus::optimal;
         ++attempt)
        sol = solve(prog, 1e-6, 400);

    StepResult res;
    res.solver_status = sol.status;
    res.u_hat = sol.z.head(nuLp);
    res.u_applied = res.u_hat.head(nu);
    res.slack = nc > 0 ? sol.z.tail(nc).sum() : 0.0;
    PredictionResult pred = predict(params, q, res.u_hat);
    res.g = pred.g;
    res.y_bar = pred.y_bar;
    res.Sigma = pred.Sigma;
    res.expected_cost =
        0.5 * res.u_hat.dot(cost.P * res.u_hat) + cost.f.dot(res.u_hat) + cost.constant;
    return res;
}

ClosedLoopLog run_closed_loop(const StateSpaceModel& model, const PredictorParams& params,
                              const ControlConfig& cfg, const OutputConstraints& oc,
                              const InputConstraints& ic, const Eigen::MatrixXd& reference,
                              const NoiseSpec& noise, int steps, CounterRng w_stream,
                              CounterRng v_stream) {
    const int nu = model.nu(), ny = model.ny(), nw = model.nw();
    const int L0 = cfg.L0, Lp = cfg.Lp;
    const int total = L0 + steps;

    // Online realizations, drawn up front so variants sharing the streams
    // consume identical sequences.
    Eigen::MatrixXd w_step_cov = noise.Sigma_w.rows() >= nw
                                     ? Eigen::MatrixXd(noise.Sigma_w.topLeftCorner(nw, nw))
                                     : Eigen::MatrixXd::Zero(nw, nw);
    Eigen::MatrixXd w_seq = draw_noise_cov(w_step_cov, noise.distribution, total, w_stream);
    Eigen::MatrixXd v_seq = draw_noise_cov(
        noise.sigma2 * Eigen::MatrixXd::Identity(ny, ny), noise.distribution, total, v_stream);

    ClosedLoopLog log;
    log.u.setZero(nu, steps);
    log.y.setZero(ny, steps);
    log.y0.setZero(ny, steps);
    log.ybar0.setZero(ny, steps);
    log.y_filt.setZero(ny, steps);
    log.r.setZero(ny, steps);
    log.expected_cost.setZero(steps);
    log.slack.setZero(steps);
    log.filter_var.setZero(ny, steps);
    log.status.assign(steps, SolveStatus::optimal);

    Eigen::VectorXd x = Eigen::VectorXd::Zero(model.nx());
    Eigen::VectorXd u_hist = Eigen::VectorXd::Zero(nu * L0);
    Eigen::VectorXd y_hist(ny * L0);

    // Warm-up: zero input while the measurement history fills.
    for (int t = 0; t < L0; ++t) {
        Eigen::VectorXd y0t = model.C * x;  // zero input, no feedthrough term
        y_hist.segment(t * ny, ny) = y0t + v_seq.col(t);
        x = model.A * x + model.E * w_seq.col(t);
    }

    const bool filtered = cfg.variant != Variant::n_ddpc;
    FilterState fs;
    if (filtered) fs = filter_init(u_hist, y_hist, L0);

    QueryCondition q;
    q.w_bar = noise.w_bar.size() == nw * (L0 + Lp)
                  ? noise.w_bar
                  : Eigen::VectorXd::Zero(nw * (L0 + Lp));
    q.Sigma_w = noise.Sigma_w.rows() == nw * (L0 + Lp)
                    ? noise.Sigma_w
                    : Eigen::MatrixXd::Zero(nw * (L0 + Lp), nw * (L0 + Lp));

    for (int k = 0; k < steps; ++k) {
        const int t = L0 + k;
        if (filtered) {
            InitialCondition icond = extract_initial_condition(fs);
            q.u_ini = icond.u_ini;
            q.y_ini_bar = icond.y_ini_bar;
            q.P_t = icond.P_t;
        } else {
            q.u_ini = u_hist;
            q.y_ini_bar = y_hist;
            q.P_t = noise.sigma2 * Eigen::MatrixXd::Identity(ny * L0, ny * L0);
        }

        Eigen::VectorXd r = reference_window(reference, k, Lp);
        log.r.col(k) = r.head(ny);

        StepResult step = solve_step(params, q, oc, ic, r, cfg);
        log.status[k] = step.solver_status;
        if (step.solver_status != SolveStatus::optimal) {
            ++log.solver_failures;
            if (log.solver_failures > cfg.retry_budget) {
                log.aborted = true;
                return log;
            }
        }

        // Apply the first input block, measure, and advance the plant.
        Eigen::VectorXd y0t = model.C * x + model.D * step.u_applied;
        Eigen::VectorXd yt = y0t + v_seq.col(t);
        x = model.A * x + model.B * step.u_applied + model.E * w_seq.col(t);

        log.u.col(k) = step.u_applied;
        log.y.col(k) = yt;
        log.y0.col(k) = y0t;
        log.ybar0.col(k) = step.y_bar.head(ny);
        log.expected_cost(k) = step.expected_cost;
        log.slack(k) = step.slack;

        if (filtered) {
            Eigen::MatrixXd sigma0 = step.Sigma.topLeftCorner(ny, ny);
            fs = predict_step(fs, step.u_applied, step.y_bar.head(ny), symmetrize_psd(sigma0));
            fs = update_step(fs, yt, noise.sigma2, cfg.filter_mode);
            log.y_filt.col(k) = fs.y_hist.tail(ny);
            log.filter_var.col(k) = fs.P.bottomRightCorner(ny, ny).diagonal();
            u_hist = fs.u_hist;
            y_hist = fs.y_hist;
        } else {
            log.y_filt.col(k) = yt;
            log.filter_var.col(k).setConstant(noise.sigma2);
            if (L0 > 1) {
                u_hist.head(nu * (L0 - 1)) = u_hist.tail(nu * (L0 - 1)).eval();
                y_hist.head(ny * (L0 - 1)) = y_hist.tail(ny * (L0 - 1)).eval();
            }
            u_hist.tail(nu) = step.u_applied;
            y_hist.tail(ny) = yt;
        }
    }
    return log;
}

Metrics metrics(const ClosedLoopLog& log, const OutputConstraints& oc, const ControlConfig& cfg) {
    Metrics m;
    const int steps = static_cast<int>(log.u.cols());
    int violated_steps = 0;
    for (int k = 0; k < steps; ++k) {
        Eigen::VectorXd du = log.u.col(k);
        Eigen::VectorXd dy = log.y0.col(k) - log.r.col(k);
        m.true_total_cost += du.dot(cfg.R * du) + dy.dot(cfg.Q * dy);
        if (oc.rows() > 0) {
            Eigen::VectorXd viol = (oc.H * log.y.col(k) - oc.q).cwiseMax(0.0);
            m.total_violation += viol.sum();
            if (viol.maxCoeff() > 0.0) ++violated_steps;
        }
        m.filter_rmse += (log.y_filt.col(k) - log.y0.col(k)).squaredNorm();
        m.measured_rmse += (log.y.col(k) - log.y0.col(k)).squaredNorm();
        m.total_slack += log.slack(k);
    }
    if (steps > 0) {
        m.per_step_violation_freq = static_cast<double>(violated_steps) / steps;
        m.filter_rmse = std::sqrt(m.filter_rmse / steps);
        m.measured_rmse = std::sqrt(m.measured_rmse / steps);
    }
    return m;
}

}  // namespace ddpc
