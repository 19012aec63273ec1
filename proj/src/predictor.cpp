#include "ddpc/predictor.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <cstring>
#include <fstream>

#include "ddpc/errors.hpp"
#include "ddpc/linalg.hpp"

namespace ddpc {

namespace {

// Scale-aware stand-in for lambda -> 0+; also the floor that keeps F invertible.
double eps_reg(const Eigen::MatrixXd& Yp, const Eigen::MatrixXd& S, int M) {
    return 1e-8 * (S * Yp * Yp.transpose()).trace() / static_cast<double>(M);
}

double condition_of(const Eigen::MatrixXd& m) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv(sv.size() - 1) <= 0.0) return std::numeric_limits<double>::infinity();
    return sv(0) / sv(sv.size() - 1);
}

void check_query(const PredictorParams& p, const QueryCondition& q) {
    if (q.u_ini.size() != p.R1.cols()) throw DimensionError("u_ini size mismatch");
    if (q.y_ini_bar.size() != p.R4.cols()) throw DimensionError("y_ini_bar size mismatch");
    if (q.P_t.rows() != p.R4.cols() || q.P_t.cols() != q.P_t.rows())
        throw DimensionError("P_t must be n_y L0 square");
    if (q.w_bar.size() != p.R3.cols()) throw DimensionError("w_bar size mismatch");
    if (q.Sigma_w.rows() != p.R3.cols() || q.Sigma_w.cols() != q.Sigma_w.rows())
        throw DimensionError("Sigma_w must be n_w L square");
    if (!is_psd(q.P_t)) throw std::invalid_argument("P_t must be symmetric PSD");
    if (!is_psd(q.Sigma_w)) throw std::invalid_argument("Sigma_w must be symmetric PSD");
}

void check_query(const SignalMatrix& sm, const QueryCondition& q) {
    if (q.u_ini.size() != sm.n_u() * sm.L0()) throw DimensionError("u_ini size mismatch");
    if (q.y_ini_bar.size() != sm.n_y() * sm.L0()) throw DimensionError("y_ini_bar size mismatch");
    if (q.w_bar.size() != sm.n_w() * sm.L()) throw DimensionError("w_bar size mismatch");
    if (!is_psd(q.P_t)) throw std::invalid_argument("P_t must be symmetric PSD");
    if (!is_psd(q.Sigma_w)) throw std::invalid_argument("Sigma_w must be symmetric PSD");
}

constexpr char kMagic[9] = "DDPCPP01";

}  // namespace

RegularizerDesign resolve_design(DesignKind kind, const SignalMatrix& sm, double sigma2,
                                 std::optional<double> g_pinv_norm2) {
    const int ny = sm.n_y(), L0 = sm.L0(), Lp = sm.Lp(), L = sm.L();
    RegularizerDesign d;
    d.kind = kind;
    d.S = Eigen::MatrixXd::Identity(ny * L0, ny * L0);
    switch (kind) {
        case DesignKind::subspace:
            d.lambda = eps_reg(sm.Yp(), d.S, sm.M());
            break;
        case DesignKind::wasserstein:
            d.lambda = ny * L0 * sigma2;
            break;
        case DesignKind::smm:
            if (!g_pinv_norm2)
                throw std::invalid_argument("smm design requires ||g_pinv||^2 of the query");
            d.lambda = ny * (L * sigma2 + Lp * sigma2 / *g_pinv_norm2);
            break;
        case DesignKind::mmse: {
            Eigen::MatrixXd gbar_full = sm.Yf() * pseudo_inverse(sm.PsiYp());
            Eigen::MatrixXd gbar = gbar_full.rightCols(ny * L0);
            d.S = gbar.transpose() * gbar;
            d.lambda = ny * Lp * sigma2 + d.S.trace() * sigma2;
            break;
        }
    }
    return d;
}

PredictorParams build_predictor(std::shared_ptr<const SignalMatrix> sm,
                                const RegularizerDesign& design, double sigma2) {
    const SignalMatrix& s = *sm;
    const int M = s.M();
    const Eigen::MatrixXd psi = s.Psi();
    const Eigen::MatrixXd& Yp = s.Yp();
    const Eigen::MatrixXd& Yf = s.Yf();

    const double lambda_eff = std::max(design.lambda, eps_reg(Yp, design.S, M));
    Eigen::MatrixXd F = Yp.transpose() * design.S * Yp;
    F.diagonal().array() += lambda_eff;

    Eigen::LLT<Eigen::MatrixXd> fllt(F);
    if (fllt.info() != Eigen::Success)
        throw IllConditionedError("F = lambda I + Yp' S Yp is not positive definite",
                                  condition_of(F));

    // F^{-1} is only ever applied to skinny right-hand sides.
    Eigen::MatrixXd FiPsiT = fllt.solve(psi.transpose());          // M x (nu+nw)L
    Eigen::MatrixXd FiYpS = fllt.solve(Yp.transpose() * design.S); // M x ny L0

    Eigen::MatrixXd mid = psi * FiPsiT;  // (nu+nw)L square, SPD under excitation
    Eigen::LLT<Eigen::MatrixXd> midllt(mid);
    if (midllt.info() != Eigen::Success)
        throw IllConditionedError("Psi F^{-1} Psi' is not positive definite",
                                  condition_of(mid));

    PredictorParams p;
    Eigen::MatrixXd R123 = midllt.solve(FiPsiT.transpose()).transpose();  // M x (nu+nw)L
    const int nuL0 = s.n_u() * s.L0(), nuLp = s.n_u() * s.Lp(), nwL = s.n_w() * s.L();
    p.R1 = R123.leftCols(nuL0);
    p.R2 = R123.middleCols(nuL0, nuLp);
    p.R3 = R123.rightCols(nwL);
    p.R4 = FiYpS - R123 * (psi * FiYpS);

    Eigen::MatrixXd YpR4 = Yp * p.R4;  // ny L0 square
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(YpR4);
    const double cond = condition_of(YpR4);
    if (!(cond < 1.0 / kPinvRelTol))
        throw IllConditionedError("Yp R4 is numerically singular", cond);
    p.gamma_hat = (lu.solve((Yf * p.R4).transpose())).transpose();

    p.Yf_residual = Yf - p.gamma_hat * Yp;
    p.gamma_w = p.Yf_residual * p.R3;
    p.T = sigma2 * (p.gamma_hat * p.gamma_hat.transpose() +
                    Eigen::MatrixXd::Identity(Yf.rows(), Yf.rows()));
    p.design = design;
    p.sigma2 = sigma2;
    p.sm = std::move(sm);
    return p;
}

PredictionResult predict(const PredictorParams& params, const QueryCondition& q,
                         const Eigen::VectorXd& u_hat) {
    check_query(params, q);
    if (u_hat.size() != params.R2.cols()) throw DimensionError("u_hat size mismatch");

    PredictionResult out;
    out.g = params.R1 * q.u_ini + params.R2 * u_hat + params.R3 * q.w_bar +
            params.R4 * q.y_ini_bar;
    out.y_bar = params.Yf_residual * out.g + params.gamma_hat * q.y_ini_bar;
    Eigen::MatrixXd sigma = params.gamma_hat * q.P_t * params.gamma_hat.transpose() +
                            params.gamma_w * q.Sigma_w * params.gamma_w.transpose() +
                            out.g.squaredNorm() * params.T;
    out.Sigma = symmetrize_psd(sigma);
    return out;
}

AffineMaps predict_affine_maps(const PredictorParams& params, const QueryCondition& q) {
    check_query(params, q);
    AffineMaps maps;
    maps.G_u = params.R2;
    maps.g_0 = params.R1 * q.u_ini + params.R3 * q.w_bar + params.R4 * q.y_ini_bar;
    maps.Y_u = params.Yf_residual * params.R2;
    maps.y_0 = params.Yf_residual * maps.g_0 + params.gamma_hat * q.y_ini_bar;
    return maps;
}

Eigen::VectorXd qp_reference_solve(const SignalMatrix& sm, const RegularizerDesign& design,
                                   const QueryCondition& q, const Eigen::VectorXd& u_hat) {
    check_query(sm, q);
    if (u_hat.size() != sm.n_u() * sm.Lp()) throw DimensionError("u_hat size mismatch");

    const int M = sm.M();
    const Eigen::MatrixXd psi = sm.Psi();
    const int nr = static_cast<int>(psi.rows());
    const double lambda_eff =
        std::max(design.lambda, eps_reg(sm.Yp(), design.S, M));

    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(M + nr, M + nr);
    kkt.topLeftCorner(M, M) = 2.0 * (sm.Yp().transpose() * design.S * sm.Yp());
    kkt.topLeftCorner(M, M).diagonal().array() += 2.0 * lambda_eff;
    kkt.topRightCorner(M, nr) = psi.transpose();
    kkt.bottomLeftCorner(nr, M) = psi;

    Eigen::VectorXd rhs(M + nr);
    rhs.head(M) = 2.0 * sm.Yp().transpose() * design.S * q.y_ini_bar;
    Eigen::VectorXd cond(nr);
    cond << q.u_ini, u_hat, q.w_bar;
    rhs.tail(nr) = cond;

    Eigen::PartialPivLU<Eigen::MatrixXd> lu(kkt);
    Eigen::VectorXd sol = lu.solve(rhs);
    if (!sol.allFinite() || (kkt * sol - rhs).norm() > 1e-6 * (1.0 + rhs.norm()))
        throw IllConditionedError("KKT system of the reference program is singular",
                                  condition_of(kkt));
    return sol.head(M);
}

void PredictorParams::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    os.write(kMagic, 8);
    auto wi = [&](int64_t v) { os.write(reinterpret_cast<const char*>(&v), sizeof(v)); };
    auto wm = [&](const Eigen::MatrixXd& m) {
        wi(m.rows());
        wi(m.cols());
        os.write(reinterpret_cast<const char*>(m.data()),
                 static_cast<std::streamsize>(sizeof(double)) * m.size());
    };
    wi(static_cast<int64_t>(design.kind));
    os.write(reinterpret_cast<const char*>(&design.lambda), sizeof(double));
    os.write(reinterpret_cast<const char*>(&sigma2), sizeof(double));
    for (const auto* m : {&design.S, &R1, &R2, &R3, &R4, &gamma_hat, &gamma_w, &T, &Yf_residual})
        wm(*m);
}

PredictorParams PredictorParams::load(const std::string& path,
                                      std::shared_ptr<const SignalMatrix> sm) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path);
    char magic[8];
    is.read(magic, 8);
    if (std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error(path + " is not a predictor cache");
    auto ri = [&]() {
        int64_t v = 0;
        is.read(reinterpret_cast<char*>(&v), sizeof(v));
        return v;
    };
    auto rm = [&]() {
        int64_t r = ri(), c = ri();
        Eigen::MatrixXd m(r, c);
        is.read(reinterpret_cast<char*>(m.data()),
                static_cast<std::streamsize>(sizeof(double)) * m.size());
        return m;
    };
    PredictorParams p;
    p.design.kind = static_cast<DesignKind>(ri());
    is.read(reinterpret_cast<char*>(&p.design.lambda), sizeof(double));
    is.read(reinterpret_cast<char*>(&p.sigma2), sizeof(double));
    p.design.S = rm();
    p.R1 = rm();
    p.R2 = rm();
    p.R3 = rm();
    p.R4 = rm();
    p.gamma_hat = rm();
    p.gamma_w = rm();
    p.T = rm();
    p.Yf_residual = rm();
    if (!is) throw std::runtime_error(path + ": truncated cache file");
    p.sm = std::move(sm);
    return p;
}

}  // namespace ddpc
