#include "ddpc/socp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "ddpc/errors.hpp"

namespace ddpc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kStaticReg = 1e-9;  // static KKT diagonal regularization

// ============================================================
// Cone workspace
// ============================================================
//
// The solver works on the conic slack form
//     min 0.5 x'Px + q'x  s.t.  A x = b,  Gt x + s = ht,  s in K
// with K = R+^{ml} x SOC_{k1} x ... ; rows of (Gt, ht) are the orthant rows
// first, then each SOC block as (-a'; -C) x + s = (b; d).

struct ConeLayout {
    int ml = 0;                 // orthant dimension
    std::vector<int> soc_dims;  // per-SOC total dimension (1 + rows of C)
    int total() const {
        int t = ml;
        for (int k : soc_dims) t += k;
        return t;
    }
    int degree() const { return ml + static_cast<int>(soc_dims.size()); }
};

// Nesterov-Todd scaling for one SOC block: W = eta * sqrtform(w),
// W^2 = eta^2 (2 w w' - J), lambda = W z = W^{-1} s.
struct SocScaling {
    Eigen::VectorXd w;
    double eta = 1.0;
};

double soc_residual(const Eigen::VectorXd& x) {  // x'Jx = x0^2 - ||x1||^2
    return x(0) * x(0) - x.tail(x.size() - 1).squaredNorm();
}

// y = sqrtform(u) x with u'Ju = 1, u0 > 0:
//   y0 = u0 x0 + u1'x1,  y1 = x1 + (x0 + (u1'x1)/(1+u0)) u1
Eigen::VectorXd sqrtform_apply(const Eigen::VectorXd& u, const Eigen::VectorXd& x) {
    const auto u1 = u.tail(u.size() - 1);
    const auto x1 = x.tail(x.size() - 1);
    const double dot = u1.dot(x1);
    Eigen::VectorXd y(x.size());
    y(0) = u(0) * x(0) + dot;
    y.tail(x.size() - 1) = x1 + (x(0) + dot / (1.0 + u(0))) * u1;
    return y;
}

struct Scalings {
    Eigen::VectorXd orth_w2;      // W^2 diagonal = s/z on the orthant block
    std::vector<SocScaling> soc;
    Eigen::VectorXd lambda;       // scaled variable, all cone coordinates
};

class ConeOps {
public:
    explicit ConeOps(ConeLayout layout) : lay_(std::move(layout)) {}

    const ConeLayout& layout() const { return lay_; }

    Eigen::VectorXd identity() const {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(lay_.total());
        e.head(lay_.ml).setOnes();
        int off = lay_.ml;
        for (int k : lay_.soc_dims) {
            e(off) = 1.0;
            off += k;
        }
        return e;
    }

    // Largest step to the cone boundary from interior x along dx.
    double max_step(const Eigen::VectorXd& x, const Eigen::VectorXd& dx) const {
        double alpha = kInf;
        for (int i = 0; i < lay_.ml; ++i)
            if (dx(i) < 0.0) alpha = std::min(alpha, -x(i) / dx(i));
        int off = lay_.ml;
        for (int k : lay_.soc_dims) {
            alpha = std::min(alpha, soc_max_step(x.segment(off, k), dx.segment(off, k)));
            off += k;
        }
        return alpha;
    }

    // Jordan product u o v.
    Eigen::VectorXd product(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
        Eigen::VectorXd out(lay_.total());
        out.head(lay_.ml) = u.head(lay_.ml).cwiseProduct(v.head(lay_.ml));
        int off = lay_.ml;
        for (int k : lay_.soc_dims) {
            auto us = u.segment(off, k);
            auto vs = v.segment(off, k);
            out(off) = us.dot(vs);
            out.segment(off + 1, k - 1) =
                us(0) * vs.tail(k - 1) + vs(0) * us.tail(k - 1);
            off += k;
        }
        return out;
    }

    // Solve lambda o u = d for u.
    Eigen::VectorXd inv_product(const Eigen::VectorXd& lambda, const Eigen::VectorXd& d) const {
        Eigen::VectorXd out(lay_.total());
        out.head(lay_.ml) = d.head(lay_.ml).cwiseQuotient(lambda.head(lay_.ml));
        int off = lay_.ml;
        for (int k : lay_.soc_dims) {
            auto l = lambda.segment(off, k);
            auto ds = d.segment(off, k);
            const double det = soc_residual(l);
            const double u0 = (l(0) * ds(0) - l.tail(k - 1).dot(ds.tail(k - 1))) / det;
            out(off) = u0;
            out.segment(off + 1, k - 1) = (ds.tail(k - 1) - u0 * l.tail(k - 1)) / l(0);
            off += k;
        }
        return out;
    }

    // NT scaling from an interior pair (s, z); returns false on breakdown.
    bool update_scalings(const Eigen::VectorXd& s, const Eigen::VectorXd& z, Scalings& sc) const {
        sc.orth_w2 = s.head(lay_.ml).cwiseQuotient(z.head(lay_.ml));
        if (lay_.ml > 0 && !(sc.orth_w2.minCoeff() > 0.0)) return false;
        sc.soc.resize(lay_.soc_dims.size());
        sc.lambda.resize(lay_.total());
        sc.lambda.head(lay_.ml) =
            (s.head(lay_.ml).cwiseProduct(z.head(lay_.ml))).cwiseSqrt();
        int off = lay_.ml;
        for (size_t j = 0; j < lay_.soc_dims.size(); ++j) {
            const int k = lay_.soc_dims[j];
            auto ss = s.segment(off, k);
            auto zs = z.segment(off, k);
            const double sres = soc_residual(ss), zres = soc_residual(zs);
            if (!(sres > 0.0) || !(zres > 0.0) || !(ss(0) > 0.0) || !(zs(0) > 0.0)) return false;
            Eigen::VectorXd sb = ss / std::sqrt(sres), zb = zs / std::sqrt(zres);
            const double gamma = std::sqrt(0.5 * (1.0 + zb.dot(sb)));
            SocScaling& w = sc.soc[j];
            w.w.resize(k);
            w.w(0) = (sb(0) + zb(0)) / (2.0 * gamma);
            w.w.tail(k - 1) = (sb.tail(k - 1) - zb.tail(k - 1)) / (2.0 * gamma);
            w.eta = std::pow(sres / zres, 0.25);
            sc.lambda.segment(off, k) = scale(sc, j, zs, off);  // lambda = W z
            off += k;
        }
        return true;
    }

    // W x (SOC block j starting at offset off).
    Eigen::VectorXd scale(const Scalings& sc, size_t j, const Eigen::VectorXd& x,
                          int /*off*/) const {
        return sc.soc[j].eta * sqrtform_apply(sc.soc[j].w, x);
    }

    // Full-cone W x.
    Eigen::VectorXd w_apply(const Scalings& sc, const Eigen::VectorXd& x) const {
        Eigen::VectorXd out(lay_.total());
        out.head(lay_.ml) = sc.orth_w2.cwiseSqrt().cwiseProduct(x.head(lay_.ml));
        int off = lay_.ml;
        for (size_t j = 0; j < lay_.soc_dims.size(); ++j) {
            const int k = lay_.soc_dims[j];
            out.segment(off, k) = sc.soc[j].eta * sqrtform_apply(sc.soc[j].w, x.segment(off, k));
            off += k;
        }
        return out;
    }

    // Full-cone W^{-1} x (sqrtform with Jw and 1/eta).
    Eigen::VectorXd winv_apply(const Scalings& sc, const Eigen::VectorXd& x) const {
        Eigen::VectorXd out(lay_.total());
        out.head(lay_.ml) =
            x.head(lay_.ml).cwiseQuotient(sc.orth_w2.cwiseSqrt());
        int off = lay_.ml;
        for (size_t j = 0; j < lay_.soc_dims.size(); ++j) {
            const int k = lay_.soc_dims[j];
            Eigen::VectorXd jw = sc.soc[j].w;
            jw.tail(k - 1) *= -1.0;
            out.segment(off, k) = sqrtform_apply(jw, x.segment(off, k)) / sc.soc[j].eta;
            off += k;
        }
        return out;
    }

    // Full-cone W^2 x.
    Eigen::VectorXd w2_apply(const Scalings& sc, const Eigen::VectorXd& x) const {
        Eigen::VectorXd out(lay_.total());
        out.head(lay_.ml) = sc.orth_w2.cwiseProduct(x.head(lay_.ml));
        int off = lay_.ml;
        for (size_t j = 0; j < lay_.soc_dims.size(); ++j) {
            const int k = lay_.soc_dims[j];
            const auto& w = sc.soc[j].w;
            auto xs = x.segment(off, k);
            Eigen::VectorXd jx(k);
            jx(0) = xs(0);
            jx.tail(k - 1) = -xs.tail(k - 1);
            out.segment(off, k) = sc.soc[j].eta * sc.soc[j].eta * (2.0 * w.dot(xs) * w - jx);
            off += k;
        }
        return out;
    }

    // Full-cone W^{-2} x.
    Eigen::VectorXd winv2_apply(const Scalings& sc, const Eigen::VectorXd& x) const {
        Eigen::VectorXd out(lay_.total());
        out.head(lay_.ml) = x.head(lay_.ml).cwiseQuotient(sc.orth_w2);
        int off = lay_.ml;
        for (size_t j = 0; j < lay_.soc_dims.size(); ++j) {
            const int k = lay_.soc_dims[j];
            Eigen::VectorXd jw = sc.soc[j].w;
            jw.tail(k - 1) *= -1.0;
            auto xs = x.segment(off, k);
            Eigen::VectorXd jx(k);
            jx(0) = xs(0);
            jx.tail(k - 1) = -xs.tail(k - 1);
            out.segment(off, k) = (2.0 * jw.dot(xs) * jw - jx) / (sc.soc[j].eta * sc.soc[j].eta);
            off += k;
        }
        return out;
    }

    // Violation of membership in K: 0 when x is inside.
    double cone_violation(const Eigen::VectorXd& x) const {
        double v = 0.0;
        for (int i = 0; i < lay_.ml; ++i) v = std::max(v, -x(i));
        int off = lay_.ml;
        for (int k : lay_.soc_dims) {
            v = std::max(v, x.segment(off + 1, k - 1).norm() - x(off));
            off += k;
        }
        return v;
    }

private:
    static double soc_max_step(const Eigen::VectorXd& x, const Eigen::VectorXd& dx) {
        const int k = static_cast<int>(x.size());
        const double a = dx(0) * dx(0) - dx.tail(k - 1).squaredNorm();
        const double b = x(0) * dx(0) - x.tail(k - 1).dot(dx.tail(k - 1));
        const double c = soc_residual(x);
        double alpha = (dx(0) < 0.0) ? -x(0) / dx(0) : kInf;
        const double disc = b * b - a * c;
        if (std::abs(a) < 1e-300) {
            if (b < 0.0) alpha = std::min(alpha, -c / (2.0 * b));
            return alpha;
        }
        if (disc < 0.0) return alpha;  // only possible with a > 0: never leaves the cone
        const double r = std::sqrt(disc);
        const double r1 = (-b - r) / a, r2 = (-b + r) / a;
        if (a > 0.0) {
            // q(alpha) < 0 between the roots; boundary at the smaller positive root
            if (r1 > 0.0) alpha = std::min(alpha, r1);
        } else {
            const double lo = std::min(r1, r2), hi = std::max(r1, r2);
            if (lo > 0.0)
                alpha = std::min(alpha, lo);
            else if (hi > 0.0)
                alpha = std::min(alpha, hi);
        }
        return alpha;
    }

    ConeLayout lay_;
};

// ============================================================
// KKT solver: two-level elimination with static regularization
// and iterative refinement
// ============================================================

class KktSolver {
public:
    KktSolver(const Eigen::MatrixXd& P, const Eigen::MatrixXd& A, const Eigen::MatrixXd& Gt,
              const ConeOps& cone)
        : P_(P), A_(A), Gt_(Gt), cone_(cone), n_(static_cast<int>(P.rows())),
          me_(static_cast<int>(A.rows())) {
        // Per-SOC constant part of Gb' W^{-2} Gb = eta^{-2} (2 vv' - Gb' J Gb):
        // the J-gram row0'row0 - Gtail'Gtail does not change across iterations.
        const auto& lay = cone_.layout();
        int off = lay.ml;
        for (int k : lay.soc_dims) {
            Eigen::VectorXd r0 = Gt_.row(off).transpose();
            Eigen::MatrixXd gtail = Gt_.middleRows(off + 1, k - 1);
            jgram_.push_back(r0 * r0.transpose() - gtail.transpose() * gtail);
            off += k;
        }
    }

    bool factor(const Scalings& sc) {
        sc_ = &sc;
        Eigen::MatrixXd schur = P_;
        const auto& lay = cone_.layout();
        if (lay.ml > 0) {
            Eigen::MatrixXd go = Gt_.topRows(lay.ml);
            schur.noalias() += go.transpose() * sc.orth_w2.cwiseInverse().asDiagonal() * go;
        }
        int off = lay.ml;
        for (size_t j = 0; j < lay.soc_dims.size(); ++j) {
            const int k = lay.soc_dims[j];
            Eigen::VectorXd jw = sc.soc[j].w;
            jw.tail(k - 1) *= -1.0;
            // v = Gb' (Jw); O(k n) per iteration, the rest is rank-one plus cache
            Eigen::VectorXd v = Gt_.middleRows(off, k).transpose() * jw;
            const double ieta2 = 1.0 / (sc.soc[j].eta * sc.soc[j].eta);
            schur.noalias() += ieta2 * (2.0 * v * v.transpose() - jgram_[j]);
            off += k;
        }
        kkt_.resize(n_ + me_, n_ + me_);
        kkt_.topLeftCorner(n_, n_) = schur;
        kkt_.topLeftCorner(n_, n_).diagonal().array() += kStaticReg;
        kkt_.topRightCorner(n_, me_) = A_.transpose();
        kkt_.bottomLeftCorner(me_, n_) = A_;
        kkt_.bottomRightCorner(me_, me_) =
            -kStaticReg * Eigen::MatrixXd::Identity(me_, me_);
        ldlt_.compute(kkt_);
        return ldlt_.info() == Eigen::Success;
    }

    // Solve  P dx + A'dy + Gt'dz = rx ;  A dx = ry ;  Gt dx - W^2 dz = rz.
    void solve3(const Eigen::VectorXd& rx, const Eigen::VectorXd& ry, const Eigen::VectorXd& rz,
                Eigen::VectorXd& dx, Eigen::VectorXd& dy, Eigen::VectorXd& dz) const {
        dx = Eigen::VectorXd::Zero(n_);
        dy = Eigen::VectorXd::Zero(me_);
        dz = Eigen::VectorXd::Zero(cone_.layout().total());
        Eigen::VectorXd cur_rx = rx, cur_ry = ry, cur_rz = rz;
        for (int pass = 0; pass < 3; ++pass) {
            Eigen::VectorXd rhs(n_ + me_);
            rhs.head(n_) = cur_rx + Gt_.transpose() * cone_.winv2_apply(*sc_, cur_rz);
            rhs.tail(me_) = cur_ry;
            Eigen::VectorXd sol = ldlt_.solve(rhs);
            Eigen::VectorXd ddx = sol.head(n_);
            Eigen::VectorXd ddy = sol.tail(me_);
            Eigen::VectorXd ddz = cone_.winv2_apply(*sc_, Gt_ * ddx - cur_rz);
            dx += ddx;
            dy += ddy;
            dz += ddz;
            // refinement against the unregularized equations
            cur_rx = rx - (P_ * dx + A_.transpose() * dy + Gt_.transpose() * dz);
            cur_ry = ry - A_ * dx;
            cur_rz = rz - (Gt_ * dx - cone_.w2_apply(*sc_, dz));
            const double res = std::max({cur_rx.lpNorm<Eigen::Infinity>(),
                                         me_ > 0 ? cur_ry.lpNorm<Eigen::Infinity>() : 0.0,
                                         cur_rz.size() > 0
                                             ? cur_rz.lpNorm<Eigen::Infinity>()
                                             : 0.0});
            if (res < 1e-13 * (1.0 + rx.lpNorm<Eigen::Infinity>())) break;
        }
    }

private:
    const Eigen::MatrixXd& P_;
    const Eigen::MatrixXd& A_;
    const Eigen::MatrixXd& Gt_;
    const ConeOps& cone_;
    const Scalings* sc_ = nullptr;
    int n_, me_;
    std::vector<Eigen::MatrixXd> jgram_;
    Eigen::MatrixXd kkt_;
    Eigen::LDLT<Eigen::MatrixXd> ldlt_;
};

// ============================================================
// Equality-constrained QP fallback (no cone blocks at all)
// ============================================================

Solution solve_equality_qp(const ConeProgram& prog, double tol) {
    const int n = prog.n();
    const int me = static_cast<int>(prog.Aeq.rows());
    Solution sol;
    sol.duals.y_eq = Eigen::VectorXd::Zero(me);
    Eigen::MatrixXd kkt(n + me, n + me);
    kkt.setZero();
    kkt.topLeftCorner(n, n) = prog.P;
    kkt.topLeftCorner(n, n).diagonal().array() += kStaticReg;
    if (me > 0) {
        kkt.topRightCorner(n, me) = prog.Aeq.transpose();
        kkt.bottomLeftCorner(me, n) = prog.Aeq;
        kkt.bottomRightCorner(me, me).diagonal().array() -= kStaticReg;
    }
    Eigen::VectorXd rhs(n + me);
    rhs.head(n) = -prog.f;
    rhs.tail(me) = prog.beq;

    Eigen::LDLT<Eigen::MatrixXd> ldlt(kkt);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n + me);
    Eigen::VectorXd cur = rhs;
    for (int pass = 0; pass < 3; ++pass) {
        x += ldlt.solve(cur);
        cur.head(n) = -prog.f - (prog.P * x.head(n) +
                                 (me > 0 ? Eigen::VectorXd(prog.Aeq.transpose() * x.tail(me))
                                         : Eigen::VectorXd::Zero(n)));
        if (me > 0) cur.tail(me) = prog.beq - prog.Aeq * x.head(n);
    }
    sol.z = x.head(n);
    sol.duals.y_eq = x.tail(me);
    const double scale_b = 1.0 + (me > 0 ? prog.beq.lpNorm<Eigen::Infinity>() : 0.0);
    const double scale_f = 1.0 + prog.f.lpNorm<Eigen::Infinity>();
    const double peq = me > 0 ? (prog.Aeq * sol.z - prog.beq).lpNorm<Eigen::Infinity>() : 0.0;
    const double stat = (prog.P * sol.z + prog.f +
                         (me > 0 ? Eigen::VectorXd(prog.Aeq.transpose() * sol.duals.y_eq)
                                 : Eigen::VectorXd::Zero(n)))
                            .lpNorm<Eigen::Infinity>();
    sol.residuals = {peq / scale_b, stat / scale_f, 0.0};
    sol.objective = 0.5 * sol.z.dot(prog.P * sol.z) + prog.f.dot(sol.z) + prog.c0;
    sol.iterations = 1;
    if (!sol.z.allFinite())
        sol.status = SolveStatus::numerical;
    else if (peq > std::sqrt(tol) * scale_b)
        sol.status = SolveStatus::infeasible;
    else if (stat > std::sqrt(tol) * scale_f)
        sol.status = SolveStatus::unbounded;  // P-singular direction with nonzero slope
    else
        sol.status = SolveStatus::optimal;
    return sol;
}

}  // namespace

// ============================================================
// ConeProgram
// ============================================================

void ConeProgram::validate() const {
    const int nn = n();
    if (P.rows() != nn || P.cols() != nn) throw DimensionError("P must be n x n");
    if ((P - P.transpose()).cwiseAbs().maxCoeff() >
        1e-8 * (1.0 + P.cwiseAbs().maxCoeff()))
        throw std::invalid_argument("P must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(P, Eigen::EigenvaluesOnly);
    if (nn > 0 && es.eigenvalues().minCoeff() < -1e-8 * (1.0 + P.cwiseAbs().maxCoeff()))
        throw std::invalid_argument("P must be positive semidefinite");
    if (Aeq.rows() != beq.size()) throw DimensionError("Aeq/beq row mismatch");
    if (Aeq.rows() > 0 && Aeq.cols() != nn) throw DimensionError("Aeq column mismatch");
    if (G.rows() != h.size()) throw DimensionError("G/h row mismatch");
    if (G.rows() > 0 && G.cols() != nn) throw DimensionError("G column mismatch");
    for (const auto& s : socs) {
        if (s.a.size() != nn) throw DimensionError("SOC a dimension mismatch");
        if (s.Cmat.rows() != s.d.size()) throw DimensionError("SOC C/d row mismatch");
        if (s.Cmat.rows() > 0 && s.Cmat.cols() != nn)
            throw DimensionError("SOC C column mismatch");
    }
}

std::string ConeProgram::dump() const {
    std::ostringstream os;
    auto put = [&](double v) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        os << buf;
    };
    auto put_matrix = [&](const Eigen::MatrixXd& m) {
        for (int i = 0; i < m.rows(); ++i) {
            for (int j = 0; j < m.cols(); ++j) {
                if (j) os << ' ';
                put(m(i, j));
            }
            os << '\n';
        }
    };
    auto put_vector = [&](const Eigen::VectorXd& v) {
        for (int i = 0; i < v.size(); ++i) {
            if (i) os << ' ';
            put(v(i));
        }
        os << '\n';
    };
    os << "ddpc-coneprogram v1\n";
    os << "n " << n() << " me " << Aeq.rows() << " mi " << G.rows() << " nsoc " << socs.size()
       << "\n";
    os << "P\n";
    put_matrix(P);
    os << "f\n";
    put_vector(f);
    os << "c0\n";
    put(c0);
    os << '\n';
    if (Aeq.rows() > 0) {
        os << "Aeq\n";
        put_matrix(Aeq);
        os << "beq\n";
        put_vector(beq);
    }
    if (G.rows() > 0) {
        os << "G\n";
        put_matrix(G);
        os << "h\n";
        put_vector(h);
    }
    for (const auto& s : socs) {
        os << "soc k " << s.Cmat.rows() << "\n";
        os << "C\n";
        put_matrix(s.Cmat);
        os << "d\n";
        put_vector(s.d);
        os << "a\n";
        put_vector(s.a);
        os << "b\n";
        put(s.b);
        os << '\n';
    }
    return os.str();
}

const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::optimal: return "optimal";
        case SolveStatus::infeasible: return "infeasible";
        case SolveStatus::unbounded: return "unbounded";
        case SolveStatus::max_iter: return "max_iter";
        case SolveStatus::numerical: return "numerical";
    }
    return "unknown";
}

// ============================================================
// Interior-point solve
// ============================================================

Solution solve(const ConeProgram& prog, double tol, int max_iter) {
    prog.validate();
    const int n = prog.n();
    const int me = static_cast<int>(prog.Aeq.rows());
    const int ml = static_cast<int>(prog.G.rows());

    ConeLayout layout;
    layout.ml = ml;
    for (const auto& s : prog.socs)
        layout.soc_dims.push_back(1 + static_cast<int>(s.Cmat.rows()));
    const int m = layout.total();

    if (m == 0) return solve_equality_qp(prog, tol);

    // Assemble conic rows.
    Eigen::MatrixXd Gt(m, n);
    Eigen::VectorXd ht(m);
    if (ml > 0) {
        Gt.topRows(ml) = prog.G;
        ht.head(ml) = prog.h;
    }
    {
        int off = ml;
        for (const auto& s : prog.socs) {
            const int k = 1 + static_cast<int>(s.Cmat.rows());
            Gt.row(off) = -s.a.transpose();
            ht(off) = s.b;
            Gt.middleRows(off + 1, k - 1) = -s.Cmat;
            ht.segment(off + 1, k - 1) = s.d;
            off += k;
        }
    }

    const Eigen::MatrixXd& P = prog.P;
    const Eigen::VectorXd& q = prog.f;
    const Eigen::MatrixXd& A = prog.Aeq;
    const Eigen::VectorXd& b = prog.beq;

    ConeOps cone(layout);
    KktSolver kkt(P, A, Gt, cone);

    // Unit initialization of the embedding.
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(me);
    Eigen::VectorXd s = cone.identity();
    Eigen::VectorXd z = cone.identity();
    double tau = 1.0, kappa = 1.0;

    const double nu = layout.degree();
    const double scale_b = 1.0 + b.lpNorm<Eigen::Infinity>();
    const double scale_h = 1.0 + ht.lpNorm<Eigen::Infinity>();
    const double scale_q = 1.0 + q.lpNorm<Eigen::Infinity>();

    Solution sol;
    sol.z = x;
    Scalings sc;

    auto fill_duals = [&](const Eigen::VectorXd& zz) {
        sol.duals.z_ineq = zz.head(ml);
        sol.duals.z_soc.clear();
        int off = ml;
        for (int k : layout.soc_dims) {
            sol.duals.z_soc.push_back(zz.segment(off, k));
            off += k;
        }
    };

    for (int iter = 0; iter <= max_iter; ++iter) {
        // ---- residuals of the homogeneous system
        Eigen::VectorXd hx = x / tau, hy = y / tau, hz = z / tau, hs = s / tau;
        Eigen::VectorXd rd = P * hx + q + Gt.transpose() * hz;
        if (me > 0) rd += A.transpose() * hy;
        const double dres = rd.lpNorm<Eigen::Infinity>() / scale_q;
        const double peq =
            me > 0 ? (A * hx - b).lpNorm<Eigen::Infinity>() / scale_b : 0.0;
        const double pin = (Gt * hx + hs - ht).lpNorm<Eigen::Infinity>() / scale_h;
        const double pres = std::max(peq, pin);
        const double xPx = hx.dot(P * hx);
        const double pobj = 0.5 * xPx + q.dot(hx);
        const double dobj = -0.5 * xPx - (me > 0 ? b.dot(hy) : 0.0) - ht.dot(hz);
        const double cgap = hs.dot(hz);
        const double gap_rel = cgap / std::max({1.0, std::abs(pobj), std::abs(dobj)});

        sol.residuals = {pres, dres, gap_rel};
        sol.iterations = iter;

        if (pres <= tol && dres <= tol && gap_rel <= tol) {
            sol.status = SolveStatus::optimal;
            sol.z = hx;
            sol.duals.y_eq = hy;
            fill_duals(hz);
            sol.objective = pobj + prog.c0;
            return sol;
        }

        // ---- infeasibility certificates
        const double by = b.size() > 0 ? b.dot(hy) : 0.0;
        const double cert_p = by + ht.dot(hz);
        if (cert_p < -1e-10) {
            Eigen::VectorXd atz = Gt.transpose() * hz;
            if (me > 0) atz += A.transpose() * hy;
            if (atz.lpNorm<Eigen::Infinity>() / (-cert_p) <= tol &&
                cone.cone_violation(hz) <= tol * (1.0 + hz.lpNorm<Eigen::Infinity>())) {
                sol.status = SolveStatus::infeasible;
                sol.z = hx;
                sol.duals.y_eq = hy;
                fill_duals(hz);
                sol.objective = kInf;
                return sol;
            }
        }
        const double cert_d = q.dot(hx);
        if (cert_d < -1e-10) {
            const double push = std::max(
                {(P * hx).lpNorm<Eigen::Infinity>(),
                 me > 0 ? (A * hx).lpNorm<Eigen::Infinity>() : 0.0,
                 cone.cone_violation(-(Gt * hx))});
            if (push / (-cert_d) <= tol) {
                sol.status = SolveStatus::unbounded;
                sol.z = hx;
                sol.objective = -kInf;
                return sol;
            }
        }

        if (iter == max_iter) break;

        // ---- NT scaling and KKT factorization
        if (!cone.update_scalings(s, z, sc)) {
            sol.status = SolveStatus::numerical;
            sol.z = hx;
            return sol;
        }
        if (!kkt.factor(sc)) {
            sol.status = SolveStatus::numerical;
            sol.z = hx;
            return sol;
        }

        const double mu = (s.dot(z) + tau * kappa) / (nu + 1.0);

        // residuals of the homogeneous equations (not the scaled ones)
        Eigen::VectorXd r_x = P * x + Gt.transpose() * z + q * tau;
        if (me > 0) r_x += A.transpose() * y;
        Eigen::VectorXd r_y = me > 0 ? Eigen::VectorXd(A * x - b * tau) : Eigen::VectorXd(0);
        Eigen::VectorXd r_z = Gt * x + s - ht * tau;
        const double r_tau = kappa + q.dot(x) + (me > 0 ? b.dot(y) : 0.0) + ht.dot(z) +
                             x.dot(P * x) / tau;

        Eigen::VectorXd xi = x / tau;
        Eigen::VectorXd qbar = q + 2.0 * (P * xi);
        const double xiPxi = xi.dot(P * xi);

        Eigen::VectorXd u1x, u1y, u1z;
        kkt.solve3(-q, b, ht, u1x, u1y, u1z);
        const double denom = qbar.dot(u1x) + (me > 0 ? b.dot(u1y) : 0.0) + ht.dot(u1z) -
                             xiPxi - kappa / tau;
        if (!std::isfinite(denom) || std::abs(denom) < 1e-300) {
            sol.status = SolveStatus::numerical;
            sol.z = hx;
            return sol;
        }

        auto direction = [&](const Eigen::VectorXd& ds_target, double dk_target, double sigma,
                             Eigen::VectorXd& dx, Eigen::VectorXd& dy, Eigen::VectorXd& dz,
                             Eigen::VectorXd& dsv, double& dtau, double& dkappa) {
            const double one_m = 1.0 - sigma;
            Eigen::VectorXd wl = cone.w_apply(sc, cone.inv_product(sc.lambda, ds_target));
            Eigen::VectorXd dz_rhs = -one_m * r_z - wl;
            Eigen::VectorXd u2x, u2y, u2z;
            kkt.solve3(-one_m * r_x, -one_m * (me > 0 ? r_y : Eigen::VectorXd::Zero(0)),
                       dz_rhs, u2x, u2y, u2z);
            const double num = -one_m * r_tau - dk_target / tau -
                               (qbar.dot(u2x) + (me > 0 ? b.dot(u2y) : 0.0) + ht.dot(u2z));
            dtau = num / denom;
            dx = u2x + dtau * u1x;
            dy = me > 0 ? Eigen::VectorXd(u2y + dtau * u1y) : Eigen::VectorXd(0);
            dz = u2z + dtau * u1z;
            dsv = wl - cone.w2_apply(sc, dz);
            dkappa = (dk_target - kappa * dtau) / tau;
        };

        // ---- affine (predictor) direction
        Eigen::VectorXd dxa, dya, dza, dsa;
        double dtaua, dkappaa;
        Eigen::VectorXd ds_aff = -cone.product(sc.lambda, sc.lambda);
        direction(ds_aff, -tau * kappa, 0.0, dxa, dya, dza, dsa, dtaua, dkappaa);

        double alpha_aff = std::min(cone.max_step(s, dsa), cone.max_step(z, dza));
        if (dtaua < 0.0) alpha_aff = std::min(alpha_aff, -tau / dtaua);
        if (dkappaa < 0.0) alpha_aff = std::min(alpha_aff, -kappa / dkappaa);
        alpha_aff = std::min(alpha_aff, 1.0);

        const double sigma = std::pow(1.0 - alpha_aff, 3);

        // ---- combined (corrector) direction with Mehrotra term
        Eigen::VectorXd corr =
            cone.product(cone.winv_apply(sc, dsa), cone.w_apply(sc, dza));
        Eigen::VectorXd ds_comb =
            -cone.product(sc.lambda, sc.lambda) - corr + sigma * mu * cone.identity();
        const double dk_comb = sigma * mu - tau * kappa - dtaua * dkappaa;

        Eigen::VectorXd dx, dy, dz, ds;
        double dtau, dkappa;
        direction(ds_comb, dk_comb, sigma, dx, dy, dz, ds, dtau, dkappa);

        double alpha = std::min(cone.max_step(s, ds), cone.max_step(z, dz));
        if (dtau < 0.0) alpha = std::min(alpha, -tau / dtau);
        if (dkappa < 0.0) alpha = std::min(alpha, -kappa / dkappa);
        alpha = std::min(0.99 * alpha, 1.0);

        if (!std::isfinite(alpha) || alpha <= 1e-12) {
            sol.status = SolveStatus::numerical;
            sol.z = hx;
            return sol;
        }

        x += alpha * dx;
        if (me > 0) y += alpha * dy;
        z += alpha * dz;
        s += alpha * ds;
        tau += alpha * dtau;
        kappa += alpha * dkappa;

        if (!(tau > 0.0) || !x.allFinite() || !z.allFinite() || !s.allFinite()) {
            sol.status = SolveStatus::numerical;
            return sol;
        }
    }

    sol.status = SolveStatus::max_iter;
    sol.z = x / tau;
    sol.duals.y_eq = y / tau;
    fill_duals(z / tau);
    sol.objective = 0.5 * sol.z.dot(P * sol.z) + q.dot(sol.z) + prog.c0;
    return sol;
}

// ============================================================
// External certificate check
// ============================================================

Residuals kkt_residuals(const ConeProgram& prog, const Eigen::VectorXd& z, const Duals& duals) {
    prog.validate();
    const int n = prog.n();
    if (z.size() != n) throw DimensionError("z dimension mismatch");
    const int me = static_cast<int>(prog.Aeq.rows());
    const int ml = static_cast<int>(prog.G.rows());
    if (duals.y_eq.size() != me) throw DimensionError("y_eq dimension mismatch");
    if (duals.z_ineq.size() != ml) throw DimensionError("z_ineq dimension mismatch");
    if (duals.z_soc.size() != prog.socs.size()) throw DimensionError("z_soc count mismatch");

    Residuals r;
    // primal feasibility
    if (me > 0)
        r.primal = (prog.Aeq * z - prog.beq).cwiseAbs().maxCoeff();
    if (ml > 0)
        r.primal = std::max(r.primal, (prog.G * z - prog.h).maxCoeff());
    for (const auto& s : prog.socs)
        r.primal = std::max(r.primal, (s.Cmat * z + s.d).norm() - (s.a.dot(z) + s.b));
    r.primal = std::max(r.primal, 0.0);

    // stationarity and dual-cone membership
    Eigen::VectorXd grad = prog.P * z + prog.f;
    if (me > 0) grad += prog.Aeq.transpose() * duals.y_eq;
    if (ml > 0) grad += prog.G.transpose() * duals.z_ineq;
    double dual_cone_viol = ml > 0 ? std::max(0.0, -duals.z_ineq.minCoeff()) : 0.0;
    double gap = ml > 0 ? duals.z_ineq.dot(prog.h - prog.G * z) : 0.0;
    for (size_t j = 0; j < prog.socs.size(); ++j) {
        const auto& s = prog.socs[j];
        const auto& lam = duals.z_soc[j];
        if (lam.size() != s.Cmat.rows() + 1) throw DimensionError("z_soc block size mismatch");
        grad -= s.a * lam(0);
        grad -= s.Cmat.transpose() * lam.tail(lam.size() - 1);
        dual_cone_viol = std::max(dual_cone_viol, lam.tail(lam.size() - 1).norm() - lam(0));
        Eigen::VectorXd sv(lam.size());
        sv(0) = s.a.dot(z) + s.b;
        sv.tail(lam.size() - 1) = s.Cmat * z + s.d;
        gap += lam.dot(sv);
    }
    r.dual = std::max(grad.cwiseAbs().maxCoeff(), dual_cone_viol);
    r.gap = std::abs(gap);
    return r;
}

}  // namespace ddpc
