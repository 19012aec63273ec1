#include "ddpc/signal_matrix.hpp"

#include <Eigen/SVD>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "ddpc/errors.hpp"
#include "ddpc/linalg.hpp"

namespace ddpc {

namespace {

// Stack signal samples [t0+a, t0+b) of every window start into one block row group.
Eigen::MatrixXd stack_windows(const Eigen::MatrixXd& sig, int M, int shift, int a, int b) {
    const int dim = static_cast<int>(sig.rows());
    Eigen::MatrixXd out(dim * (b - a), M);
    for (int i = 0; i < M; ++i) {
        const int t0 = i * shift;
        for (int k = a; k < b; ++k)
            out.col(i).segment(static_cast<Eigen::Index>(dim) * (k - a), dim) = sig.col(t0 + k);
    }
    return out;
}

void write_i64(std::ofstream& os, int64_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

int64_t read_i64(std::ifstream& is) {
    int64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

void write_matrix(std::ofstream& os, const Eigen::MatrixXd& m) {
    os.write(reinterpret_cast<const char*>(m.data()),
             static_cast<std::streamsize>(sizeof(double)) * m.size());
}

Eigen::MatrixXd read_matrix(std::ifstream& is, int rows, int cols) {
    Eigen::MatrixXd m(rows, cols);
    is.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double)) * m.size());
    return m;
}

constexpr char kMagic[9] = "DDPCSM01";

}  // namespace

SignalMatrix SignalMatrix::from_windows(const TrajectoryData& data, int L0, int Lp, int shift,
                                        Construction tag) {
    if (L0 < 1 || Lp < 1) throw std::invalid_argument("L0 and Lp must be positive");
    const int L = L0 + Lp;
    const int N = data.length();
    if (N < L)
        throw InsufficientDataError("trajectory length " + std::to_string(N) +
                                    " < window length " + std::to_string(L));
    SignalMatrix sm;
    sm.n_u_ = static_cast<int>(data.u.rows());
    sm.n_w_ = static_cast<int>(data.w.rows());
    sm.n_y_ = static_cast<int>(data.y.rows());
    sm.L0_ = L0;
    sm.Lp_ = Lp;
    sm.M_ = (shift == 1) ? (N - L + 1) : (N / L);
    sm.construction_ = tag;
    sm.U_ = stack_windows(data.u, sm.M_, shift, 0, L);
    sm.W_ = stack_windows(data.w, sm.M_, shift, 0, L);
    sm.Yp_ = stack_windows(data.y, sm.M_, shift, 0, L0);
    sm.Yf_ = stack_windows(data.y, sm.M_, shift, L0, L);
    return sm;
}

SignalMatrix SignalMatrix::hankel(const TrajectoryData& data, int L0, int Lp) {
    return from_windows(data, L0, Lp, 1, Construction::hankel);
}

SignalMatrix SignalMatrix::page(const TrajectoryData& data, int L0, int Lp) {
    return from_windows(data, L0, Lp, L0 + Lp, Construction::page);
}

SignalMatrix SignalMatrix::columns(const std::vector<TrajectoryData>& segments, int L0, int Lp) {
    if (segments.empty()) throw InsufficientDataError("no trajectory segments supplied");
    const int L = L0 + Lp;
    for (const auto& seg : segments)
        if (seg.length() != L)
            throw InsufficientDataError("each segment must have length exactly L");

    SignalMatrix sm = from_windows(segments.front(), L0, Lp, L, Construction::columns);
    const int M = static_cast<int>(segments.size());
    sm.M_ = M;
    sm.U_.conservativeResize(Eigen::NoChange, M);
    sm.W_.conservativeResize(Eigen::NoChange, M);
    sm.Yp_.conservativeResize(Eigen::NoChange, M);
    sm.Yf_.conservativeResize(Eigen::NoChange, M);
    for (int j = 1; j < M; ++j) {
        const auto& seg = segments[j];
        if (seg.u.rows() != sm.n_u_ || seg.w.rows() != sm.n_w_ || seg.y.rows() != sm.n_y_)
            throw DimensionError("segment signal dimensions differ");
        SignalMatrix one = from_windows(seg, L0, Lp, L, Construction::columns);
        sm.U_.col(j) = one.U_.col(0);
        sm.W_.col(j) = one.W_.col(0);
        sm.Yp_.col(j) = one.Yp_.col(0);
        sm.Yf_.col(j) = one.Yf_.col(0);
    }
    return sm;
}

Eigen::MatrixXd SignalMatrix::Psi() const {
    Eigen::MatrixXd psi(U_.rows() + W_.rows(), M_);
    psi << U_, W_;
    return psi;
}

Eigen::MatrixXd SignalMatrix::Z() const {
    Eigen::MatrixXd z(U_.rows() + W_.rows() + Yp_.rows() + Yf_.rows(), M_);
    z << U_, W_, Yp_, Yf_;
    return z;
}

Eigen::MatrixXd SignalMatrix::PsiYp() const {
    Eigen::MatrixXd s(U_.rows() + W_.rows() + Yp_.rows(), M_);
    s << U_, W_, Yp_;
    return s;
}

void SignalMatrix::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    os.write(kMagic, 8);
    for (int64_t v : {int64_t(n_u_), int64_t(n_w_), int64_t(n_y_), int64_t(L0_), int64_t(Lp_),
                      int64_t(M_), int64_t(construction_)})
        write_i64(os, v);
    write_matrix(os, U_);
    write_matrix(os, W_);
    write_matrix(os, Yp_);
    write_matrix(os, Yf_);
}

SignalMatrix SignalMatrix::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path);
    char magic[8];
    is.read(magic, 8);
    if (std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error(path + " is not a signal-matrix cache");
    SignalMatrix sm;
    sm.n_u_ = static_cast<int>(read_i64(is));
    sm.n_w_ = static_cast<int>(read_i64(is));
    sm.n_y_ = static_cast<int>(read_i64(is));
    sm.L0_ = static_cast<int>(read_i64(is));
    sm.Lp_ = static_cast<int>(read_i64(is));
    sm.M_ = static_cast<int>(read_i64(is));
    sm.construction_ = static_cast<Construction>(read_i64(is));
    const int L = sm.L0_ + sm.Lp_;
    sm.U_ = read_matrix(is, sm.n_u_ * L, sm.M_);
    sm.W_ = read_matrix(is, sm.n_w_ * L, sm.M_);
    sm.Yp_ = read_matrix(is, sm.n_y_ * sm.L0_, sm.M_);
    sm.Yf_ = read_matrix(is, sm.n_y_ * sm.Lp_, sm.M_);
    if (!is) throw std::runtime_error(path + ": truncated cache file");
    return sm;
}

RankReport check_excitation(const SignalMatrix& sm, int n_x) {
    RankReport report;
    report.required_rank = (sm.n_u() + sm.n_w()) * sm.L() + n_x;
    report.numeric_rank = numeric_rank(sm.Z());
    Eigen::BDCSVD<Eigen::MatrixXd> svd(sm.PsiYp());
    report.singular_values = svd.singularValues();
    report.ok = report.numeric_rank >= report.required_rank;
    return report;
}

PinvPrediction pinv_predict(const SignalMatrix& sm, const Eigen::VectorXd& u_ini,
                            const Eigen::VectorXd& u_hat, const Eigen::VectorXd& w,
                            const Eigen::VectorXd& y_ini) {
    if (u_ini.size() != sm.n_u() * sm.L0()) throw DimensionError("u_ini size mismatch");
    if (u_hat.size() != sm.n_u() * sm.Lp()) throw DimensionError("u_hat size mismatch");
    if (w.size() != sm.n_w() * sm.L()) throw DimensionError("w size mismatch");
    if (y_ini.size() != sm.n_y() * sm.L0()) throw DimensionError("y_ini size mismatch");

    Eigen::VectorXd cond(u_ini.size() + u_hat.size() + w.size() + y_ini.size());
    cond << u_ini, u_hat, w, y_ini;

    PinvPrediction out;
    out.g = least_norm_solve(sm.PsiYp(), cond);
    out.y_hat = sm.Yf() * out.g;
    return out;
}

}  // namespace ddpc
