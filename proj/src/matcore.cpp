#include "wlm/matcore.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <numbers>

namespace wlm {

namespace {

void require_square_finite(const Matrix& m, const char* what) {
    if (m.rows() < 1 || m.rows() != m.cols())
        throw std::invalid_argument(std::string(what) + ": matrix must be square, d >= 1");
    if (!m.allFinite())
        throw std::invalid_argument(std::string(what) + ": entries must be finite");
}

void require_square_finite(const CMatrix& m, const char* what) {
    if (m.rows() < 1 || m.rows() != m.cols())
        throw std::invalid_argument(std::string(what) + ": matrix must be square, d >= 1");
    if (!m.allFinite())
        throw std::invalid_argument(std::string(what) + ": entries must be finite");
}

Matrix diag_from(const std::vector<double>& entries) {
    Matrix m = Matrix::Zero(static_cast<Eigen::Index>(entries.size()),
                            static_cast<Eigen::Index>(entries.size()));
    for (size_t i = 0; i < entries.size(); ++i) m(i, i) = entries[i];
    return m;
}

}  // namespace

SymMat::SymMat(const Matrix& m) {
    require_square_finite(m, "SymMat");
    m_ = 0.5 * (m + m.transpose());
}

SymMat SymMat::identity(int d) { return SymMat(Matrix::Identity(d, d)); }
SymMat SymMat::zero(int d) { return SymMat(Matrix::Zero(d, d)); }
SymMat SymMat::diagonal(const std::vector<double>& entries) { return SymMat(diag_from(entries)); }

SquareMat::SquareMat(const Matrix& m) {
    require_square_finite(m, "SquareMat");
    m_ = m;
}

SquareMat SquareMat::identity(int d) { return SquareMat(Matrix::Identity(d, d)); }
SquareMat SquareMat::zero(int d) { return SquareMat(Matrix::Zero(d, d)); }
SquareMat SquareMat::diagonal(const std::vector<double>& entries) {
    return SquareMat(diag_from(entries));
}

CSymMat::CSymMat(const CMatrix& m) {
    require_square_finite(m, "CSymMat");
    m_ = 0.5 * (m + m.transpose());  // plain transpose: complex symmetric, not Hermitian
}

CSymMat::CSymMat(const SymMat& m) { m_ = m.mat().cast<Complex>(); }

CSymMat CSymMat::identity(int d) { return CSymMat(CMatrix::Identity(d, d)); }
CSymMat CSymMat::zero(int d) { return CSymMat(CMatrix::Zero(d, d)); }

double CSymMat::max_imag() const { return m_.imag().cwiseAbs().maxCoeff(); }

SymMat CSymMat::real_part() const { return SymMat(m_.real()); }

double min_eigenvalue(const SymMat& a) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(a.mat(), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

bool is_spd(const SymMat& a, double tol) { return min_eigenvalue(a) > tol; }

Matrix expm(const Matrix& a) {
    Matrix e = a.exp();
    if (!e.allFinite()) throw OverflowError("expm: result not representable");
    return e;
}

SquareMat expm(const SquareMat& a) { return SquareMat(expm(a.mat())); }

CMatrix expm(const CMatrix& a) {
    CMatrix e = a.exp();
    if (!e.allFinite()) throw OverflowError("expm: result not representable");
    return e;
}

SymMat sqrtm_spd(const SymMat& a) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(a.mat());
    if (es.eigenvalues().minCoeff() <= 0.0)
        throw NotSpdError("sqrtm_spd: matrix has an eigenvalue <= 0");
    Matrix s = es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() *
               es.eigenvectors().transpose();
    return SymMat(s);
}

SymMat solve_lyapunov(const SquareMat& m, const SymMat& c) {
    const int d = m.dim();
    if (c.dim() != d) throw std::invalid_argument("solve_lyapunov: dimension mismatch");

    Eigen::EigenSolver<Matrix> es(m.mat());
    if ((es.eigenvalues().real().array() >= 0.0).any())
        throw UnstableError("solve_lyapunov: m has an eigenvalue with nonnegative real part");

    // vec(mX + Xm^T) = (I (x) m + m (x) I) vec(X); d is small so the d^2 x d^2
    // system is solved directly.
    const int n = d * d;
    Matrix a = Matrix::Zero(n, n);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            for (int k = 0; k < d; ++k) {
                a(i + d * j, k + d * j) += m(i, k);  // I (x) m
                a(i + d * j, i + d * k) += m(j, k);  // m (x) I
            }
    Eigen::VectorXd rhs(n);
    for (int j = 0; j < d; ++j)
        for (int i = 0; i < d; ++i) rhs(i + d * j) = -c(i, j);

    Eigen::VectorXd x = a.partialPivLu().solve(rhs);
    Matrix sol(d, d);
    for (int j = 0; j < d; ++j)
        for (int i = 0; i < d; ++i) sol(i, j) = x(i + d * j);
    return SymMat(sol);
}

LogDet logdet_tracked(const CSymMat& a, double prev_phase) {
    Eigen::PartialPivLU<CMatrix> lu(a.mat());
    const auto& u = lu.matrixLU();

    double log_abs = 0.0;
    double arg = std::arg(Complex(lu.permutationP().determinant(), 0.0));
    for (int i = 0; i < a.dim(); ++i) {
        const Complex uii = u(i, i);
        const double mag = std::abs(uii);
        if (mag < 1e-300) throw SingularError("logdet_tracked: |det| underflow");
        log_abs += std::log(mag);
        arg += std::arg(uii);
    }
    if (log_abs < std::log(1e-300)) throw SingularError("logdet_tracked: |det| underflow");

    // Choose the branch closest to the previous phase on the path.
    constexpr double two_pi = 2.0 * std::numbers::pi;
    const double k = std::round((prev_phase - arg) / two_pi);
    const double theta = arg + two_pi * k;
    return LogDet{Complex(log_abs, theta), theta};
}

}  // namespace wlm
