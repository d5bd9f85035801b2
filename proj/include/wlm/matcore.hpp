#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <vector>

// Dense symmetric-matrix algebra shared by the analytic modules. Dimensions
// are small (d <= ~5) and known only at runtime, so everything is dynamic
// and dense.

namespace wlm {

using Matrix  = Eigen::MatrixXd;
using CMatrix = Eigen::MatrixXcd;
using Complex = std::complex<double>;

struct NotSpdError : std::domain_error {
    using std::domain_error::domain_error;
};
struct UnstableError : std::domain_error {
    using std::domain_error::domain_error;
};
struct SingularError : std::domain_error {
    using std::domain_error::domain_error;
};
struct OverflowError : std::range_error {
    using std::range_error::range_error;
};

/// Real symmetric d x d matrix. Symmetry is enforced by construction: the
/// input is averaged with its transpose, so products and sums cannot drift
/// away from S_d.
class SymMat {
  public:
    SymMat() = default;
    explicit SymMat(const Matrix& m);

    static SymMat identity(int d);
    static SymMat zero(int d);
    static SymMat diagonal(const std::vector<double>& entries);

    int dim() const { return static_cast<int>(m_.rows()); }
    const Matrix& mat() const { return m_; }
    double operator()(int i, int j) const { return m_(i, j); }

    SymMat operator+(const SymMat& o) const { return SymMat(m_ + o.m_); }
    SymMat operator-(const SymMat& o) const { return SymMat(m_ - o.m_); }
    SymMat operator*(double s) const { return SymMat(s * m_); }
    SymMat operator-() const { return SymMat(-m_); }

  private:
    Matrix m_;
};

inline SymMat operator*(double s, const SymMat& a) { return a * s; }

/// General real d x d matrix (no symmetry constraint); entries must be finite.
class SquareMat {
  public:
    SquareMat() = default;
    explicit SquareMat(const Matrix& m);

    static SquareMat identity(int d);
    static SquareMat zero(int d);
    static SquareMat diagonal(const std::vector<double>& entries);

    int dim() const { return static_cast<int>(m_.rows()); }
    const Matrix& mat() const { return m_; }
    double operator()(int i, int j) const { return m_(i, j); }

  private:
    Matrix m_;
};

/// Complex symmetric (not Hermitian) d x d matrix; houses the complex
/// transform arguments of the Fourier contour.
class CSymMat {
  public:
    CSymMat() = default;
    explicit CSymMat(const CMatrix& m);
    explicit CSymMat(const SymMat& m);

    static CSymMat identity(int d);
    static CSymMat zero(int d);

    int dim() const { return static_cast<int>(m_.rows()); }
    const CMatrix& mat() const { return m_; }
    Complex operator()(int i, int j) const { return m_(i, j); }

    /// Largest |imaginary part| over all entries.
    double max_imag() const;
    /// Real part as a SymMat (caller checks max_imag first when it matters).
    SymMat real_part() const;

  private:
    CMatrix m_;
};

/// True iff the smallest eigenvalue of a exceeds tol.
bool is_spd(const SymMat& a, double tol = 0.0);

double min_eigenvalue(const SymMat& a);

/// Matrix exponential, scaling-and-squaring with Pade approximation.
/// Throws OverflowError when the result is not representable.
SquareMat expm(const SquareMat& a);
Matrix expm(const Matrix& a);
CMatrix expm(const CMatrix& a);

/// Unique SPD square root via eigendecomposition. Throws NotSpdError when
/// an eigenvalue is <= 0.
SymMat sqrtm_spd(const SymMat& a);

/// Solves m X + X m^T + c = 0 for symmetric X by Kronecker vectorization.
/// Requires all eigenvalues of m to have strictly negative real part
/// (throws UnstableError otherwise).
SymMat solve_lyapunov(const SquareMat& m, const SymMat& c);

struct LogDet {
    Complex value;  // log|det| + i*theta with theta unwrapped
    double phase;   // theta, for chaining along a parameter path
};

/// log det(a) with the imaginary part chosen continuous relative to
/// prev_phase (phase unwrapping along a parameter path). Valid as long as
/// the phase of det moves by less than pi between successive calls on the
/// path. Throws SingularError when |det| underflows.
LogDet logdet_tracked(const CSymMat& a, double prev_phase);

}  // namespace wlm
