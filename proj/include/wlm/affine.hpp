#pragma once

#include "wlm/matcore.hpp"

#include <optional>
#include <variant>
#include <vector>

// Closed-form affine transform engine for processes on positive definite
// matrices. Sign convention throughout:
//
//     E[ e^{-tr[u Sigma_t]} ] = e^{-phi_t(u) - tr[psi_t(u) Sigma_0]}
//
// For the Wishart diffusion the Riccati system linearizes and (phi, psi) come
// from a 2d x 2d block matrix exponential; for the pure-jump OU process psi
// is an exact conjugation by e^{M tau} and phi is a time quadrature against
// the jump-law Laplace transform.

namespace wlm {

struct NegativeTauError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Wishart diffusion d Sigma = (kappa Q^T Q + M Sigma + Sigma M^T) dt
///                             + sqrt(Sigma) dW Q + Q^T dW^T sqrt(Sigma).
struct WishartParams {
    WishartParams(SymMat sigma0_, SquareMat m_, SquareMat q_, double kappa_);

    int dim() const { return sigma0.dim(); }

    SymMat sigma0;   // initial state, SPD
    SquareMat m;     // mean reversion, eigenvalues with Re <= 0
    SquareMat q;     // volatility of volatility, invertible
    double kappa;    // Gindikin parameter, kappa >= d+1
};

/// Jump-size law of the compound Poisson driver.
struct JumpLaw {
    enum class Type { wishart, noncentral_wishart };

    static JumpLaw wishart(double n, SymMat scale);
    static JumpLaw noncentral_wishart(double n, SymMat scale, SquareMat mean);

    Type type = Type::wishart;
    double n = 0.0;     // degrees of freedom, n > d-1
    SymMat scale;       // SPD scale matrix
    SquareMat mean;     // noncentrality factor (noncentrality = mean mean^T)
};

/// Pure-jump OU process d Sigma = (M Sigma + Sigma M^T) dt + dL with L a
/// compound Poisson process with intensity lambda and jumps in S_d^+.
struct JumpOUParams {
    JumpOUParams(SymMat sigma0_, SquareMat m_, double lambda_, JumpLaw law_);

    int dim() const { return sigma0.dim(); }

    SymMat sigma0;
    SquareMat m;
    double lambda;
    JumpLaw law;
};

using Model = std::variant<WishartParams, JumpOUParams>;

int model_dim(const Model& model);
const SymMat& model_sigma0(const Model& model);

struct AffineCoeffs {
    Complex phi{};
    CSymMat psi;
    double tau = 0.0;
    bool valid = true;
    double phase = 0.0;  // logdet branch state, for chaining along a contour
};

struct RealCoeffs {
    double phi = 0.0;
    SymMat psi;
    bool valid = true;
};

/// Cached Wishart flow at a fixed horizon: the block exponential
/// exp(tau [[M, 2Q^TQ], [0, -M^T]]) is computed once, after which each
/// transform evaluation is a d x d solve plus a tracked log-determinant.
class WishartFlow {
  public:
    WishartFlow(const WishartParams& params, double tau);

    AffineCoeffs coeffs(const CSymMat& u, double prev_phase = 0.0) const;
    RealCoeffs coeffs(const SymMat& u) const;

    double tau() const { return tau_; }

  private:
    double tau_;
    double kappa_;
    double tr_m_;
    Matrix psi11_, psi12_, psi21_, psi22_;
};

/// Cached jump-OU flow at a fixed horizon. phi is integrated by composite
/// Gauss-Legendre quadrature with panel doubling (abs tol 1e-10, at most
/// 2^14 nodes); nodes are walked in increasing s so the determinant branch
/// can be tracked continuously for complex arguments.
class JumpFlow {
  public:
    JumpFlow(const JumpOUParams& params, double tau);

    AffineCoeffs coeffs(const CSymMat& u, double prev_phase = 0.0) const;
    RealCoeffs coeffs(const SymMat& u) const;

    double tau() const { return tau_; }

  private:
    struct Level {
        std::vector<double> s;
        std::vector<double> weight;
        std::vector<Matrix> exp_ms;  // e^{M s} per node
    };
    const Level& level(int r) const;

    JumpOUParams params_;
    double tau_;
    Matrix exp_m_tau_;
    SymMat q_inv_s_;     // scale^{-1} * mean mean^T (noncentral law only)
    double tr_q_inv_s_ = 0.0;
    mutable std::vector<Level> levels_;
};

/// Model-agnostic cached flow at a fixed horizon.
class Flow {
  public:
    Flow(const Model& model, double tau);

    AffineCoeffs coeffs(const CSymMat& u, double prev_phase = 0.0) const;
    RealCoeffs coeffs(const SymMat& u) const;
    double tau() const;

  private:
    std::variant<WishartFlow, JumpFlow> impl_;
};

AffineCoeffs wishart_psi_phi(const WishartParams& params, double tau, const CSymMat& u,
                             double prev_phase = 0.0);
AffineCoeffs jump_psi_phi(const JumpOUParams& params, double tau, const CSymMat& u,
                          double prev_phase = 0.0);

AffineCoeffs psi_phi(const Model& model, double tau, const CSymMat& u, double prev_phase = 0.0);
RealCoeffs psi_phi(const Model& model, double tau, const SymMat& u);

/// E[e^{-tr[u Sigma_t]}]; empty when the transform is infinite at (t, u).
std::optional<Complex> laplace(const Model& model, double t, const CSymMat& u);
std::optional<double> laplace(const Model& model, double t, const SymMat& u);

namespace detail {

/// RK4 integration of the Wishart Riccati system; internal cross-check
/// oracle for the closed form, not part of the pricing path.
struct RiccatiSolution {
    Complex phi;
    CMatrix psi;
};
RiccatiSolution riccati_rk4(const WishartParams& params, double tau, const CMatrix& u,
                            int n_steps);

}  // namespace detail

}  // namespace wlm
