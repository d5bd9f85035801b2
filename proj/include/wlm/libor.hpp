#pragma once

#include "wlm/affine.hpp"

// Arbitrage-free Libor layer. Bond-price ratios B(t,T_k)/B(t,T_N) are
// modeled by the exponentially affine martingales
//
//     M^{u_k}_t = exp{ -phi_{T_N - t}(u_k) - tr[psi_{T_N - t}(u_k) Sigma_t] },
//
// with u_1 < u_2 < ... < u_N = 0 strictly increasing negative definite
// matrices fitted to the initial curve. Tenor indices are 1-based, T_k = k*dt.

namespace wlm {

struct InsufficientMassError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct TransformBlowUpError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InvalidTimeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

class TenorCurve {
  public:
    /// ratios[k-1] = B(0,T_k)/B(0,T_N), strictly decreasing with the last
    /// entry exactly 1; terminal_bond = B(0,T_N).
    static TenorCurve from_bond_ratios(double delta_t, std::vector<double> ratios,
                                       double terminal_bond);

    /// rates[j] = simple forward Libor for [T_j, T_{j+1}], j = 0..N-1 (the
    /// first entry covers [0, T_1]); all must be positive.
    static TenorCurve from_libor_rates(double delta_t, const std::vector<double>& rates);

    int n_tenors() const { return static_cast<int>(ratios_.size()); }
    double delta_t() const { return delta_t_; }
    double maturity(int k) const { return k * delta_t_; }
    double horizon() const { return maturity(n_tenors()); }

    /// B(0,T_k)/B(0,T_N), k = 1..N.
    double ratio(int k) const;
    /// B(0,T_k), k = 0..N; bond(0) = 1.
    double bond(int k) const;
    double terminal_bond() const { return terminal_bond_; }

    /// B(0,T_k)/B(0,T_{k+1}) = 1 + dt * L(0; T_k, T_{k+1}), k = 1..N-1.
    double forward_ratio(int k) const { return ratio(k) / ratio(k + 1); }
    double forward_libor(int k) const { return (forward_ratio(k) - 1.0) / delta_t_; }

    TenorCurve() = default;  // empty; use the factories for a valid curve

  private:
    double delta_t_ = 0.0;
    std::vector<double> ratios_;
    double terminal_bond_ = 1.0;
};

/// Fitted martingale family: u_k = xi_k * base_direction with
/// xi_1 > ... > xi_{N-1} > xi_N = 0.
struct MartingaleFamily {
    TenorCurve curve;
    SymMat base_direction;            // u~ in S_d^{--}
    std::vector<double> xis;          // size N, xis[N-1] = 0
    std::vector<SymMat> u_mats;       // size N, u_mats[N-1] = 0

    int n_tenors() const { return curve.n_tenors(); }
    double horizon() const { return curve.horizon(); }
    double xi(int k) const { return xis.at(k - 1); }
    const SymMat& u(int k) const { return u_mats.at(k - 1); }
};

struct FitOptions {
    double f_tol = 1e-12;       // relative tolerance on f(xi_k) - ratio_k
    int max_iter = 200;         // bisection cap per tenor
    bool auto_scale = true;     // double the base-direction scale until f(1) > ratio_1
    double initial_scale = 0.01;
    int max_doublings = 60;
};

/// Fits xi_1 > ... > xi_{N-1} by bracketed bisection of
/// f(xi) = E[e^{-tr[xi u~ Sigma_{T_N}]}] against the curve ratios. Throws
/// InsufficientMassError when f(1) <= ratio_1 for the given direction and
/// TransformBlowUpError when the transform is infinite at u~.
MartingaleFamily fit_term_structure(const Model& model, const TenorCurve& curve,
                                    const SymMat& base_direction, const FitOptions& opts = {});

/// Convenience overload: base direction -c*I with c auto-scaled from
/// opts.initial_scale.
MartingaleFamily fit_term_structure(const Model& model, const TenorCurve& curve,
                                    const FitOptions& opts = {});

/// M^{u_k}_t evaluated at state sigma_t; exactly 1 for k = N.
double martingale_value(const Model& model, const MartingaleFamily& family, double t, int k,
                        const SymMat& sigma_t);

struct ForwardCoeffs {
    double a_k = 0.0;  // A_{T_N - t}(u_k, u_{k+1})
    SymMat b_k;        // B_{T_N - t}(u_k, u_{k+1}), positive semidefinite
    int k = 0;
    double t = 0.0;
};

/// A = -phi(u_k) + phi(u_{k+1}), B = -psi(u_k) + psi(u_{k+1}) at horizon
/// T_N - t, so that B(t,T_k)/B(t,T_{k+1}) = exp{A + tr[B Sigma_t]}.
ForwardCoeffs forward_coeffs(const Model& model, const MartingaleFamily& family, int k, double t);

/// Simple forward Libor L(t; T_k, T_{k+1}) at state sigma_t; strictly
/// positive by construction of the family.
double libor_rate(const Model& model, const MartingaleFamily& family, int k, double t,
                  const SymMat& sigma_t);

/// dP_{T_k}/dP_{T_N} restricted to F_t: M^{u_k}_t / M^{u_k}_0.
double radon_nikodym(const Model& model, const MartingaleFamily& family, int k, double t,
                     const SymMat& sigma_t);

}  // namespace wlm
