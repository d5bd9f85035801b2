#include "wlm/libor.hpp"

#include <cmath>

namespace wlm {

TenorCurve TenorCurve::from_bond_ratios(double delta_t, std::vector<double> ratios,
                                        double terminal_bond) {
    if (!(delta_t > 0.0)) throw std::invalid_argument("TenorCurve: delta_t must be positive");
    if (ratios.size() < 2) throw std::invalid_argument("TenorCurve: need at least two tenors");
    if (!(terminal_bond > 0.0))
        throw std::invalid_argument("TenorCurve: terminal bond must be positive");
    if (std::abs(ratios.back() - 1.0) > 1e-14)
        throw std::invalid_argument("TenorCurve: last ratio must equal 1");
    for (size_t i = 0; i + 1 < ratios.size(); ++i) {
        if (!(ratios[i] > ratios[i + 1]))
            throw std::invalid_argument(
                "TenorCurve: bond ratios must be strictly decreasing (positive Libor rates)");
    }
    if (!(ratios.front() > 1.0))
        throw std::invalid_argument("TenorCurve: ratios must exceed 1 before the terminal date");
    TenorCurve c;
    c.delta_t_ = delta_t;
    c.ratios_ = std::move(ratios);
    c.terminal_bond_ = terminal_bond;
    return c;
}

TenorCurve TenorCurve::from_libor_rates(double delta_t, const std::vector<double>& rates) {
    if (rates.size() < 2) throw std::invalid_argument("TenorCurve: need at least two tenors");
    const int n = static_cast<int>(rates.size());
    std::vector<double> ratios(n);
    ratios[n - 1] = 1.0;
    for (int k = n - 2; k >= 0; --k) {
        if (!(rates[k + 1] > 0.0))
            throw std::invalid_argument("TenorCurve: Libor rates must be positive");
        ratios[k] = ratios[k + 1] * (1.0 + delta_t * rates[k + 1]);
    }
    if (!(rates[0] > 0.0)) throw std::invalid_argument("TenorCurve: Libor rates must be positive");
    const double b1 = 1.0 / (1.0 + delta_t * rates[0]);  // B(0,T_1)
    const double terminal_bond = b1 / ratios[0];
    return from_bond_ratios(delta_t, std::move(ratios), terminal_bond);
}

double TenorCurve::ratio(int k) const {
    if (k < 1 || k > n_tenors()) throw std::out_of_range("TenorCurve::ratio: tenor index");
    return ratios_[k - 1];
}

double TenorCurve::bond(int k) const {
    if (k == 0) return 1.0;
    return terminal_bond_ * ratio(k);
}

namespace {

double f_of_xi(const Model& model, const SymMat& base, double horizon, double xi, bool& valid) {
    const auto value = laplace(model, horizon, SymMat(xi * base.mat()));
    valid = value.has_value();
    return valid ? *value : std::numeric_limits<double>::infinity();
}

}  // namespace

MartingaleFamily fit_term_structure(const Model& model, const TenorCurve& curve,
                                    const SymMat& base_direction, const FitOptions& opts) {
    const int n = curve.n_tenors();
    const double horizon = curve.horizon();
    if (min_eigenvalue(SymMat(-base_direction.mat())) <= 0.0)
        throw std::invalid_argument("fit_term_structure: base direction must be negative definite");

    bool valid = false;
    const double f1 = f_of_xi(model, base_direction, horizon, 1.0, valid);
    if (!valid)
        throw TransformBlowUpError("fit_term_structure: transform infinite at the base direction");
    if (!(f1 > curve.ratio(1)))
        throw InsufficientMassError(
            "fit_term_structure: f(1) <= B(0,T_1)/B(0,T_N); scale the base direction up");

    MartingaleFamily family;
    family.curve = curve;
    family.base_direction = base_direction;
    family.xis.assign(n, 0.0);
    family.u_mats.assign(n, SymMat::zero(base_direction.dim()));

    // Nested bisection: f is continuous and increasing, the target ratios
    // decrease in k, so bracketing by the previous solution (xi_0 := 1)
    // yields strictly decreasing xi's by construction.
    double upper = 1.0;
    for (int k = 1; k <= n - 1; ++k) {
        const double target = curve.ratio(k);
        double lo = 0.0, hi = upper;
        double mid = 0.5 * (lo + hi);
        for (int it = 0; it < opts.max_iter; ++it) {
            mid = 0.5 * (lo + hi);
            const double fm = f_of_xi(model, base_direction, horizon, mid, valid);
            if (!valid || fm > target)
                hi = mid;
            else
                lo = mid;
            if (valid && std::abs(fm - target) <= opts.f_tol * target) break;
        }
        family.xis[k - 1] = mid;
        family.u_mats[k - 1] = SymMat(mid * base_direction.mat());
        upper = mid;
    }
    return family;
}

MartingaleFamily fit_term_structure(const Model& model, const TenorCurve& curve,
                                    const FitOptions& opts) {
    const int d = model_dim(model);
    double c = opts.initial_scale;
    for (int i = 0; i <= opts.max_doublings; ++i) {
        const SymMat dir(-c * Matrix::Identity(d, d));
        bool valid = false;
        const double f1 = f_of_xi(model, dir, curve.horizon(), 1.0, valid);
        if (!valid)
            throw TransformBlowUpError(
                "fit_term_structure: transform infinite while auto-scaling the base direction");
        if (f1 > curve.ratio(1)) return fit_term_structure(model, curve, dir, opts);
        if (!opts.auto_scale) break;
        c *= 2.0;
    }
    throw InsufficientMassError(
        "fit_term_structure: could not find a base-direction scale with enough mass");
}

double martingale_value(const Model& model, const MartingaleFamily& family, double t, int k,
                        const SymMat& sigma_t) {
    if (k < 1 || k > family.n_tenors())
        throw std::out_of_range("martingale_value: tenor index");
    if (t < 0.0 || t > family.horizon() + 1e-12)
        throw InvalidTimeError("martingale_value: t outside [0, T_N]");
    if (!is_spd(sigma_t)) throw NotSpdError("martingale_value: sigma_t must be SPD");
    if (k == family.n_tenors()) return 1.0;

    const RealCoeffs c = psi_phi(model, family.horizon() - t, family.u(k));
    if (!c.valid) throw TransformBlowUpError("martingale_value: transform infinite");
    return std::exp(-c.phi - (c.psi.mat() * sigma_t.mat()).trace());
}

ForwardCoeffs forward_coeffs(const Model& model, const MartingaleFamily& family, int k, double t) {
    if (k < 1 || k > family.n_tenors() - 1)
        throw std::out_of_range("forward_coeffs: tenor index");
    if (t < 0.0 || t > family.horizon() + 1e-12)
        throw InvalidTimeError("forward_coeffs: t outside [0, T_N]");

    const double tau = family.horizon() - t;
    const RealCoeffs ck = psi_phi(model, tau, family.u(k));
    const RealCoeffs ck1 = psi_phi(model, tau, family.u(k + 1));
    if (!ck.valid || !ck1.valid)
        throw TransformBlowUpError("forward_coeffs: transform infinite");

    ForwardCoeffs out;
    out.k = k;
    out.t = t;
    out.a_k = -ck.phi + ck1.phi;
    out.b_k = ck1.psi - ck.psi;
    if (min_eigenvalue(out.b_k) < -1e-12)
        throw std::logic_error("forward_coeffs: B_k lost positive semidefiniteness");
    return out;
}

double libor_rate(const Model& model, const MartingaleFamily& family, int k, double t,
                  const SymMat& sigma_t) {
    const ForwardCoeffs fc = forward_coeffs(model, family, k, t);
    const double fwd = std::exp(fc.a_k + (fc.b_k.mat() * sigma_t.mat()).trace());
    return (fwd - 1.0) / family.curve.delta_t();
}

double radon_nikodym(const Model& model, const MartingaleFamily& family, int k, double t,
                     const SymMat& sigma_t) {
    if (k == family.n_tenors()) return 1.0;
    const double m_t = martingale_value(model, family, t, k, sigma_t);
    const double m_0 = martingale_value(model, family, 0.0, k, model_sigma0(model));
    return m_t / m_0;
}

}  // namespace wlm
