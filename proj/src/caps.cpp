#include "wlm/caps.hpp"

#include <cmath>
#include <mutex>
#include <numbers>

namespace wlm {

namespace {

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Black option value in forward-price units; s is the TOTAL standard
// deviation of log F over the option life.
double black_call_total(double f, double k, double s) {
    if (s < 1e-14) return std::max(f - k, 0.0);
    const double d1 = (std::log(f / k) + 0.5 * s * s) / s;
    return f * norm_cdf(d1) - k * norm_cdf(d1 - s);
}

double black_put_total(double f, double k, double s) {
    if (s < 1e-14) return std::max(k - f, 0.0);
    const double d1 = (std::log(f / k) + 0.5 * s * s) / s;
    return k * norm_cdf(s - d1) - f * norm_cdf(-d1);
}

}  // namespace

namespace {
int checked_tenor(const MartingaleFamily& family, int k) {
    if (k < 1 || k > family.n_tenors() - 1)
        throw std::out_of_range("CapletPricer: tenor index");
    return k;
}
}  // namespace

CapletPricer::CapletPricer(const Model& model, const MartingaleFamily& family, int k,
                           FourierConfig cfg)
    : cfg_(cfg),
      k_(checked_tenor(family, k)),
      flow_tk_(model, family.curve.maturity(k)) {
    if (!(cfg.alpha > 0.0)) throw std::invalid_argument("CapletPricer: alpha must be positive");
    if (cfg.n_nodes < 2 || (cfg.n_nodes & (cfg.n_nodes - 1)) != 0)
        throw std::invalid_argument("CapletPricer: n_nodes must be a power of two");
    if (!(cfg.v_max > 0.0)) throw std::invalid_argument("CapletPricer: v_max must be positive");

    delta_t_ = family.curve.delta_t();
    bond_pay_ = family.curve.bond(k + 1);
    fwd_ratio_ = family.curve.forward_ratio(k);
    sigma0_ = model_sigma0(model).mat();

    const double tau_a = family.horizon() - family.curve.maturity(k);
    const RealCoeffs ck = psi_phi(model, tau_a, family.u(k));
    const RealCoeffs ck1 = psi_phi(model, tau_a, family.u(k + 1));
    const RealCoeffs cN = psi_phi(model, family.horizon(), family.u(k + 1));
    if (!ck.valid || !ck1.valid || !cN.valid)
        throw TransformBlowUpError("CapletPricer: transform infinite at the family matrices");

    a_k_ = -ck.phi + ck1.phi;
    b_k_ = ck1.psi - ck.psi;
    psi_a_ = ck1.psi;
    base_const_ = -ck1.phi + cN.phi + (cN.psi.mat() * sigma0_).trace();

    // Zero-jump atom of the compound-Poisson model: Sigma_{T_k} is the pure
    // flow, so Y and the measure-change weight are deterministic there.
    if (std::holds_alternative<JumpOUParams>(model)) {
        const auto& p = std::get<JumpOUParams>(model);
        const double t_k = family.curve.maturity(k);
        const Matrix flow = expm(Matrix(t_k * p.m.mat()));
        const Matrix sigma_flow = flow * sigma0_ * flow.transpose();
        atom_y0_ = a_k_ + (b_k_.mat() * sigma_flow).trace();
        const double m0_pay = std::exp(-cN.phi - (cN.psi.mat() * sigma0_).trace());
        const double rn0 =
            std::exp(-ck1.phi - (ck1.psi.mat() * sigma_flow).trace()) / m0_pay;
        atom_mass_ = std::exp(-p.lambda * t_k) * rn0;
    }

    // Lognormal proxy matched to E[e^Y] and E[e^{2Y}] of the continuous
    // part under P_{T_{k+1}}; it is subtracted from the characteristic
    // function node by node and its Black value restored analytically.
    auto real_moment = [&](double z) -> double {
        const SymMat w(psi_a_.mat() - z * b_k_.mat());
        const RealCoeffs inner = flow_tk_.coeffs(w);
        if (!inner.valid)
            throw TransformBlowUpError("CapletPricer: transform infinite at e^{qY} moment");
        return std::exp(z * a_k_ + base_const_ - inner.phi - (inner.psi.mat() * sigma0_).trace());
    };
    const double m1 = real_moment(1.0);
    const double m2 = real_moment(2.0);
    fwd_model_ = m1;
    const double m1_c = m1 - atom_mass_ * std::exp(atom_y0_);
    const double m2_c = m2 - atom_mass_ * std::exp(2.0 * atom_y0_);
    mass_c_ = 1.0 - atom_mass_;
    if (mass_c_ > 1e-12 && m1_c > 0.0 && m2_c > 0.0) {
        f_c_ = m1_c / mass_c_;
        s2_c_ = std::max(std::log(m2_c / mass_c_) - 2.0 * std::log(f_c_), 0.0);
        mu_c_ = std::log(f_c_) - 0.5 * s2_c_;
    } else {
        mass_c_ = 0.0;  // essentially a point mass; the proxy carries nothing
        f_c_ = 1.0;
        mu_c_ = 0.0;
        s2_c_ = 0.0;
    }
}

Complex CapletPricer::cf(double v, double alpha, double& phase_io) const {
    const Complex z(1.0 + alpha, v);
    const CSymMat w(CMatrix(psi_a_.mat().cast<Complex>() - z * b_k_.mat().cast<Complex>()));
    const AffineCoeffs inner = flow_tk_.coeffs(w, phase_io);
    if (!inner.valid)
        throw TransformBlowUpError("caplet cf: transform invalid at v=" + std::to_string(v) +
                                   " (damping too large for this model)");
    phase_io = inner.phase;
    const Complex tr = (inner.psi.mat() * sigma0_.cast<Complex>()).trace();
    return std::exp(z * a_k_ + base_const_ - inner.phi - tr);
}

const CapletPricer::Contour& CapletPricer::contour(double alpha) const {
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    for (const auto& c : contours_)
        if (c->alpha == alpha) return *c;

    auto c = std::make_unique<Contour>();
    c->alpha = alpha;
    c->residual.resize(cfg_.n_nodes + 1);
    const double dv = cfg_.v_max / cfg_.n_nodes;
    double phase = 0.0;
    for (int j = 0; j <= cfg_.n_nodes; ++j) {
        const double v = j * dv;
        const Complex z(1.0 + alpha, v);
        const Complex model_cf = cf(v, alpha, phase);
        const Complex proxy_cf = mass_c_ * std::exp(z * mu_c_ + 0.5 * z * z * s2_c_) +
                                 atom_mass_ * std::exp(z * atom_y0_);
        c->residual[j] = model_cf - proxy_cf;
    }
    contours_.push_back(std::move(c));
    return *contours_.back();
}

double CapletPricer::residual_integral(const Contour& c, double log_strike,
                                       double* tail_fraction) const {
    const double dv = cfg_.v_max / cfg_.n_nodes;
    const int n = cfg_.n_nodes;
    double total = 0.0;
    double tail = 0.0;
    const int tail_start = static_cast<int>(0.9 * n);
    for (int j = 0; j <= n; ++j) {
        const double v = j * dv;
        const Complex denom = Complex(c.alpha, v) * Complex(1.0 + c.alpha, v);
        const double term =
            (std::exp(Complex(0.0, -v * log_strike)) * c.residual[j] / denom).real();
        const double w = (j == 0 || j == n) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
        total += w * term;
        if (j >= tail_start) tail += w * term;
    }
    total *= dv / 3.0;
    tail *= dv / 3.0;
    if (tail_fraction) *tail_fraction = std::abs(tail) / std::max(std::abs(total), 1e-300);
    return total;
}

double CapletPricer::caplet(double strike, double notional, FourierDiag* diag) const {
    const double kk = 1.0 + delta_t_ * strike;
    if (!(kk > 0.0)) throw std::invalid_argument("caplet: strike must exceed -1/dt");
    const double c = std::log(kk);
    const double s = std::sqrt(s2_c_);

    FourierDiag local;
    double value_fwd;
    if (kk >= fwd_model_) {
        const Contour& ct = contour(cfg_.alpha);
        const double integral = residual_integral(ct, c, &local.tail_fraction);
        value_fwd = mass_c_ * black_call_total(f_c_, kk, s) +
                    atom_mass_ * std::max(std::exp(atom_y0_) - kk, 0.0) +
                    std::exp(-cfg_.alpha * c) / std::numbers::pi * integral;
    } else {
        // In-the-money call: price the out-of-the-money put on the
        // alpha < -1 contour and convert through parity.
        const double alpha_put = -1.0 - cfg_.alpha;
        const Contour& ct = contour(alpha_put);
        const double integral = residual_integral(ct, c, &local.tail_fraction);
        const double put_fwd = mass_c_ * black_put_total(f_c_, kk, s) +
                               atom_mass_ * std::max(kk - std::exp(atom_y0_), 0.0) +
                               std::exp(-alpha_put * c) / std::numbers::pi * integral;
        value_fwd = put_fwd + fwd_model_ - kk;
        local.put_route = true;
    }
    local.tail_warning = local.tail_fraction > 1e-8;
    if (value_fwd < 0.0) {
        local.negative_clipped = value_fwd < -1e-10;
        value_fwd = 0.0;
    }
    if (diag) *diag = local;
    return notional * bond_pay_ * value_fwd;
}

double CapletPricer::floorlet(double strike, double notional, FourierDiag* diag) const {
    const double kk = 1.0 + delta_t_ * strike;
    FourierDiag local;
    const double cap = caplet(strike, notional, &local);
    double value = cap - notional * (bond_pay_ * fwd_ratio_ - kk * bond_pay_);
    if (value < 0.0) {
        local.negative_clipped = local.negative_clipped || value < -1e-10;
        value = 0.0;
    }
    if (diag) *diag = local;
    return value;
}

Complex caplet_cf(const Model& model, const MartingaleFamily& family, const CapletSpec& spec,
                  double v, double alpha, double& phase_io) {
    return CapletPricer(model, family, spec.k, FourierConfig{}).cf(v, alpha, phase_io);
}

double price_caplet(const Model& model, const MartingaleFamily& family, const CapletSpec& spec,
                    const FourierConfig& cfg, FourierDiag* diag) {
    return CapletPricer(model, family, spec.k, cfg).caplet(spec.strike, spec.notional, diag);
}

double price_floorlet(const Model& model, const MartingaleFamily& family, const CapletSpec& spec,
                      const FourierConfig& cfg, FourierDiag* diag) {
    return CapletPricer(model, family, spec.k, cfg).floorlet(spec.strike, spec.notional, diag);
}

double price_cap(const Model& model, const MartingaleFamily& family, int k_first, int k_last,
                 double strike, const FourierConfig& cfg) {
    if (k_first > k_last) throw std::invalid_argument("price_cap: empty tenor range");
    double total = 0.0;
    for (int k = k_first; k <= k_last; ++k)
        total += CapletPricer(model, family, k, cfg).caplet(strike);
    return total;
}

double price_floor(const Model& model, const MartingaleFamily& family, int k_first, int k_last,
                   double strike, const FourierConfig& cfg) {
    if (k_first > k_last) throw std::invalid_argument("price_floor: empty tenor range");
    double total = 0.0;
    for (int k = k_first; k <= k_last; ++k)
        total += CapletPricer(model, family, k, cfg).floorlet(strike);
    return total;
}

}  // namespace wlm
