#include "wlm/affine.hpp"

#include <cmath>
#include <mutex>
#include <numbers>

namespace wlm {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Gauss-Legendre 8 on [-1, 1].
constexpr double kGlNode[8] = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                               -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                               0.7966664774136267,  0.9602898564975363};
constexpr double kGlWeight[8] = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                 0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                 0.2223810344533745, 0.1012285362903763};

constexpr double kJumpQuadTol = 1e-10;
constexpr int kJumpQuadMaxNodes = 1 << 14;

// Relative determinant floor below which the transform is declared outside
// its domain (blow-up of the Riccati flow).
constexpr double kDetFloor = 1e-13;

void check_stable(const SquareMat& m, const char* what) {
    Eigen::EigenSolver<Matrix> es(m.mat(), /*computeEigenvectors=*/false);
    if ((es.eigenvalues().real().array() > 1e-12).any())
        throw std::invalid_argument(std::string(what) +
                                    ": mean-reversion matrix has an eigenvalue with positive "
                                    "real part");
}

void check_invertible(const SquareMat& q, const char* what) {
    Eigen::FullPivLU<Matrix> lu(q.mat());
    if (!lu.isInvertible())
        throw std::invalid_argument(std::string(what) + ": matrix must be invertible");
}

double phase_snap(double prev_phase) { return kTwoPi * std::round(prev_phase / kTwoPi); }

}  // namespace

WishartParams::WishartParams(SymMat sigma0_, SquareMat m_, SquareMat q_, double kappa_)
    : sigma0(std::move(sigma0_)), m(std::move(m_)), q(std::move(q_)), kappa(kappa_) {
    const int d = sigma0.dim();
    if (m.dim() != d || q.dim() != d)
        throw std::invalid_argument("WishartParams: dimension mismatch");
    if (!is_spd(sigma0)) throw NotSpdError("WishartParams: sigma0 must be SPD");
    check_stable(m, "WishartParams");
    check_invertible(q, "WishartParams");
    if (kappa < d + 1 - 1e-12)
        throw std::invalid_argument("WishartParams: kappa must be >= d+1 (solvability)");
}

JumpLaw JumpLaw::wishart(double n, SymMat scale) {
    JumpLaw law;
    law.type = Type::wishart;
    law.n = n;
    law.scale = std::move(scale);
    return law;
}

JumpLaw JumpLaw::noncentral_wishart(double n, SymMat scale, SquareMat mean) {
    JumpLaw law;
    law.type = Type::noncentral_wishart;
    law.n = n;
    law.scale = std::move(scale);
    law.mean = std::move(mean);
    return law;
}

JumpOUParams::JumpOUParams(SymMat sigma0_, SquareMat m_, double lambda_, JumpLaw law_)
    : sigma0(std::move(sigma0_)), m(std::move(m_)), lambda(lambda_), law(std::move(law_)) {
    const int d = sigma0.dim();
    if (m.dim() != d || law.scale.dim() != d)
        throw std::invalid_argument("JumpOUParams: dimension mismatch");
    if (law.type == JumpLaw::Type::noncentral_wishart && law.mean.dim() != d)
        throw std::invalid_argument("JumpOUParams: dimension mismatch in jump mean");
    if (!is_spd(sigma0)) throw NotSpdError("JumpOUParams: sigma0 must be SPD");
    check_stable(m, "JumpOUParams");
    if (!(lambda > 0.0)) throw std::invalid_argument("JumpOUParams: lambda must be positive");
    if (!(law.n > d - 1))
        throw std::invalid_argument("JumpOUParams: jump-law degrees of freedom must exceed d-1");
    if (!is_spd(law.scale)) throw NotSpdError("JumpOUParams: jump-law scale must be SPD");
}

int model_dim(const Model& model) {
    return std::visit([](const auto& p) { return p.dim(); }, model);
}

const SymMat& model_sigma0(const Model& model) {
    return std::visit([](const auto& p) -> const SymMat& { return p.sigma0; }, model);
}

// ---------------------------------------------------------------------------
// Wishart flow
// ---------------------------------------------------------------------------

WishartFlow::WishartFlow(const WishartParams& params, double tau) : tau_(tau) {
    if (tau < 0.0) throw NegativeTauError("WishartFlow: tau must be nonnegative");
    kappa_ = params.kappa;
    tr_m_ = params.m.mat().trace();
    const int d = params.dim();
    Matrix block = Matrix::Zero(2 * d, 2 * d);
    block.topLeftCorner(d, d) = params.m.mat();
    block.topRightCorner(d, d) = 2.0 * params.q.mat().transpose() * params.q.mat();
    block.bottomRightCorner(d, d) = -params.m.mat().transpose();
    const Matrix e = expm(Matrix(tau * block));
    psi11_ = e.topLeftCorner(d, d);
    psi12_ = e.topRightCorner(d, d);
    psi21_ = e.bottomLeftCorner(d, d);
    psi22_ = e.bottomRightCorner(d, d);
}

AffineCoeffs WishartFlow::coeffs(const CSymMat& u, double prev_phase) const {
    const int d = u.dim();
    AffineCoeffs out;
    out.tau = tau_;
    if (tau_ == 0.0 || u.mat().norm() == 0.0) {
        out.phi = 0.0;
        out.psi = u;
        out.phase = phase_snap(prev_phase);
        return out;
    }

    const CMatrix f = u.mat() * psi12_.cast<Complex>() + psi22_.cast<Complex>();
    const CMatrix g = u.mat() * psi11_.cast<Complex>() + psi21_.cast<Complex>();

    // f is not symmetric in general; track the log-determinant on the raw
    // matrix so phi stays continuous along the caller's contour.
    Eigen::PartialPivLU<CMatrix> lu(f);
    double log_abs = 0.0;
    double arg = std::arg(Complex(lu.permutationP().determinant(), 0.0));
    for (int i = 0; i < d; ++i) {
        const Complex uii = lu.matrixLU()(i, i);
        log_abs += std::log(std::abs(uii));
        arg += std::arg(uii);
    }
    const double scale = f.norm() / std::sqrt(static_cast<double>(d));
    if (!std::isfinite(log_abs) ||
        log_abs < d * std::log(std::max(scale, 1e-200)) + std::log(kDetFloor)) {
        out.valid = false;
        out.psi = CSymMat::zero(d);
        return out;
    }
    // A real argument past the blow-up time shows up as a negative real
    // determinant rather than a small one.
    if (u.max_imag() == 0.0 && std::cos(arg) < 0.0) {
        out.valid = false;
        out.psi = CSymMat::zero(d);
        return out;
    }
    const double k = std::round((prev_phase - arg) / kTwoPi);
    const double theta = arg + kTwoPi * k;

    out.psi = CSymMat(CMatrix(lu.solve(g)));
    out.phi = 0.5 * kappa_ * (Complex(log_abs, theta) + Complex(tau_ * tr_m_, 0.0));
    out.phase = theta;
    return out;
}

RealCoeffs WishartFlow::coeffs(const SymMat& u) const {
    const int d = u.dim();
    RealCoeffs out;
    if (tau_ == 0.0 || u.mat().norm() == 0.0) {
        out.phi = 0.0;
        out.psi = u;
        return out;
    }
    const Matrix f = u.mat() * psi12_ + psi22_;
    const Matrix g = u.mat() * psi11_ + psi21_;
    Eigen::PartialPivLU<Matrix> lu(f);
    double log_abs = 0.0;
    double sign = lu.permutationP().determinant();
    for (int i = 0; i < d; ++i) {
        const double uii = lu.matrixLU()(i, i);
        sign *= (uii < 0.0) ? -1.0 : 1.0;
        log_abs += std::log(std::abs(uii));
    }
    const double scale = f.norm() / std::sqrt(static_cast<double>(d));
    if (sign <= 0.0 || !std::isfinite(log_abs) ||
        log_abs < d * std::log(std::max(scale, 1e-200)) + std::log(kDetFloor)) {
        out.valid = false;
        out.psi = SymMat::zero(d);
        return out;
    }
    out.psi = SymMat(lu.solve(g));
    out.phi = 0.5 * kappa_ * (log_abs + tau_ * tr_m_);
    return out;
}

// ---------------------------------------------------------------------------
// Jump-OU flow
// ---------------------------------------------------------------------------

JumpFlow::JumpFlow(const JumpOUParams& params, double tau) : params_(params), tau_(tau) {
    if (tau < 0.0) throw NegativeTauError("JumpFlow: tau must be nonnegative");
    exp_m_tau_ = expm(Matrix(tau * params.m.mat()));
    if (params_.law.type == JumpLaw::Type::noncentral_wishart) {
        const Matrix s = params_.law.mean.mat() * params_.law.mean.mat().transpose();
        const Matrix q_inv = params_.law.scale.mat().partialPivLu().solve(
            Matrix::Identity(params_.dim(), params_.dim()));
        q_inv_s_ = SymMat(Matrix(0.5 * (q_inv * s + (q_inv * s).transpose())));
        // q_inv * s need not be symmetric; only traces of it are used below,
        // which are invariant under the symmetrization.
        tr_q_inv_s_ = (q_inv * s).trace();
    }
}

const JumpFlow::Level& JumpFlow::level(int r) const {
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    if (static_cast<int>(levels_.size()) > r) return levels_[r];
    for (int lvl = static_cast<int>(levels_.size()); lvl <= r; ++lvl) {
        Level l;
        const int panels = 1 << lvl;
        const double h = tau_ / panels;
        l.s.reserve(8 * panels);
        l.weight.reserve(8 * panels);
        l.exp_ms.reserve(8 * panels);
        for (int p = 0; p < panels; ++p) {
            const double a = p * h;
            for (int g = 0; g < 8; ++g) {
                const double s = a + 0.5 * h * (1.0 + kGlNode[g]);
                l.s.push_back(s);
                l.weight.push_back(0.5 * h * kGlWeight[g]);
                l.exp_ms.push_back(expm(Matrix(s * params_.m.mat())));
            }
        }
        levels_.push_back(std::move(l));
    }
    return levels_[r];
}

namespace {

// Laplace transform of the jump law at matrix argument x:
//   central:     det(I + 2 x Q)^{-n/2}
//   noncentral:  det(I + 2 x Q)^{-n/2}
//                * etr{ -1/2 Q^{-1} S + 1/2 (I + 2 x Q)^{-1} Q^{-1} S },
// with S = mean mean^T. The determinant power is evaluated through a
// tracked log so the branch stays continuous along the quadrature path.
struct JumpIntegrand {
    const JumpLaw* law;
    const Matrix* q_inv_s;  // Q^{-1} S, symmetrized (noncentral only)
    double tr_q_inv_s;

    // Complex argument; phase chained by the caller. Returns false on a
    // determinant crossing (transform invalid).
    bool eval(const CMatrix& x, double& phase_io, Complex& out) const {
        const int d = static_cast<int>(x.rows());
        const CMatrix a = CMatrix::Identity(d, d) + 2.0 * x * law->scale.mat().cast<Complex>();
        Eigen::PartialPivLU<CMatrix> lu(a);
        double log_abs = 0.0;
        double arg = std::arg(Complex(lu.permutationP().determinant(), 0.0));
        for (int i = 0; i < d; ++i) {
            const Complex uii = lu.matrixLU()(i, i);
            const double mag = std::abs(uii);
            if (mag < 1e-150) return false;
            log_abs += std::log(mag);
            arg += std::arg(uii);
        }
        const double scale = a.norm() / std::sqrt(static_cast<double>(d));
        if (log_abs < d * std::log(std::max(scale, 1e-200)) + std::log(kDetFloor)) return false;
        const double k = std::round((phase_io - arg) / kTwoPi);
        const double theta = arg + kTwoPi * k;
        if (std::abs(theta - phase_io) > 0.5 * std::numbers::pi) return false;
        phase_io = theta;

        Complex expo = -0.5 * law->n * Complex(log_abs, theta);
        if (law->type == JumpLaw::Type::noncentral_wishart) {
            const CMatrix ainv_qs = lu.solve(q_inv_s->cast<Complex>());
            expo += 0.5 * (ainv_qs.trace() - tr_q_inv_s);
        }
        out = std::exp(expo);
        return true;
    }

    // Real argument; the determinant must stay strictly positive.
    bool eval(const Matrix& x, double& out) const {
        const int d = static_cast<int>(x.rows());
        const Matrix a = Matrix::Identity(d, d) + 2.0 * x * law->scale.mat();
        Eigen::PartialPivLU<Matrix> lu(a);
        double log_abs = 0.0;
        double sign = lu.permutationP().determinant();
        for (int i = 0; i < d; ++i) {
            const double uii = lu.matrixLU()(i, i);
            sign *= (uii < 0.0) ? -1.0 : 1.0;
            log_abs += std::log(std::abs(uii));
        }
        const double scale = a.norm() / std::sqrt(static_cast<double>(d));
        if (sign <= 0.0 ||
            log_abs < d * std::log(std::max(scale, 1e-200)) + std::log(kDetFloor))
            return false;
        double expo = -0.5 * law->n * log_abs;
        if (law->type == JumpLaw::Type::noncentral_wishart) {
            const Matrix ainv_qs = lu.solve(*q_inv_s);
            expo += 0.5 * (ainv_qs.trace() - tr_q_inv_s);
        }
        out = std::exp(expo);
        return true;
    }
};

}  // namespace

AffineCoeffs JumpFlow::coeffs(const CSymMat& u, double prev_phase) const {
    AffineCoeffs out;
    out.tau = tau_;
    if (tau_ == 0.0 || u.mat().norm() == 0.0) {
        out.phi = 0.0;
        out.psi = u;
        out.phase = phase_snap(prev_phase);
        return out;
    }
    out.psi = CSymMat(
        CMatrix(exp_m_tau_.transpose().cast<Complex>() * u.mat() * exp_m_tau_.cast<Complex>()));

    const Matrix q_inv_s = q_inv_s_.dim() > 0 ? q_inv_s_.mat() : Matrix();
    JumpIntegrand integrand{&params_.law, &q_inv_s, tr_q_inv_s_};

    // Branch state at s = 0, chained from the caller's contour.
    double phase0 = prev_phase;
    Complex l0;
    if (!integrand.eval(CMatrix(u.mat()), phase0, l0)) {
        out.valid = false;
        return out;
    }
    out.phase = phase0;

    Complex integral_prev = 0.0;
    bool have_prev = false;
    for (int r = 0;; ++r) {
        const Level& lvl = level(r);
        double phase = phase0;
        Complex integral = 0.0;
        for (size_t i = 0; i < lvl.s.size(); ++i) {
            const CMatrix x = lvl.exp_ms[i].transpose().cast<Complex>() * u.mat() *
                              lvl.exp_ms[i].cast<Complex>();
            Complex value;
            if (!integrand.eval(x, phase, value)) {
                out.valid = false;
                return out;
            }
            integral += lvl.weight[i] * value;
        }
        if (have_prev && std::abs(integral - integral_prev) <= kJumpQuadTol) {
            integral_prev = integral;
            break;
        }
        integral_prev = integral;
        have_prev = true;
        if (8 * (1 << (r + 1)) > kJumpQuadMaxNodes) break;
    }
    out.phi = params_.lambda * tau_ - params_.lambda * integral_prev;
    return out;
}

RealCoeffs JumpFlow::coeffs(const SymMat& u) const {
    const int d = u.dim();
    RealCoeffs out;
    if (tau_ == 0.0 || u.mat().norm() == 0.0) {
        out.phi = 0.0;
        out.psi = u;
        return out;
    }
    out.psi = SymMat(Matrix(exp_m_tau_.transpose() * u.mat() * exp_m_tau_));

    const Matrix q_inv_s = q_inv_s_.dim() > 0 ? q_inv_s_.mat() : Matrix();
    JumpIntegrand integrand{&params_.law, &q_inv_s, tr_q_inv_s_};

    double l0;
    if (!integrand.eval(Matrix(u.mat()), l0)) {
        out.valid = false;
        out.psi = SymMat::zero(d);
        return out;
    }

    double integral_prev = 0.0;
    bool have_prev = false;
    for (int r = 0;; ++r) {
        const Level& lvl = level(r);
        double integral = 0.0;
        for (size_t i = 0; i < lvl.s.size(); ++i) {
            const Matrix x = lvl.exp_ms[i].transpose() * u.mat() * lvl.exp_ms[i];
            double value;
            if (!integrand.eval(x, value)) {
                out.valid = false;
                out.psi = SymMat::zero(d);
                return out;
            }
            integral += lvl.weight[i] * value;
        }
        if (have_prev && std::abs(integral - integral_prev) <= kJumpQuadTol) {
            integral_prev = integral;
            break;
        }
        integral_prev = integral;
        have_prev = true;
        if (8 * (1 << (r + 1)) > kJumpQuadMaxNodes) break;
    }
    out.phi = params_.lambda * tau_ - params_.lambda * integral_prev;
    return out;
}

// ---------------------------------------------------------------------------
// Free-function API
// ---------------------------------------------------------------------------

Flow::Flow(const Model& model, double tau)
    : impl_(std::visit(
          [&](const auto& p) -> std::variant<WishartFlow, JumpFlow> {
              using T = std::decay_t<decltype(p)>;
              if constexpr (std::is_same_v<T, WishartParams>)
                  return WishartFlow(p, tau);
              else
                  return JumpFlow(p, tau);
          },
          model)) {}

AffineCoeffs Flow::coeffs(const CSymMat& u, double prev_phase) const {
    return std::visit([&](const auto& f) { return f.coeffs(u, prev_phase); }, impl_);
}

RealCoeffs Flow::coeffs(const SymMat& u) const {
    return std::visit([&](const auto& f) { return f.coeffs(u); }, impl_);
}

double Flow::tau() const {
    return std::visit([](const auto& f) { return f.tau(); }, impl_);
}

AffineCoeffs wishart_psi_phi(const WishartParams& params, double tau, const CSymMat& u,
                             double prev_phase) {
    return WishartFlow(params, tau).coeffs(u, prev_phase);
}

AffineCoeffs jump_psi_phi(const JumpOUParams& params, double tau, const CSymMat& u,
                          double prev_phase) {
    return JumpFlow(params, tau).coeffs(u, prev_phase);
}

AffineCoeffs psi_phi(const Model& model, double tau, const CSymMat& u, double prev_phase) {
    return std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, WishartParams>)
                return WishartFlow(p, tau).coeffs(u, prev_phase);
            else
                return JumpFlow(p, tau).coeffs(u, prev_phase);
        },
        model);
}

RealCoeffs psi_phi(const Model& model, double tau, const SymMat& u) {
    return std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, WishartParams>)
                return WishartFlow(p, tau).coeffs(u);
            else
                return JumpFlow(p, tau).coeffs(u);
        },
        model);
}

std::optional<Complex> laplace(const Model& model, double t, const CSymMat& u) {
    const AffineCoeffs c = psi_phi(model, t, u);
    if (!c.valid) return std::nullopt;
    const Complex tr = (c.psi.mat() * model_sigma0(model).mat().cast<Complex>()).trace();
    return std::exp(-c.phi - tr);
}

std::optional<double> laplace(const Model& model, double t, const SymMat& u) {
    const RealCoeffs c = psi_phi(model, t, u);
    if (!c.valid) return std::nullopt;
    const double tr = (c.psi.mat() * model_sigma0(model).mat()).trace();
    return std::exp(-c.phi - tr);
}

namespace detail {

RiccatiSolution riccati_rk4(const WishartParams& params, double tau, const CMatrix& u,
                            int n_steps) {
    const CMatrix m = params.m.mat().cast<Complex>();
    const CMatrix qtq = (params.q.mat().transpose() * params.q.mat()).cast<Complex>();
    const double kappa = params.kappa;

    auto f_psi = [&](const CMatrix& psi) -> CMatrix {
        return psi * m + m.transpose() * psi - 2.0 * psi * qtq * psi;
    };
    auto f_phi = [&](const CMatrix& psi) -> Complex { return kappa * (qtq * psi).trace(); };

    CMatrix psi = u;
    Complex phi = 0.0;
    const double h = tau / n_steps;
    for (int i = 0; i < n_steps; ++i) {
        const CMatrix k1 = f_psi(psi);
        const Complex p1 = f_phi(psi);
        const CMatrix k2 = f_psi(psi + 0.5 * h * k1);
        const Complex p2 = f_phi(psi + 0.5 * h * k1);
        const CMatrix k3 = f_psi(psi + 0.5 * h * k2);
        const Complex p3 = f_phi(psi + 0.5 * h * k2);
        const CMatrix k4 = f_psi(psi + h * k3);
        const Complex p4 = f_phi(psi + h * k3);
        psi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        phi += (h / 6.0) * (p1 + 2.0 * p2 + 2.0 * p3 + p4);
    }
    return RiccatiSolution{phi, psi};
}

}  // namespace detail

}  // namespace wlm
