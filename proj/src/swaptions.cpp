#include "wlm/swaptions.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <cmath>
#include <numbers>

namespace wlm {

namespace {

using quad = boost::multiprecision::cpp_bin_float_quad;

// ---------------------------------------------------------------------------
// Minimal square-matrix helpers templated on the scalar, used to run the
// moment pipeline in quadruple precision. Real arguments only.
// ---------------------------------------------------------------------------

template <class Real>
struct QM {
    int n = 0;
    std::vector<Real> a;  // row-major

    QM() = default;
    explicit QM(int n_) : n(n_), a(static_cast<size_t>(n_) * n_, Real(0)) {}

    static QM identity(int n_) {
        QM m(n_);
        for (int i = 0; i < n_; ++i) m(i, i) = Real(1);
        return m;
    }
    static QM from(const Matrix& x) {
        QM m(static_cast<int>(x.rows()));
        for (int i = 0; i < m.n; ++i)
            for (int j = 0; j < m.n; ++j) m(i, j) = Real(x(i, j));
        return m;
    }

    Real& operator()(int i, int j) { return a[static_cast<size_t>(i) * n + j]; }
    const Real& operator()(int i, int j) const { return a[static_cast<size_t>(i) * n + j]; }
};

template <class Real>
QM<Real> mul(const QM<Real>& x, const QM<Real>& y) {
    QM<Real> z(x.n);
    for (int i = 0; i < x.n; ++i)
        for (int k = 0; k < x.n; ++k) {
            const Real xik = x(i, k);
            if (xik == 0) continue;
            for (int j = 0; j < x.n; ++j) z(i, j) += xik * y(k, j);
        }
    return z;
}

template <class Real>
QM<Real> transpose(const QM<Real>& x) {
    QM<Real> z(x.n);
    for (int i = 0; i < x.n; ++i)
        for (int j = 0; j < x.n; ++j) z(i, j) = x(j, i);
    return z;
}

template <class Real>
void axpy(QM<Real>& y, const Real& c, const QM<Real>& x) {
    for (size_t t = 0; t < y.a.size(); ++t) y.a[t] += c * x.a[t];
}

template <class Real>
Real one_norm(const QM<Real>& x) {
    Real best(0);
    for (int j = 0; j < x.n; ++j) {
        Real s(0);
        for (int i = 0; i < x.n; ++i) s += abs(x(i, j));
        if (s > best) best = s;
    }
    return best;
}

template <class Real>
Real trace_prod(const QM<Real>& x, const QM<Real>& y) {
    Real s(0);
    for (int i = 0; i < x.n; ++i)
        for (int j = 0; j < x.n; ++j) s += x(i, j) * y(j, i);
    return s;
}

/// Scaling-and-squaring Taylor series; ample for the small, well-scaled
/// blocks this engine sees.
template <class Real>
QM<Real> expm_series(QM<Real> x) {
    int s = 0;
    Real nrm = one_norm(x);
    while (nrm > Real(0.25)) {
        nrm /= 2;
        ++s;
        for (auto& v : x.a) v /= 2;
    }
    QM<Real> sum = QM<Real>::identity(x.n);
    QM<Real> term = QM<Real>::identity(x.n);
    const Real eps = std::numeric_limits<Real>::epsilon();
    for (int k = 1; k <= 90; ++k) {
        term = mul(term, x);
        for (auto& v : term.a) v /= k;
        for (size_t t = 0; t < sum.a.size(); ++t) sum.a[t] += term.a[t];
        if (one_norm(term) <= eps * one_norm(sum)) break;
    }
    for (int t = 0; t < s; ++t) sum = mul(sum, sum);
    return sum;
}

/// LU with partial pivoting; returns false when det(a) <= 0 (the transform
/// left its domain) and otherwise fills x = a^{-1} b and log det(a).
template <class Real>
bool solve_logdet(QM<Real> a, QM<Real> b, QM<Real>& x, Real& logdet) {
    const int n = a.n;
    double sign = 1.0;
    logdet = Real(0);
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (abs(a(r, col)) > abs(a(piv, col))) piv = r;
        if (piv != col) {
            for (int j = 0; j < n; ++j) {
                std::swap(a(piv, j), a(col, j));
                std::swap(b(piv, j), b(col, j));
            }
            sign = -sign;
        }
        const Real p = a(col, col);
        if (p == 0) return false;
        if (p < 0) sign = -sign;
        logdet += log(abs(p));
        for (int r = col + 1; r < n; ++r) {
            const Real f = a(r, col) / p;
            if (f == 0) continue;
            for (int j = col; j < n; ++j) a(r, j) -= f * a(col, j);
            for (int j = 0; j < n; ++j) b(r, j) -= f * b(col, j);
        }
    }
    if (sign < 0) return false;
    x = QM<Real>(n);
    for (int j = 0; j < n; ++j)
        for (int r = n - 1; r >= 0; --r) {
            Real s = b(r, j);
            for (int c = r + 1; c < n; ++c) s -= a(r, c) * x(c, j);
            x(r, j) = s / a(r, r);
        }
    return true;
}

// ---------------------------------------------------------------------------
// Quad-precision transforms for real symmetric arguments.
// ---------------------------------------------------------------------------

template <class Real>
struct QWishartFlow {
    Real kappa, tr_m, tau;
    QM<Real> psi11, psi12, psi21, psi22;

    QWishartFlow(const WishartParams& p, double tau_) {
        kappa = Real(p.kappa);
        tau = Real(tau_);
        const int d = p.dim();
        tr_m = Real(0);
        for (int i = 0; i < d; ++i) tr_m += Real(p.m(i, i));
        QM<Real> block(2 * d);
        const QM<Real> m = QM<Real>::from(p.m.mat());
        const QM<Real> qtq = QM<Real>::from(Matrix(p.q.mat().transpose() * p.q.mat()));
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                block(i, j) = tau * m.a[static_cast<size_t>(i) * d + j];
                block(i, d + j) = tau * 2 * qtq.a[static_cast<size_t>(i) * d + j];
                block(d + i, d + j) = -tau * m.a[static_cast<size_t>(j) * d + i];
            }
        const QM<Real> e = expm_series(block);
        psi11 = QM<Real>(d);
        psi12 = QM<Real>(d);
        psi21 = QM<Real>(d);
        psi22 = QM<Real>(d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                psi11(i, j) = e(i, j);
                psi12(i, j) = e(i, d + j);
                psi21(i, j) = e(d + i, j);
                psi22(i, j) = e(d + i, d + j);
            }
    }

    bool coeffs(const QM<Real>& u, Real& phi, QM<Real>& psi) const {
        if (tau == 0) {
            phi = Real(0);
            psi = u;
            return true;
        }
        QM<Real> f = mul(u, psi12);
        for (size_t t = 0; t < f.a.size(); ++t) f.a[t] += psi22.a[t];
        QM<Real> g = mul(u, psi11);
        for (size_t t = 0; t < g.a.size(); ++t) g.a[t] += psi21.a[t];
        Real logdet;
        if (!solve_logdet(f, g, psi, logdet)) return false;
        phi = kappa / 2 * (logdet + tau * tr_m);
        return true;
    }
};

// Gauss-Legendre 8 refined to working precision by Newton iteration on P_8.
template <class Real>
void gl8_nodes(std::vector<Real>& x, std::vector<Real>& w) {
    const double seeds[8] = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                             -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                             0.7966664774136267,  0.9602898564975363};
    x.resize(8);
    w.resize(8);
    for (int i = 0; i < 8; ++i) {
        Real t(seeds[i]);
        for (int it = 0; it < 6; ++it) {
            Real p0(1), p1 = t;
            for (int k = 2; k <= 8; ++k) {
                const Real p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            const Real dp = 8 * (t * p1 - p0) / (t * t - 1);
            t -= p1 / dp;
        }
        Real p0(1), p1 = t;
        for (int k = 2; k <= 8; ++k) {
            const Real p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        const Real dp = 8 * (t * p1 - p0) / (t * t - 1);
        x[i] = t;
        w[i] = 2 / ((1 - t * t) * dp * dp);
    }
}

template <class Real>
struct QJumpFlow {
    Real tau, lambda, n_dof;
    bool noncentral = false;
    QM<Real> exp_m_tau, scale, q_inv_s, m_mat;
    Real tr_q_inv_s{0};
    mutable std::vector<std::vector<std::pair<Real, QM<Real>>>> levels_;  // (weight, e^{Ms})

    QJumpFlow(const JumpOUParams& p, double tau_) {
        tau = Real(tau_);
        lambda = Real(p.lambda);
        n_dof = Real(p.law.n);
        m_mat = QM<Real>::from(p.m.mat());
        QM<Real> mt = m_mat;
        for (auto& v : mt.a) v *= tau;
        exp_m_tau = expm_series(mt);
        scale = QM<Real>::from(p.law.scale.mat());
        if (p.law.type == JumpLaw::Type::noncentral_wishart) {
            noncentral = true;
            const QM<Real> s =
                QM<Real>::from(Matrix(p.law.mean.mat() * p.law.mean.mat().transpose()));
            QM<Real> inv;
            Real ld;
            if (!solve_logdet(scale, s, inv, ld))
                throw NotSpdError("QJumpFlow: jump scale not SPD");
            q_inv_s = inv;  // scale^{-1} S
            tr_q_inv_s = Real(0);
            for (int i = 0; i < q_inv_s.n; ++i) tr_q_inv_s += q_inv_s(i, i);
        }
    }

    const std::vector<std::pair<Real, QM<Real>>>& level(int r) const {
        for (int lvl = static_cast<int>(levels_.size()); lvl <= r; ++lvl) {
            std::vector<Real> gx, gw;
            gl8_nodes(gx, gw);
            std::vector<std::pair<Real, QM<Real>>> nodes;
            const int panels = 1 << lvl;
            const Real h = tau / panels;
            nodes.reserve(8 * panels);
            for (int p = 0; p < panels; ++p)
                for (int g = 0; g < 8; ++g) {
                    const Real s = p * h + h / 2 * (1 + gx[g]);
                    QM<Real> ms = m_mat;
                    for (auto& v : ms.a) v *= s;
                    nodes.emplace_back(h / 2 * gw[g], expm_series(ms));
                }
            levels_.push_back(std::move(nodes));
        }
        return levels_[r];
    }

    bool law_laplace(const QM<Real>& x, Real& out) const {
        const int d = x.n;
        QM<Real> a = mul(x, scale);
        for (auto& v : a.a) v *= 2;
        for (int i = 0; i < d; ++i) a(i, i) += 1;
        Real logdet;
        QM<Real> ainv_qs;
        if (noncentral) {
            if (!solve_logdet(a, q_inv_s, ainv_qs, logdet)) return false;
            Real tr(0);
            for (int i = 0; i < d; ++i) tr += ainv_qs(i, i);
            out = exp(-n_dof / 2 * logdet + (tr - tr_q_inv_s) / 2);
        } else {
            const QM<Real> id = QM<Real>::identity(d);
            QM<Real> dummy;
            if (!solve_logdet(a, id, dummy, logdet)) return false;
            out = exp(-n_dof / 2 * logdet);
        }
        return true;
    }

    bool coeffs(const QM<Real>& u, Real& phi, QM<Real>& psi) const {
        psi = mul(transpose(exp_m_tau), mul(u, exp_m_tau));
        if (tau == 0) {
            phi = Real(0);
            return true;
        }
        Real prev(0);
        bool have_prev = false;
        for (int r = 0;; ++r) {
            Real integral(0);
            for (const auto& [weight, e] : level(r)) {
                const QM<Real> x = mul(transpose(e), mul(u, e));
                Real val;
                if (!law_laplace(x, val)) return false;
                integral += weight * val;
            }
            if (have_prev && abs(integral - prev) <=
                                 Real(1e-28) * (Real(1) + abs(integral))) {
                prev = integral;
                break;
            }
            prev = integral;
            have_prev = true;
            if (8 * (1 << (r + 1)) > (1 << 14)) break;
        }
        phi = lambda * tau - lambda * prev;
        return true;
    }
};

template <class Real>
struct QFlow {
    std::optional<QWishartFlow<Real>> wishart;
    std::optional<QJumpFlow<Real>> jump;

    QFlow(const Model& model, double tau) {
        if (std::holds_alternative<WishartParams>(model))
            wishart.emplace(std::get<WishartParams>(model), tau);
        else
            jump.emplace(std::get<JumpOUParams>(model), tau);
    }
    bool coeffs(const QM<Real>& u, Real& phi, QM<Real>& psi) const {
        return wishart ? wishart->coeffs(u, phi, psi) : jump->coeffs(u, phi, psi);
    }
};

// ---------------------------------------------------------------------------
// Moment engine
// ---------------------------------------------------------------------------

class MomentEngine {
  public:
    static int checked_expiry(const MartingaleFamily& family, const SwaptionSpec& spec) {
        if (spec.i < 1 || spec.i >= spec.m || spec.m > family.n_tenors())
            throw std::out_of_range("swaption: need 1 <= i < m <= N");
        return spec.i;
    }

    MomentEngine(const Model& model, const MartingaleFamily& family, const SwaptionSpec& spec)
        : i_(checked_expiry(family, spec)),
          m_(spec.m),
          flow_ti_(model, family.curve.maturity(spec.i)),
          sigma0_(QM<quad>::from(model_sigma0(model).mat())) {
        const double dt = family.curve.delta_t();
        const double tau_i = family.horizon() - family.curve.maturity(spec.i);

        QFlow<quad> flow_tau(model, tau_i);
        QFlow<quad> flow_tn(model, family.horizon());

        const int cnt = m_ - i_ + 1;
        coupons_.resize(cnt);
        psi_tau_.resize(cnt);
        phi_tau_.resize(cnt);
        rn_log_.resize(cnt);
        for (int j = i_; j <= m_; ++j) {
            const int pos = j - i_;
            coupons_[pos] = (j == i_) ? quad(0) : quad(spec.coupon(j, dt));
            const QM<quad> u = QM<quad>::from(family.u(j).mat());
            if (!flow_tau.coeffs(u, phi_tau_[pos], psi_tau_[pos]))
                throw TransformBlowUpError("swaption moments: transform infinite at u_j");
            quad phi_n;
            QM<quad> psi_n;
            if (!flow_tn.coeffs(u, phi_n, psi_n))
                throw TransformBlowUpError("swaption moments: transform infinite at u_j");
            rn_log_[pos] = phi_n + trace_prod(psi_n, sigma0_) - phi_tau_[pos];
        }
    }

    int expiry_index() const { return i_; }
    int end_index() const { return m_; }

    /// Moments of sum_j cc_j B(T_i,T_j) - shift under P_{measure_k},
    /// q = 1..q_max.
    std::vector<quad> moments(int q_max, int measure_k, const quad& shift) const {
        if (measure_k < i_ || measure_k > m_)
            throw std::out_of_range("swaption moments: measure index must lie in {i..m}");
        const int kpos = measure_k - i_;

        std::vector<quad> cc = coupons_;
        cc[0] -= shift;  // B(T_i,T_i) = 1 carries the constant shift

        std::vector<quad> out(q_max, quad(0));
        for (int q = 1; q <= q_max; ++q) {
            quad factorial_q(1);
            for (int t = 2; t <= q; ++t) factorial_q *= t;
            quad sum(0);
            // Multisets as count vectors over positions 0..cnt-1; the summand
            // depends on the multiset only, with multinomial weight
            // q! / prod(counts!), absorbed as prod(cc^c / c!).
            const int cnt = static_cast<int>(cc.size());
            std::vector<int> counts(cnt, 0);
            enumerate(0, q, quad(1), counts, [&](const std::vector<int>& cts,
                                                 const quad& weight_prod) {
                quad phi_sum(0);
                QM<quad> psi_sum(psi_tau_[0].n);
                for (int p = 0; p < cnt; ++p) {
                    if (cts[p] == 0) continue;
                    phi_sum += cts[p] * phi_tau_[p];
                    axpy(psi_sum, quad(cts[p]), psi_tau_[p]);
                }
                // w = psi(u_k) + sum psi(u_{j_l}) - q psi(u_i)
                QM<quad> w = psi_tau_[kpos];
                for (size_t t = 0; t < w.a.size(); ++t)
                    w.a[t] += psi_sum.a[t] - q * psi_tau_[0].a[t];
                quad phi_w;
                QM<quad> psi_w;
                if (!flow_ti_.coeffs(w, phi_w, psi_w))
                    throw TransformBlowUpError(
                        "coupon_bond_moment: transform left its domain at q=" +
                        std::to_string(q) + " (reduce the expansion order)");
                const quad log_term = -phi_sum + q * phi_tau_[0] + rn_log_[kpos] - phi_w -
                                      trace_prod(psi_w, sigma0_);
                sum += weight_prod * exp(log_term);
            }, cc);
            out[q - 1] = factorial_q * sum;
        }
        return out;
    }

  private:
    template <class F>
    void enumerate(int pos, int remaining, quad prod, std::vector<int>& counts, const F& emit,
                   const std::vector<quad>& cc) const {
        if (remaining == 0) {
            emit(counts, prod);
            return;
        }
        if (pos == static_cast<int>(cc.size())) return;
        // count = 0 branch
        enumerate(pos + 1, remaining, prod, counts, emit, cc);
        if (cc[pos] == 0) return;
        quad p = prod;
        for (int c = 1; c <= remaining; ++c) {
            p *= cc[pos] / c;
            counts[pos] = c;
            if (remaining - c == 0)
                emit(counts, p);
            else
                enumerate(pos + 1, remaining - c, p, counts, emit, cc);
        }
        counts[pos] = 0;
    }

    int i_, m_;
    std::vector<quad> coupons_;
    std::vector<QM<quad>> psi_tau_;
    std::vector<quad> phi_tau_;
    std::vector<quad> rn_log_;
    QFlow<quad> flow_ti_;
    QM<quad> sigma0_;
};

template <class Real>
std::vector<Real> cumulants_from_moments(const std::vector<Real>& m) {
    const int n = static_cast<int>(m.size());
    std::vector<Real> kappa(n);
    // binomial C(q-1, j-1) built on the fly
    for (int q = 1; q <= n; ++q) {
        Real k = m[q - 1];
        for (int j = 1; j <= q - 1; ++j) {
            Real binom(1);
            for (int t = 1; t <= j - 1; ++t) binom = binom * (q - t) / t;
            k -= binom * kappa[j - 1] * m[q - j - 1];
        }
        kappa[q - 1] = k;
    }
    return kappa;
}

double norm_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }
double norm_cdf_bar(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

// Edgeworth correction terms: multisets {j_1..j_p} of cumulant orders >= 3
// with excess sum (j_i - 2) <= r_max, coefficient prod lambda_j / j! over
// multiplicity factorials, Hermite index sum(j_i) - 1.
struct EdgeTerm {
    std::vector<int> orders;
    double inv_factor;  // 1 / (prod j! * prod mult!)
    int hermite;
};

void gen_edge_terms(int max_order, int r_max, std::vector<EdgeTerm>& out, std::vector<int>& cur,
                    int min_order, double inv_factor, int excess, int jsum) {
    if (!cur.empty()) out.push_back(EdgeTerm{cur, inv_factor, jsum - 1});
    for (int j = min_order; j <= max_order; ++j) {
        if (excess + (j - 2) > r_max) continue;
        // multiplicity bookkeeping: extend the multiset with order j
        int mult = 1;
        for (int t = static_cast<int>(cur.size()) - 1; t >= 0 && cur[t] == j; --t) ++mult;
        double fac = inv_factor / mult;
        double jfac = 1.0;
        for (int t = 2; t <= j; ++t) jfac *= t;
        fac /= jfac;
        cur.push_back(j);
        gen_edge_terms(max_order, r_max, out, cur, j, fac, excess + (j - 2), jsum + j);
        cur.pop_back();
    }
}

double hermite_he(int k, double z) {
    double h0 = 1.0, h1 = z;
    if (k == 0) return h0;
    for (int t = 2; t <= k; ++t) {
        const double h2 = z * h1 - (t - 1) * h0;
        h0 = h1;
        h1 = h2;
    }
    return h1;
}

}  // namespace

double SwaptionSpec::coupon(int k, double delta_t) const {
    if (k < i + 1 || k > m) throw std::out_of_range("SwaptionSpec::coupon");
    return (k == m) ? 1.0 + delta_t * strike : delta_t * strike;
}

double coupon_bond_moment(const Model& model, const MartingaleFamily& family,
                          const SwaptionSpec& spec, int q, int measure_k) {
    if (q < 1) throw std::invalid_argument("coupon_bond_moment: q must be positive");
    const MomentEngine engine(model, family, spec);
    return static_cast<double>(engine.moments(q, measure_k, quad(0)).back());
}

std::vector<double> coupon_bond_moments(const Model& model, const MartingaleFamily& family,
                                        const SwaptionSpec& spec, int q_max, int measure_k) {
    const MomentEngine engine(model, family, spec);
    const auto m = engine.moments(q_max, measure_k, quad(0));
    std::vector<double> out(m.size());
    for (size_t t = 0; t < m.size(); ++t) out[t] = static_cast<double>(m[t]);
    return out;
}

CumulantSet coupon_bond_cumulants(const Model& model, const MartingaleFamily& family,
                                  const SwaptionSpec& spec, int order, int measure_k) {
    if (order < 2) throw std::invalid_argument("coupon_bond_cumulants: order must be >= 2");
    const MomentEngine engine(model, family, spec);
    const quad mean = engine.moments(1, measure_k, quad(0))[0];
    // Moments of the centered variable: the constant is folded into the
    // B(T_i,T_i)=1 coupon, so no large-term cancellation survives in double.
    const auto centered = engine.moments(order, measure_k, mean);
    auto kq = cumulants_from_moments(centered);
    kq[0] += mean;

    CumulantSet cs;
    cs.order = order;
    cs.measure_index = measure_k;
    cs.kappa.resize(order);
    for (int t = 0; t < order; ++t) cs.kappa[t] = static_cast<double>(kq[t]);
    if (!(cs.kappa[1] > 0.0))
        throw DegenerateDistributionError("coupon_bond_cumulants: kappa_2 <= 0");
    return cs;
}

CumulantSet moments_to_cumulants(const std::vector<double>& moments) {
    if (moments.size() < 2)
        throw std::invalid_argument("moments_to_cumulants: need at least two moments");
    CumulantSet cs;
    cs.order = static_cast<int>(moments.size());
    cs.kappa = cumulants_from_moments(moments);
    if (!(cs.kappa[1] > 0.0))
        throw DegenerateDistributionError("moments_to_cumulants: kappa_2 <= 0");
    return cs;
}

TailProb edgeworth_tail(const CumulantSet& cs, double threshold) {
    if (cs.order < 2 || static_cast<int>(cs.kappa.size()) < cs.order)
        throw std::invalid_argument("edgeworth_tail: cumulants up to order >= 2 required");
    const double k2 = cs.kappa[1];
    if (!(k2 > 0.0)) throw DegenerateDistributionError("edgeworth_tail: kappa_2 <= 0");
    if (!std::isfinite(threshold)) throw std::invalid_argument("edgeworth_tail: threshold");

    const double sd = std::sqrt(k2);
    const double z = (threshold - cs.kappa[0]) / sd;

    // standardized cumulants lambda_j = kappa_j / kappa_2^{j/2}
    std::vector<double> lambda(cs.order + 1, 0.0);
    for (int j = 3; j <= cs.order; ++j) lambda[j] = cs.kappa[j - 1] / std::pow(sd, j);

    std::vector<EdgeTerm> terms;
    std::vector<int> cur;
    gen_edge_terms(cs.order, cs.order - 2, terms, cur, 3, 1.0, 0, 0);

    double p = norm_cdf_bar(z);
    const double nz = norm_pdf(z);
    if (nz > 0.0) {
        for (const EdgeTerm& t : terms) {
            double coeff = t.inv_factor;
            for (int j : t.orders) coeff *= lambda[j];
            p += nz * coeff * hermite_he(t.hermite, z);
        }
    }
    TailProb out;
    out.clamped = p < 0.0 || p > 1.0;
    out.p = std::min(1.0, std::max(0.0, p));
    return out;
}

double price_swaption(const Model& model, const MartingaleFamily& family,
                      const SwaptionSpec& spec, int order) {
    if (order < 3 || order > 7)
        throw std::invalid_argument("price_swaption: order must be in [3, 7]");
    if (spec.i < 1 || spec.i >= spec.m || spec.m > family.n_tenors())
        throw std::out_of_range("price_swaption: need 1 <= i < m <= N");
    const double dt = family.curve.delta_t();

    double receiver = 0.0;
    for (int k = spec.i; k <= spec.m; ++k) {
        const bool is_expiry = (k == spec.i);
        const CumulantSet cs = coupon_bond_cumulants(model, family, spec, order, k);
        const double pk = edgeworth_tail(cs, 1.0).p;
        if (is_expiry)
            receiver -= family.curve.bond(spec.i) * pk;
        else
            receiver += spec.coupon(k, dt) * family.curve.bond(k) * pk;
    }
    double price = receiver;
    if (spec.side == SwaptionSide::payer) {
        double swap_value = -family.curve.bond(spec.i);
        for (int k = spec.i + 1; k <= spec.m; ++k)
            swap_value += spec.coupon(k, dt) * family.curve.bond(k);
        price = receiver - swap_value;
    }
    return std::max(price, 0.0);
}

}  // namespace wlm
