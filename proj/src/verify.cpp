#include "wlm/verify.hpp"

#include "wlm/analytics.hpp"
#include "wlm/oracle.hpp"

#include <chrono>
#include <cmath>
#include <ostream>
#include <random>
#include <sstream>

namespace wlm::verify {

namespace {

struct Check {
    bool pass = true;
    std::ostringstream details;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            if (!details.str().empty()) details << "; ";
            details << what;
        }
    }
    void note(const std::string& what) {
        if (details.str().empty()) details << what;
    }
};

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

SymMat random_psd(std::mt19937_64& rng, int d, double scale) {
    std::normal_distribution<double> nd;
    Matrix a(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) a(i, j) = nd(rng);
    return SymMat(Matrix(scale * a.transpose() * a));
}

SymMat random_spd(std::mt19937_64& rng, int d, double scale) {
    SymMat s = random_psd(rng, d, scale);
    return SymMat(Matrix(s.mat() + 0.05 * scale * Matrix::Identity(d, d)));
}

JumpOUParams section6_params() {
    return JumpOUParams(SymMat(Matrix{{1.875, 0.6}, {0.6, 1.275}}),
                        SquareMat::diagonal({-0.055, -0.176}), 0.1,
                        JumpLaw::wishart(3.1, SymMat::diagonal({0.27, 0.05})));
}

// --- criterion 1: closed form vs RK4 -------------------------------------

Check transform_correctness(const WishartParams& params) {
    Check c;
    std::mt19937_64 rng(20240801);
    std::uniform_real_distribution<double> ut(1e-3, 3.0);
    std::uniform_real_distribution<double> us(0.05, 1.0);
    double max_err = 0.0;
    for (int t = 0; t < 50; ++t) {
        const double tau = ut(rng);
        const SymMat u = random_psd(rng, params.dim(), us(rng));
        const AffineCoeffs closed = wishart_psi_phi(params, tau, CSymMat(u));
        c.require(closed.valid, "transform invalid at PSD argument");
        const auto rk = detail::riccati_rk4(params, tau, u.mat().cast<Complex>(), 4000);
        const double err_psi = (closed.psi.mat() - rk.psi).cwiseAbs().maxCoeff();
        const double err_phi = std::abs(closed.phi - rk.phi);
        max_err = std::max({max_err, err_psi, err_phi});
    }
    c.require(max_err <= 1e-8, "max |closed-form - RK4| = " + fmt(max_err) + " > 1e-8");
    c.note("max abs error " + fmt(max_err) + " over 50 samples");
    return c;
}

// --- criterion 2: flow property -------------------------------------------

Check flow_property(const Model& model, const std::string& label) {
    Check c;
    std::mt19937_64 rng(977);
    std::uniform_real_distribution<double> ut(0.0, 2.0);
    std::uniform_real_distribution<double> us(0.05, 0.8);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const double t1 = ut(rng), t2 = ut(rng);
        const SymMat u = random_psd(rng, model_dim(model), us(rng));
        const RealCoeffs at_t = psi_phi(model, t1, u);
        const RealCoeffs at_ts = psi_phi(model, t1 + t2, u);
        const RealCoeffs comp = psi_phi(model, t2, at_t.psi);
        if (!at_t.valid || !at_ts.valid || !comp.valid) {
            c.require(false, "transform invalid at PSD argument");
            break;
        }
        const double res_phi = std::abs(at_ts.phi - at_t.phi - comp.phi);
        const double res_psi = (at_ts.psi.mat() - comp.psi.mat()).norm();
        worst = std::max({worst, res_phi, res_psi});
    }
    c.require(worst <= 1e-9, label + " flow residual " + fmt(worst) + " > 1e-9");
    c.note(label + " worst residual " + fmt(worst));
    return c;
}

// --- criterion 3: martingale + positivity ----------------------------------

Check martingale_positivity(const Model& model, const MartingaleFamily& family,
                            const McConfig& mc) {
    Check c;
    const int n = family.n_tenors();
    std::vector<double> grid(n);
    for (int j = 1; j <= n; ++j) grid[j - 1] = family.curve.maturity(j);
    const PathSet paths =
        simulate_wishart(std::get<WishartParams>(model), family.horizon(), mc, &grid);

    // exp{-phi - tr[psi Sigma]} tables per (k tenor, j grid point)
    struct Cell {
        double phi;
        Matrix psi;
        double m0;
    };
    std::vector<std::vector<Cell>> cells(n);  // cells[k-1][j-1], j <= k
    for (int k = 1; k <= n - 1; ++k) {
        cells[k - 1].resize(k);
        const double m0 = martingale_value(model, family, 0.0, k, model_sigma0(model));
        for (int j = 1; j <= k; ++j) {
            const RealCoeffs rc = psi_phi(model, family.horizon() - grid[j - 1], family.u(k));
            cells[k - 1][j - 1] = Cell{rc.phi, rc.psi.mat(), m0};
        }
    }

    double worst_z = 0.0;
    double min_m = std::numeric_limits<double>::infinity();
    const bool anti = paths.antithetic;
    const int n_samples = anti ? paths.n_paths() / 2 : paths.n_paths();
    for (int k = 1; k <= n - 1; ++k) {
        for (int j = 1; j <= k; ++j) {
            const Cell& cell = cells[k - 1][j - 1];
            double s = 0.0, ss = 0.0;
            for (int i = 0; i < n_samples; ++i) {
                double v = 0.0;
                for (int twin = 0; twin < (anti ? 2 : 1); ++twin) {
                    const int p = anti ? 2 * i + twin : i;
                    const double m =
                        std::exp(-cell.phi - paths.trace_with(p, j - 1, cell.psi));
                    min_m = std::min(min_m, m);
                    v += m;
                }
                v /= anti ? 2.0 : 1.0;
                s += v;
                ss += v * v;
            }
            const double mean = s / n_samples;
            const double se =
                std::sqrt(std::max(0.0, ss / n_samples - mean * mean) / n_samples);
            const double z = std::abs(mean - cell.m0) / std::max(se, 1e-300);
            worst_z = std::max(worst_z, z);
        }
    }
    c.require(worst_z <= 3.0, "martingale mean off by " + fmt(worst_z) + " SE (cap 3)");
    c.require(min_m > 1.0, "min M^u over paths = " + fmt(min_m) + " (must exceed 1)");
    c.note("worst |z| " + fmt(worst_z) + ", min M " + fmt(min_m));
    return c;
}

// --- criterion 4: curve fit -------------------------------------------------

Check curve_fit(const Model& model, const MartingaleFamily& family) {
    Check c;
    const int n = family.n_tenors();
    double worst = 0.0;
    for (int k = 1; k <= n - 1; ++k) {
        const auto f = laplace(model, family.horizon(), family.u(k));
        c.require(f.has_value(), "transform invalid at fitted u_k");
        if (f)
            worst = std::max(worst,
                             std::abs(*f - family.curve.ratio(k)) / family.curve.ratio(k));
        if (k < n - 1)
            c.require(family.xi(k) > family.xi(k + 1), "xi sequence not strictly decreasing");
    }
    c.require(worst <= 1e-12, "fit residual " + fmt(worst) + " > 1e-12");
    c.note("max relative residual " + fmt(worst));
    return c;
}

// --- criterion 5: caplets vs MC + limits -----------------------------------

Check caplet_pricing(const Model& model, const MartingaleFamily& family,
                     const FourierConfig& fourier, McConfig mc) {
    Check c;
    const std::vector<int> tenors{1, 4, 8};
    const std::vector<double> moneyness{0.98, 0.985, 0.99, 0.995, 1.0,
                                        1.005, 1.01, 1.015, 1.02};
    double worst_z = 0.0;
    for (size_t ti = 0; ti < tenors.size(); ++ti) {
        const int k = tenors[ti];
        const CapletPricer pricer(model, family, k, fourier);
        const double fwd = family.curve.forward_libor(k);
        mc.seed = 42 + 1000 * k;
        for (double mny : moneyness) {
            const double strike = fwd * mny;
            const double analytic = pricer.caplet(strike);
            const McEstimate est = mc_price(CapletSpec{k, strike, 1.0}, model, family, mc);
            const double z =
                std::abs(analytic - est.mean) / std::max(est.std_error, 1e-14);
            worst_z = std::max(worst_z, z);
        }
    }
    c.require(worst_z <= 3.0,
              "caplet Fourier vs MC off by " + fmt(worst_z) + " SE (cap 3)");

    // Deep in-the-money limit: KK -> 0+ recovers B(0,T_k) - KK B(0,T_{k+1}).
    {
        const int k = 4;
        const double kk = 1e-6;
        const double strike = (kk - 1.0) / family.curve.delta_t();
        const double price = CapletPricer(model, family, k, fourier).caplet(strike);
        const double limit =
            family.curve.bond(k) - kk * family.curve.bond(k + 1);
        const double rel = std::abs(price - limit) / limit;
        c.require(rel <= 1e-5, "deep-ITM limit off by " + fmt(rel) + " relative");
    }

    // Parity across the strike grid.
    {
        const int k = 4;
        const CapletPricer pricer(model, family, k, fourier);
        const double fwd = family.curve.forward_libor(k);
        double worst = 0.0;
        for (double mny : moneyness) {
            const double strike = fwd * mny;
            const double kk = 1.0 + family.curve.delta_t() * strike;
            const double lhs = pricer.caplet(strike) - pricer.floorlet(strike);
            const double rhs = family.curve.bond(k) - kk * family.curve.bond(k + 1);
            worst = std::max(worst, std::abs(lhs - rhs));
        }
        c.require(worst <= 1e-10, "parity residual " + fmt(worst) + " > 1e-10");
    }

    // Damping invariance.
    {
        double worst = 0.0;
        for (int k : tenors) {
            FourierConfig lo = fourier, hi = fourier;
            lo.alpha = 0.75;
            hi.alpha = 1.5;
            const double fwd = family.curve.forward_libor(k);
            const double p_lo = CapletPricer(model, family, k, lo).caplet(fwd);
            const double p_hi = CapletPricer(model, family, k, hi).caplet(fwd);
            worst = std::max(worst, std::abs(p_lo - p_hi) / std::max(p_lo, 1e-300));
        }
        c.require(worst <= 1e-7, "damping variance " + fmt(worst) + " > 1e-7 relative");
        c.note("worst MC |z| " + fmt(worst_z));
    }
    return c;
}

// --- criterion 6: swaptions --------------------------------------------------

Check swaption_pricing(const Model& model, const MartingaleFamily& family,
                       const FourierConfig& fourier, McConfig mc) {
    Check c;
    const double dt = family.curve.delta_t();
    auto par_rate = [&](int i, int m) {
        double annuity = 0.0;
        for (int j = i + 1; j <= m; ++j) annuity += dt * family.curve.bond(j);
        return (family.curve.bond(i) - family.curve.bond(m)) / annuity;
    };

    const std::vector<std::pair<int, int>> cells{{3, 6}, {3, 9}, {6, 12}};
    double worst_z = 0.0;
    for (size_t t = 0; t < cells.size(); ++t) {
        const auto [i, m] = cells[t];
        SwaptionSpec spec{i, m, par_rate(i, m), SwaptionSide::receiver};
        const double analytic = price_swaption(model, family, spec, 7);
        mc.seed = 1729 + 100 * i + m;
        const McEstimate est = mc_price(spec, model, family, mc);
        const double z = std::abs(analytic - est.mean) / std::max(est.std_error, 1e-14);
        worst_z = std::max(worst_z, z);
    }
    c.require(worst_z <= 3.0, "swaption Edgeworth vs MC off by " + fmt(worst_z) + " SE");

    // Single-period swaption == floorlet at the same strike.
    {
        const int i = 3;
        const double strike = par_rate(i, i + 1);
        SwaptionSpec spec{i, i + 1, strike, SwaptionSide::receiver};
        const double swp = price_swaption(model, family, spec, 7);
        const double flr =
            CapletPricer(model, family, i, fourier).floorlet(strike);
        const double rel = std::abs(swp - flr) / std::max(flr, 1e-300);
        c.require(rel <= 5e-4,
                  "single-period swaption vs floorlet off by " + fmt(rel) + " relative");
    }

    // Expansion-order convergence (decaying corrections).
    {
        SwaptionSpec spec{3, 9, par_rate(3, 9), SwaptionSide::receiver};
        const double p3 = price_swaption(model, family, spec, 3);
        const double p5 = price_swaption(model, family, spec, 5);
        const double p7 = price_swaption(model, family, spec, 7);
        c.require(std::abs(p7 - p5) <= std::abs(p5 - p3) + 1e-16,
                  "order corrections not decaying: |p7-p5|=" + fmt(std::abs(p7 - p5)) +
                      " vs |p5-p3|=" + fmt(std::abs(p5 - p3)));
        c.note("worst MC |z| " + fmt(worst_z) + ", |p7-p5| " + fmt(std::abs(p7 - p5)) +
               ", |p5-p3| " + fmt(std::abs(p5 - p3)));
    }
    return c;
}

// --- criterion 7: moment engine ----------------------------------------------

Check moment_engine(const Model& model, const MartingaleFamily& family, McConfig mc) {
    Check c;
    const double dt = family.curve.delta_t();
    const int i = 3, m = 9;
    double annuity = 0.0;
    for (int j = i + 1; j <= m; ++j) annuity += dt * family.curve.bond(j);
    const double par = (family.curve.bond(i) - family.curve.bond(m)) / annuity;
    const SwaptionSpec spec{i, m, par, SwaptionSide::receiver};

    double worst_z = 0.0;
    for (int measure : {i, m}) {
        const std::vector<double> analytic =
            coupon_bond_moments(model, family, spec, 4, measure);
        for (int q = 1; q <= 4; ++q) {
            mc.seed = 555 + 7 * measure + q;
            const McEstimate est =
                mc_coupon_bond_moment(model, family, spec, q, measure, mc);
            const double z =
                std::abs(analytic[q - 1] - est.mean) / std::max(est.std_error, 1e-14);
            worst_z = std::max(worst_z, z);
        }
    }
    c.require(worst_z <= 4.0, "moment vs MC off by " + fmt(worst_z) + " SE (cap 4)");
    c.note("worst |z| " + fmt(worst_z));
    return c;
}

// --- criterion 8: skew ---------------------------------------------------------

Check skew_range() {
    Check c;
    std::mt19937_64 rng(31337);
    std::normal_distribution<double> nd;
    double lo = 1.0, hi = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const int d = 2 + static_cast<int>(t % 3);
        const SymMat b = random_psd(rng, d, 0.5);
        const SymMat sigma = random_spd(rng, d, 1.0);
        Matrix qm(d, d);
        do {
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) qm(i, j) = nd(rng);
        } while (std::abs(qm.determinant()) < 1e-3);
        const double rho = skew_correlation(b, SquareMat(qm), sigma);
        lo = std::min(lo, rho);
        hi = std::max(hi, rho);
        if (!(rho > 0.0 && rho <= 1.0 + 1e-12)) {
            c.require(false, "skew outside (0,1]: " + fmt(rho));
            return c;
        }
    }
    std::uniform_real_distribution<double> up(0.1, 2.0);
    double worst_d1 = 0.0;
    for (int t = 0; t < 100; ++t) {
        const double rho = skew_correlation(SymMat::diagonal({up(rng)}),
                                            SquareMat::diagonal({up(rng)}),
                                            SymMat::diagonal({up(rng)}));
        worst_d1 = std::max(worst_d1, std::abs(rho - 1.0));
    }
    c.require(worst_d1 <= 1e-12, "d=1 skew differs from 1 by " + fmt(worst_d1));
    c.note("range [" + fmt(lo) + ", " + fmt(hi) + "], d=1 error " + fmt(worst_d1));
    return c;
}

// --- criterion 9: directional surface effects ---------------------------------

struct SmileSet {
    std::vector<double> vols;  // row-major over (tenor, strike)
    double ts_slope;           // ATM vol(32m) - ATM vol(4m)
};

// Surfaces for the parameter-impact experiments: the exponential-affine
// family (the u_k loadings) is fitted once to the reference model and held
// fixed while the dynamics are perturbed, and all variants are quoted
// against the reference curve's forwards on the reference strike grid.
// Quoting each variant at its own (endogenous) forward would fold the
// drift-level shift into the rate/price vol conversion and mask the
// volatility effect entirely at this parameter scale.
SmileSet smile_set(const Model& pricing_model, const MartingaleFamily& base_family,
                   const FourierConfig& fourier) {
    const TenorCurve& curve = base_family.curve;
    const std::vector<int> tenors{1, 8};
    const std::vector<double> moneyness{0.99, 0.9925, 0.995, 0.9975, 1.0,
                                        1.0025, 1.005, 1.0075, 1.01};
    auto robust_vol = [](double price, double fwd, double strike, double expiry, double df) {
        try {
            return black_implied_vol(price, fwd, strike, expiry, df).vol;
        } catch (const OutOfBandError&) {
            // A perturbed price can leave the reference-quote band; map it
            // to the directional extreme so sign comparisons stay valid.
            const double intrinsic = std::max(df * (fwd - strike), 0.0);
            return price <= intrinsic ? 0.0 : std::numeric_limits<double>::infinity();
        }
    };
    SmileSet out;
    std::vector<double> atm_vols;
    for (int k : tenors) {
        const CapletPricer pricer(pricing_model, base_family, k, fourier);
        const double fwd = curve.forward_libor(k);
        const double df = curve.delta_t() * curve.bond(k + 1);
        for (double mny : moneyness) {
            const double strike = fwd * mny;
            const double price = pricer.caplet(strike);
            out.vols.push_back(robust_vol(price, fwd, strike, curve.maturity(k), df));
        }
        // The ATM term structure is quoted at each model's own money, which
        // strips the drift-level shift out of the slope comparison.
        const double fwd_own = (pricer.model_forward_ratio() - 1.0) / curve.delta_t();
        const double atm_price = pricer.caplet(fwd_own);
        atm_vols.push_back(robust_vol(atm_price, fwd_own, fwd_own, curve.maturity(k), df));
    }
    out.ts_slope = atm_vols[1] - atm_vols[0];
    return out;
}

int count_greater(const std::vector<double>& a, const std::vector<double>& b) {
    int n = 0;
    for (size_t t = 0; t < a.size(); ++t) n += a[t] > b[t];
    return n;
}

Check directional_effects(const FourierConfig& fourier) {
    Check c;
    const TenorCurve curve = benchmark_config().curve;
    const SymMat sigma0 = SymMat::diagonal({3.75, 3.45});
    const SquareMat m0 = SquareMat::diagonal({-0.3125e-3, -0.5e-3});
    const SquareMat q0 = SquareMat::diagonal({0.034, 0.042});

    const Model base_model(WishartParams(sigma0, m0, q0, 3.0));
    const MartingaleFamily family = fit_term_structure(base_model, curve);
    const SmileSet base = smile_set(base_model, family, fourier);
    const int cells = static_cast<int>(base.vols.size());
    const int need = static_cast<int>(std::ceil(0.9 * cells));

    // (a) doubling kappa raises the surface
    {
        const SmileSet up =
            smile_set(Model(WishartParams(sigma0, m0, q0, 6.0)), family, fourier);
        const int n = count_greater(up.vols, base.vols);
        c.require(n >= need, "kappa doubling raised only " + std::to_string(n) + "/" +
                                 std::to_string(cells) + " cells");
    }
    // (b) scaling |M_11| by 1.8 lowers the surface
    {
        const SquareMat m2 = SquareMat::diagonal({-0.3125e-3 * 1.8, -0.5e-3});
        const SmileSet dn =
            smile_set(Model(WishartParams(sigma0, m2, q0, 3.0)), family, fourier);
        const int n = count_greater(base.vols, dn.vols);
        c.require(n >= need, "|M11| increase lowered only " + std::to_string(n) + "/" +
                                 std::to_string(cells) + " cells");
    }
    // (c) doubling Q_11 raises the surface and steepens the ATM term structure
    {
        const SquareMat q2 = SquareMat::diagonal({0.034 * 2.0, 0.042});
        const SmileSet up =
            smile_set(Model(WishartParams(sigma0, m0, q2, 3.0)), family, fourier);
        const int n = count_greater(up.vols, base.vols);
        c.require(n >= need, "Q11 doubling raised only " + std::to_string(n) + "/" +
                                 std::to_string(cells) + " cells");
        c.require(up.ts_slope > base.ts_slope, "Q11 doubling did not steepen the ATM term "
                                               "structure");
    }
    // (d) with Sigma0_12 = +2, the sign of M_12 sets the direction of the
    // vol change (Table-1 symmetry).
    {
        const SymMat sigma_full(Matrix{{3.75, 2.0}, {2.0, 3.45}});
        const Model mid_model(WishartParams(sigma_full, m0, q0, 3.0));
        const MartingaleFamily fam_full = fit_term_structure(mid_model, curve);
        const SmileSet mid = smile_set(mid_model, fam_full, fourier);
        const SquareMat m_pos(Matrix{{-0.3125e-3, 1e-3}, {0.0, -0.5e-3}});
        const SquareMat m_neg(Matrix{{-0.3125e-3, -1e-3}, {0.0, -0.5e-3}});
        const SmileSet up =
            smile_set(Model(WishartParams(sigma_full, m_pos, q0, 3.0)), fam_full, fourier);
        const SmileSet dn =
            smile_set(Model(WishartParams(sigma_full, m_neg, q0, 3.0)), fam_full, fourier);
        const int n_up = count_greater(up.vols, mid.vols);
        const int n_dn = count_greater(mid.vols, dn.vols);
        c.require(n_up >= need, "M12 > 0 raised only " + std::to_string(n_up) + "/" +
                                    std::to_string(cells) + " cells");
        c.require(n_dn >= need, "M12 < 0 lowered only " + std::to_string(n_dn) + "/" +
                                    std::to_string(cells) + " cells");
    }
    return c;
}

// --- criterion 10: jump model -----------------------------------------------

Check jump_laplace(McConfig mc) {
    Check c;
    const JumpOUParams params = section6_params();
    const Model model(params);

    const auto at_zero = laplace(model, 1.0, SymMat::zero(2));
    c.require(at_zero.has_value() && *at_zero == 1.0, "Laplace at u=0 is not exactly 1");

    const std::vector<SymMat> points{
        SymMat::diagonal({0.05, 0.05}), SymMat::diagonal({0.1, 0.1}),
        SymMat::diagonal({0.2, 0.2}), SymMat(Matrix{{0.1, 0.02}, {0.02, 0.05}}),
        SymMat::diagonal({0.02, 0.3})};
    double worst_z = 0.0;
    int idx = 0;
    for (const SymMat& u : points) {
        mc.seed = 9000 + idx++;
        const auto analytic = laplace(model, 1.0, u);
        c.require(analytic.has_value(), "jump transform invalid at test point");
        const McEstimate est = mc_laplace(model, 1.0, u, mc);
        const double z = std::abs(*analytic - est.mean) / std::max(est.std_error, 1e-14);
        worst_z = std::max(worst_z, z);
    }
    c.require(worst_z <= 3.0, "jump Laplace vs MC off by " + fmt(worst_z) + " SE");
    c.note("worst |z| " + fmt(worst_z));
    return c;
}

// --- criterion 11: Lyapunov ----------------------------------------------------

Check lyapunov_benchmark() {
    Check c;
    const SquareMat m = SquareMat::diagonal({-0.3125e-3, -0.5e-3});
    const Matrix q = SquareMat::diagonal({0.034, 0.042}).mat();
    const double kappa = 3.0;
    const SymMat cmat(Matrix(kappa * q.transpose() * q));

    const SymMat inf = solve_lyapunov(m, cmat);
    const Matrix residual =
        m.mat() * inf.mat() + inf.mat() * m.mat().transpose() + cmat.mat();
    const double rel = residual.norm() / cmat.mat().norm();
    c.require(rel <= 1e-12, "Lyapunov residual " + fmt(rel) + " > 1e-12");

    double worst = 0.0;
    for (int i = 0; i < 2; ++i) {
        const double closed = -kappa * q(i, i) * q(i, i) / (2.0 * m(i, i));
        worst = std::max(worst, std::abs(inf(i, i) - closed) / closed);
    }
    c.require(worst <= 1e-14, "diagonal closed form off by " + fmt(worst));
    c.note("residual " + fmt(rel) + ", diagonal error " + fmt(worst));
    return c;
}

}  // namespace

bool Report::all_pass() const {
    for (const auto& r : results)
        if (!r.pass) return false;
    return true;
}

Report run_acceptance(Suite suite, std::ostream& log) {
    const ModelConfig cfg = benchmark_config();
    const double scale = suite == Suite::quick ? 0.1 : 1.0;

    McConfig mc = cfg.mc;
    mc.n_paths = std::max(1000, static_cast<int>(cfg.mc.n_paths * scale));
    McConfig mc_large = mc;
    mc_large.n_paths = std::max(1000, static_cast<int>(500000 * scale));
    McConfig mc_jump = mc;
    mc_jump.n_paths = std::max(1000, static_cast<int>(100000 * scale));

    const MartingaleFamily family = fit_term_structure(cfg.model, cfg.curve);

    Report report;
    auto run = [&](const std::string& name, auto&& fn) {
        const auto start = std::chrono::steady_clock::now();
        CriterionResult r;
        r.name = name;
        try {
            Check c = fn();
            r.pass = c.pass;
            r.details = c.details.str();
        } catch (const std::exception& e) {
            r.pass = false;
            r.details = std::string("exception: ") + e.what();
        }
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                        .count();
        log << (r.pass ? "PASS" : "FAIL") << "  " << name;
        if (!r.details.empty()) log << "  [" << r.details << "]";
        log << "  (" << fmt(r.seconds) << "s)\n";
        log.flush();
        report.results.push_back(std::move(r));
    };

    const auto& wishart = std::get<WishartParams>(cfg.model);
    run("1 transform closed form vs RK4", [&] { return transform_correctness(wishart); });
    run("2 flow property (diffusion + jump)", [&] {
        Check a = flow_property(cfg.model, "wishart");
        Check b = flow_property(Model(section6_params()), "jump");
        Check c;
        c.pass = a.pass && b.pass;
        c.details << a.details.str();
        if (!b.details.str().empty()) {
            if (!c.details.str().empty()) c.details << "; ";
            c.details << b.details.str();
        }
        return c;
    });
    run("3 martingale mean + positivity",
        [&] { return martingale_positivity(cfg.model, family, mc); });
    run("4 curve fit", [&] { return curve_fit(cfg.model, family); });
    run("5 caplet pricing",
        [&] { return caplet_pricing(cfg.model, family, cfg.fourier, mc); });
    run("6 swaption pricing",
        [&] { return swaption_pricing(cfg.model, family, cfg.fourier, mc_large); });
    run("7 coupon-bond moments", [&] { return moment_engine(cfg.model, family, mc); });
    run("8 skew range", [&] { return skew_range(); });
    run("9 directional surface effects", [&] { return directional_effects(cfg.fourier); });
    run("10 jump-model Laplace", [&] { return jump_laplace(mc_jump); });
    run("11 Lyapunov long-run matrix", [&] { return lyapunov_benchmark(); });
    return report;
}

}  // namespace wlm::verify
