#include "wlm/oracle.hpp"

#include <doctest.h>

using namespace wlm;

namespace {

WishartParams benchmark() {
    return WishartParams(SymMat::diagonal({3.75, 3.45}),
                         SquareMat::diagonal({-0.3125e-3, -0.5e-3}),
                         SquareMat::diagonal({0.034, 0.042}), 3.0);
}

const Model& model() {
    static Model m(benchmark());
    return m;
}

const MartingaleFamily& family() {
    static MartingaleFamily fam = fit_term_structure(
        model(), TenorCurve::from_libor_rates(1.0 / 3.0, std::vector<double>(12, 0.05)));
    return fam;
}

JumpOUParams section6() {
    return JumpOUParams(SymMat(Matrix{{1.875, 0.6}, {0.6, 1.275}}),
                        SquareMat::diagonal({-0.055, -0.176}), 0.1,
                        JumpLaw::wishart(3.1, SymMat::diagonal({0.27, 0.05})));
}

McConfig quick_mc(int paths = 20000, std::uint64_t seed = 99) {
    McConfig cfg;
    cfg.n_paths = paths;
    cfg.seed = seed;
    cfg.dt = 1.0 / 24.0;
    return cfg;
}

// Composite-Simpson quadrature of int_0^t e^{Ms} C e^{M^T s} ds, the
// independent oracle for the first-moment integral.
Matrix moment_integral(const Matrix& m, const Matrix& c, double t, int n = 2000) {
    Matrix sum = Matrix::Zero(m.rows(), m.cols());
    const double h = t / n;
    for (int s = 0; s <= n; ++s) {
        const Matrix e = expm(Matrix(s * h * m));
        const double w = (s == 0 || s == n) ? 1.0 : (s % 2 == 1 ? 4.0 : 2.0);
        sum += w * e * c * e.transpose();
    }
    return sum * h / 3.0;
}

}  // namespace

TEST_CASE("config validation") {
    McConfig bad = quick_mc();
    bad.n_paths = 100;
    CHECK_THROWS_AS(simulate_wishart(benchmark(), 1.0, bad), ConfigError);

    WishartParams frac(SymMat::diagonal({3.75, 3.45}),
                       SquareMat::diagonal({-0.3125e-3, -0.5e-3}),
                       SquareMat::diagonal({0.034, 0.042}), 3.5);
    CHECK_THROWS_AS(simulate_wishart(frac, 1.0, quick_mc(1000)), ConfigError);

    JumpOUParams nc(SymMat::identity(2), SquareMat::diagonal({-0.1, -0.1}), 0.5,
                    JumpLaw::noncentral_wishart(3.5, SymMat::identity(2),
                                                SquareMat::identity(2)));
    CHECK_THROWS_AS(simulate_jump_ou(nc, 1.0, quick_mc(1000)), UnsupportedLawError);
}

TEST_CASE("seed determinism") {
    const McEstimate a = mc_laplace(model(), 1.0, SymMat::diagonal({0.1, 0.1}), quick_mc(2000));
    const McEstimate b = mc_laplace(model(), 1.0, SymMat::diagonal({0.1, 0.1}), quick_mc(2000));
    CHECK(a.mean == b.mean);
    CHECK(a.std_error == b.std_error);
    const McEstimate c =
        mc_laplace(model(), 1.0, SymMat::diagonal({0.1, 0.1}), quick_mc(2000, 12345));
    CHECK(a.mean != c.mean);
}

TEST_CASE("near-zero volatility reduces to the deterministic flow") {
    const WishartParams p(SymMat::diagonal({3.75, 3.45}),
                          SquareMat::diagonal({-0.2, -0.3}),
                          SquareMat::diagonal({1e-10, 1e-10}), 3.0);
    const double t = 1.5;
    const std::vector<double> grid{t};
    const PathSet paths = simulate_wishart(p, t, quick_mc(1000), &grid);
    const Matrix flow = expm(Matrix(t * p.m.mat())) * p.sigma0.mat() *
                        expm(Matrix(t * p.m.mat())).transpose();
    CHECK((paths.sigma(0, 0) - flow).cwiseAbs().maxCoeff() <= 1e-7);
    CHECK((paths.sigma(500, 0) - flow).cwiseAbs().maxCoeff() <= 1e-7);
}

TEST_CASE("exact scheme matches the closed-form first moment") {
    // speed up the mean-reversion so the drift integral actually matters
    const WishartParams p(SymMat::diagonal({2.0, 1.5}), SquareMat::diagonal({-0.4, -0.7}),
                          SquareMat(Matrix{{0.25, 0.05}, {0.0, 0.2}}), 3.0);
    const double t = 1.25;
    const std::vector<double> grid{t};
    const PathSet paths = simulate_wishart(p, t, quick_mc(40000, 7), &grid);

    const Matrix qtq = p.q.mat().transpose() * p.q.mat();
    const Matrix expect = expm(Matrix(t * p.m.mat())) * p.sigma0.mat() *
                              expm(Matrix(t * p.m.mat())).transpose() +
                          p.kappa * moment_integral(p.m.mat(), qtq, t);

    Matrix mean = Matrix::Zero(2, 2), sq = Matrix::Zero(2, 2);
    for (int i = 0; i < paths.n_paths(); ++i) {
        const Matrix s = paths.sigma(i, 0);
        mean += s;
        sq += s.cwiseProduct(s);
    }
    mean /= paths.n_paths();
    sq /= paths.n_paths();
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            const double se = std::sqrt(
                std::max(0.0, sq(i, j) - mean(i, j) * mean(i, j)) / paths.n_paths());
            CHECK(std::abs(mean(i, j) - expect(i, j)) <= 3.5 * se);
        }
}

TEST_CASE("exact scheme keeps paths strictly positive definite") {
    std::vector<double> grid;
    for (int j = 1; j <= 8; ++j) grid.push_back(j * 0.25);
    const PathSet paths = simulate_wishart(benchmark(), 2.0, quick_mc(2000), &grid);
    double min_eig = 1e300;
    for (int p = 0; p < paths.n_paths(); ++p)
        for (int s = 0; s < 8; ++s) {
            Eigen::SelfAdjointEigenSolver<Matrix> es(paths.sigma(p, s),
                                                     Eigen::EigenvaluesOnly);
            min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
        }
    CHECK(min_eig > 0.0);
}

TEST_CASE("MC Laplace transform agrees with the affine module") {
    const McEstimate est =
        mc_laplace(model(), 1.0, SymMat::diagonal({0.1, 0.1}), quick_mc(50000, 3));
    const double analytic = *laplace(model(), 1.0, SymMat::diagonal({0.1, 0.1}));
    CHECK(std::abs(est.mean - analytic) <= 3.0 * est.std_error);

    // deeper argument as well
    const McEstimate est2 =
        mc_laplace(model(), 0.5, SymMat::diagonal({0.2, 0.2}), quick_mc(50000, 4));
    const double analytic2 = *laplace(model(), 0.5, SymMat::diagonal({0.2, 0.2}));
    CHECK(std::abs(est2.mean - analytic2) <= 3.0 * est2.std_error);
}

TEST_CASE("euler fallback: biased flag and agreement with the exact scheme") {
    McConfig cfg = quick_mc(30000, 11);
    cfg.scheme = McScheme::euler_projected;
    cfg.dt = 1.0 / 32.0;
    const std::vector<double> grid{1.0};
    const PathSet euler = simulate_wishart(benchmark(), 1.0, cfg, &grid);
    CHECK(euler.biased);

    const SymMat u = SymMat::diagonal({0.1, 0.1});
    double acc = 0.0, acc2 = 0.0;
    for (int p = 0; p < euler.n_paths(); ++p) {
        const double v = std::exp(-euler.trace_with(p, 0, u.mat()));
        acc += v;
        acc2 += v * v;
    }
    const double mean = acc / euler.n_paths();
    const double se = std::sqrt((acc2 / euler.n_paths() - mean * mean) / euler.n_paths());
    const double analytic = *laplace(model(), 1.0, u);
    CHECK(std::abs(mean - analytic) <= 4.0 * se + 1e-4);  // scheme bias allowance

    // Richardson-style step check: halving dt moves the estimate by less
    // than the stated allowance.
    cfg.dt = 1.0 / 64.0;
    cfg.seed = 12;
    const PathSet finer = simulate_wishart(benchmark(), 1.0, cfg, &grid);
    double acc_f = 0.0;
    for (int p = 0; p < finer.n_paths(); ++p)
        acc_f += std::exp(-finer.trace_with(p, 0, u.mat()));
    CHECK(std::abs(acc_f / finer.n_paths() - mean) <= 4.0 * se + 1e-4);
}

TEST_CASE("jump process: zero intensity limit is the deterministic flow") {
    const JumpOUParams p(SymMat::diagonal({2.0, 1.0}), SquareMat::diagonal({-0.2, -0.1}),
                         1e-12, JumpLaw::wishart(3.0, SymMat::identity(2)));
    const std::vector<double> grid{0.7};
    const PathSet paths = simulate_jump_ou(p, 0.7, quick_mc(1000), &grid);
    const Matrix flow = expm(Matrix(0.7 * p.m.mat())) * p.sigma0.mat() *
                        expm(Matrix(0.7 * p.m.mat())).transpose();
    CHECK((paths.sigma(123, 0) - flow).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("jump process first moment (Poisson rate and Wishart jump mean)") {
    const JumpOUParams p = section6();
    const double t = 2.0;
    const std::vector<double> grid{t};
    const PathSet paths = simulate_jump_ou(p, t, quick_mc(60000, 17), &grid);

    // E[Sigma_t] = flow + lambda int_0^t e^{M(t-s)} E[J] e^{M^T(t-s)} ds,
    // E[J] = n * scale for the Wishart law.
    const Matrix ej = p.law.n * p.law.scale.mat();
    const Matrix expect = expm(Matrix(t * p.m.mat())) * p.sigma0.mat() *
                              expm(Matrix(t * p.m.mat())).transpose() +
                          p.lambda * moment_integral(p.m.mat(), ej, t);

    Matrix mean = Matrix::Zero(2, 2), sq = Matrix::Zero(2, 2);
    for (int i = 0; i < paths.n_paths(); ++i) {
        const Matrix s = paths.sigma(i, 0);
        mean += s;
        sq += s.cwiseProduct(s);
    }
    mean /= paths.n_paths();
    sq /= paths.n_paths();
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            const double se = std::sqrt(
                std::max(0.0, sq(i, j) - mean(i, j) * mean(i, j)) / paths.n_paths());
            CHECK(std::abs(mean(i, j) - expect(i, j)) <= 3.5 * se);
        }
}

TEST_CASE("jump-model Laplace transform vs MC, central and noncentral") {
    const McEstimate est =
        mc_laplace(Model(section6()), 1.0, SymMat::diagonal({0.05, 0.05}), quick_mc(50000, 5));
    const double analytic = *laplace(Model(section6()), 1.0, SymMat::diagonal({0.05, 0.05}));
    CHECK(std::abs(est.mean - analytic) <= 3.0 * est.std_error);

    // integer-n noncentral law (exactly sampleable)
    const JumpOUParams nc(SymMat::identity(2), SquareMat::diagonal({-0.15, -0.25}), 0.6,
                          JumpLaw::noncentral_wishart(3.0, SymMat::diagonal({0.15, 0.08}),
                                                      SquareMat(Matrix{{0.4, 0.1},
                                                                       {-0.2, 0.3}})));
    const SymMat u = SymMat::diagonal({0.08, 0.12});
    const McEstimate est_nc = mc_laplace(Model(nc), 1.3, u, quick_mc(60000, 6));
    const double analytic_nc = *laplace(Model(nc), 1.3, u);
    CHECK(std::abs(est_nc.mean - analytic_nc) <= 3.0 * est_nc.std_error);
}

TEST_CASE("martingale family mean under the terminal measure") {
    std::vector<double> grid;
    for (int j = 1; j <= 12; ++j) grid.push_back(family().curve.maturity(j));
    const PathSet paths =
        simulate_wishart(benchmark(), family().horizon(), quick_mc(30000, 21), &grid);

    for (int k : {2, 7, 11}) {
        const double m0 = martingale_value(model(), family(), 0.0, k, model_sigma0(model()));
        const int j = k;  // check at the latest usable grid date
        const RealCoeffs rc =
            psi_phi(model(), family().horizon() - grid[j - 1], family().u(k));
        double acc = 0.0, acc2 = 0.0;
        for (int p = 0; p < paths.n_paths(); ++p) {
            const double v = std::exp(-rc.phi - paths.trace_with(p, j - 1, rc.psi.mat()));
            CHECK(v > 1.0);
            acc += v;
            acc2 += v * v;
        }
        const double mean = acc / paths.n_paths();
        const double se =
            std::sqrt((acc2 / paths.n_paths() - mean * mean) / paths.n_paths());
        CHECK(std::abs(mean - m0) <= 3.5 * se);
    }
}

TEST_CASE("radon-nikodym weights average to one") {
    const double t = family().curve.maturity(5);
    const std::vector<double> grid{t};
    const PathSet paths = simulate_wishart(benchmark(), t, quick_mc(30000, 31), &grid);
    const double tau = family().horizon() - t;
    for (int k : {5, 9}) {
        const RealCoeffs rc = psi_phi(model(), tau, family().u(k));
        const double m0 = martingale_value(model(), family(), 0.0, k, model_sigma0(model()));
        double acc = 0.0, acc2 = 0.0;
        for (int p = 0; p < paths.n_paths(); ++p) {
            const double v =
                std::exp(-rc.phi - paths.trace_with(p, 0, rc.psi.mat())) / m0;
            acc += v;
            acc2 += v * v;
        }
        const double mean = acc / paths.n_paths();
        const double se =
            std::sqrt((acc2 / paths.n_paths() - mean * mean) / paths.n_paths());
        CHECK(std::abs(mean - 1.0) <= 3.5 * se);
    }
}

TEST_CASE("caplet MC price agrees with the Fourier price") {
    const double fwd = family().curve.forward_libor(2);
    const McEstimate est =
        mc_price(CapletSpec{2, fwd, 1.0}, model(), family(), quick_mc(60000, 41));
    const double analytic = price_caplet(model(), family(), CapletSpec{2, fwd},
                                         FourierConfig{1.0, 1 << 16, 30000.0});
    CHECK(std::abs(est.mean - analytic) <= 3.0 * est.std_error);

    // floorlet via parity agrees with direct MC of the put payoff
    const McEstimate flr =
        mc_price(FloorletSpec{2, fwd, 1.0}, model(), family(), quick_mc(60000, 43));
    const double analytic_flr = price_floorlet(model(), family(), CapletSpec{2, fwd},
                                               FourierConfig{1.0, 1 << 16, 30000.0});
    CHECK(std::abs(flr.mean - analytic_flr) <= 3.0 * flr.std_error);
}

TEST_CASE("cap MC price sums caplets") {
    const McEstimate cap =
        mc_price(CapSpec{2, 4, 0.05, 1.0}, model(), family(), quick_mc(30000, 51));
    double analytic = 0.0;
    for (int k = 2; k <= 4; ++k)
        analytic += price_caplet(model(), family(), CapletSpec{k, 0.05},
                                 FourierConfig{1.0, 1 << 16, 30000.0});
    CHECK(std::abs(cap.mean - analytic) <= 3.0 * cap.std_error);
}

TEST_CASE("zero-volatility caplet collapses to the intrinsic value") {
    const WishartParams p(SymMat::diagonal({3.75, 3.45}),
                          SquareMat::diagonal({-0.3125e-3, -0.5e-3}),
                          SquareMat::diagonal({1e-9, 1e-9}), 3.0);
    const Model m(p);
    const MartingaleFamily fam = fit_term_structure(m, family().curve);
    const double fwd = fam.curve.forward_libor(3);
    const double strike = fwd * 0.99;
    const McEstimate est = mc_price(CapletSpec{3, strike, 1.0}, m, fam, quick_mc(2000, 61));
    const double kk = 1.0 + fam.curve.delta_t() * strike;
    const double intrinsic =
        fam.curve.bond(3 + 1) * std::max(fam.curve.forward_ratio(3) - kk, 0.0);
    CHECK(est.mean == doctest::Approx(intrinsic).epsilon(1e-6));
    CHECK(est.std_error <= 1e-9);
}

TEST_CASE("swaption MC price agrees with the Edgeworth price") {
    const SwaptionSpec spec{3, 6, 0.05, SwaptionSide::receiver};
    const McEstimate est = mc_price(spec, model(), family(), quick_mc(60000, 71));
    const double analytic = price_swaption(model(), family(), spec, 7);
    CHECK(std::abs(est.mean - analytic) <= 3.0 * est.std_error);

    const SwaptionSpec payer{3, 6, 0.05, SwaptionSide::payer};
    const McEstimate estp = mc_price(payer, model(), family(), quick_mc(60000, 73));
    const double analyticp = price_swaption(model(), family(), payer, 7);
    CHECK(std::abs(estp.mean - analyticp) <= 3.0 * estp.std_error);
}

TEST_CASE("coupon-bond moments vs MC") {
    const SwaptionSpec spec{3, 6, 0.05, SwaptionSide::receiver};
    for (int q = 1; q <= 3; ++q) {
        const McEstimate est =
            mc_coupon_bond_moment(model(), family(), spec, q, 3, quick_mc(40000, 80 + q));
        const double analytic = coupon_bond_moment(model(), family(), spec, q, 3);
        CHECK(std::abs(est.mean - analytic) <= 4.0 * est.std_error);
    }
}

TEST_CASE("dimension generality: d = 1 and d = 3 price end to end") {
    struct Case {
        const char* label;
        Model model;
    };
    Matrix s0(3, 3);
    s0 << 2.0, 0.3, 0.1, 0.3, 1.5, 0.2, 0.1, 0.2, 1.8;
    Matrix m3 = -0.2 * Matrix::Identity(3, 3);
    m3(0, 1) = 0.05;
    Matrix q3(3, 3);
    q3 << 0.08, 0.01, 0.0, 0.0, 0.06, 0.01, 0.0, 0.0, 0.07;
    const std::vector<Case> cases{
        {"d=1", Model(WishartParams(SymMat::diagonal({0.04}), SquareMat::diagonal({-0.5}),
                                    SquareMat::diagonal({0.15}), 2.0))},
        {"d=3", Model(WishartParams(SymMat(s0), SquareMat(m3), SquareMat(q3), 4.0))}};
    for (const auto& c : cases) {
        CAPTURE(c.label);
        const TenorCurve curve =
            TenorCurve::from_libor_rates(0.5, std::vector<double>(6, 0.04));
        const MartingaleFamily fam = fit_term_structure(c.model, curve);
        McConfig mc = quick_mc(30000, 7);
        mc.dt = 0.5 / 8.0;

        const double fwd = curve.forward_libor(2);
        const double caplet = price_caplet(c.model, fam, CapletSpec{2, fwd},
                                           FourierConfig{1.0, 1 << 16, 30000.0});
        const McEstimate mce = mc_price(CapletSpec{2, fwd, 1.0}, c.model, fam, mc);
        CHECK(std::abs(caplet - mce.mean) <= 3.0 * mce.std_error);

        double annuity = 0.0;
        for (int j = 3; j <= 6; ++j) annuity += 0.5 * curve.bond(j);
        const double par = (curve.bond(2) - curve.bond(6)) / annuity;
        const SwaptionSpec sw{2, 6, par, SwaptionSide::receiver};
        const double swp = price_swaption(c.model, fam, sw, 7);
        const McEstimate mcs = mc_price(sw, c.model, fam, mc);
        CHECK(std::abs(swp - mcs.mean) <= 3.0 * mcs.std_error);
    }
}

TEST_CASE("noncentral jump law prices through the full stack") {
    const JumpOUParams nc(SymMat(Matrix{{1.2, 0.2}, {0.2, 0.9}}),
                          SquareMat::diagonal({-0.3, -0.4}), 0.8,
                          JumpLaw::noncentral_wishart(3.0, SymMat::diagonal({0.06, 0.04}),
                                                      SquareMat(Matrix{{0.2, 0.05},
                                                                       {-0.1, 0.15}})));
    const Model model_nc(nc);
    const TenorCurve curve = TenorCurve::from_libor_rates(0.5, std::vector<double>(6, 0.04));
    const MartingaleFamily fam = fit_term_structure(model_nc, curve);
    McConfig mc = quick_mc(30000, 7);
    mc.dt = 0.5 / 8.0;

    const double fwd = curve.forward_libor(2);
    const double caplet = price_caplet(model_nc, fam, CapletSpec{2, fwd},
                                       FourierConfig{1.0, 1 << 16, 30000.0});
    const McEstimate mce = mc_price(CapletSpec{2, fwd, 1.0}, model_nc, fam, mc);
    CHECK(std::abs(caplet - mce.mean) <= 3.0 * mce.std_error);

    double annuity = 0.0;
    for (int j = 3; j <= 6; ++j) annuity += 0.5 * curve.bond(j);
    const double par = (curve.bond(2) - curve.bond(6)) / annuity;
    const SwaptionSpec sw{2, 6, par, SwaptionSide::receiver};
    const double swp = price_swaption(model_nc, fam, sw, 7);
    const McEstimate mcs = mc_price(sw, model_nc, fam, mc);
    CHECK(std::abs(swp - mcs.mean) <= 3.0 * mcs.std_error);
}

TEST_CASE("antithetic variates do not increase the variance") {
    McConfig plain = quick_mc(40000, 91);
    plain.antithetic = false;
    McConfig anti = quick_mc(40000, 91);
    anti.antithetic = true;
    const double fwd = family().curve.forward_libor(2);
    const McEstimate p = mc_price(CapletSpec{2, fwd, 1.0}, model(), family(), plain);
    const McEstimate a = mc_price(CapletSpec{2, fwd, 1.0}, model(), family(), anti);
    CHECK(a.std_error <= p.std_error * 1.05);  // small slack for sampling noise

    const McEstimate ps =
        mc_price(SwaptionSpec{3, 6, 0.05, SwaptionSide::receiver}, model(), family(), plain);
    const McEstimate as =
        mc_price(SwaptionSpec{3, 6, 0.05, SwaptionSide::receiver}, model(), family(), anti);
    CHECK(as.std_error <= ps.std_error * 1.05);
}
