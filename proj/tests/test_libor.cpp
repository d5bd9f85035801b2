#include "wlm/libor.hpp"

#include <doctest.h>

#include <random>

using namespace wlm;

namespace {

std::mt19937_64 rng(4242);

SymMat random_spd(int d, double scale) {
    std::normal_distribution<double> nd;
    Matrix a(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) a(i, j) = nd(rng);
    return SymMat(Matrix(scale * (a.transpose() * a + 0.05 * Matrix::Identity(d, d))));
}

Model benchmark() {
    return Model(WishartParams(SymMat::diagonal({3.75, 3.45}),
                               SquareMat::diagonal({-0.3125e-3, -0.5e-3}),
                               SquareMat::diagonal({0.034, 0.042}), 3.0));
}

TenorCurve flat_curve(int n = 12, double rate = 0.05, double dt = 1.0 / 3.0) {
    return TenorCurve::from_libor_rates(dt, std::vector<double>(n, rate));
}

}  // namespace

TEST_CASE("TenorCurve construction and conversions") {
    const TenorCurve c = flat_curve();
    CHECK(c.n_tenors() == 12);
    CHECK(c.ratio(12) == 1.0);
    const double growth = 1.0 + 0.05 / 3.0;
    for (int k = 1; k <= 12; ++k)
        CHECK(c.ratio(k) == doctest::Approx(std::pow(growth, 12 - k)).epsilon(1e-14));
    for (int k = 1; k <= 11; ++k)
        CHECK(c.forward_libor(k) == doctest::Approx(0.05).epsilon(1e-13));
    CHECK(c.bond(0) == 1.0);
    CHECK(c.bond(12) == doctest::Approx(std::pow(growth, -12)).epsilon(1e-13));

    // violated ordering (non-increasing ratios) is rejected at construction
    CHECK_THROWS_AS(TenorCurve::from_bond_ratios(0.25, {1.0 + 1e-12, 1.0 + 1e-12, 1.0}, 0.9),
                    std::invalid_argument);
    CHECK_THROWS_AS(TenorCurve::from_bond_ratios(0.25, {1.2, 1.1, 0.99}, 0.9),
                    std::invalid_argument);
    CHECK_THROWS_AS(TenorCurve::from_libor_rates(0.25, {0.05, -0.01}), std::invalid_argument);
}

TEST_CASE("fit reproduces the initial curve") {
    const Model model = benchmark();
    const TenorCurve curve = flat_curve();
    const MartingaleFamily fam = fit_term_structure(model, curve);

    for (int k = 1; k <= 11; ++k) {
        const auto f = laplace(model, fam.horizon(), fam.u(k));
        REQUIRE(f.has_value());
        CHECK(std::abs(*f - curve.ratio(k)) / curve.ratio(k) <= 1e-12);
        if (k < 11) CHECK(fam.xi(k) > fam.xi(k + 1));
    }
    CHECK(fam.xi(12) == 0.0);
    CHECK(fam.xi(1) < 1.0);

    // t = 0 martingale values hit the quoted ratios
    for (int k = 1; k <= 12; ++k)
        CHECK(martingale_value(model, fam, 0.0, k, model_sigma0(model)) ==
              doctest::Approx(curve.ratio(k)).epsilon(1e-10));
}

TEST_CASE("fit is idempotent in the returned direction") {
    const Model model = benchmark();
    const TenorCurve curve = flat_curve();
    const MartingaleFamily a = fit_term_structure(model, curve);
    const MartingaleFamily b = fit_term_structure(model, curve, a.base_direction);
    for (int k = 1; k <= 12; ++k)
        CHECK(std::abs(a.xi(k) - b.xi(k)) <= 1e-12);
}

TEST_CASE("two-tenor fit agrees with a direct bisection target") {
    const Model model = benchmark();
    const TenorCurve curve = TenorCurve::from_libor_rates(0.5, {0.04, 0.04});
    const MartingaleFamily fam = fit_term_structure(model, curve);
    const auto f = laplace(model, fam.horizon(), fam.u(1));
    REQUIRE(f.has_value());
    CHECK(*f == doctest::Approx(curve.ratio(1)).epsilon(1e-12));
}

TEST_CASE("insufficient mass reporting") {
    const Model model = benchmark();
    const TenorCurve curve = flat_curve();
    FitOptions opts;
    opts.auto_scale = false;
    opts.initial_scale = 1e-4;
    CHECK_THROWS_AS(fit_term_structure(model, curve, opts), InsufficientMassError);
    CHECK_THROWS_AS(
        fit_term_structure(model, curve, SymMat::diagonal({-1e-4, -1e-4}), opts),
        InsufficientMassError);
    CHECK_THROWS_AS(fit_term_structure(model, curve, SymMat::diagonal({0.1, -0.1})),
                    std::invalid_argument);
}

TEST_CASE("martingale_value terminal and boundary behavior") {
    const Model model = benchmark();
    const MartingaleFamily fam = fit_term_structure(model, flat_curve());
    const SymMat sigma = random_spd(2, 2.0);

    CHECK(martingale_value(model, fam, 1.0, 12, sigma) == 1.0);  // u_N = 0

    // at t = T_N: psi_0(u) = u, phi_0 = 0
    const double m = martingale_value(model, fam, fam.horizon(), 3, sigma);
    CHECK(m == doctest::Approx(std::exp(-(fam.u(3).mat() * sigma.mat()).trace()))
                   .epsilon(1e-13));
    CHECK(m > 1.0);  // u_k negative definite

    CHECK_THROWS_AS(martingale_value(model, fam, -0.1, 3, sigma), InvalidTimeError);
    CHECK_THROWS_AS(martingale_value(model, fam, 0.5, 3, SymMat::diagonal({1.0, -1.0})),
                    NotSpdError);
}

TEST_CASE("forward coefficients: identities and positivity") {
    const Model model = benchmark();
    const MartingaleFamily fam = fit_term_structure(model, flat_curve());

    // T_N - t = 0 collapses to the transform initial condition
    const ForwardCoeffs at_end = forward_coeffs(model, fam, 4, fam.horizon());
    CHECK(at_end.a_k == 0.0);
    CHECK((at_end.b_k.mat() - (fam.u(5).mat() - fam.u(4).mat())).norm() <= 1e-15);
    CHECK(min_eigenvalue(at_end.b_k) > 0.0);

    // consistency with the fitted curve at t = 0
    for (int k = 1; k <= 11; ++k) {
        const ForwardCoeffs fc = forward_coeffs(model, fam, k, 0.0);
        const double fwd =
            std::exp(fc.a_k + (fc.b_k.mat() * model_sigma0(model).mat()).trace());
        CHECK(fwd == doctest::Approx(fam.curve.forward_ratio(k)).epsilon(1e-10));
        CHECK(min_eigenvalue(fc.b_k) >= -1e-12);
    }
}

TEST_CASE("degenerate family gives zero rates") {
    const Model model = benchmark();
    MartingaleFamily fam = fit_term_structure(model, flat_curve());
    // xi_k = xi_{k+1}: A = 0, B = 0, forward price 1, rate 0
    fam.xis[3] = fam.xis[4];
    fam.u_mats[3] = fam.u_mats[4];
    const ForwardCoeffs fc = forward_coeffs(model, fam, 4, 0.2);
    CHECK(fc.a_k == 0.0);
    CHECK(fc.b_k.mat().norm() == 0.0);
    CHECK(libor_rate(model, fam, 4, 0.2, random_spd(2, 2.0)) == 0.0);
}

TEST_CASE("libor rates are strictly positive on random states") {
    const Model model = benchmark();
    const MartingaleFamily fam = fit_term_structure(model, flat_curve());
    for (int rep = 0; rep < 1000; ++rep) {
        const int k = 1 + rep % 11;
        const SymMat sigma = random_spd(2, 0.5 + (rep % 7));
        CHECK(libor_rate(model, fam, k, 0.0, sigma) > 0.0);
    }
}

TEST_CASE("radon_nikodym normalization") {
    const Model model = benchmark();
    const MartingaleFamily fam = fit_term_structure(model, flat_curve());
    CHECK(radon_nikodym(model, fam, 5, 0.0, model_sigma0(model)) ==
          doctest::Approx(1.0).epsilon(1e-13));
    CHECK(radon_nikodym(model, fam, 12, 2.0, random_spd(2, 2.0)) == 1.0);
    CHECK(radon_nikodym(model, fam, 5, 1.5, random_spd(2, 2.0)) > 0.0);
}

TEST_CASE("telescoping product of forward ratios") {
    const Model model = benchmark();
    const MartingaleFamily fam = fit_term_structure(model, flat_curve());
    const SymMat sigma = random_spd(2, 2.0);
    const double t = 0.75;
    for (int k = 1; k <= 11; ++k) {
        double prod = 1.0;
        for (int l = k; l <= 11; ++l) {
            const double ml = martingale_value(model, fam, t, l, sigma);
            const double ml1 = martingale_value(model, fam, t, l + 1, sigma);
            prod *= ml / ml1;
        }
        const double direct = martingale_value(model, fam, t, k, sigma);
        CHECK(std::abs(prod - direct) <= 1e-12 * direct);
    }
}
