#include "wlm/affine.hpp"

#include <doctest.h>

#include <random>

using namespace wlm;

namespace {

std::mt19937_64 rng(777);

SymMat random_psd(int d, double scale) {
    std::normal_distribution<double> nd;
    Matrix a(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) a(i, j) = nd(rng);
    return SymMat(Matrix(scale * a.transpose() * a));
}

WishartParams benchmark() {
    return WishartParams(SymMat::diagonal({3.75, 3.45}),
                         SquareMat::diagonal({-0.3125e-3, -0.5e-3}),
                         SquareMat::diagonal({0.034, 0.042}), 3.0);
}

JumpOUParams section6() {
    return JumpOUParams(SymMat(Matrix{{1.875, 0.6}, {0.6, 1.275}}),
                        SquareMat::diagonal({-0.055, -0.176}), 0.1,
                        JumpLaw::wishart(3.1, SymMat::diagonal({0.27, 0.05})));
}

}  // namespace

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(WishartParams(SymMat::diagonal({1.0, -1.0}), SquareMat::diagonal({-1, -1}),
                                  SquareMat::identity(2), 3.0),
                    NotSpdError);
    // Gindikin constraint: kappa = 2.7 < d+1 = 3 is rejected.
    CHECK_THROWS_AS(WishartParams(SymMat::identity(2), SquareMat::diagonal({-1, -1}),
                                  SquareMat::identity(2), 2.7),
                    std::invalid_argument);
    CHECK_THROWS_AS(WishartParams(SymMat::identity(2), SquareMat::diagonal({1.0, -1.0}),
                                  SquareMat::identity(2), 3.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(WishartParams(SymMat::identity(2), SquareMat::diagonal({-1, -1}),
                                  SquareMat::diagonal({1.0, 0.0}), 3.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(JumpOUParams(SymMat::identity(2), SquareMat::diagonal({-1, -1}), 0.0,
                                 JumpLaw::wishart(3.0, SymMat::identity(2))),
                    std::invalid_argument);
    // jump-law degrees of freedom must exceed d-1
    CHECK_THROWS_AS(JumpOUParams(SymMat::identity(2), SquareMat::diagonal({-1, -1}), 0.5,
                                 JumpLaw::wishart(0.5, SymMat::identity(2))),
                    std::invalid_argument);
    CHECK_THROWS_AS(wishart_psi_phi(benchmark(), -1.0, CSymMat::identity(2)), NegativeTauError);
    CHECK_THROWS_AS(jump_psi_phi(section6(), -0.5, CSymMat::identity(2)), NegativeTauError);
}

TEST_CASE("initial conditions: tau = 0 gives psi = u, phi = 0") {
    const SymMat u = random_psd(2, 0.4);
    for (const Model model : {Model(benchmark()), Model(section6())}) {
        const RealCoeffs c = psi_phi(model, 0.0, u);
        CHECK(c.valid);
        CHECK(c.phi == 0.0);
        CHECK((c.psi.mat() - u.mat()).norm() == 0.0);
    }
}

TEST_CASE("u = 0 gives psi = 0, phi = 0, Laplace 1") {
    for (const Model model : {Model(benchmark()), Model(section6())}) {
        const RealCoeffs c = psi_phi(model, 1.7, SymMat::zero(2));
        CHECK(c.valid);
        CHECK(std::abs(c.phi) <= 1e-15);
        CHECK(c.psi.mat().norm() <= 1e-15);
        CHECK(*laplace(model, 1.7, SymMat::zero(2)) == doctest::Approx(1.0).epsilon(1e-15));
    }
}

TEST_CASE("closed form matches the RK4 integrator") {
    const WishartParams params = benchmark();
    const AffineCoeffs c = wishart_psi_phi(params, 1.0, CSymMat(SymMat::diagonal({0.1, 0.1})));
    const auto rk =
        detail::riccati_rk4(params, 1.0, 0.1 * CMatrix::Identity(2, 2), 4000);
    CHECK((c.psi.mat() - rk.psi).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK(std::abs(c.phi - rk.phi) <= 1e-8);
}

TEST_CASE("scalar degenerate case M = 0 has the textbook Riccati solution") {
    const double q = 0.3, u0 = 0.7, t = 1.3;
    const WishartParams p(SymMat::identity(1), SquareMat::zero(1), SquareMat::diagonal({q}),
                          2.0);
    const RealCoeffs c = psi_phi(Model(p), t, SymMat::diagonal({u0}));
    CHECK(c.psi(0, 0) == doctest::Approx(u0 / (1.0 + 2.0 * q * q * u0 * t)).epsilon(1e-14));
    CHECK(c.phi == doctest::Approx(0.5 * 2.0 * std::log(1.0 + 2.0 * q * q * u0 * t))
                       .epsilon(1e-14));
}

TEST_CASE("jump psi is a conjugation by e^{M tau}") {
    const JumpOUParams p = section6();
    const double tau = 0.8;
    const SymMat u = random_psd(2, 0.3);
    const RealCoeffs c = psi_phi(Model(p), tau, u);
    // M is diagonal here, so psi_ij = u_ij e^{(M_ii + M_jj) tau}.
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            const double expect = u(i, j) * std::exp((p.m(i, i) + p.m(j, j)) * tau);
            CHECK(c.psi(i, j) == doctest::Approx(expect).epsilon(1e-13));
        }
}

TEST_CASE("flow property for both process types") {
    std::uniform_real_distribution<double> ut(0.0, 2.0);
    for (const Model model : {Model(benchmark()), Model(section6())}) {
        for (int rep = 0; rep < 25; ++rep) {
            const double t = ut(rng), s = ut(rng);
            const SymMat u = random_psd(2, 0.3);
            const RealCoeffs at_t = psi_phi(model, t, u);
            const RealCoeffs both = psi_phi(model, t + s, u);
            const RealCoeffs comp = psi_phi(model, s, at_t.psi);
            REQUIRE(at_t.valid);
            REQUIRE(both.valid);
            REQUIRE(comp.valid);
            CHECK(std::abs(both.phi - at_t.phi - comp.phi) <= 1e-9);
            CHECK((both.psi.mat() - comp.psi.mat()).norm() <= 1e-9);
        }
    }
}

TEST_CASE("Riccati residual by central finite differences") {
    const WishartParams params = benchmark();
    const Matrix qtq = params.q.mat().transpose() * params.q.mat();
    std::uniform_real_distribution<double> ut(0.1, 3.0);
    const double h = 1e-5;
    for (int rep = 0; rep < 50; ++rep) {
        const double tau = ut(rng);
        const SymMat u = random_psd(2, 0.4);
        const Matrix up = psi_phi(Model(params), tau + h, u).psi.mat();
        const Matrix dn = psi_phi(Model(params), tau - h, u).psi.mat();
        const Matrix psi = psi_phi(Model(params), tau, u).psi.mat();
        const Matrix lhs = (up - dn) / (2.0 * h);
        const Matrix rhs = psi * params.m.mat() + params.m.mat().transpose() * psi -
                           2.0 * psi * qtq * psi;
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-6);
    }
}

TEST_CASE("Laplace transform is monotone decreasing in the argument order") {
    for (const Model model : {Model(benchmark()), Model(section6())}) {
        for (int rep = 0; rep < 25; ++rep) {
            const SymMat u = random_psd(2, 0.2);
            const SymMat gap = random_psd(2, 0.1);
            const SymMat v(Matrix(u.mat() + gap.mat() + 0.01 * Matrix::Identity(2, 2)));
            const auto lu = laplace(model, 1.5, u);
            const auto lv = laplace(model, 1.5, v);
            REQUIRE(lu.has_value());
            REQUIRE(lv.has_value());
            CHECK(*lu > *lv);
        }
    }
}

TEST_CASE("real symmetric input yields real output through the complex path") {
    for (const Model model : {Model(benchmark()), Model(section6())}) {
        const SymMat u = random_psd(2, 0.4);
        const AffineCoeffs c = psi_phi(model, 1.2, CSymMat(u));
        CHECK(c.valid);
        CHECK(std::abs(c.phi.imag()) <= 1e-12);
        CHECK(c.psi.max_imag() <= 1e-12);
        CHECK((c.psi.real_part().mat() - psi_phi(model, 1.2, u).psi.mat()).norm() <= 1e-12);
    }
}

TEST_CASE("phi is continuous along a damped Fourier contour") {
    // u(v) = i(v - (alpha+1)i) B for fixed PSD B: phi must move smoothly,
    // with no 2 pi phase slips from the tr log term.
    const WishartParams params = benchmark();
    const SymMat b = random_psd(2, 0.02);
    const double alpha = 1.0;
    double phase = 0.0;
    Complex prev_phi;
    bool first = true;
    double max_jump = 0.0;
    for (double v = 0.0; v <= 60.0; v += 0.25) {
        const Complex z(alpha + 1.0, v);
        const CSymMat u(CMatrix(z * b.mat().cast<Complex>()));
        const AffineCoeffs c = wishart_psi_phi(params, 2.0, u, phase);
        REQUIRE(c.valid);
        phase = c.phase;
        if (!first) max_jump = std::max(max_jump, std::abs(c.phi - prev_phi));
        prev_phi = c.phi;
        first = false;
    }
    // kappa/2 * 2pi ~ 9.4 would betray a missed unwrap; genuine variation is
    // far below 1 per step on this grid.
    CHECK(max_jump < 1.0);
}

TEST_CASE("transform blow-up is reported as invalid, not an exception") {
    const WishartParams p(SymMat::identity(1), SquareMat::diagonal({-0.1}),
                          SquareMat::diagonal({0.5}), 2.0);
    const SymMat u = SymMat::diagonal({-5.0});
    const RealCoeffs c = psi_phi(Model(p), 3.0, u);
    CHECK_FALSE(c.valid);
    CHECK_FALSE(laplace(Model(p), 3.0, u).has_value());
    const AffineCoeffs cc = wishart_psi_phi(p, 3.0, CSymMat(u));
    CHECK_FALSE(cc.valid);
}

TEST_CASE("noncentral Wishart jump law satisfies the u = 0 normalization") {
    const JumpOUParams p(SymMat::identity(2), SquareMat::diagonal({-0.3, -0.2}), 0.4,
                         JumpLaw::noncentral_wishart(3.0, SymMat::diagonal({0.2, 0.1}),
                                                     SquareMat(Matrix{{0.3, 0.1}, {0.0, 0.2}})));
    CHECK(*laplace(Model(p), 1.1, SymMat::zero(2)) == doctest::Approx(1.0).epsilon(1e-13));
    // transform decreasing in the argument, strictly below 1 at positive u
    const auto l = laplace(Model(p), 1.1, SymMat::diagonal({0.05, 0.05}));
    REQUIRE(l.has_value());
    CHECK(*l < 1.0);
    CHECK(*l > 0.0);
}
