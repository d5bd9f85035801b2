#include "wlm/analytics.hpp"

#include <doctest.h>

#include <random>

using namespace wlm;

namespace {

std::mt19937_64 rng(888);

Model benchmark() {
    return Model(WishartParams(SymMat::diagonal({3.75, 3.45}),
                               SquareMat::diagonal({-0.3125e-3, -0.5e-3}),
                               SquareMat::diagonal({0.034, 0.042}), 3.0));
}

const Model& model() {
    static Model m = benchmark();
    return m;
}

const MartingaleFamily& family() {
    static MartingaleFamily fam = fit_term_structure(
        model(), TenorCurve::from_libor_rates(1.0 / 3.0, std::vector<double>(12, 0.05)));
    return fam;
}

FourierConfig fast_cfg() { return FourierConfig{1.0, 1 << 16, 30000.0}; }

SymMat random_psd(int d, double scale) {
    std::normal_distribution<double> nd;
    Matrix a(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) a(i, j) = nd(rng);
    return SymMat(Matrix(scale * a.transpose() * a));
}

}  // namespace

TEST_CASE("black implied vol round-trips") {
    const double f = 0.05, k = 0.052, t = 1.5, df = 0.9;
    const double price = black_price(f, k, 0.2, t, df);
    const ImpliedVol iv = black_implied_vol(price, f, k, t, df);
    CHECK(iv.status == ImpliedVol::Status::ok);
    CHECK(iv.vol == doctest::Approx(0.2).epsilon(1e-10));

    const double put = black_price(f, k, 0.35, t, df, false);
    CHECK(black_implied_vol(put, f, k, t, df, false).vol ==
          doctest::Approx(0.35).epsilon(1e-10));
}

TEST_CASE("black implied vol boundary handling") {
    const double f = 0.05, k = 0.03, t = 1.0, df = 0.95;
    // intrinsic price: sigma -> 0 limit flagged, not fatal
    const ImpliedVol low = black_implied_vol(df * (f - k), f, k, t, df);
    CHECK(low.status == ImpliedVol::Status::at_lower_bound);
    // upper bound df*F is unreachable
    CHECK_THROWS_AS(black_implied_vol(df * f, f, k, t, df), OutOfBandError);
    // below intrinsic
    CHECK_THROWS_AS(black_implied_vol(df * (f - k) * 0.5, f, k, t, df), OutOfBandError);
}

TEST_CASE("skew correlation in the scalar case is exactly 1") {
    std::uniform_real_distribution<double> up(0.1, 3.0);
    for (int rep = 0; rep < 100; ++rep) {
        const double rho = skew_correlation(SymMat::diagonal({up(rng)}),
                                            SquareMat::diagonal({up(rng)}),
                                            SymMat::diagonal({up(rng)}));
        CHECK(std::abs(rho - 1.0) <= 1e-12);
    }
}

TEST_CASE("skew correlation closed-form cases") {
    // B = b I, Q'Q = q^2 I, Sigma = I: numerator and denominators align.
    CHECK(skew_correlation(SymMat(Matrix(0.7 * Matrix::Identity(2, 2))),
                           SquareMat::diagonal({0.3, 0.3}), SymMat::identity(2)) ==
          doctest::Approx(1.0).epsilon(1e-12));
    // B = diag(1, 2), Q = I, Sigma = I:
    //   (b1^3 + b2^3) / (sqrt(b1^2+b2^2) sqrt(b1^4+b2^4)) = 9 / sqrt(85)
    CHECK(skew_correlation(SymMat::diagonal({1.0, 2.0}), SquareMat::identity(2),
                           SymMat::identity(2)) ==
          doctest::Approx(9.0 / std::sqrt(85.0)).epsilon(1e-12));
}

TEST_CASE("skew correlation stays in (0, 1] on random inputs") {
    std::normal_distribution<double> nd;
    for (int rep = 0; rep < 200; ++rep) {
        const int d = 2 + rep % 3;
        const SymMat b = random_psd(d, 0.5);
        const SymMat sigma(
            Matrix(random_psd(d, 1.0).mat() + 0.05 * Matrix::Identity(d, d)));
        Matrix q(d, d);
        do {
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) q(i, j) = nd(rng);
        } while (std::abs(q.determinant()) < 1e-3);
        const double rho = skew_correlation(b, SquareMat(q), sigma);
        CHECK(rho > 0.0);
        CHECK(rho <= 1.0 + 1e-12);
    }
    CHECK_THROWS_AS(
        skew_correlation(SymMat::zero(2), SquareMat::identity(2), SymMat::identity(2)),
        ZeroVolError);
}

TEST_CASE("family-level skew requires the diffusion model") {
    CHECK(skew_correlation(model(), family(), 3, model_sigma0(model())) > 0.0);
    const JumpOUParams jump(SymMat::identity(2), SquareMat::diagonal({-0.1, -0.1}), 0.5,
                            JumpLaw::wishart(3.0, SymMat::identity(2)));
    CHECK_THROWS_AS(skew_correlation(Model(jump), family(), 3, SymMat::identity(2)),
                    std::invalid_argument);
}

TEST_CASE("correlated Q parameterization") {
    const SquareMat q = correlated_q(0.02, 0.042, -0.6);
    CHECK(q(0, 1) == doctest::Approx(-0.6 * std::sqrt(0.02 * 0.042)));
    CHECK(q(0, 1) == q(1, 0));
    CHECK_THROWS_AS(correlated_q(0.02, 0.042, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(correlated_q(0.02, 0.042, -1.3), std::invalid_argument);
}

TEST_CASE("caplet surface columns are monotone and vols round-trip") {
    const double fwd = family().curve.forward_libor(1);
    std::vector<double> strikes;
    for (double mny = 0.97; mny <= 1.031; mny += 0.01) strikes.push_back(fwd * mny);
    const SurfaceGrid g = build_caplet_surface(model(), family(), strikes, {1, 4, 8},
                                               fast_cfg(), "deadbeef");
    CHECK(g.rows.size() == 3);
    CHECK(g.cols.size() == strikes.size());
    for (int r = 0; r < 3; ++r)
        for (size_t c = 0; c + 1 < strikes.size(); ++c)
            CHECK(g.prices(r, c) > g.prices(r, c + 1));

    for (int r = 0; r < 3; ++r)
        for (size_t c = 0; c < strikes.size(); ++c) {
            REQUIRE(g.ok(r, c) == 1);
            const int k = std::vector<int>{1, 4, 8}[r];
            const double df = family().curve.delta_t() * family().curve.bond(k + 1);
            const double back = black_price(family().curve.forward_libor(k), strikes[c],
                                            g.implied_vols(r, c),
                                            family().curve.maturity(k), df);
            CHECK(std::abs(back - g.prices(r, c)) <= 1e-10);
        }
}

TEST_CASE("ATM term structure is consistent with the surface ATM column") {
    const auto ts = atm_term_structure(model(), family(), {1, 4, 8}, fast_cfg());
    REQUIRE(ts.size() == 3);
    const std::vector<int> tenors{1, 4, 8};
    for (size_t t = 0; t < 3; ++t) {
        const int k = tenors[t];
        const double fwd = family().curve.forward_libor(k);
        const SurfaceGrid g =
            build_caplet_surface(model(), family(), {fwd}, {k}, fast_cfg());
        CHECK(ts[t].first == family().curve.maturity(k));
        CHECK(ts[t].second == doctest::Approx(g.implied_vols(0, 0)).epsilon(1e-12));
    }
}

TEST_CASE("ATM swaption surface: single-period column matches caplet vols") {
    const SurfaceGrid g =
        atm_swaption_surface(model(), family(), {3, 6}, {1, 3}, 7, "cafe");
    REQUIRE(g.ok(0, 0) == 1);
    REQUIRE(g.ok(1, 1) == 1);

    const auto caplet_ts = atm_term_structure(model(), family(), {3, 6}, fast_cfg());
    // one-period swaptions are floorlets: implied vols within 5e-3
    for (int r = 0; r < 2; ++r)
        CHECK(std::abs(g.implied_vols(r, 0) - caplet_ts[r].second) <= 5e-3);

    // grid completeness: requested cells on the tenor grid all inverted
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) CHECK(g.ok(r, c) == 1);
}

TEST_CASE("surface serialization") {
    const double fwd = family().curve.forward_libor(1);
    const SurfaceGrid g =
        build_caplet_surface(model(), family(), {fwd * 0.99, fwd * 1.01}, {1, 4},
                             fast_cfg(), "12ab");
    const std::string csv = g.to_csv();
    CHECK(csv.find("# schema_version=1") == 0);
    CHECK(csv.find("maturity\\strike") != std::string::npos);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);  // version + header + 2 rows

    const nlohmann::json j = g.to_json();
    CHECK(j["schema_version"] == 1);
    CHECK(j["model_hash"] == "12ab");
    CHECK(j["rows"].size() == 2);
    CHECK(j["implied_vols"].size() == 2);
    CHECK(j["implied_vols"][0].size() == 2);

    // serialization is deterministic
    CHECK(g.to_csv() == csv);
    CHECK(g.to_json() == j);
}
