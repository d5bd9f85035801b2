#include "wlm/analytics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

namespace wlm {

namespace {

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

constexpr double kVolLo = 1e-6;
constexpr double kVolHi = 5.0;

}  // namespace

double black_price(double forward, double strike, double vol, double expiry, double discount,
                   bool is_call) {
    if (!(forward > 0.0) || !(strike > 0.0))
        throw std::invalid_argument("black_price: forward and strike must be positive");
    const double s = vol * std::sqrt(expiry);
    if (s < 1e-14) {
        const double intrinsic = is_call ? forward - strike : strike - forward;
        return discount * std::max(intrinsic, 0.0);
    }
    const double d1 = (std::log(forward / strike) + 0.5 * s * s) / s;
    const double d2 = d1 - s;
    if (is_call) return discount * (forward * norm_cdf(d1) - strike * norm_cdf(d2));
    return discount * (strike * norm_cdf(-d2) - forward * norm_cdf(-d1));
}

ImpliedVol black_implied_vol(double price, double forward, double strike, double expiry,
                             double discount, bool is_call) {
    const double intrinsic = is_call ? std::max(discount * (forward - strike), 0.0)
                                     : std::max(discount * (strike - forward), 0.0);
    const double upper = is_call ? discount * forward : discount * strike;
    if (price < intrinsic - 1e-14 || price > upper - 1e-14)
        throw OutOfBandError("black_implied_vol: price outside the no-arbitrage band");

    auto f = [&](double vol) {
        return black_price(forward, strike, vol, expiry, discount, is_call) - price;
    };

    double a = kVolLo, b = kVolHi;
    double fa = f(a), fb = f(b);
    if (fa >= 0.0) return ImpliedVol{kVolLo, ImpliedVol::Status::at_lower_bound};
    if (fb <= 0.0) throw OutOfBandError("black_implied_vol: price above vol=5 value");

    // Brent
    double c = a, fc = fa, d = b - a, e = d;
    for (int iter = 0; iter < 200; ++iter) {
        if (std::abs(fc) < std::abs(fb)) {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        const double tol = 2.0 * std::numeric_limits<double>::epsilon() * std::abs(b);
        const double mid = 0.5 * (c - b);
        if (std::abs(fb) <= 1e-12 || std::abs(mid) <= tol) return ImpliedVol{b};
        if (std::abs(e) >= tol && std::abs(fa) > std::abs(fb)) {
            double p, q, r;
            const double s = fb / fa;
            if (a == c) {
                p = 2.0 * mid * s;
                q = 1.0 - s;
            } else {
                q = fa / fc;
                r = fb / fc;
                p = s * (2.0 * mid * q * (q - r) - (b - a) * (r - 1.0));
                q = (q - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0.0) q = -q;
            p = std::abs(p);
            if (2.0 * p < std::min(3.0 * mid * q - std::abs(tol * q), std::abs(e * q))) {
                e = d;
                d = p / q;
            } else {
                d = mid;
                e = d;
            }
        } else {
            d = mid;
            e = d;
        }
        a = b;
        fa = fb;
        b += (std::abs(d) > tol) ? d : (mid > 0.0 ? tol : -tol);
        fb = f(b);
        if ((fb > 0.0) == (fc > 0.0)) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
    }
    throw NoConvergenceError("black_implied_vol: no convergence after 200 iterations");
}

double skew_correlation(const SymMat& b_k, const SquareMat& q, const SymMat& sigma) {
    const Matrix& b = b_k.mat();
    const Matrix& s = sigma.mat();
    const Matrix qtq = q.mat().transpose() * q.mat();

    const double num = (b * qtq * b * qtq * b * s).trace();
    const double den1 = (q.mat() * b * s * b * q.mat().transpose()).trace();
    const double den2 = (s * b * qtq * b * qtq * b * qtq * b).trace();
    if (!(den1 > 0.0)) throw ZeroVolError("skew_correlation: degenerate B_k (zero volatility)");
    return num / (std::sqrt(den1) * std::sqrt(den2));
}

double skew_correlation(const Model& model, const MartingaleFamily& family, int k,
                        const SymMat& sigma, double t) {
    if (!std::holds_alternative<WishartParams>(model))
        throw std::invalid_argument("skew_correlation: defined for the Wishart model");
    if (!is_spd(sigma)) throw NotSpdError("skew_correlation: sigma must be SPD");
    const ForwardCoeffs fc = forward_coeffs(model, family, k, t);
    return skew_correlation(fc.b_k, std::get<WishartParams>(model).q, sigma);
}

SquareMat correlated_q(double q11, double q22, double rho) {
    if (!(std::abs(rho) < 1.0))
        throw std::invalid_argument("correlated_q: |rho| must be < 1 (Q invertible)");
    if (!(q11 > 0.0) || !(q22 > 0.0))
        throw std::invalid_argument("correlated_q: diagonal entries must be positive");
    Matrix q(2, 2);
    const double off = rho * std::sqrt(q11 * q22);
    q << q11, off, off, q22;
    return SquareMat(q);
}

std::string SurfaceGrid::to_csv() const {
    std::string out =
        "# schema_version=" + std::to_string(schema_version) + " kind=" + kind +
        (model_hash.empty() ? "" : " model=" + model_hash) + "\n";
    out += row_label + "\\" + col_label;
    char buf[64];
    for (double c : cols) {
        std::snprintf(buf, sizeof buf, ",%.17g", c);
        out += buf;
    }
    out += "\n";
    for (Eigen::Index r = 0; r < implied_vols.rows(); ++r) {
        std::snprintf(buf, sizeof buf, "%.17g", rows[r]);
        out += buf;
        for (Eigen::Index c = 0; c < implied_vols.cols(); ++c) {
            if (ok(r, c))
                std::snprintf(buf, sizeof buf, ",%.17g", implied_vols(r, c));
            else
                std::snprintf(buf, sizeof buf, ",");
            out += buf;
        }
        out += "\n";
    }
    return out;
}

nlohmann::json SurfaceGrid::to_json() const {
    nlohmann::ordered_json j;
    j["schema_version"] = schema_version;
    j["kind"] = kind;
    j["model_hash"] = model_hash;
    j["row_label"] = row_label;
    j["col_label"] = col_label;
    j["rows"] = rows;
    j["cols"] = cols;
    auto mat_to_json = [&](const Matrix& m) {
        nlohmann::ordered_json rows_json = nlohmann::ordered_json::array();
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            nlohmann::ordered_json row = nlohmann::ordered_json::array();
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
                if (ok(r, c))
                    row.push_back(m(r, c));
                else
                    row.push_back(nullptr);
            }
            rows_json.push_back(row);
        }
        return rows_json;
    };
    j["prices"] = mat_to_json(prices);
    j["implied_vols"] = mat_to_json(implied_vols);
    return j;
}

SurfaceGrid build_caplet_surface(const Model& model, const MartingaleFamily& family,
                                 const std::vector<double>& strikes,
                                 const std::vector<int>& tenor_indices, const FourierConfig& cfg,
                                 const std::string& model_hash) {
    SurfaceGrid g;
    g.kind = "caplet";
    g.row_label = "maturity";
    g.col_label = "strike";
    g.cols = strikes;
    g.model_hash = model_hash;
    const int nr = static_cast<int>(tenor_indices.size());
    const int nc = static_cast<int>(strikes.size());
    g.rows.resize(nr);
    g.prices.setZero(nr, nc);
    g.implied_vols.setConstant(nr, nc, std::numeric_limits<double>::quiet_NaN());
    g.ok.setZero(nr, nc);

    for (int r = 0; r < nr; ++r) {
        const int k = tenor_indices[r];
        g.rows[r] = family.curve.maturity(k);
        const CapletPricer pricer(model, family, k, cfg);
        const double fwd = family.curve.forward_libor(k);
        const double df = family.curve.delta_t() * family.curve.bond(k + 1);
        for (int c = 0; c < nc; ++c) {
            const double price = pricer.caplet(strikes[c]);
            g.prices(r, c) = price;
            if (!(strikes[c] > 0.0)) continue;  // Black inversion needs K > 0
            try {
                const ImpliedVol iv = black_implied_vol(price, fwd, strikes[c],
                                                        family.curve.maturity(k), df, true);
                g.implied_vols(r, c) = iv.vol;
                g.ok(r, c) = 1;
            } catch (const OutOfBandError&) {
            } catch (const NoConvergenceError&) {
            }
        }
    }
    return g;
}

std::vector<std::pair<double, double>> atm_term_structure(const Model& model,
                                                          const MartingaleFamily& family,
                                                          const std::vector<int>& tenor_indices,
                                                          const FourierConfig& cfg) {
    std::vector<std::pair<double, double>> out;
    out.reserve(tenor_indices.size());
    for (int k : tenor_indices) {
        const double fwd = family.curve.forward_libor(k);
        const double df = family.curve.delta_t() * family.curve.bond(k + 1);
        const double price = CapletPricer(model, family, k, cfg).caplet(fwd);
        const ImpliedVol iv =
            black_implied_vol(price, fwd, fwd, family.curve.maturity(k), df, true);
        out.emplace_back(family.curve.maturity(k), iv.vol);
    }
    return out;
}

SurfaceGrid atm_swaption_surface(const Model& model, const MartingaleFamily& family,
                                 const std::vector<int>& expiry_indices,
                                 const std::vector<int>& swap_lengths, int order,
                                 const std::string& model_hash) {
    SurfaceGrid g;
    g.kind = "swaption-atm";
    g.row_label = "expiry";
    g.col_label = "swap_length";
    g.model_hash = model_hash;
    const int nr = static_cast<int>(expiry_indices.size());
    const int nc = static_cast<int>(swap_lengths.size());
    g.rows.resize(nr);
    g.cols.resize(nc);
    g.prices.setZero(nr, nc);
    g.implied_vols.setConstant(nr, nc, std::numeric_limits<double>::quiet_NaN());
    g.ok.setZero(nr, nc);

    const double dt = family.curve.delta_t();
    for (int c = 0; c < nc; ++c) g.cols[c] = swap_lengths[c] * dt;

    for (int r = 0; r < nr; ++r) {
        const int i = expiry_indices[r];
        g.rows[r] = family.curve.maturity(i);
        for (int c = 0; c < nc; ++c) {
            const int m = i + swap_lengths[c];
            if (m > family.n_tenors()) continue;  // off the tenor grid
            double annuity = 0.0;
            for (int j = i + 1; j <= m; ++j) annuity += dt * family.curve.bond(j);
            const double par =
                (family.curve.bond(i) - family.curve.bond(m)) / annuity;
            SwaptionSpec spec{i, m, par, SwaptionSide::receiver};
            const double price = price_swaption(model, family, spec, order);
            g.prices(r, c) = price;
            try {
                // ATM receiver = put on the par rate = call by ATM symmetry.
                const ImpliedVol iv = black_implied_vol(price, par, par,
                                                        family.curve.maturity(i), annuity, true);
                g.implied_vols(r, c) = iv.vol;
                g.ok(r, c) = 1;
            } catch (const OutOfBandError&) {
            } catch (const NoConvergenceError&) {
            }
        }
    }
    return g;
}

}  // namespace wlm
