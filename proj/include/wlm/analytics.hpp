#pragma once

#include "wlm/caps.hpp"
#include "wlm/swaptions.hpp"

#include <nlohmann/json.hpp>

#include <string>

// Implied-volatility inversion, surface generation and the skew diagnostic.

namespace wlm {

struct OutOfBandError : std::domain_error {
    using std::domain_error::domain_error;
};
struct NoConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ZeroVolError : std::domain_error {
    using std::domain_error::domain_error;
};

double black_price(double forward, double strike, double vol, double expiry, double discount,
                   bool is_call = true);

struct ImpliedVol {
    double vol = 0.0;
    enum class Status { ok, at_lower_bound } status = Status::ok;
};

/// Brent inversion of Black-76 in sigma over [1e-6, 5]; |price error| <=
/// 1e-12. Throws OutOfBandError outside [intrinsic, discount*forward] and
/// NoConvergenceError after 200 iterations.
ImpliedVol black_implied_vol(double price, double forward, double strike, double expiry,
                             double discount, bool is_call = true);

/// Conditional infinitesimal correlation between a Libor rate and its
/// volatility, given the forward loading b_k, the vol-of-vol Q and the state:
///   tr[BQ'QBQ'QB S] / ( sqrt(tr[QBSB'Q']) sqrt(tr[S BQ'QBQ'QBQ'QB]) ).
/// Lies in (0, 1]; exactly 1 in the scalar case. Throws ZeroVolError for
/// b_k = 0.
double skew_correlation(const SymMat& b_k, const SquareMat& q, const SymMat& sigma);

/// Same, with b_k taken from forward_coeffs at time t (Wishart models only).
double skew_correlation(const Model& model, const MartingaleFamily& family, int k,
                        const SymMat& sigma, double t = 0.0);

/// Symmetric vol-of-vol parameterization Q21 = Q12 = rho sqrt(Q11 Q22);
/// rejects |rho| >= 1 (Q would be singular).
SquareMat correlated_q(double q11, double q22, double rho);

struct SurfaceGrid {
    std::string kind;                  // "caplet" | "swaption-atm"
    std::string row_label, col_label;  // e.g. "maturity", "strike"
    std::vector<double> rows;          // maturities (years)
    std::vector<double> cols;          // strikes, or swap lengths (years)
    Matrix prices;
    Matrix implied_vols;               // NaN where inversion failed
    Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> ok;
    std::string model_hash;
    int schema_version = 1;

    std::string to_csv() const;  // header row = cols, first column = rows
    nlohmann::json to_json() const;
};

SurfaceGrid build_caplet_surface(const Model& model, const MartingaleFamily& family,
                                 const std::vector<double>& strikes,
                                 const std::vector<int>& tenor_indices, const FourierConfig& cfg,
                                 const std::string& model_hash = "");

/// ATM vols per tenor; the ATM strike is the curve's forward Libor.
std::vector<std::pair<double, double>> atm_term_structure(const Model& model,
                                                          const MartingaleFamily& family,
                                                          const std::vector<int>& tenor_indices,
                                                          const FourierConfig& cfg);

/// ATM receiver swaptions on an expiry x swap-length grid; strikes at the
/// par swap rate, vols inverted against the annuity-discounted Black price.
SurfaceGrid atm_swaption_surface(const Model& model, const MartingaleFamily& family,
                                 const std::vector<int>& expiry_indices,
                                 const std::vector<int>& swap_lengths, int order,
                                 const std::string& model_hash = "");

}  // namespace wlm
