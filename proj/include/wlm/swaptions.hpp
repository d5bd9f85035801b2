#pragma once

#include "wlm/libor.hpp"

// European swaption pricing: a receiver (payer) swaption is a call (put) on a
// coupon bond with unit strike. Coupon-bond moments under each forward
// measure are exact exponential-affine sums; moments are converted to
// cumulants and the exercise probabilities approximated by an Edgeworth
// expansion.
//
// The moment sums are evaluated in quadruple precision internally: at
// desk-scale volatilities the 5th..7th cumulants sit far below the
// double-precision cancellation floor of the alternating multiset sums, and
// feeding that noise through kappa_2^{-j/2} would destroy the expansion.

namespace wlm {

struct DegenerateDistributionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class SwaptionSide { receiver, payer };

struct SwaptionSpec {
    int i = 1;          // option expiry index (T_i)
    int m = 2;          // swap end index, i < m <= N
    double strike = 0;  // fixed rate K
    SwaptionSide side = SwaptionSide::receiver;

    /// c_k = dt*K for i+1 <= k <= m-1 and 1 + dt*K for k = m.
    double coupon(int k, double delta_t) const;
};

struct CumulantSet {
    int order = 0;                 // highest cumulant available
    std::vector<double> kappa;     // kappa[j-1] = j-th cumulant, j = 1..order
    int measure_index = 0;
};

/// Exact q-th moment of the coupon bond CB(T_i) under the P_{T_k} forward
/// measure. The (m-i)^q index sum is collapsed to multisets with multinomial
/// weights. Throws TransformBlowUpError (reporting q) if the aggregate
/// transform argument leaves the domain.
double coupon_bond_moment(const Model& model, const MartingaleFamily& family,
                          const SwaptionSpec& spec, int q, int measure_k);

/// Raw moments q = 1..q_max in one pass (shares the transform caches).
std::vector<double> coupon_bond_moments(const Model& model, const MartingaleFamily& family,
                                        const SwaptionSpec& spec, int q_max, int measure_k);

/// Cumulants of CB(T_i) under P_{T_k} up to the given order, computed from
/// shifted moments in extended precision.
CumulantSet coupon_bond_cumulants(const Model& model, const MartingaleFamily& family,
                                  const SwaptionSpec& spec, int order, int measure_k);

/// Standard moment->cumulant recursion
///   kappa_n = m_n - sum_{j=1}^{n-1} C(n-1, j-1) kappa_j m_{n-j};
/// moments[q-1] is the q-th raw moment. Throws DegenerateDistributionError
/// when kappa_2 <= 0.
CumulantSet moments_to_cumulants(const std::vector<double>& moments);

struct TailProb {
    double p = 0.0;
    bool clamped = false;  // expansion left [0,1] and was clamped
};

/// P[X > threshold] by Edgeworth expansion around the Gaussian with the
/// given mean/variance. Correction terms are generated programmatically
/// from exp(sum_j lambda_j (it)^j / j!) collected in Hermite basis and kept
/// through Edgeworth order cs.order - 2 (all cumulant products with total
/// excess order sum (j_i - 2) <= cs.order - 2).
TailProb edgeworth_tail(const CumulantSet& cs, double threshold);

/// Receiver price sum_k c_k B(0,T_k) P_k[CB > 1] - B(0,T_i) P_i[CB > 1];
/// payer by receiver-payer parity. order in [3, 7].
double price_swaption(const Model& model, const MartingaleFamily& family,
                      const SwaptionSpec& spec, int order = 7);

}  // namespace wlm
