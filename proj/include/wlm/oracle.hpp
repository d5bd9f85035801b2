#pragma once

#include "wlm/caps.hpp"
#include "wlm/swaptions.hpp"

#include <cstdint>
#include <functional>

// Monte Carlo simulation of both process types under the terminal measure
// P_{T_N}, plus MC pricing of every instrument with Radon-Nikodym
// reweighting. This is the independent verification layer for the analytic
// modules; the integer-kappa squared-OU construction is exact in law, so the
// comparisons carry no discretization bias.

namespace wlm {

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct UnsupportedLawError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

enum class McScheme { exact_squared_ou, euler_projected };

struct McConfig {
    int n_paths = 100000;
    double dt = 1.0 / 24;  // Euler step / output spacing; <= tenor/8 enforced at config load
    std::uint64_t seed = 42;
    McScheme scheme = McScheme::exact_squared_ou;
    bool antithetic = true;
};

/// Simulated paths on a time grid, stored flat as vech(Sigma) per
/// (path, time). Antithetic twins occupy adjacent path slots.
class PathSet {
  public:
    PathSet(int dim, std::vector<double> times, int n_paths);

    int dim() const { return dim_; }
    int n_paths() const { return n_paths_; }
    const std::vector<double>& times() const { return times_; }

    Matrix sigma(int path, int time_idx) const;
    void set_sigma(int path, int time_idx, const Matrix& s);
    /// tr[a * Sigma(path, time_idx)] without materializing the matrix.
    double trace_with(int path, int time_idx, const Matrix& a) const;

    McScheme scheme = McScheme::exact_squared_ou;
    bool biased = false;  // Euler projection bias flag
    std::uint64_t seed = 0;
    bool antithetic = false;

  private:
    int dim_;
    int n_paths_;
    int vech_;
    std::vector<double> times_;
    std::vector<double> data_;
};

/// Exact-in-law simulation for integer kappa via Sigma = X^T X with X a
/// kappa x d matrix OU process stepped by its exact Gaussian transition.
/// Non-integer kappa requires the euler_projected scheme (eigenvalue
/// flooring after each step; flagged biased).
PathSet simulate_wishart(const WishartParams& params, double horizon, const McConfig& cfg,
                         const std::vector<double>* grid = nullptr);

/// Exact simulation of the compound-Poisson OU process: Poisson jump count,
/// uniform jump times, Bartlett-sampled Wishart jump sizes, deterministic
/// flow between jumps.
PathSet simulate_jump_ou(const JumpOUParams& params, double horizon, const McConfig& cfg,
                         const std::vector<double>* grid = nullptr);

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    int n_paths = 0;
};

struct CapSpec {
    int k_first = 1;
    int k_last = 1;
    double strike = 0.0;
    double notional = 1.0;
};
struct FloorletSpec {
    int k = 1;
    double strike = 0.0;
    double notional = 1.0;
};

using InstrumentSpec = std::variant<CapletSpec, FloorletSpec, CapSpec, SwaptionSpec>;

McEstimate mc_price(const InstrumentSpec& instrument, const Model& model,
                    const MartingaleFamily& family, const McConfig& cfg);

/// MC estimate of E[e^{-tr[u Sigma_t]}] under the terminal measure.
McEstimate mc_laplace(const Model& model, double t, const SymMat& u, const McConfig& cfg);

/// MC estimate of the q-th coupon-bond moment under P_{T_measure_k}.
McEstimate mc_coupon_bond_moment(const Model& model, const MartingaleFamily& family,
                                 const SwaptionSpec& spec, int q, int measure_k,
                                 const McConfig& cfg);

namespace detail {
/// Deterministic block-partitioned parallel map; results are independent of
/// the worker count. Honors WLM_THREADS.
void parallel_blocks(int n_items, int block_size, const std::function<void(int, int)>& fn);
}  // namespace detail

}  // namespace wlm
