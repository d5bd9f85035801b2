#include "wlm/oracle.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <random>
#include <thread>

namespace wlm {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream) {
    return std::mt19937_64(splitmix64(seed ^ splitmix64(stream)));
}

int thread_count() {
    if (const char* env = std::getenv("WLM_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

std::vector<double> default_grid(double horizon, double dt) {
    const int n = std::max(1, static_cast<int>(std::ceil(horizon / dt - 1e-9)));
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) g[i] = horizon * (i + 1) / n;
    return g;
}

void check_config(const McConfig& cfg) {
    if (cfg.n_paths < 1000) throw ConfigError("McConfig: n_paths must be >= 1000");
    if (!(cfg.dt > 0.0)) throw ConfigError("McConfig: dt must be positive");
}

// Noise covariance of the exact OU row transition over h:
// V(h) = int_0^h e^{Ms} Q^T Q e^{M^T s} ds, via the block-exponential trick.
Matrix ou_noise_cov(const Matrix& m, const Matrix& qtq, double h) {
    const int d = static_cast<int>(m.rows());
    Matrix block = Matrix::Zero(2 * d, 2 * d);
    block.topLeftCorner(d, d) = -m;
    block.topRightCorner(d, d) = qtq;
    block.bottomRightCorner(d, d) = m.transpose();
    const Matrix e = expm(Matrix(h * block));
    const Matrix v = e.bottomRightCorner(d, d).transpose() * e.topRightCorner(d, d);
    return 0.5 * (v + v.transpose());
}

Matrix psd_sqrt_floor(const Matrix& a, bool* floored = nullptr) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.transpose()));
    Eigen::VectorXd lam = es.eigenvalues();
    if (floored) *floored = lam.minCoeff() < 0.0;
    lam = lam.cwiseMax(0.0);
    return es.eigenvectors() * lam.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

namespace detail {

void parallel_blocks(int n_items, int block_size, const std::function<void(int, int)>& fn) {
    const int n_blocks = (n_items + block_size - 1) / block_size;
    const int n_threads = std::min(thread_count(), n_blocks);
    if (n_threads <= 1) {
        for (int b = 0; b < n_blocks; ++b)
            fn(b * block_size, std::min(n_items, (b + 1) * block_size));
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> workers;
    workers.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t)
        workers.emplace_back([&] {
            for (int b = next.fetch_add(1); b < n_blocks; b = next.fetch_add(1))
                fn(b * block_size, std::min(n_items, (b + 1) * block_size));
        });
    for (auto& w : workers) w.join();
}

}  // namespace detail

PathSet::PathSet(int dim, std::vector<double> times, int n_paths)
    : dim_(dim),
      n_paths_(n_paths),
      vech_(dim * (dim + 1) / 2),
      times_(std::move(times)),
      data_(static_cast<size_t>(n_paths) * times_.size() * vech_, 0.0) {}

Matrix PathSet::sigma(int path, int time_idx) const {
    Matrix s(dim_, dim_);
    const double* p =
        data_.data() + (static_cast<size_t>(path) * times_.size() + time_idx) * vech_;
    int t = 0;
    for (int i = 0; i < dim_; ++i)
        for (int j = i; j < dim_; ++j) {
            s(i, j) = p[t];
            s(j, i) = p[t];
            ++t;
        }
    return s;
}

void PathSet::set_sigma(int path, int time_idx, const Matrix& s) {
    double* p = data_.data() + (static_cast<size_t>(path) * times_.size() + time_idx) * vech_;
    int t = 0;
    for (int i = 0; i < dim_; ++i)
        for (int j = i; j < dim_; ++j) p[t++] = s(i, j);
}

double PathSet::trace_with(int path, int time_idx, const Matrix& a) const {
    const double* p =
        data_.data() + (static_cast<size_t>(path) * times_.size() + time_idx) * vech_;
    double tr = 0.0;
    int t = 0;
    for (int i = 0; i < dim_; ++i)
        for (int j = i; j < dim_; ++j) {
            tr += (i == j ? 1.0 : 2.0) * a(i, j) * p[t];
            ++t;
        }
    return tr;
}

PathSet simulate_wishart(const WishartParams& params, double horizon, const McConfig& cfg,
                         const std::vector<double>* grid) {
    check_config(cfg);
    if (!(horizon > 0.0)) throw ConfigError("simulate_wishart: horizon must be positive");
    const std::vector<double> times = grid ? *grid : default_grid(horizon, cfg.dt);
    if (times.empty() || times.front() <= 0.0)
        throw ConfigError("simulate_wishart: grid must be positive and ascending");

    const int d = params.dim();
    const Matrix qtq = params.q.mat().transpose() * params.q.mat();

    PathSet out(d, times, cfg.n_paths);
    out.scheme = cfg.scheme;
    out.seed = cfg.seed;
    out.antithetic = cfg.antithetic;

    if (cfg.scheme == McScheme::exact_squared_ou) {
        const double kappa_round = std::round(params.kappa);
        if (std::abs(params.kappa - kappa_round) > 1e-12)
            throw ConfigError(
                "simulate_wishart: exact_squared_ou requires integer kappa; use "
                "euler_projected");
        const int kp = static_cast<int>(kappa_round);

        // Exact Gaussian transition per interval: row x -> x E^T + z L^T.
        const int n_steps = static_cast<int>(times.size());
        std::vector<Matrix> e_t(n_steps), l_t(n_steps);
        double prev = 0.0;
        for (int s = 0; s < n_steps; ++s) {
            const double h = times[s] - prev;
            if (!(h > 0.0)) throw ConfigError("simulate_wishart: grid must be ascending");
            prev = times[s];
            e_t[s] = expm(Matrix(h * params.m.mat())).transpose();
            const Matrix v = ou_noise_cov(params.m.mat(), qtq, h);
            Eigen::LLT<Matrix> llt(v);
            l_t[s] = (llt.info() == Eigen::Success) ? Matrix(llt.matrixL())
                                                    : psd_sqrt_floor(v);
            l_t[s].transposeInPlace();  // stored as L^T
        }
        const Matrix x0_top = sqrtm_spd(params.sigma0).mat();

        detail::parallel_blocks(cfg.n_paths, 1024, [&](int p0, int p1) {
            Matrix x(kp, d), z(kp, d);
            std::normal_distribution<double> nd;
            for (int p = p0; p < p1; ++p) {
                const std::uint64_t stream = cfg.antithetic ? p / 2 : p;
                const double flip = (cfg.antithetic && (p % 2 == 1)) ? -1.0 : 1.0;
                auto rng = stream_rng(cfg.seed, stream);
                x.setZero();
                x.topRows(d) = x0_top;
                for (int s = 0; s < n_steps; ++s) {
                    for (int r = 0; r < kp; ++r)
                        for (int c = 0; c < d; ++c) z(r, c) = flip * nd(rng);
                    x = x * e_t[s] + z * l_t[s];
                    out.set_sigma(p, s, Matrix(x.transpose() * x));
                }
            }
        });
        return out;
    }

    // Euler-Maruyama with eigenvalue flooring (biased; used for non-integer
    // kappa).
    out.biased = true;
    const int n_grid = static_cast<int>(times.size());
    std::vector<int> substeps(n_grid);
    std::vector<double> h_grid(n_grid);
    double prev = 0.0;
    for (int s = 0; s < n_grid; ++s) {
        const double span = times[s] - prev;
        if (!(span > 0.0)) throw ConfigError("simulate_wishart: grid must be ascending");
        substeps[s] = std::max(1, static_cast<int>(std::ceil(span / cfg.dt - 1e-9)));
        h_grid[s] = span / substeps[s];
        prev = times[s];
    }
    const Matrix drift_const = params.kappa * qtq;

    detail::parallel_blocks(cfg.n_paths, 1024, [&](int p0, int p1) {
        Matrix sig(d, d), dw(d, d);
        std::normal_distribution<double> nd;
        for (int p = p0; p < p1; ++p) {
            const std::uint64_t stream = cfg.antithetic ? p / 2 : p;
            const double flip = (cfg.antithetic && (p % 2 == 1)) ? -1.0 : 1.0;
            auto rng = stream_rng(cfg.seed, stream);
            sig = params.sigma0.mat();
            Matrix root = sqrtm_spd(params.sigma0).mat();
            for (int s = 0; s < n_grid; ++s) {
                const double h = h_grid[s];
                const double sqrt_h = std::sqrt(h);
                for (int sub = 0; sub < substeps[s]; ++sub) {
                    for (int i = 0; i < d; ++i)
                        for (int j = 0; j < d; ++j) dw(i, j) = flip * sqrt_h * nd(rng);
                    const Matrix diff = root * dw * params.q.mat();
                    sig += h * (drift_const + params.m.mat() * sig +
                                sig * params.m.mat().transpose()) +
                           diff + diff.transpose();
                    root = psd_sqrt_floor(sig);
                    sig = root * root;  // projected state
                }
                out.set_sigma(p, s, sig);
            }
        }
    });
    return out;
}

PathSet simulate_jump_ou(const JumpOUParams& params, double horizon, const McConfig& cfg,
                         const std::vector<double>* grid) {
    check_config(cfg);
    if (!(horizon > 0.0)) throw ConfigError("simulate_jump_ou: horizon must be positive");
    const std::vector<double> times = grid ? *grid : default_grid(horizon, cfg.dt);
    if (times.empty() || times.front() <= 0.0)
        throw ConfigError("simulate_jump_ou: grid must be positive and ascending");

    const int d = params.dim();
    const bool noncentral = params.law.type == JumpLaw::Type::noncentral_wishart;
    int n_int = 0;
    if (noncentral) {
        const double nr = std::round(params.law.n);
        if (std::abs(params.law.n - nr) > 1e-12)
            throw UnsupportedLawError(
                "simulate_jump_ou: exact noncentral-Wishart jump sampling requires integer n");
        n_int = static_cast<int>(nr);
    }
    const Matrix chol_scale = Eigen::LLT<Matrix>(params.law.scale.mat()).matrixL();

    PathSet out(d, times, cfg.n_paths);
    out.scheme = cfg.scheme;
    out.seed = cfg.seed;
    out.antithetic = false;  // jump sampling has no useful antithetic pairing

    detail::parallel_blocks(cfg.n_paths, 1024, [&](int p0, int p1) {
        std::normal_distribution<double> nd;
        std::uniform_real_distribution<double> ud(0.0, 1.0);
        for (int p = p0; p < p1; ++p) {
            auto rng = stream_rng(cfg.seed, p);
            std::poisson_distribution<int> pd(params.lambda * horizon);
            const int n_jumps = pd(rng);
            std::vector<double> jump_times(n_jumps);
            for (int j = 0; j < n_jumps; ++j) jump_times[j] = horizon * ud(rng);
            std::sort(jump_times.begin(), jump_times.end());

            // Bartlett / Gaussian draws for the jump sizes.
            std::vector<Matrix> jumps(n_jumps);
            for (int j = 0; j < n_jumps; ++j) {
                if (!noncentral) {
                    Matrix a = Matrix::Zero(d, d);
                    for (int i = 0; i < d; ++i) {
                        std::gamma_distribution<double> gd(0.5 * (params.law.n - i), 2.0);
                        a(i, i) = std::sqrt(gd(rng));
                        for (int c = 0; c < i; ++c) a(i, c) = nd(rng);
                    }
                    const Matrix la = chol_scale * a;
                    jumps[j] = la * la.transpose();
                } else {
                    Matrix y(n_int, d);
                    for (int r = 0; r < n_int; ++r)
                        for (int c = 0; c < d; ++c) y(r, c) = nd(rng);
                    y = y * chol_scale.transpose();
                    y.topRows(d) += params.law.mean.mat().transpose();
                    jumps[j] = y.transpose() * y;
                }
            }

            // Deterministic flow between events; exact propagation.
            Matrix sig = params.sigma0.mat();
            double t_cur = 0.0;
            size_t next_jump = 0;
            for (size_t s = 0; s < times.size(); ++s) {
                const double t_target = times[s];
                while (next_jump < jump_times.size() && jump_times[next_jump] <= t_target) {
                    const Matrix e = expm(Matrix((jump_times[next_jump] - t_cur) *
                                                 params.m.mat()));
                    sig = e * sig * e.transpose() + jumps[next_jump];
                    t_cur = jump_times[next_jump];
                    ++next_jump;
                }
                const Matrix e = expm(Matrix((t_target - t_cur) * params.m.mat()));
                sig = e * sig * e.transpose();
                t_cur = t_target;
                out.set_sigma(p, static_cast<int>(s), sig);
            }
        }
    });
    return out;
}

namespace {

PathSet simulate_terminal(const Model& model, double t, const McConfig& cfg) {
    const std::vector<double> grid{t};
    if (std::holds_alternative<WishartParams>(model))
        return simulate_wishart(std::get<WishartParams>(model), t, cfg, &grid);
    return simulate_jump_ou(std::get<JumpOUParams>(model), t, cfg, &grid);
}

McEstimate mc_reduce(int n_paths, bool antithetic, const std::function<double(int)>& value) {
    const int n_samples = antithetic ? n_paths / 2 : n_paths;
    std::vector<double> sums, sqsums;
    const int block = 1024;
    const int n_blocks = (n_samples + block - 1) / block;
    sums.assign(n_blocks, 0.0);
    sqsums.assign(n_blocks, 0.0);
    detail::parallel_blocks(n_samples, block, [&](int s0, int s1) {
        double s = 0.0, ss = 0.0;
        for (int i = s0; i < s1; ++i) {
            const double v =
                antithetic ? 0.5 * (value(2 * i) + value(2 * i + 1)) : value(i);
            s += v;
            ss += v * v;
        }
        sums[s0 / block] = s;
        sqsums[s0 / block] = ss;
    });
    double s = 0.0, ss = 0.0;
    for (int b = 0; b < n_blocks; ++b) {
        s += sums[b];
        ss += sqsums[b];
    }
    const double mean = s / n_samples;
    const double var = std::max(0.0, ss / n_samples - mean * mean);
    McEstimate est;
    est.mean = mean;
    est.std_error = std::sqrt(var / n_samples);
    est.n_paths = n_paths;
    return est;
}

McEstimate mc_caplet_like(bool is_caplet, int k, double strike, double notional,
                          const Model& model, const MartingaleFamily& family,
                          const McConfig& cfg) {
    const double t_fix = family.curve.maturity(k);
    const PathSet paths = simulate_terminal(model, t_fix, cfg);

    const ForwardCoeffs fc = forward_coeffs(model, family, k, t_fix);
    const double tau_a = family.horizon() - t_fix;
    const RealCoeffs ck1 = psi_phi(model, tau_a, family.u(k + 1));
    if (!ck1.valid) throw TransformBlowUpError("mc_price: transform infinite");
    const double m0 =
        martingale_value(model, family, 0.0, k + 1, model_sigma0(model));
    const double kk = 1.0 + family.curve.delta_t() * strike;
    const double bond_pay = family.curve.bond(k + 1);

    const Matrix b_mat = fc.b_k.mat();
    const Matrix psi1 = ck1.psi.mat();
    auto value = [&](int p) {
        const double y = fc.a_k + paths.trace_with(p, 0, b_mat);
        const double weight = std::exp(-ck1.phi - paths.trace_with(p, 0, psi1)) / m0;
        const double payoff =
            is_caplet ? std::max(std::exp(y) - kk, 0.0) : std::max(kk - std::exp(y), 0.0);
        return bond_pay * weight * payoff * notional;
    };
    return mc_reduce(paths.n_paths(), paths.antithetic, value);
}

}  // namespace

McEstimate mc_price(const InstrumentSpec& instrument, const Model& model,
                    const MartingaleFamily& family, const McConfig& cfg) {
    if (std::holds_alternative<CapletSpec>(instrument)) {
        const auto& s = std::get<CapletSpec>(instrument);
        return mc_caplet_like(true, s.k, s.strike, s.notional, model, family, cfg);
    }
    if (std::holds_alternative<FloorletSpec>(instrument)) {
        const auto& s = std::get<FloorletSpec>(instrument);
        return mc_caplet_like(false, s.k, s.strike, s.notional, model, family, cfg);
    }
    if (std::holds_alternative<CapSpec>(instrument)) {
        const auto& s = std::get<CapSpec>(instrument);
        if (s.k_first > s.k_last) throw ConfigError("mc_price: empty cap range");
        McEstimate total;
        double var = 0.0;
        for (int k = s.k_first; k <= s.k_last; ++k) {
            McConfig ck = cfg;
            ck.seed = splitmix64(cfg.seed + static_cast<std::uint64_t>(k));
            const McEstimate e = mc_caplet_like(true, k, s.strike, s.notional, model, family, ck);
            total.mean += e.mean;
            var += e.std_error * e.std_error;
            total.n_paths = e.n_paths;
        }
        total.std_error = std::sqrt(var);
        return total;
    }

    const auto& s = std::get<SwaptionSpec>(instrument);
    if (s.i < 1 || s.i >= s.m || s.m > family.n_tenors())
        throw std::out_of_range("mc_price: need 1 <= i < m <= N");
    const double t_i = family.curve.maturity(s.i);
    const PathSet paths = simulate_terminal(model, t_i, cfg);

    const double tau_i = family.horizon() - t_i;
    const int cnt = s.m - s.i + 1;
    std::vector<double> phis(cnt), coupons(cnt);
    std::vector<Matrix> psis(cnt);
    for (int j = s.i; j <= s.m; ++j) {
        const RealCoeffs c = psi_phi(model, tau_i, family.u(j));
        if (!c.valid) throw TransformBlowUpError("mc_price: transform infinite");
        phis[j - s.i] = c.phi;
        psis[j - s.i] = c.psi.mat();
        coupons[j - s.i] = (j == s.i) ? 0.0 : s.coupon(j, family.curve.delta_t());
    }
    const double m0_i = martingale_value(model, family, 0.0, s.i, model_sigma0(model));
    const double bond_i = family.curve.bond(s.i);
    const bool receiver = s.side == SwaptionSide::receiver;

    auto value = [&](int p) {
        const double log_mi = -phis[0] - paths.trace_with(p, 0, psis[0]);
        double cb = 0.0;
        for (int j = 1; j < cnt; ++j)
            cb += coupons[j] *
                  std::exp(-phis[j] - paths.trace_with(p, 0, psis[j]) - log_mi);
        const double payoff = receiver ? std::max(cb - 1.0, 0.0) : std::max(1.0 - cb, 0.0);
        const double weight = std::exp(log_mi) / m0_i;
        return bond_i * weight * payoff;
    };
    return mc_reduce(paths.n_paths(), paths.antithetic, value);
}

McEstimate mc_laplace(const Model& model, double t, const SymMat& u, const McConfig& cfg) {
    const PathSet paths = simulate_terminal(model, t, cfg);
    const Matrix um = u.mat();
    auto value = [&](int p) { return std::exp(-paths.trace_with(p, 0, um)); };
    return mc_reduce(paths.n_paths(), paths.antithetic, value);
}

McEstimate mc_coupon_bond_moment(const Model& model, const MartingaleFamily& family,
                                 const SwaptionSpec& spec, int q, int measure_k,
                                 const McConfig& cfg) {
    if (measure_k < spec.i || measure_k > spec.m)
        throw std::out_of_range("mc_coupon_bond_moment: measure index in {i..m}");
    const double t_i = family.curve.maturity(spec.i);
    const PathSet paths = simulate_terminal(model, t_i, cfg);

    const double tau_i = family.horizon() - t_i;
    const int cnt = spec.m - spec.i + 1;
    std::vector<double> phis(cnt), coupons(cnt);
    std::vector<Matrix> psis(cnt);
    for (int j = spec.i; j <= spec.m; ++j) {
        const RealCoeffs c = psi_phi(model, tau_i, family.u(j));
        if (!c.valid) throw TransformBlowUpError("mc_coupon_bond_moment: transform infinite");
        phis[j - spec.i] = c.phi;
        psis[j - spec.i] = c.psi.mat();
        coupons[j - spec.i] = (j == spec.i) ? 0.0 : spec.coupon(j, family.curve.delta_t());
    }
    const double m0_k =
        martingale_value(model, family, 0.0, measure_k, model_sigma0(model));
    const int kpos = measure_k - spec.i;

    auto value = [&](int p) {
        const double log_mi = -phis[0] - paths.trace_with(p, 0, psis[0]);
        double cb = 0.0;
        for (int j = 1; j < cnt; ++j)
            cb += coupons[j] *
                  std::exp(-phis[j] - paths.trace_with(p, 0, psis[j]) - log_mi);
        const double weight =
            std::exp(-phis[kpos] - paths.trace_with(p, 0, psis[kpos])) / m0_k;
        return weight * std::pow(cb, q);
    };
    return mc_reduce(paths.n_paths(), paths.antithetic, value);
}

}  // namespace wlm
