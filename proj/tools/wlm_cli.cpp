// Command-line surface for the matrix-affine Libor engine: curve fitting,
// pricing, surface generation, path simulation and the verification suite.
//
// Exit codes: 0 ok, 1 internal error, 2 domain/config error, 3 verification
// failure.

#include "wlm/verify.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

using namespace wlm;

int cmd_fit(const std::string& config_path) {
    const ModelConfig cfg = load_config(config_path);
    const MartingaleFamily family = fit_term_structure(cfg.model, cfg.curve);
    const double c_scale = -family.base_direction(0, 0);
    std::cout << "base direction: -c*I with c = " << c_scale << "\n";
    std::cout << "k    xi_k                  residual\n";
    for (int k = 1; k <= family.n_tenors(); ++k) {
        double residual = 0.0;
        if (k < family.n_tenors()) {
            const auto f = laplace(cfg.model, family.horizon(), family.u(k));
            residual = f ? std::abs(*f - cfg.curve.ratio(k)) / cfg.curve.ratio(k) : -1.0;
        }
        std::printf("%-4d %-21.15g %.3g\n", k, family.xi(k), residual);
    }
    return 0;
}

int cmd_price(const std::string& config_path, const std::string& instrument, int k, int expiry,
              int swap_end, double strike, bool atm, int order, bool verify,
              std::uint64_t seed_override, bool has_seed) {
    ModelConfig cfg = load_config(config_path);
    if (has_seed) cfg.mc.seed = seed_override;
    const MartingaleFamily family = fit_term_structure(cfg.model, cfg.curve);
    const double dt = cfg.curve.delta_t();

    double price = 0.0;
    InstrumentSpec mc_spec = CapletSpec{};
    if (instrument == "caplet" || instrument == "floorlet") {
        if (atm) strike = cfg.curve.forward_libor(k);
        const CapletSpec spec{k, strike, 1.0};
        price = instrument == "caplet" ? price_caplet(cfg.model, family, spec, cfg.fourier)
                                       : price_floorlet(cfg.model, family, spec, cfg.fourier);
        if (instrument == "caplet")
            mc_spec = spec;
        else
            mc_spec = FloorletSpec{k, strike, 1.0};
    } else if (instrument == "cap" || instrument == "floor") {
        if (atm) strike = cfg.curve.forward_libor(k);
        price = instrument == "cap"
                    ? price_cap(cfg.model, family, k, swap_end, strike, cfg.fourier)
                    : price_floor(cfg.model, family, k, swap_end, strike, cfg.fourier);
        mc_spec = CapSpec{k, swap_end, strike, 1.0};
        if (instrument == "floor" && verify)
            throw std::invalid_argument("--verify supports caplet/floorlet/cap/swaption");
    } else if (instrument == "swaption") {
        if (atm) {
            double annuity = 0.0;
            for (int j = expiry + 1; j <= swap_end; ++j) annuity += dt * cfg.curve.bond(j);
            strike = (cfg.curve.bond(expiry) - cfg.curve.bond(swap_end)) / annuity;
        }
        const SwaptionSpec spec{expiry, swap_end, strike, SwaptionSide::receiver};
        price = price_swaption(cfg.model, family, spec, order > 0 ? order : cfg.edgeworth_order);
        mc_spec = spec;
    } else {
        throw std::invalid_argument("unknown instrument: " + instrument);
    }

    std::printf("%s price: %.12g   (strike %.6g)\n", instrument.c_str(), price, strike);
    if (verify) {
        const McEstimate est = mc_price(mc_spec, cfg.model, family, cfg.mc);
        const double z = std::abs(price - est.mean) / std::max(est.std_error, 1e-300);
        std::printf("mc cross-check: %.12g +- %.3g (%d paths, seed %llu), |z| = %.2f\n",
                    est.mean, est.std_error, est.n_paths,
                    static_cast<unsigned long long>(cfg.mc.seed), z);
        if (z > 3.0) return 3;
    }
    return 0;
}

int cmd_surface(const std::string& config_path, const std::string& kind,
                const std::string& out_path, const std::string& format) {
    const ModelConfig cfg = load_config(config_path);
    const MartingaleFamily family = fit_term_structure(cfg.model, cfg.curve);
    const int n = cfg.curve.n_tenors();

    SurfaceGrid grid;
    if (kind == "caplet") {
        std::vector<int> tenors;
        for (int k = 1; k <= n - 1; ++k) tenors.push_back(k);
        std::vector<double> strikes;
        const double atm = cfg.curve.forward_libor(1);
        for (double mny = 0.8; mny <= 1.2 + 1e-9; mny += 0.05)
            strikes.push_back(atm * mny);
        grid = build_caplet_surface(cfg.model, family, strikes, tenors, cfg.fourier,
                                    cfg.hash());
    } else if (kind == "swaption-atm") {
        std::vector<int> expiries, lengths;
        for (int i = 1; i <= n - 1; ++i) expiries.push_back(i);
        for (int len = 1; len <= n - 1; ++len) lengths.push_back(len);
        grid = atm_swaption_surface(cfg.model, family, expiries, lengths,
                                    cfg.edgeworth_order, cfg.hash());
    } else if (kind == "atm-term") {
        std::vector<int> tenors;
        for (int k = 1; k <= n - 1; ++k) tenors.push_back(k);
        const auto ts = atm_term_structure(cfg.model, family, tenors, cfg.fourier);
        grid.kind = "atm-term";
        grid.row_label = "maturity";
        grid.col_label = "atm";
        grid.cols = {0.0};
        grid.rows.resize(ts.size());
        grid.prices.setZero(static_cast<int>(ts.size()), 1);
        grid.implied_vols.setZero(static_cast<int>(ts.size()), 1);
        grid.ok.setOnes(static_cast<int>(ts.size()), 1);
        grid.model_hash = cfg.hash();
        for (size_t t = 0; t < ts.size(); ++t) {
            grid.rows[t] = ts[t].first;
            grid.implied_vols(static_cast<int>(t), 0) = ts[t].second;
        }
    } else {
        throw std::invalid_argument("unknown surface kind: " + kind);
    }

    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot open output file: " + out_path);
    if (format == "csv")
        out << grid.to_csv();
    else
        out << grid.to_json().dump(2) << "\n";
    std::cout << "wrote " << kind << " surface to " << out_path << "\n";
    return 0;
}

int cmd_simulate(const std::string& config_path, double horizon, int paths,
                 std::uint64_t seed_override, bool has_seed, const std::string& out_path) {
    ModelConfig cfg = load_config(config_path);
    if (paths > 0) cfg.mc.n_paths = paths;
    if (has_seed) cfg.mc.seed = seed_override;
    if (horizon <= 0.0) horizon = cfg.curve.horizon();

    const PathSet set =
        std::holds_alternative<WishartParams>(cfg.model)
            ? simulate_wishart(std::get<WishartParams>(cfg.model), horizon, cfg.mc)
            : simulate_jump_ou(std::get<JumpOUParams>(cfg.model), horizon, cfg.mc);

    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot open output file: " + out_path);
    out << "# schema_version=1 kind=paths seed=" << set.seed << " scheme="
        << (set.biased ? "euler_projected" : "exact_squared_ou") << "\n";
    out << "path,t";
    const int d = set.dim();
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) out << ",sigma_" << i + 1 << j + 1;
    out << "\n";
    char buf[64];
    for (int p = 0; p < set.n_paths(); ++p)
        for (size_t s = 0; s < set.times().size(); ++s) {
            out << p;
            std::snprintf(buf, sizeof buf, ",%.17g", set.times()[s]);
            out << buf;
            const Matrix sig = set.sigma(p, static_cast<int>(s));
            for (int i = 0; i < d; ++i)
                for (int j = i; j < d; ++j) {
                    std::snprintf(buf, sizeof buf, ",%.17g", sig(i, j));
                    out << buf;
                }
            out << "\n";
        }
    std::cout << "wrote " << set.n_paths() << " paths (" << set.times().size()
              << " steps, scheme " << (set.biased ? "euler_projected, biased" : "exact")
              << ") to " << out_path << "\n";
    return 0;
}

int cmd_verify(const std::string& config_path, const std::string& suite) {
    load_config(config_path);  // config is validated; the suite pins its own setup
    const auto s = suite == "quick" ? verify::Suite::quick : verify::Suite::full;
    const verify::Report report = verify::run_acceptance(s, std::cout);
    return report.all_pass() ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Matrix-affine (Wishart) Libor market model pricing engine"};
    app.require_subcommand(1);

    std::string config_path, instrument = "caplet", kind = "caplet", out_path, format = "csv";
    std::string suite = "full";
    int k = 1, expiry = 1, swap_end = 2, order = 0, paths = 0;
    double strike = 0.0, horizon = 0.0;
    bool atm = false, verify_flag = false;
    std::uint64_t seed = 0;

    auto* fit = app.add_subcommand("fit", "Fit the martingale family to the initial curve");
    fit->add_option("config", config_path)->required();

    auto* price = app.add_subcommand("price", "Price an instrument");
    price->add_option("config", config_path)->required();
    price->add_option("--instrument", instrument, "caplet|floorlet|cap|floor|swaption");
    price->add_option("-k,--tenor", k, "caplet fixing index / cap first index");
    price->add_option("--end", swap_end, "cap last index / swap end index");
    price->add_option("--expiry", expiry, "swaption expiry index");
    price->add_option("-K,--strike", strike);
    price->add_flag("--atm", atm, "strike at the forward rate / par rate");
    price->add_option("--order", order, "Edgeworth order (default from config)");
    price->add_flag("--verify", verify_flag, "run the MC cross-check");
    auto* seed_opt = price->add_option("--seed", seed, "override the MC seed");

    auto* surface = app.add_subcommand("surface", "Write a vol surface");
    surface->add_option("config", config_path)->required();
    surface->add_option("--kind", kind, "caplet|swaption-atm|atm-term");
    surface->add_option("--out", out_path)->required();
    surface->add_option("--format", format, "csv|json");

    auto* simulate = app.add_subcommand("simulate", "Dump simulated paths to CSV");
    simulate->add_option("config", config_path)->required();
    simulate->add_option("--horizon", horizon);
    simulate->add_option("--paths", paths);
    auto* seed_opt2 = simulate->add_option("--seed", seed);
    simulate->add_option("--out", out_path)->required();

    auto* verify_cmd = app.add_subcommand("verify", "Run the verification suite");
    verify_cmd->add_option("config", config_path)->required();
    verify_cmd->add_option("--suite", suite, "quick|full");

    CLI11_PARSE(app, argc, argv);

    try {
        if (fit->parsed()) return cmd_fit(config_path);
        if (price->parsed())
            return cmd_price(config_path, instrument, k, expiry, swap_end, strike, atm, order,
                             verify_flag, seed, !seed_opt->empty());
        if (surface->parsed()) return cmd_surface(config_path, kind, out_path, format);
        if (simulate->parsed())
            return cmd_simulate(config_path, horizon, paths, seed, !seed_opt2->empty(),
                                out_path);
        if (verify_cmd->parsed()) return cmd_verify(config_path, suite);
    } catch (const wlm::ConfigParseError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const wlm::InsufficientMassError& e) {
        std::cerr << "fit error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "domain error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "domain error: " << e.what() << "\n";
        return 2;
    } catch (const std::out_of_range& e) {
        std::cerr << "domain error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
