#pragma once

#include "wlm/analytics.hpp"
#include "wlm/oracle.hpp"

#include <nlohmann/json.hpp>

#include <string>

// JSON configuration: process parameters, initial curve and pricing
// defaults. Matrices are serialized row-major with an explicit "dim". All
// module-level invariants are re-checked at load with field-path errors.

namespace wlm {

struct ModelConfig {
    Model model = Model(std::in_place_type<WishartParams>, SymMat::identity(1) * 3.0,
                        SquareMat::diagonal({-0.1}), SquareMat::diagonal({0.1}), 2.0);
    TenorCurve curve = TenorCurve::from_libor_rates(0.25, {0.05, 0.05});
    FourierConfig fourier;
    int edgeworth_order = 7;
    McConfig mc;

    /// FNV-1a over the canonical serialized form; stamped into outputs.
    std::string hash() const;
};

struct ConfigParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

ModelConfig parse_config(const nlohmann::json& doc);
ModelConfig load_config(const std::string& path);
nlohmann::ordered_json to_json(const ModelConfig& cfg);

/// The parameter set used throughout the test and verification suites:
/// a 2x2 diagonal Wishart model on a 12-tenor flat curve.
ModelConfig benchmark_config();

}  // namespace wlm
