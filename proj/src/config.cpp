#include "wlm/config.hpp"

#include <fstream>

namespace wlm {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ConfigParseError(path + ": " + what);
}

const json& at(const json& j, const std::string& path, const char* key) {
    if (!j.is_object() || !j.contains(key)) fail(path + "/" + key, "missing field");
    return j[key];
}

double num(const json& j, const std::string& path, const char* key) {
    const json& v = at(j, path, key);
    if (!v.is_number()) fail(path + "/" + key, "expected a number");
    return v.get<double>();
}

int integer(const json& j, const std::string& path, const char* key) {
    const json& v = at(j, path, key);
    if (!v.is_number_integer()) fail(path + "/" + key, "expected an integer");
    return v.get<int>();
}

Matrix matrix_field(const json& j, const std::string& path, const char* key) {
    const std::string p = path + "/" + key;
    const json& v = at(j, path, key);
    if (!v.is_object()) fail(p, "expected an object {dim, data}");
    const int d = integer(v, p, "dim");
    if (d < 1) fail(p + "/dim", "dim must be >= 1");
    const json& data = at(v, p, "data");
    if (!data.is_array() || static_cast<int>(data.size()) != d * d)
        fail(p + "/data", "expected a row-major array of dim*dim numbers");
    Matrix m(d, d);
    for (int i = 0; i < d; ++i)
        for (int c = 0; c < d; ++c) {
            const json& e = data[static_cast<size_t>(i) * d + c];
            if (!e.is_number()) fail(p + "/data", "matrix entries must be numbers");
            m(i, c) = e.get<double>();
        }
    return m;
}

ordered_json matrix_json(const Matrix& m) {
    ordered_json j;
    j["dim"] = static_cast<int>(m.rows());
    std::vector<double> data;
    data.reserve(static_cast<size_t>(m.rows()) * m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(i, c));
    j["data"] = data;
    return j;
}

Model parse_model(const json& doc) {
    const std::string process = at(doc, "", "process").get<std::string>();
    try {
        if (process == "wishart") {
            const json& w = at(doc, "", "wishart");
            return WishartParams(SymMat(matrix_field(w, "/wishart", "sigma0")),
                                 SquareMat(matrix_field(w, "/wishart", "m")),
                                 SquareMat(matrix_field(w, "/wishart", "q")),
                                 num(w, "/wishart", "kappa"));
        }
        if (process == "jump_ou") {
            const json& w = at(doc, "", "jump_ou");
            const json& lawj = at(w, "/jump_ou", "jump_law");
            const std::string type = at(lawj, "/jump_ou/jump_law", "type").get<std::string>();
            JumpLaw law;
            if (type == "wishart") {
                law = JumpLaw::wishart(num(lawj, "/jump_ou/jump_law", "n"),
                                       SymMat(matrix_field(lawj, "/jump_ou/jump_law", "scale")));
            } else if (type == "noncentral_wishart") {
                law = JumpLaw::noncentral_wishart(
                    num(lawj, "/jump_ou/jump_law", "n"),
                    SymMat(matrix_field(lawj, "/jump_ou/jump_law", "scale")),
                    SquareMat(matrix_field(lawj, "/jump_ou/jump_law", "mean")));
            } else {
                fail("/jump_ou/jump_law/type", "expected wishart | noncentral_wishart");
            }
            return JumpOUParams(SymMat(matrix_field(w, "/jump_ou", "sigma0")),
                                SquareMat(matrix_field(w, "/jump_ou", "m")),
                                num(w, "/jump_ou", "lambda"), law);
        }
    } catch (const std::invalid_argument& e) {
        fail("/" + process, e.what());
    } catch (const NotSpdError& e) {
        fail("/" + process, e.what());
    }
    fail("/process", "expected wishart | jump_ou");
}

TenorCurve parse_curve(const json& doc) {
    const json& c = at(doc, "", "curve");
    const double dt = num(c, "/curve", "delta_t");
    try {
        if (c.contains("libor_rates")) {
            const auto rates = c["libor_rates"].get<std::vector<double>>();
            return TenorCurve::from_libor_rates(dt, rates);
        }
        if (c.contains("bond_ratios")) {
            const auto ratios = c["bond_ratios"].get<std::vector<double>>();
            return TenorCurve::from_bond_ratios(dt, ratios, num(c, "/curve", "terminal_bond"));
        }
    } catch (const std::invalid_argument& e) {
        fail("/curve", e.what());
    }
    fail("/curve", "expected libor_rates or bond_ratios + terminal_bond");
}

}  // namespace

namespace {
ModelConfig parse_config_checked(const nlohmann::json& doc);
}

ModelConfig parse_config(const nlohmann::json& doc) {
    try {
        return parse_config_checked(doc);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigParseError(std::string("config: ") + e.what());
    }
}

namespace {

ModelConfig parse_config_checked(const nlohmann::json& doc) {
    if (!doc.is_object()) throw ConfigParseError("config root must be an object");
    if (doc.contains("schema_version") && doc["schema_version"].get<int>() != 1)
        fail("/schema_version", "unsupported schema version");

    ModelConfig cfg;
    cfg.model = parse_model(doc);
    cfg.curve = parse_curve(doc);

    if (doc.contains("fourier")) {
        const json& f = doc["fourier"];
        cfg.fourier.alpha = num(f, "/fourier", "alpha");
        cfg.fourier.n_nodes = integer(f, "/fourier", "n_nodes");
        cfg.fourier.v_max = num(f, "/fourier", "v_max");
        if (!(cfg.fourier.alpha > 0.0)) fail("/fourier/alpha", "alpha must be positive");
        if (cfg.fourier.n_nodes < 2 || (cfg.fourier.n_nodes & (cfg.fourier.n_nodes - 1)) != 0)
            fail("/fourier/n_nodes", "n_nodes must be a power of two");
        if (!(cfg.fourier.v_max > 0.0)) fail("/fourier/v_max", "v_max must be positive");
    }
    if (doc.contains("edgeworth_order")) {
        cfg.edgeworth_order = doc["edgeworth_order"].get<int>();
        if (cfg.edgeworth_order < 3 || cfg.edgeworth_order > 7)
            fail("/edgeworth_order", "order must be in [3, 7]");
    }
    if (doc.contains("mc")) {
        const json& m = doc["mc"];
        cfg.mc.n_paths = integer(m, "/mc", "n_paths");
        cfg.mc.dt = num(m, "/mc", "dt");
        cfg.mc.seed = at(m, "/mc", "seed").get<std::uint64_t>();
        const std::string scheme = at(m, "/mc", "scheme").get<std::string>();
        if (scheme == "exact_squared_ou")
            cfg.mc.scheme = McScheme::exact_squared_ou;
        else if (scheme == "euler_projected")
            cfg.mc.scheme = McScheme::euler_projected;
        else
            fail("/mc/scheme", "expected exact_squared_ou | euler_projected");
        cfg.mc.antithetic = at(m, "/mc", "antithetic").get<bool>();
        if (cfg.mc.n_paths < 1000) fail("/mc/n_paths", "n_paths must be >= 1000");
        if (!(cfg.mc.dt > 0.0) || cfg.mc.dt > cfg.curve.delta_t() / 8.0 + 1e-12)
            fail("/mc/dt", "dt must be positive and <= delta_t/8");
    }

    if (model_dim(cfg.model) > 5)
        fail("/", "dimension above the supported range (d <= 5)");
    return cfg;
}

}  // namespace

ModelConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigParseError("cannot open config file: " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigParseError(std::string("config parse error: ") + e.what());
    }
    return parse_config(doc);
}

nlohmann::ordered_json to_json(const ModelConfig& cfg) {
    ordered_json doc;
    doc["schema_version"] = 1;
    if (std::holds_alternative<WishartParams>(cfg.model)) {
        const auto& p = std::get<WishartParams>(cfg.model);
        doc["process"] = "wishart";
        ordered_json w;
        w["sigma0"] = matrix_json(p.sigma0.mat());
        w["m"] = matrix_json(p.m.mat());
        w["q"] = matrix_json(p.q.mat());
        w["kappa"] = p.kappa;
        doc["wishart"] = w;
    } else {
        const auto& p = std::get<JumpOUParams>(cfg.model);
        doc["process"] = "jump_ou";
        ordered_json w;
        w["sigma0"] = matrix_json(p.sigma0.mat());
        w["m"] = matrix_json(p.m.mat());
        w["lambda"] = p.lambda;
        ordered_json lawj;
        lawj["type"] =
            p.law.type == JumpLaw::Type::wishart ? "wishart" : "noncentral_wishart";
        lawj["n"] = p.law.n;
        lawj["scale"] = matrix_json(p.law.scale.mat());
        if (p.law.type == JumpLaw::Type::noncentral_wishart)
            lawj["mean"] = matrix_json(p.law.mean.mat());
        w["jump_law"] = lawj;
        doc["jump_ou"] = w;
    }

    ordered_json curve;
    curve["delta_t"] = cfg.curve.delta_t();
    std::vector<double> ratios(cfg.curve.n_tenors());
    for (int k = 1; k <= cfg.curve.n_tenors(); ++k) ratios[k - 1] = cfg.curve.ratio(k);
    curve["bond_ratios"] = ratios;
    curve["terminal_bond"] = cfg.curve.terminal_bond();
    doc["curve"] = curve;

    ordered_json f;
    f["alpha"] = cfg.fourier.alpha;
    f["n_nodes"] = cfg.fourier.n_nodes;
    f["v_max"] = cfg.fourier.v_max;
    doc["fourier"] = f;
    doc["edgeworth_order"] = cfg.edgeworth_order;

    ordered_json m;
    m["n_paths"] = cfg.mc.n_paths;
    m["dt"] = cfg.mc.dt;
    m["seed"] = cfg.mc.seed;
    m["scheme"] = cfg.mc.scheme == McScheme::exact_squared_ou ? "exact_squared_ou"
                                                              : "euler_projected";
    m["antithetic"] = cfg.mc.antithetic;
    doc["mc"] = m;
    return doc;
}

std::string ModelConfig::hash() const {
    const std::string s = to_json(*this).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

ModelConfig benchmark_config() {
    ModelConfig cfg;
    cfg.model = WishartParams(SymMat::diagonal({3.75, 3.45}),
                              SquareMat::diagonal({-0.3125e-3, -0.5e-3}),
                              SquareMat::diagonal({0.034, 0.042}), 3.0);
    cfg.curve = TenorCurve::from_libor_rates(
        1.0 / 3.0, std::vector<double>(12, 0.05));
    cfg.fourier = FourierConfig{1.0, 1 << 19, 30000.0};
    cfg.edgeworth_order = 7;
    cfg.mc = McConfig{200000, 1.0 / 24.0, 42, McScheme::exact_squared_ou, true};
    return cfg;
}

}  // namespace wlm
