#include "ddpc/config.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

namespace ddpc {

using nlohmann::json;

namespace {

Eigen::MatrixXd matrix_from_json(const json& j) {
    if (j.is_number()) {
        Eigen::MatrixXd m(1, 1);
        m(0, 0) = j.get<double>();
        return m;
    }
    const auto rows = j.size();
    const auto cols = j.at(0).size();
    Eigen::MatrixXd m(rows, cols);
    for (size_t i = 0; i < rows; ++i)
        for (size_t k = 0; k < cols; ++k) m(i, k) = j.at(i).at(k).get<double>();
    return m;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (int i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

Eigen::VectorXd vector_from_json(const json& j) {
    if (j.is_number()) {
        Eigen::VectorXd v(1);
        v(0) = j.get<double>();
        return v;
    }
    Eigen::VectorXd v(j.size());
    for (size_t i = 0; i < j.size(); ++i) v(i) = j.at(i).get<double>();
    return v;
}

json vector_to_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (int i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

DesignKind design_from_string(const std::string& s) {
    if (s == "subspace") return DesignKind::subspace;
    if (s == "wasserstein") return DesignKind::wasserstein;
    if (s == "smm") return DesignKind::smm;
    if (s == "mmse") return DesignKind::mmse;
    throw std::invalid_argument("unknown predictor design '" + s + "'");
}

Construction construction_from_string(const std::string& s) {
    if (s == "hankel") return Construction::hankel;
    if (s == "page") return Construction::page;
    if (s == "columns") return Construction::columns;
    throw std::invalid_argument("unknown construction '" + s + "'");
}

Variant variant_from_string(const std::string& s) {
    if (s == "n_ddpc") return Variant::n_ddpc;
    if (s == "kf_ddpc") return Variant::kf_ddpc;
    if (s == "s_ddpc") return Variant::s_ddpc;
    throw std::invalid_argument("unknown variant '" + s + "'");
}

int line_of_offset(const std::string& text, size_t byte) {
    int line = 1;
    for (size_t i = 0; i < byte && i < text.size(); ++i)
        if (text[i] == '\n') ++line;
    return line;
}

}  // namespace

const char* to_string(DesignKind k) {
    switch (k) {
        case DesignKind::subspace: return "subspace";
        case DesignKind::wasserstein: return "wasserstein";
        case DesignKind::smm: return "smm";
        case DesignKind::mmse: return "mmse";
    }
    return "unknown";
}

const char* to_string(Construction c) {
    switch (c) {
        case Construction::hankel: return "hankel";
        case Construction::page: return "page";
        case Construction::columns: return "columns";
    }
    return "unknown";
}

ScenarioConfig ScenarioConfig::paper_sec5() {
    ScenarioConfig cfg;
    cfg.scenario = "paper-sec5";
    cfg.model.A.resize(4, 4);
    cfg.model.A << 0.36, 0.64, 0.07, 0.02,
                   0.42, 0.58, 0.02, 0.07,
                  -9.34, 9.34, 0.23, 0.58,
                   5.88, -5.88, 0.39, -0.39;
    cfg.model.B.resize(4, 1);
    cfg.model.B << 0.29, 0.03, 4.90, 1.07;
    cfg.model.E.resize(4, 1);
    cfg.model.E << 0.03, 0.20, 1.07, 3.48;
    cfg.model.C.resize(1, 4);
    cfg.model.C << 1, 0, 0, 0;
    cfg.model.D = Eigen::MatrixXd::Zero(1, 1);
    cfg.n_x_hint = 4;

    cfg.data.length = 500;
    cfg.data.input_std = 1.0;
    cfg.data.construction = Construction::hankel;
    cfg.design = DesignKind::mmse;

    cfg.control.Q = 20.0 * Eigen::MatrixXd::Identity(1, 1);
    cfg.control.R = Eigen::MatrixXd::Identity(1, 1);
    cfg.control.L0 = 4;
    cfg.control.Lp = 10;
    cfg.control.p = 0.95;
    cfg.control.tightening = Tightening::elementwise;
    cfg.control.distribution_mode = DistributionMode::chebyshev;
    cfg.control.variant = Variant::s_ddpc;
    cfg.control.filter_mode = FilterMode::paper_literal;
    cfg.control.steps = 100;

    // Reconstructed experiment geometry (the published figures carry no
    // numbers): step reference with symmetric bounds around it.
    cfg.reference = ReferenceSpec{"alternating", 0.0, 1.0, 25, {}};
    cfg.output_constraints.H.resize(2, 1);
    cfg.output_constraints.H << 1.0, -1.0;
    cfg.output_constraints.q.resize(2);
    cfg.output_constraints.q << 1.25, 0.25;
    cfg.input_constraints = InputConstraints::unconstrained();

    cfg.noise.sigma2 = 0.01;
    const int nwL = 1 * (cfg.control.L0 + cfg.control.Lp);
    cfg.noise.Sigma_w = 0.001 * Eigen::MatrixXd::Identity(nwL, nwL);
    cfg.noise.w_bar = Eigen::VectorXd::Zero(nwL);
    cfg.noise.distribution = NoiseKind::gaussian;
    cfg.noise.seed = 12345;

    cfg.monte_carlo = MonteCarloSpec{50, 12345};
    cfg.output_dir = "out";
    return cfg;
}

ScenarioConfig ScenarioConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("config parse error at line " +
                                    std::to_string(line_of_offset(text, e.byte)) + ": " +
                                    e.what());
    }

    ScenarioConfig cfg;
    if (j.contains("scenario")) {
        const std::string tag = j.at("scenario").get<std::string>();
        if (tag == "paper-sec5")
            cfg = paper_sec5();
        else if (!tag.empty())
            throw std::invalid_argument("unknown builtin scenario '" + tag + "'");
    }
    if (j.contains("version")) cfg.version = j.at("version").get<int>();

    if (j.contains("model")) {
        const auto& jm = j.at("model");
        cfg.model.A = matrix_from_json(jm.at("A"));
        cfg.model.B = matrix_from_json(jm.at("B"));
        cfg.model.C = matrix_from_json(jm.at("C"));
        cfg.model.D = jm.contains("D") ? matrix_from_json(jm.at("D"))
                                       : Eigen::MatrixXd::Zero(cfg.model.C.rows(),
                                                               cfg.model.B.cols());
        cfg.model.E = jm.contains("E") ? matrix_from_json(jm.at("E"))
                                       : Eigen::MatrixXd::Zero(cfg.model.A.rows(), 0);
        if (jm.contains("n_x")) cfg.n_x_hint = jm.at("n_x").get<int>();
        cfg.model.validate();
    }
    if (j.contains("data")) {
        const auto& jd = j.at("data");
        if (jd.contains("length")) cfg.data.length = jd.at("length").get<int>();
        if (jd.contains("input_std")) cfg.data.input_std = jd.at("input_std").get<double>();
        if (jd.contains("construction"))
            cfg.data.construction =
                construction_from_string(jd.at("construction").get<std::string>());
    }
    if (j.contains("design")) cfg.design = design_from_string(j.at("design").get<std::string>());
    if (j.contains("control")) {
        const auto& jc = j.at("control");
        if (jc.contains("Q")) cfg.control.Q = matrix_from_json(jc.at("Q"));
        if (jc.contains("R")) cfg.control.R = matrix_from_json(jc.at("R"));
        if (jc.contains("L0")) cfg.control.L0 = jc.at("L0").get<int>();
        if (jc.contains("horizon")) cfg.control.Lp = jc.at("horizon").get<int>();
        if (jc.contains("p")) cfg.control.p = jc.at("p").get<double>();
        if (jc.contains("tightening"))
            cfg.control.tightening = jc.at("tightening").get<std::string>() == "setwise"
                                         ? Tightening::setwise
                                         : Tightening::elementwise;
        if (jc.contains("distribution_mode"))
            cfg.control.distribution_mode =
                jc.at("distribution_mode").get<std::string>() == "gaussian"
                    ? DistributionMode::gaussian
                    : DistributionMode::chebyshev;
        if (jc.contains("variant"))
            cfg.control.variant = variant_from_string(jc.at("variant").get<std::string>());
        if (jc.contains("filter_mode"))
            cfg.control.filter_mode = jc.at("filter_mode").get<std::string>() == "full-kf"
                                          ? FilterMode::full_kf
                                          : FilterMode::paper_literal;
        if (jc.contains("steps")) cfg.control.steps = jc.at("steps").get<int>();
    }
    if (j.contains("constraints")) {
        const auto& jo = j.at("constraints");
        if (jo.contains("H")) {
            cfg.output_constraints.H = matrix_from_json(jo.at("H"));
            cfg.output_constraints.q = vector_from_json(jo.at("q"));
        } else if (jo.contains("y_max") || jo.contains("y_min")) {
            Eigen::VectorXd ymax = vector_from_json(jo.at("y_max"));
            Eigen::VectorXd ymin = vector_from_json(jo.at("y_min"));
            const int ny = static_cast<int>(ymax.size());
            cfg.output_constraints.H.resize(2 * ny, ny);
            cfg.output_constraints.H << Eigen::MatrixXd::Identity(ny, ny),
                -Eigen::MatrixXd::Identity(ny, ny);
            cfg.output_constraints.q.resize(2 * ny);
            cfg.output_constraints.q << ymax, -ymin;
        }
        if (jo.contains("u_min") || jo.contains("u_max")) {
            Eigen::VectorXd umin = vector_from_json(jo.at("u_min"));
            Eigen::VectorXd umax = vector_from_json(jo.at("u_max"));
            cfg.input_constraints = InputConstraints::box(umin, umax);
        }
    }
    if (j.contains("reference")) {
        const auto& jr = j.at("reference");
        if (jr.contains("type")) cfg.reference.type = jr.at("type").get<std::string>();
        if (jr.contains("low")) cfg.reference.low = jr.at("low").get<double>();
        if (jr.contains("high")) cfg.reference.high = jr.at("high").get<double>();
        if (jr.contains("dwell")) cfg.reference.dwell = jr.at("dwell").get<int>();
        if (jr.contains("values"))
            cfg.reference.values = jr.at("values").get<std::vector<double>>();
    }
    if (j.contains("noise")) {
        const auto& jn = j.at("noise");
        if (jn.contains("sigma2")) cfg.noise.sigma2 = jn.at("sigma2").get<double>();
        const int nwL = static_cast<int>(cfg.model.E.cols()) * (cfg.control.L0 + cfg.control.Lp);
        if (jn.contains("Sigma_w")) {
            if (jn.at("Sigma_w").is_number())
                cfg.noise.Sigma_w = jn.at("Sigma_w").get<double>() *
                                    Eigen::MatrixXd::Identity(nwL, nwL);
            else
                cfg.noise.Sigma_w = matrix_from_json(jn.at("Sigma_w"));
        }
        if (jn.contains("w_bar")) {
            if (jn.at("w_bar").is_number())
                cfg.noise.w_bar =
                    jn.at("w_bar").get<double>() * Eigen::VectorXd::Ones(nwL);
            else
                cfg.noise.w_bar = vector_from_json(jn.at("w_bar"));
        }
        if (jn.contains("distribution"))
            cfg.noise.distribution = jn.at("distribution").get<std::string>() == "uniform-scaled"
                                         ? NoiseKind::uniform_scaled
                                         : NoiseKind::gaussian;
        if (jn.contains("seed")) cfg.noise.seed = jn.at("seed").get<uint64_t>();
    }
    if (j.contains("monte_carlo")) {
        const auto& jm = j.at("monte_carlo");
        if (jm.contains("runs")) cfg.monte_carlo.runs = jm.at("runs").get<int>();
        if (jm.contains("base_seed"))
            cfg.monte_carlo.base_seed = jm.at("base_seed").get<uint64_t>();
    }
    if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();

    if (cfg.model.A.size() == 0)
        throw std::invalid_argument("config must specify a model or a builtin scenario");
    return cfg;
}

std::string ScenarioConfig::to_json_text() const {
    json j;
    j["version"] = version;
    if (!scenario.empty()) j["scenario"] = scenario;
    j["model"] = {{"A", matrix_to_json(model.A)}, {"B", matrix_to_json(model.B)},
                  {"C", matrix_to_json(model.C)}, {"D", matrix_to_json(model.D)},
                  {"E", matrix_to_json(model.E)}, {"n_x", n_x_hint}};
    j["data"] = {{"length", data.length},
                 {"input_std", data.input_std},
                 {"construction", to_string(data.construction)}};
    j["design"] = to_string(design);
    j["control"] = {
        {"Q", matrix_to_json(control.Q)},
        {"R", matrix_to_json(control.R)},
        {"L0", control.L0},
        {"horizon", control.Lp},
        {"p", control.p},
        {"tightening", control.tightening == Tightening::setwise ? "setwise" : "elementwise"},
        {"distribution_mode",
         control.distribution_mode == DistributionMode::gaussian ? "gaussian" : "chebyshev"},
        {"variant", to_string(control.variant)},
        {"filter_mode",
         control.filter_mode == FilterMode::full_kf ? "full-kf" : "paper-literal"},
        {"steps", control.steps}};
    json jo;
    jo["H"] = matrix_to_json(output_constraints.H);
    jo["q"] = vector_to_json(output_constraints.q);
    if (input_constraints.bounded()) {
        jo["Hu"] = matrix_to_json(input_constraints.Hu);
        jo["qu"] = vector_to_json(input_constraints.qu);
    }
    j["constraints"] = jo;
    json jr;
    jr["type"] = reference.type;
    jr["low"] = reference.low;
    jr["high"] = reference.high;
    jr["dwell"] = reference.dwell;
    if (!reference.values.empty()) jr["values"] = reference.values;
    j["reference"] = jr;
    j["noise"] = {{"sigma2", noise.sigma2},
                  {"Sigma_w", matrix_to_json(noise.Sigma_w)},
                  {"w_bar", vector_to_json(noise.w_bar)},
                  {"distribution",
                   noise.distribution == NoiseKind::uniform_scaled ? "uniform-scaled"
                                                                   : "gaussian"},
                  {"seed", noise.seed}};
    j["monte_carlo"] = {{"runs", monte_carlo.runs}, {"base_seed", monte_carlo.base_seed}};
    j["output_dir"] = output_dir;
    return j.dump(2) + "\n";
}

ScenarioConfig ScenarioConfig::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::invalid_argument("cannot open config file " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return from_json_text(ss.str());
}

void ScenarioConfig::save(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    os << to_json_text();
}

Eigen::MatrixXd ScenarioConfig::reference_trajectory(int steps) const {
    const int ny = model.ny();
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(ny, steps);
    if (reference.type == "values") {
        for (int t = 0; t < steps; ++t) {
            const size_t idx = std::min<size_t>(t, reference.values.empty()
                                                       ? 0
                                                       : reference.values.size() - 1);
            const double v = reference.values.empty() ? 0.0 : reference.values[idx];
            r.col(t).setConstant(v);
        }
    } else if (reference.type == "constant") {
        r.setConstant(reference.low);
    } else {  // alternating
        for (int t = 0; t < steps; ++t) {
            const bool high = (t / std::max(1, reference.dwell)) % 2 == 1;
            r.col(t).setConstant(high ? reference.high : reference.low);
        }
    }
    return r;
}

}  // namespace ddpc
