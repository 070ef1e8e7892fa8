#include "qtbias/config.hpp"

#include <cmath>
#include <set>

#include <json.hpp>

#include "qtbias/errors.hpp"

namespace qtbias {

using json = nlohmann::json;

namespace {

void require_known_keys(const json& obj, const std::string& path,
                        const std::set<std::string>& known) {
    for (const auto& [key, _] : obj.items()) {
        if (!known.count(key)) throw ConfigError(path + "." + key, "unknown key");
    }
}

double get_number(const json& obj, const std::string& path, const std::string& key,
                  double fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number()) throw ConfigError(path + "." + key, "expected a number");
    return v.get<double>();
}

std::int64_t get_int(const json& obj, const std::string& path, const std::string& key,
                     std::int64_t fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number_integer() && !v.is_number_unsigned())
        throw ConfigError(path + "." + key, "expected an integer");
    return v.get<std::int64_t>();
}

std::uint64_t get_uint(const json& obj, const std::string& path, const std::string& key,
                       std::uint64_t fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
        throw ConfigError(path + "." + key, "expected a non-negative integer");
    return v.get<std::uint64_t>();
}

std::string get_string(const json& obj, const std::string& path, const std::string& key,
                       const std::string& fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_string()) throw ConfigError(path + "." + key, "expected a string");
    return v.get<std::string>();
}

std::vector<double> get_number_list(const json& obj, const std::string& path,
                                    const std::string& key,
                                    const std::vector<double>& fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_array()) throw ConfigError(path + "." + key, "expected an array of numbers");
    std::vector<double> out;
    for (const json& e : v) {
        if (!e.is_number()) throw ConfigError(path + "." + key, "expected an array of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

PureState parse_psi0(const json& v, const std::string& path) {
    if (!v.is_array() || v.size() != 2)
        throw ConfigError(path, "expected [[re,im],[re,im]]");
    PureState psi;
    for (int i = 0; i < 2; ++i) {
        const json& c = v.at(static_cast<std::size_t>(i));
        if (!c.is_array() || c.size() != 2 || !c.at(0).is_number() || !c.at(1).is_number())
            throw ConfigError(path, "expected [[re,im],[re,im]]");
        psi.amp[i] = cplx(c.at(0).get<double>(), c.at(1).get<double>());
    }
    if (std::abs(psi.norm2() - 1.0) > 1e-12)
        throw ConfigError(path, "psi0 must be normalized within 1e-12");
    return psi;
}

BiasMode parse_mode(const std::string& s, const std::string& path) {
    if (s == "none") return BiasMode::none;
    if (s == "explicit") return BiasMode::explicit_b;
    if (s == "global") return BiasMode::global;
    if (s == "local") return BiasMode::local;
    throw ConfigError(path, "expected one of none|explicit|global|local");
}

LocalSensitivityMode parse_local_mode(const std::string& s, const std::string& path) {
    if (s == "single_branch") return LocalSensitivityMode::single_branch;
    if (s == "one_step_fi") return LocalSensitivityMode::one_step_fi;
    if (s == "weighted") return LocalSensitivityMode::weighted;
    throw ConfigError(path, "expected one of single_branch|one_step_fi|weighted");
}

}  // namespace

std::string to_string(BiasMode mode) {
    switch (mode) {
        case BiasMode::none: return "none";
        case BiasMode::explicit_b: return "explicit";
        case BiasMode::global: return "global";
        case BiasMode::local: return "local";
    }
    return "none";
}

std::string to_string(LocalSensitivityMode mode) {
    switch (mode) {
        case LocalSensitivityMode::single_branch: return "single_branch";
        case LocalSensitivityMode::one_step_fi: return "one_step_fi";
        case LocalSensitivityMode::weighted: return "weighted";
    }
    return "single_branch";
}

ExperimentConfig parse_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError("$", std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("$", "top level must be an object");
    require_known_keys(doc, "$",
                       {"model", "bias", "estimation", "sweep", "dynamics", "collapse",
                        "outputs"});

    ExperimentConfig cfg;

    if (doc.contains("model")) {
        const json& m = doc.at("model");
        if (!m.is_object()) throw ConfigError("model", "expected an object");
        require_known_keys(m, "model", {"omega", "gamma", "dt", "n_collisions", "psi0"});
        cfg.model.omega = get_number(m, "model", "omega", cfg.model.omega);
        cfg.model.gamma = get_number(m, "model", "gamma", cfg.model.gamma);
        cfg.model.dt = get_number(m, "model", "dt", cfg.model.dt);
        cfg.model.n_collisions =
            static_cast<int>(get_int(m, "model", "n_collisions", cfg.model.n_collisions));
        if (m.contains("psi0")) cfg.model.psi0 = parse_psi0(m.at("psi0"), "model.psi0");
    }
    try {
        cfg.model.validate();
    } catch (const std::exception& e) {
        throw ConfigError("model", e.what());
    }

    if (doc.contains("bias")) {
        const json& b = doc.at("bias");
        if (!b.is_object()) throw ConfigError("bias", "expected an object");
        require_known_keys(b, "bias", {"mode", "s", "b", "local_sensitivity_mode"});
        cfg.bias_mode = parse_mode(get_string(b, "bias", "mode", "none"), "bias.mode");
        cfg.bias_s = get_number(b, "bias", "s", 0.0);
        cfg.bias_b = get_number_list(b, "bias", "b", {});
        cfg.local_mode = parse_local_mode(
            get_string(b, "bias", "local_sensitivity_mode", "single_branch"),
            "bias.local_sensitivity_mode");
    }
    if (cfg.bias_mode == BiasMode::explicit_b) {
        if (static_cast<int>(cfg.bias_b.size()) != cfg.model.n_collisions)
            throw ConfigError("bias.b", "explicit mode requires b of length n_collisions");
    } else if (!cfg.bias_b.empty()) {
        if (cfg.bias_mode == BiasMode::global || cfg.bias_mode == BiasMode::local)
            throw ConfigError("bias.b", "b is forbidden for global/local modes");
        throw ConfigError("bias.b", "b requires mode=explicit");
    }

    if (doc.contains("estimation")) {
        const json& e = doc.at("estimation");
        if (!e.is_object()) throw ConfigError("estimation", "expected an object");
        require_known_keys(e, "estimation",
                           {"n_traj", "n_batches", "seed", "fd_step", "enumeration_cap",
                            "target_rel_err", "n_traj_cap"});
        cfg.n_traj = get_int(e, "estimation", "n_traj", cfg.n_traj);
        cfg.n_batches = static_cast<int>(get_int(e, "estimation", "n_batches", cfg.n_batches));
        cfg.seed = get_uint(e, "estimation", "seed", cfg.seed);
        cfg.fd_step = get_number(e, "estimation", "fd_step", cfg.fd_step);
        cfg.enumeration_cap =
            static_cast<int>(get_int(e, "estimation", "enumeration_cap", cfg.enumeration_cap));
        cfg.target_rel_err = get_number(e, "estimation", "target_rel_err", cfg.target_rel_err);
        cfg.n_traj_cap = get_int(e, "estimation", "n_traj_cap", cfg.n_traj_cap);
        if (cfg.n_batches < 2) throw ConfigError("estimation.n_batches", "must be >= 2");
        if (cfg.n_traj < cfg.n_batches)
            throw ConfigError("estimation.n_traj", "must be >= n_batches");
        if (cfg.fd_step < 0.0) throw ConfigError("estimation.fd_step", "must be >= 0");
    }

    if (doc.contains("sweep")) {
        const json& s = doc.at("sweep");
        if (!s.is_object()) throw ConfigError("sweep", "expected an object");
        require_known_keys(s, "sweep", {"s_values"});
        cfg.sweep_s = get_number_list(s, "sweep", "s_values", {});
    }

    if (doc.contains("dynamics")) {
        const json& d = doc.at("dynamics");
        if (!d.is_object()) throw ConfigError("dynamics", "expected an object");
        require_known_keys(d, "dynamics", {"t_final", "dt_int", "snapshot_stride", "dt_list"});
        cfg.t_final = get_number(d, "dynamics", "t_final", cfg.t_final);
        cfg.dt_int = get_number(d, "dynamics", "dt_int", cfg.dt_int);
        cfg.snapshot_stride =
            static_cast<int>(get_int(d, "dynamics", "snapshot_stride", cfg.snapshot_stride));
        cfg.limit_dt = get_number_list(d, "dynamics", "dt_list", cfg.limit_dt);
        if (!(cfg.t_final > 0.0)) throw ConfigError("dynamics.t_final", "must be > 0");
        if (!(cfg.dt_int > 0.0)) throw ConfigError("dynamics.dt_int", "must be > 0");
    }

    if (doc.contains("collapse")) {
        const json& c = doc.at("collapse");
        if (!c.is_object()) throw ConfigError("collapse", "expected an object");
        require_known_keys(c, "collapse", {"input", "a_range", "b_range", "grid"});
        cfg.collapse_input = get_string(c, "collapse", "input", "");
        const std::vector<double> ar =
            get_number_list(c, "collapse", "a_range", {cfg.a_min, cfg.a_max});
        const std::vector<double> br =
            get_number_list(c, "collapse", "b_range", {cfg.b_min, cfg.b_max});
        if (ar.size() != 2 || br.size() != 2)
            throw ConfigError("collapse", "ranges must be [lo, hi]");
        cfg.a_min = ar[0];
        cfg.a_max = ar[1];
        cfg.b_min = br[0];
        cfg.b_max = br[1];
        cfg.collapse_grid = static_cast<int>(get_int(c, "collapse", "grid", cfg.collapse_grid));
    }

    if (doc.contains("outputs")) {
        const json& o = doc.at("outputs");
        if (!o.is_object()) throw ConfigError("outputs", "expected an object");
        require_known_keys(o, "outputs",
                           {"directory", "formats", "threads", "trajectory_dump",
                            "histogram_bins", "histogram_log10"});
        cfg.out_dir = get_string(o, "outputs", "directory", cfg.out_dir);
        if (o.contains("formats")) {
            const json& f = o.at("formats");
            if (!f.is_array()) throw ConfigError("outputs.formats", "expected an array");
            cfg.formats.clear();
            for (const json& e : f) {
                if (!e.is_string()) throw ConfigError("outputs.formats", "expected strings");
                const std::string fmt = e.get<std::string>();
                if (fmt != "csv" && fmt != "json")
                    throw ConfigError("outputs.formats", "expected csv|json");
                cfg.formats.push_back(fmt);
            }
        }
        cfg.threads = static_cast<int>(get_int(o, "outputs", "threads", cfg.threads));
        cfg.trajectory_dump = get_int(o, "outputs", "trajectory_dump", cfg.trajectory_dump);
        cfg.histogram_bins =
            static_cast<int>(get_int(o, "outputs", "histogram_bins", cfg.histogram_bins));
        if (o.contains("histogram_log10")) {
            if (!o.at("histogram_log10").is_boolean())
                throw ConfigError("outputs.histogram_log10", "expected a boolean");
            cfg.histogram_log10 = o.at("histogram_log10").get<bool>();
        }
    }

    return cfg;
}

std::string emit_config(const ExperimentConfig& cfg) {
    json doc;
    doc["model"] = {{"omega", cfg.model.omega},
                    {"gamma", cfg.model.gamma},
                    {"dt", cfg.model.dt},
                    {"n_collisions", cfg.model.n_collisions},
                    {"psi0",
                     {{cfg.model.psi0.amp[0].real(), cfg.model.psi0.amp[0].imag()},
                      {cfg.model.psi0.amp[1].real(), cfg.model.psi0.amp[1].imag()}}}};
    doc["bias"] = {{"mode", to_string(cfg.bias_mode)},
                   {"s", cfg.bias_s},
                   {"local_sensitivity_mode", to_string(cfg.local_mode)}};
    if (!cfg.bias_b.empty()) doc["bias"]["b"] = cfg.bias_b;
    doc["estimation"] = {{"n_traj", cfg.n_traj},
                         {"n_batches", cfg.n_batches},
                         {"seed", cfg.seed},
                         {"fd_step", cfg.fd_step},
                         {"enumeration_cap", cfg.enumeration_cap},
                         {"target_rel_err", cfg.target_rel_err},
                         {"n_traj_cap", cfg.n_traj_cap}};
    if (!cfg.sweep_s.empty()) doc["sweep"] = {{"s_values", cfg.sweep_s}};
    doc["dynamics"] = {{"t_final", cfg.t_final},
                       {"dt_int", cfg.dt_int},
                       {"snapshot_stride", cfg.snapshot_stride},
                       {"dt_list", cfg.limit_dt}};
    doc["collapse"] = {{"input", cfg.collapse_input},
                       {"a_range", {cfg.a_min, cfg.a_max}},
                       {"b_range", {cfg.b_min, cfg.b_max}},
                       {"grid", cfg.collapse_grid}};
    doc["outputs"] = {{"directory", cfg.out_dir},
                      {"formats", cfg.formats},
                      {"threads", cfg.threads},
                      {"trajectory_dump", cfg.trajectory_dump},
                      {"histogram_bins", cfg.histogram_bins},
                      {"histogram_log10", cfg.histogram_log10}};
    return doc.dump(2) + "\n";
}

std::uint64_t config_fingerprint(const ExperimentConfig& cfg) {
    // Identify the numeric experiment: fields that cannot change any number
    // (output placement, worker count) stay out of the fingerprint.
    ExperimentConfig canon_cfg = cfg;
    canon_cfg.out_dir.clear();
    canon_cfg.threads = 0;
    const std::string canon = emit_config(canon_cfg);
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : canon) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

}  // namespace qtbias
