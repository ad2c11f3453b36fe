#include "latwave/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "latwave/ringsim.hpp"
#include "latwave/validate.hpp"
#include "latwave/whitham.hpp"

namespace latwave {

namespace fs = std::filesystem;

namespace {

constexpr const char* kArtifactVersion = "latwave-run/1";

// ---------------------------------------------------------------- schema helpers

/// Collects "path: message" violations while reading a JSON object.
struct Reader {
    std::vector<std::string>& errors;

    void fail(const std::string& path, const std::string& msg) { errors.push_back(path + ": " + msg); }

    bool object(const json& j, const std::string& path) {
        if (!j.is_object()) {
            fail(path, "expected an object");
            return false;
        }
        return true;
    }
    void known_keys(const json& j, const std::string& path, const std::set<std::string>& keys) {
        for (auto it = j.begin(); it != j.end(); ++it)
            if (!keys.count(it.key())) fail(path + "." + it.key(), "unknown field");
    }
    void number(const json& j, const char* key, const std::string& path, double& out, bool positive, bool nonneg = false) {
        if (!j.contains(key)) return;
        const std::string p = path + "." + key;
        if (!j[key].is_number()) return fail(p, "expected a number");
        const double v = j[key].get<double>();
        if (!std::isfinite(v)) return fail(p, "must be finite");
        if (positive && !(v > 0)) return fail(p, "must be positive");
        if (nonneg && v < 0) return fail(p, "must be non-negative");
        out = v;
    }
    void integer(const json& j, const char* key, const std::string& path, int& out, int lo) {
        if (!j.contains(key)) return;
        const std::string p = path + "." + key;
        if (!j[key].is_number_integer()) return fail(p, "expected an integer");
        const long long v = j[key].get<long long>();
        if (v < lo || v > 1000000000LL) return fail(p, "must be an integer >= " + std::to_string(lo));
        out = static_cast<int>(v);
    }
    void boolean(const json& j, const char* key, const std::string& path, bool& out) {
        if (!j.contains(key)) return;
        if (!j[key].is_boolean()) return fail(path + "." + key, "expected true or false");
        out = j[key].get<bool>();
    }
};

std::string join(const std::vector<std::string>& v, const std::string& sep) {
    std::string out;
    for (const auto& s : v) out += (out.empty() ? "" : sep) + s;
    return out;
}

/// "p/N" or {"p": .., "N": ..}
void read_wavenumber(Reader& r, const json& k, RunConfig& cfg) {
    long long p = 0, N = 0;
    if (k.is_string()) {
        const std::string s = k.get<std::string>();
        const auto slash = s.find('/');
        try {
            if (slash == std::string::npos) throw std::invalid_argument("no slash");
            std::size_t a = 0, b = 0;
            p = std::stoll(s.substr(0, slash), &a);
            N = std::stoll(s.substr(slash + 1), &b);
            if (a != slash || b != s.size() - slash - 1) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            return r.fail("wave.k", "expected \"p/N\" with integers p and N");
        }
    } else if (k.is_object()) {
        r.known_keys(k, "wave.k", {"p", "N"});
        if (!k.contains("p") || !k["p"].is_number_integer()) return r.fail("wave.k.p", "required integer");
        if (!k.contains("N") || !k["N"].is_number_integer()) return r.fail("wave.k.N", "required integer");
        p = k["p"].get<long long>();
        N = k["N"].get<long long>();
    } else {
        return r.fail("wave.k", "expected \"p/N\" or {\"p\": int, \"N\": int}");
    }
    bool ok = true;
    if (p == 0) r.fail("wave.k", "k = 0 is not a wave; p must be nonzero"), ok = false;
    if (N < 2) r.fail("wave.k.N", "denominator must be >= 2"), ok = false;
    if (N > 10000 || std::llabs(p) > 10000) r.fail("wave.k", "p and N must be at most 10000"), ok = false;
    if (ok) {
        cfg.p = static_cast<int>(p);
        cfg.N = static_cast<int>(N);
    }
}

}  // namespace

// ---------------------------------------------------------------- stages

const std::vector<std::string>& stage_names() {
    static const std::vector<std::string> names{"profile", "continue", "spectrum", "whitham", "validate", "simulate", "report"};
    return names;
}

std::vector<std::string> stage_prerequisites(const std::string& stage) {
    if (stage == "profile" || stage == "report") return {};
    if (stage == "continue" || stage == "spectrum" || stage == "whitham") return {"profile"};
    if (stage == "validate") return {"spectrum", "whitham"};
    if (stage == "simulate") return {"whitham"};
    throw Error(ErrorKind::SchemaError, "unknown stage '" + stage + "'; available: " + join(stage_names(), ", "));
}

std::vector<std::string> stage_closure(const std::vector<std::string>& requested) {
    std::set<std::string> need;
    std::vector<std::string> todo(requested.begin(), requested.end());
    if (todo.empty()) todo = stage_names();
    while (!todo.empty()) {
        const std::string s = todo.back();
        todo.pop_back();
        if (!need.insert(s).second) continue;
        for (const auto& q : stage_prerequisites(s)) todo.push_back(q);
    }
    std::vector<std::string> out;
    for (const auto& s : stage_names())
        if (need.count(s)) out.push_back(s);
    return out;
}

// ---------------------------------------------------------------- config

RunConfig parse_config_json(const json& j) {
    std::vector<std::string> errors;
    Reader r{errors};
    RunConfig cfg;
    if (!r.object(j, "$")) throw Error(ErrorKind::SchemaError, join(errors, "; "));
    r.known_keys(j, "$", {"system", "wave", "solver", "continuation", "spectrum", "validation", "simulation", "stages",
                          "output", "seed", "jobs"});

    std::optional<SystemSpec> sys;
    const std::size_t errors_before_system = errors.size();
    if (!j.contains("system")) {
        r.fail("system", "required");
    } else if (r.object(j["system"], "system")) {
        const json& js = j["system"];
        r.known_keys(js, "system", {"name", "params"});
        if (!js.contains("name") || !js["name"].is_string()) {
            r.fail("system.name", "required string; available: " + join(available_systems(), ", "));
        } else {
            cfg.system = js["name"].get<std::string>();
            bool known = false;
            for (const auto& n : available_systems()) known = known || n == cfg.system;
            if (!known) r.fail("system.name", "unknown system '" + cfg.system + "'; available: " + join(available_systems(), ", "));
        }
        if (js.contains("params") && r.object(js["params"], "system.params")) {
            for (auto it = js["params"].begin(); it != js["params"].end(); ++it) {
                if (!it->is_number() || !std::isfinite(it->get<double>()))
                    r.fail("system.params." + it.key(), "expected a finite number");
                else
                    cfg.params[it.key()] = it->get<double>();
            }
        }
        if (errors.size() == errors_before_system) {
            try {
                sys = make_system(cfg.system, cfg.params);
            } catch (const Error& e) {
                r.fail("system.params", e.what());
            }
        }
    }

    if (!j.contains("wave")) {
        r.fail("wave", "required");
    } else if (r.object(j["wave"], "wave")) {
        const json& jw = j["wave"];
        r.known_keys(jw, "wave", {"k", "targets", "modes", "padding"});
        if (!jw.contains("k")) r.fail("wave.k", "required");
        else read_wavenumber(r, jw["k"], cfg);
        r.integer(jw, "modes", "wave", cfg.K, 4);
        r.integer(jw, "padding", "wave", cfg.padding, 1);
        std::vector<double> t;
        if (jw.contains("targets")) {
            if (!jw["targets"].is_array()) {
                r.fail("wave.targets", "expected an array of numbers");
            } else {
                for (std::size_t i = 0; i < jw["targets"].size(); ++i) {
                    const json& x = jw["targets"][i];
                    if (!x.is_number() || !std::isfinite(x.get<double>()))
                        r.fail("wave.targets[" + std::to_string(i) + "]", "expected a finite number");
                    else
                        t.push_back(x.get<double>());
                }
            }
        }
        cfg.targets = Eigen::Map<const Vec>(t.data(), static_cast<Eigen::Index>(t.size()));
        if (sys && static_cast<int>(t.size()) != sys->param_count())
            r.fail("wave.targets", "system '" + cfg.system + "' (" + class_name(sys->cls) + ") needs " +
                                       std::to_string(sys->param_count()) + " targets (M..., E), got " +
                                       std::to_string(t.size()));
    }

    if (j.contains("solver") && r.object(j["solver"], "solver")) {
        const json& x = j["solver"];
        r.known_keys(x, "solver", {"tol", "max_iter"});
        r.number(x, "tol", "solver", cfg.solve.tol, true);
        r.integer(x, "max_iter", "solver", cfg.solve.max_iter, 1);
    }
    if (j.contains("continuation") && r.object(j["continuation"], "continuation")) {
        const json& x = j["continuation"];
        r.known_keys(x, "continuation", {"parameter", "values"});
        ContinuationSpec c;
        if (x.contains("parameter")) {
            if (!x["parameter"].is_string()) r.fail("continuation.parameter", "expected a string");
            else c.parameter = x["parameter"].get<std::string>();
        }
        if (sys) {
            const auto names = parameter_names(*sys);
            if (std::find(names.begin(), names.end(), c.parameter) == names.end())
                r.fail("continuation.parameter", "'" + c.parameter + "' is not one of " + join(names, ", "));
        }
        if (!x.contains("values") || !x["values"].is_array() || x["values"].empty()) {
            r.fail("continuation.values", "required non-empty array of numbers");
        } else {
            for (const auto& v : x["values"]) {
                if (!v.is_number()) r.fail("continuation.values", "expected numbers only");
                else c.values.push_back(v.get<double>());
            }
        }
        cfg.continuation = c;
    }
    if (j.contains("spectrum") && r.object(j["spectrum"], "spectrum")) {
        const json& x = j["spectrum"];
        r.known_keys(x, "spectrum", {"xi_max", "eps0", "rtol", "atol"});
        r.number(x, "xi_max", "spectrum", cfg.spectrum.xi_max, false, true);
        r.number(x, "eps0", "spectrum", cfg.spectrum.eps0, false, true);
        r.number(x, "rtol", "spectrum", cfg.spectrum.rtol, true);
        r.number(x, "atol", "spectrum", cfg.spectrum.atol, true);
        if (cfg.N >= 2 && cfg.spectrum.xi_max > kPi / cfg.N) r.fail("spectrum.xi_max", "must not exceed pi / N");
    }
    if (j.contains("validation") && r.object(j["validation"], "validation")) {
        const json& x = j["validation"];
        r.known_keys(x, "validation", {"rd_fit", "system_speeds", "jordan", "duality", "derivative_fd", "rel_tol", "omega_tol"});
        r.boolean(x, "rd_fit", "validation", cfg.validation.rd_fit);
        r.boolean(x, "system_speeds", "validation", cfg.validation.system_speeds);
        r.boolean(x, "jordan", "validation", cfg.validation.jordan);
        r.boolean(x, "duality", "validation", cfg.validation.duality);
        r.boolean(x, "derivative_fd", "validation", cfg.validation.derivative_fd);
        r.number(x, "rel_tol", "validation", cfg.validation.rel_tol, true);
        r.number(x, "omega_tol", "validation", cfg.validation.omega_tol, true);
    }
    if (j.contains("simulation") && r.object(j["simulation"], "simulation")) {
        const json& x = j["simulation"];
        SimulationSpec& m = cfg.simulation;
        r.known_keys(x, "simulation", {"ring_cells", "recurrence_periods", "recurrence_tol", "energy_periods", "packet",
                                       "packet_cells", "packet_sigma", "packet_amplitude", "rtol", "atol"});
        r.integer(x, "ring_cells", "simulation", m.ring_cells, 1);
        r.integer(x, "recurrence_periods", "simulation", m.recurrence_periods, 1);
        r.number(x, "recurrence_tol", "simulation", m.recurrence_tol, true);
        r.integer(x, "energy_periods", "simulation", m.energy_periods, 1);
        r.boolean(x, "packet", "simulation", m.packet);
        r.integer(x, "packet_cells", "simulation", m.packet_cells, 8);
        r.number(x, "packet_sigma", "simulation", m.packet_sigma, true);
        r.number(x, "packet_amplitude", "simulation", m.packet_amplitude, true);
        r.number(x, "rtol", "simulation", m.rtol, true);
        r.number(x, "atol", "simulation", m.atol, true);
    }
    if (j.contains("stages")) {
        if (!j["stages"].is_array()) {
            r.fail("stages", "expected an array of stage names");
        } else {
            for (const auto& s : j["stages"]) {
                const std::string name = s.is_string() ? s.get<std::string>() : s.dump();
                if (std::find(stage_names().begin(), stage_names().end(), name) == stage_names().end())
                    r.fail("stages", "unknown stage " + name + "; available: " + join(stage_names(), ", "));
                else
                    cfg.stages.push_back(name);
            }
        }
    }
    if (j.contains("output")) {
        if (!j["output"].is_string() || j["output"].get<std::string>().empty()) r.fail("output", "expected a directory path");
        else cfg.out_dir = j["output"].get<std::string>();
    }
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) r.fail("seed", "expected a non-negative integer");
        else cfg.seed = j["seed"].get<unsigned>();
    }
    r.integer(j, "jobs", "$", cfg.jobs, 1);

    if (!errors.empty()) throw Error(ErrorKind::SchemaError, join(errors, "; "));
    return cfg;
}

RunConfig parse_config_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::SchemaError, std::string("$: not valid JSON (") + e.what() + ")");
    }
    return parse_config_json(j);
}

RunConfig parse_config(const std::string& path) { return parse_config_text(read_text(path)); }

json config_to_json(const RunConfig& cfg) {
    json j;
    j["system"]["name"] = cfg.system;
    json params = json::object();
    for (const auto& [key, v] : default_params(cfg.system)) params[key] = cfg.params.count(key) ? cfg.params.at(key) : v;
    j["system"]["params"] = params;
    j["wave"]["k"] = {{"p", cfg.p}, {"N", cfg.N}};
    j["wave"]["targets"] = vec_to_json(cfg.targets);
    j["wave"]["modes"] = cfg.K;
    j["wave"]["padding"] = cfg.padding;
    j["solver"] = {{"tol", cfg.solve.tol}, {"max_iter", cfg.solve.max_iter}};
    if (cfg.continuation) j["continuation"] = {{"parameter", cfg.continuation->parameter}, {"values", cfg.continuation->values}};
    j["spectrum"] = {{"xi_max", cfg.spectrum.xi_max}, {"eps0", cfg.spectrum.eps0}, {"rtol", cfg.spectrum.rtol},
                     {"atol", cfg.spectrum.atol}};
    const ValidationSpec& v = cfg.validation;
    j["validation"] = {{"rd_fit", v.rd_fit},   {"system_speeds", v.system_speeds}, {"jordan", v.jordan},
                       {"duality", v.duality}, {"derivative_fd", v.derivative_fd}, {"rel_tol", v.rel_tol},
                       {"omega_tol", v.omega_tol}};
    const SimulationSpec& m = cfg.simulation;
    j["simulation"] = {{"ring_cells", m.ring_cells},     {"recurrence_periods", m.recurrence_periods},
                       {"recurrence_tol", m.recurrence_tol}, {"energy_periods", m.energy_periods},
                       {"packet", m.packet},             {"packet_cells", m.packet_cells},
                       {"packet_sigma", m.packet_sigma}, {"packet_amplitude", m.packet_amplitude},
                       {"rtol", m.rtol},                 {"atol", m.atol}};
    j["stages"] = cfg.stages.empty() ? stage_names() : cfg.stages;
    j["output"] = cfg.out_dir;
    j["seed"] = cfg.seed;
    j["jobs"] = cfg.jobs;
    return j;
}

std::string config_hash(const RunConfig& cfg) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : config_to_json(cfg).dump()) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

json manifest_to_json(const RunManifest& m) {
    json j;
    j["artifact_version"] = m.artifact_version;
    j["config_hash"] = m.config_hash;
    j["started"] = m.started;
    j["finished"] = m.finished;
    j["config"] = m.config;
    j["stages"] = json::array();
    for (const auto& s : m.stages)
        j["stages"].push_back({{"name", s.name}, {"status", s.status}, {"message", s.message},
                               {"auto_enabled", s.auto_enabled}, {"files", s.files}});
    j["files"] = m.files;
    j["exit_code"] = m.exit_code;
    return j;
}

// ---------------------------------------------------------------- run

namespace {

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json cplx_to_json(cplx z) { return json::array({z.real(), z.imag()}); }

json check_to_json(const Check& c) {
    return {{"name", c.name}, {"value", c.value}, {"tol", c.tol}, {"pass", c.pass}, {"note", c.note}};
}

/// In-memory results shared by the stages of one run.
struct Context {
    Context(const RunConfig& c, fs::path d) : cfg(c), dir(std::move(d)) {}
    const RunConfig& cfg;
    fs::path dir;
    std::optional<SystemSpec> sys;
    std::optional<WaveProfile> wave;
    std::optional<WaveDerivatives> wd;
    std::optional<RDWhitham> rd;
    std::optional<WhithamJacobian> jac;
    std::optional<TrackResult> track;
    std::optional<EpsSelection> eps;
    StageStatus* stage = nullptr;
    bool validation_failed = false;

    void write(const std::string& name, const std::string& text) {
        write_text_atomic((dir / name).string(), text);
        stage->files.push_back(name);
    }
    void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }
    void checks(json& out, const std::vector<Check>& cs) {
        for (const auto& c : cs) {
            out.push_back(check_to_json(c));
            if (!c.pass) validation_failed = true;
        }
    }
};

double default_xi_max(const RunConfig& cfg) { return cfg.spectrum.xi_max > 0 ? cfg.spectrum.xi_max : 0.1 * kPi / cfg.N; }

MonodromyOptions mono_options(const RunConfig& cfg) { return {cfg.spectrum.rtol, cfg.spectrum.atol}; }

void stage_profile(Context& c) {
    const RunConfig& cfg = c.cfg;
    c.sys = make_system(cfg.system, cfg.params);
    c.wave = seed_wave(*c.sys, cfg.p, cfg.N, cfg.targets, cfg.K, cfg.padding, cfg.solve);
    c.wd = wave_derivatives(*c.sys, *c.wave);
    const WaveProfile& u = *c.wave;
    json j;
    j["system"] = cfg.system;
    j["class"] = class_name(c.sys->cls);
    j["k"] = {{"p", u.p}, {"N", u.N}, {"value", u.k}};
    j["omega"] = u.omega;
    j["period"] = u.period();
    j["speed"] = u.speed();
    j["residual"] = u.residual;
    j["iterations"] = u.iterations;
    j["parameters"] = vec_to_json(u.params);
    j["kernel_singular_values"] = vec_to_json(c.wd->kernel_singular_values);
    j["adjoint_residual"] = c.wd->adjoint_residual;
    j["wave"] = wave_to_json(u);
    c.write_json("profile.json", j);
}

void stage_continue(Context& c) {
    ContinuationSpec spec;
    if (c.cfg.continuation) {
        spec = *c.cfg.continuation;
    } else {
        for (int i = 1; i <= 4; ++i) spec.values.push_back(c.wave->k * (1.0 + 0.005 * i));
    }
    const ContinuationCurve cc = continue_family(*c.sys, *c.wave, spec.parameter, spec.values, c.cfg.solve);
    std::ostringstream csv;
    csv << spec.parameter << ",omega,residual,iterations,step\n";
    for (std::size_t i = 0; i < cc.samples.size(); ++i)
        csv << fmt_double(cc.values[i]) << "," << fmt_double(cc.samples[i].omega) << "," << fmt_double(cc.samples[i].residual)
            << "," << cc.samples[i].iterations << "," << fmt_double(i < cc.step_sizes.size() ? cc.step_sizes[i] : 0.0) << "\n";
    c.write("continuation.csv", csv.str());
    c.write_json("continuation.json", {{"parameter", spec.parameter}, {"requested", spec.values}, {"reached", cc.samples.size()},
                                       {"complete", cc.complete}, {"max_jump", cc.max_jump}, {"message", cc.message}});
    if (!cc.complete) throw Error(ErrorKind::NoConvergence, "continuation stopped early: " + cc.message);
}

void stage_spectrum(Context& c) {
    const SystemSpec& s = *c.sys;
    const WaveProfile& u = *c.wave;
    const BlochMonodromy m0 = monodromy(SymbolGenerator(s, u, 0.0), mono_options(c.cfg));
    const EigenPairs ep = eig_dense(m0.S0);
    c.eps = select_eps0(ep.values);
    const double radius = c.cfg.spectrum.eps0 > 0 ? c.cfg.spectrum.eps0 : tracking_radius(*c.eps);
    TrackOptions to;
    to.mono = mono_options(c.cfg);
    to.jobs = c.cfg.jobs;
    c.track = track_branches(s, u, symmetric_grid(default_xi_max(c.cfg)), radius, to);
    c.write("branches.csv", branches_csv(c.track->branches));
    json ev = json::array();
    for (Eigen::Index i = 0; i < ep.values.size(); ++i) ev.push_back(cplx_to_json(ep.values(i)));
    json j;
    j["xi_max"] = default_xi_max(c.cfg);
    j["eps0"] = c.eps->eps0;
    j["tracking_radius"] = radius;
    j["critical"] = c.eps->critical;
    j["expected_branches"] = expected_branches(s);
    j["floquet_multipliers_xi0"] = ev;
    j["liouville_xi0"] = m0.liouville_rel_err;
    j["max_liouville"] = c.track->max_liouville;
    j["refinements"] = c.track->refinements;
    j["segments"] = m0.segments;
    c.write_json("spectrum.json", j);
}

json jacobian_json(const WhithamJacobian& w) {
    json j;
    j["params"] = w.params;
    j["derivative_source"] = w.derivative_source;
    j["domega"] = vec_to_json(w.domega);
    j["fluxes"] = {{"F", vec_to_json(w.fluxes.F)}, {"S", w.fluxes.S}};
    j["variants"] = json::array();
    for (const auto& v : w.variants) {
        json speeds = json::array();
        for (Eigen::Index i = 0; i < v.cs.speeds.size(); ++i) speeds.push_back(cplx_to_json(v.cs.speeds(i)));
        j["variants"].push_back({{"label", v.label}, {"G", mat_to_json(v.G)}, {"speeds", speeds},
                                 {"hyperbolicity", hyperbolicity_name(v.cs.verdict)}, {"eig_residual", v.cs.residual}});
    }
    return j;
}

void stage_whitham(Context& c) {
    const SystemSpec& s = *c.sys;
    const WaveProfile& u = *c.wave;
    json j;
    j["class"] = class_name(s.cls);
    if (s.cls == SystemClass::ReactionDiffusion) {
        c.rd = rd_whitham(s, u, *c.wd);
        j["omega"] = c.rd->omega;
        j["dk_omega"] = c.rd->dk_omega;
        j["group_velocity"] = c.rd->group_velocity;
        j["diffusion"] = c.rd->diffusion;
        j["jacobian"] = jacobian_json(whitham_jacobian(s, u, *c.wd));
    } else {
        c.jac = whitham_jacobian(s, u, *c.wd);
        j["jacobian"] = jacobian_json(*c.jac);
        if (c.cfg.validation.derivative_fd) {
            const FdDerivatives fd = parameter_derivatives_fd(s, u, 1e-3, c.cfg.solve);
            DerivativeConsistency dc = compare_jacobians(*c.jac, whitham_jacobian_fd(s, u, fd));
            dc.richardson_gap = fd.richardson_gap;
            json e = json::array();
            for (std::size_t i = 0; i < dc.entries.size(); ++i)
                e.push_back({{"entry", dc.entries[i]}, {"bordered", dc.bordered[i]},
                             {"finite_difference", dc.finite_difference[i]}, {"rel_diff", dc.rel_diff[i]}});
            j["derivative_consistency"] = {{"entries", e}, {"max_rel_diff", dc.max_rel_diff},
                                           {"richardson_gap", dc.richardson_gap}, {"warning", dc.warning}};
        }
    }
    c.write_json("whitham.json", j);
}

double analytic_group_velocity(const SystemSpec& s, const WaveProfile& u) {
    if (s.name != "lambda_omega") return NAN;
    return -2.0 * s.params.at("mu") * s.params.at("c1") * std::sin(kTwoPi * u.k);
}

void stage_validate(Context& c) {
    const SystemSpec& s = *c.sys;
    const WaveProfile& u = *c.wave;
    const ValidationSpec& vs = c.cfg.validation;
    json j;
    j["class"] = class_name(s.cls);
    j["checks"] = json::array();
    if (s.cls == SystemClass::ReactionDiffusion) {
        if (vs.rd_fit) {
            if (c.track->branches.size() != 1)
                throw Error(ErrorKind::BranchCountMismatch, "RD validation needs exactly one critical branch");
            const ValidationReport r = validate_rd(s, u, c.track->branches[0], *c.rd, analytic_group_velocity(s, u));
            c.checks(j["checks"], r.checks);
            j["rd"] = {{"xi_max", default_xi_max(c.cfg)}, {"a_fit", r.fit.a}, {"d_fit", r.fit.b},
                       {"a_two_term", r.fit.a_two_term}, {"d_two_term", r.fit.b_two_term},
                       {"dk_omega", c.rd->dk_omega}, {"group_velocity", c.rd->group_velocity},
                       {"diffusion", c.rd->diffusion}, {"analytic_a", std::isnan(analytic_group_velocity(s, u))
                                                                          ? json(nullptr) : json(analytic_group_velocity(s, u))},
                       {"remainder_slope", r.fit.remainder_slope}, {"sideband_unstable", r.fit.sideband_unstable},
                       {"xi", r.fit.xi}, {"remainder", r.fit.remainder}};
        }
    } else if (vs.system_speeds) {
        SystemValidationOptions opt;
        opt.rel_tol = vs.rel_tol;
        opt.omega_tol = vs.omega_tol;
        opt.track.mono = opt.riesz.mono = mono_options(c.cfg);
        opt.track.jobs = c.cfg.jobs;
        const ValidationReport r = validate_system(s, u, *c.wd, *c.jac, opt);
        c.checks(j["checks"], r.checks);
        json vel = json::array(), sp = json::array(), ve = json::object(), sh = json::array();
        for (const auto& v : r.velocities) vel.push_back(cplx_to_json(v));
        for (const auto& v : r.speeds) sp.push_back(cplx_to_json(v));
        for (const auto& [name, err] : r.variant_errors) ve[name] = err;
        for (const auto& [x, g] : r.shrink_history) sh.push_back({x, g});
        j["system"] = {{"xi0", r.xi0}, {"velocities", vel}, {"speeds", sp}, {"assignment", r.assignment},
                       {"variant", r.variant}, {"variant_errors", ve}, {"shrink_history", sh},
                       {"omega_tilde_xi", r.omega_tilde_xi}, {"omega_tilde_error", r.omega_tilde_error},
                       {"omega_tilde", cmat_to_json(r.omega_tilde)}, {"TG", mat_to_json(r.TG)}};
    }
    std::vector<Check> extra;
    extra.push_back(check_le("Liouville on tracked monodromies", c.track->max_liouville, 1e-8));
    if (vs.jordan) {
        const JordanStructure js = jordan_structure(s, u, *c.wd, mono_options(c.cfg));
        extra.push_back(Check{"multiplicity of 1 in S0", double(js.multiplicity), double(js.expected),
                              js.multiplicity == js.expected, "expected " + std::to_string(js.expected)});
        extra.push_back(check_le("k-derivative identity", js.k_residual, 1e-7));
        extra.push_back(check_le("S0 V^zeta = V^zeta", js.zeta_residual, 1e-7));
        for (std::size_t i = 0; i < js.dM_residual.size(); ++i)
            extra.push_back(check_le("S0 V^dM" + std::to_string(i), js.dM_residual[i], 1e-7));
        if (s.cls == SystemClass::Hamiltonian) extra.push_back(check_le("S0 V^dE", js.dE_residual, 1e-7));
        extra.push_back(check_le("Liouville at xi = 0", js.liouville, 1e-8));
        j["jordan"] = {{"multiplicity", js.multiplicity}, {"expected", js.expected}, {"eps0", js.eps.eps0},
                       {"omega0_rank", js.omega0_rank}, {"eigvec_overlap", js.eigvec_overlap}};
    }
    if (vs.duality) {
        const DualityAudit da = duality_audit(s, u, *c.wd, c.cfg.seed);
        extra.push_back(check_le("duality (i) lift", da.lift_residual, 1e-9));
        extra.push_back(check_le("duality (ii) shift", da.shift_residual, 1e-9));
        extra.push_back(check_le("duality (iii) pairing", da.pairing_residual, 1e-7));
        extra.push_back(check_le("duality (iv) constancy", da.constancy_residual, 1e-9));
        j["duality"] = {{"pairing_value", da.pairing_value}, {"seed", c.cfg.seed}};
    }
    c.checks(j["checks"], extra);
    bool pass = true;
    for (const auto& x : j["checks"]) pass = pass && x["pass"].get<bool>();
    j["passed"] = pass;
    c.write_json("validation.json", j);
}

void stage_simulate(Context& c) {
    const SystemSpec& s = *c.sys;
    const WaveProfile& u = *c.wave;
    const SimulationSpec& sim = c.cfg.simulation;
    const RingOptions ro{sim.rtol, sim.atol};
    json j;
    j["checks"] = json::array();
    std::vector<Check> cs;

    const Recurrence rec = wave_recurrence(s, u, sim.ring_cells, sim.recurrence_periods, ro);
    j["recurrence"] = {{"L", rec.L}, {"periods", sim.recurrence_periods}, {"drift", rec.drift}, {"max_drift", rec.max_drift},
                       {"steps", rec.stats.steps}};
    cs.push_back(check_le("wave recurrence drift", rec.max_drift, sim.recurrence_tol));

    // trajectory summary over the energy window (one period for dissipative classes)
    const int periods = s.cls == SystemClass::Hamiltonian ? sim.energy_periods : sim.recurrence_periods;
    const double t_end = periods * u.period();
    std::vector<double> times;
    const int samples = 20 * periods;
    for (int i = 0; i <= samples; ++i) times.push_back(t_end * i / samples);
    const RingState U0 = wave_ring_state(u, sim.ring_cells);
    const TrajectoryRecord tr = integrate_ring(s, U0, t_end, times, ro);
    c.write("trajectory.csv", trajectory_csv(tr));
    if (s.cls == SystemClass::Mixed) {
        double drift = 0.0;
        for (const auto& sum : tr.component_sums)
            for (int i = 0; i < s.d1; ++i)
                drift = std::max(drift, std::abs(sum(i) - tr.component_sums[0](i)) / std::max(1.0, std::abs(tr.component_sums[0](i))));
        cs.push_back(check_le("conserved component sums", drift, 1e-8));
        j["conservation_drift"] = drift;
    }
    if (s.cls == SystemClass::Hamiltonian) {
        const EnergyAudit ea = energy_audit(s, U0, t_end, 40, ro);
        cs.push_back(check_le("total energy drift", ea.total_drift, 1e-8));
        cs.push_back(check_le("local energy balance", ea.local_residual, 1e-6));
        j["energy"] = {{"periods", sim.energy_periods}, {"energy0", ea.energy0}, {"total_drift", ea.total_drift},
                       {"local_residual", ea.local_residual}, {"audit_points", ea.audit_points}};
    }
    if (sim.packet && s.cls == SystemClass::ReactionDiffusion) {
        PacketOptions po;
        po.cells = sim.packet_cells;
        po.sigma = sim.packet_sigma;
        po.amplitude = sim.packet_amplitude;
        const PacketResult pr = wave_packet_velocity(s, u, c.rd->dk_omega, po);
        c.write("packet_centroid.csv", packet_csv(pr));
        const double rel = std::abs(pr.velocity - pr.predicted) / std::max(std::abs(pr.predicted), 1e-12);
        cs.push_back(check_le("packet velocity vs -d_k omega (relative)", rel, 0.1, "sites per unit time"));
        j["packet"] = {{"L", pr.L}, {"t_end", pr.t_end}, {"velocity", pr.velocity}, {"predicted", pr.predicted},
                       {"velocity_per_cell", pr.velocity_per_cell}, {"k_dk_omega", u.k * c.rd->dk_omega}};
    }
    c.checks(j["checks"], cs);
    c.write_json("simulation.json", j);
}

/// Removes files owned by an earlier manifest in the same directory so nothing stale stays around.
void clear_previous(const fs::path& dir) {
    const fs::path mf = dir / "manifest.json";
    if (!fs::exists(mf)) return;
    try {
        const json old = json::parse(read_text(mf.string()));
        for (const auto& f : old.value("files", json::array())) fs::remove(dir / f.get<std::string>());
    } catch (const std::exception&) {
    }
    fs::remove(mf);
}

void write_manifest(const fs::path& dir, const RunManifest& m) {
    write_text_atomic((dir / "manifest.json").string(), manifest_to_json(m).dump(2) + "\n");
}

}  // namespace

RunManifest run_pipeline(const RunConfig& cfg) {
    RunManifest m;
    m.artifact_version = kArtifactVersion;
    m.config_hash = config_hash(cfg);
    m.config = config_to_json(cfg);
    m.started = utc_now();
    const fs::path dir(cfg.out_dir);
    try {
        fs::create_directories(dir);
    } catch (const fs::filesystem_error& e) {
        throw Error(ErrorKind::IOError, "cannot create run directory " + cfg.out_dir + ": " + e.what());
    }
    clear_previous(dir);

    const auto todo = stage_closure(cfg.stages);
    const std::set<std::string> asked(cfg.stages.begin(), cfg.stages.end());
    for (const auto& name : todo) {
        StageStatus st;
        st.name = name;
        st.auto_enabled = !cfg.stages.empty() && !asked.count(name);
        if (st.auto_enabled) st.message = "enabled as a prerequisite";
        m.stages.push_back(st);
    }

    Context c(cfg, dir);
    bool halted = false, want_report = false;
    for (auto& st : m.stages) {
        if (st.name == "report") {
            want_report = true;
            continue;
        }
        if (halted) {
            st.message = "not run: an earlier stage failed";
            continue;
        }
        c.stage = &st;
        const bool before = c.validation_failed;
        try {
            if (st.name == "profile") stage_profile(c);
            else if (st.name == "continue") stage_continue(c);
            else if (st.name == "spectrum") stage_spectrum(c);
            else if (st.name == "whitham") stage_whitham(c);
            else if (st.name == "validate") stage_validate(c);
            else if (st.name == "simulate") stage_simulate(c);
            st.status = c.validation_failed && !before ? "validation_failed" : "ok";
        } catch (const std::exception& e) {
            st.status = "failed";
            st.message = e.what();
            halted = true;
        }
        for (const auto& f : st.files) m.files.push_back(f);
    }
    m.exit_code = halted ? 2 : (c.validation_failed ? 3 : 0);
    m.finished = utc_now();
    write_manifest(dir, m);
    if (want_report) {
        for (auto& st : m.stages) {
            if (st.name != "report") continue;
            try {
                emit_report(cfg.out_dir);
                st.status = "ok";
                st.files = {"report.txt", "report.json"};
                m.files.insert(m.files.end(), st.files.begin(), st.files.end());
            } catch (const std::exception& e) {
                st.status = "failed";
                st.message = e.what();
            }
        }
        m.finished = utc_now();
        write_manifest(dir, m);
    }
    return m;
}

// ---------------------------------------------------------------- report

namespace {

std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

std::string sci(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.3e", x);
    return buf;
}

std::string pad(const std::string& s, std::size_t w) { return s.size() >= w ? s + " " : s + std::string(w - s.size(), ' '); }

std::optional<json> load(const fs::path& dir, const std::string& name, const std::set<std::string>& listed) {
    if (!listed.count(name) || !fs::exists(dir / name)) return std::nullopt;
    return json::parse(read_text((dir / name).string()));
}

}  // namespace

std::string emit_report(const std::string& run_dir) {
    const fs::path dir(run_dir);
    const fs::path mf = dir / "manifest.json";
    if (!fs::exists(mf)) throw Error(ErrorKind::MissingArtifacts, "no manifest.json in " + run_dir);
    json man;
    try {
        man = json::parse(read_text(mf.string()));
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::MissingArtifacts, std::string("unreadable manifest: ") + e.what());
    }
    std::set<std::string> listed;
    for (const auto& f : man.value("files", json::array())) listed.insert(f.get<std::string>());

    std::ostringstream os;
    json rep;
    const json& cfgj = man["config"];
    os << "run " << man.value("config_hash", "?") << "  system " << cfgj["system"]["name"].get<std::string>() << "  k = "
       << cfgj["wave"]["k"]["p"].get<int>() << "/" << cfgj["wave"]["k"]["N"].get<int>() << "\n\n";
    rep["config_hash"] = man.value("config_hash", "");
    rep["system"] = cfgj["system"];

    // stage table (the report stage itself is excluded so the output does not depend on it)
    os << "stages\n";
    rep["stages"] = json::object();
    std::set<std::string> present;
    for (const auto& st : man["stages"]) present.insert(st["name"].get<std::string>());
    for (const auto& name : stage_names()) {
        if (name == "report") continue;
        std::string status = "missing";
        std::string msg;
        for (const auto& st : man["stages"])
            if (st["name"] == name) {
                status = st["status"].get<std::string>();
                msg = st.value("message", "");
            }
        if (status == "skipped" && msg.empty()) msg = "not run";
        os << "  " << pad(name, 10) << pad(status, 19) << msg << "\n";
        rep["stages"][name] = {{"status", status}, {"message", msg}};
    }
    os << "\n";

    if (auto p = load(dir, "profile.json", listed)) {
        os << "profile\n  omega " << num((*p)["omega"]) << "  period " << num((*p)["period"]) << "  residual "
           << sci((*p)["residual"]) << "  newton iterations " << (*p)["iterations"].get<int>() << "\n\n";
        rep["profile"] = {{"omega", (*p)["omega"]}, {"residual", (*p)["residual"]}};
    } else {
        os << "profile: MISSING\n\n";
    }
    if (auto sp = load(dir, "spectrum.json", listed)) {
        os << "spectrum\n  eps0 " << num((*sp)["eps0"]) << "  critical " << (*sp)["critical"].get<int>() << "/"
           << (*sp)["expected_branches"].get<int>() << "  max Liouville error " << sci((*sp)["max_liouville"]) << "\n\n";
        rep["spectrum"] = {{"eps0", (*sp)["eps0"]}, {"critical", (*sp)["critical"]}, {"max_liouville", (*sp)["max_liouville"]}};
    } else {
        os << "spectrum: MISSING\n\n";
    }
    std::optional<json> wh = load(dir, "whitham.json", listed);
    if (wh) {
        os << "whitham\n";
        for (const auto& v : (*wh)["jacobian"]["variants"]) {
            os << "  " << pad(v["label"].get<std::string>(), 12) << pad(v["hyperbolicity"].get<std::string>(), 16) << "speeds";
            for (const auto& z : v["speeds"]) os << "  " << num(z[0]) << (std::abs(z[1].get<double>()) > 1e-12 ? (z[1].get<double>() < 0 ? "-" : "+") + num(std::abs(z[1].get<double>())) + "i" : "");
            os << "\n";
        }
        if (wh->contains("derivative_consistency"))
            os << "  bordered vs re-solved derivatives: max rel diff " << sci((*wh)["derivative_consistency"]["max_rel_diff"])
               << ((*wh)["derivative_consistency"]["warning"].get<bool>() ? "  WARNING" : "") << "\n";
        os << "\n";
        rep["whitham"] = (*wh)["jacobian"]["variants"];
    } else {
        os << "whitham: MISSING\n\n";
    }
    if (auto va = load(dir, "validation.json", listed)) {
        if (va->contains("rd")) {
            const json& rd = (*va)["rd"];
            const double a = rd["a_fit"], d = rd["d_fit"];
            os << "modulation coefficients\n  " << pad("quantity", 28) << pad("fit", 20) << pad("reference", 20) << "abs error\n";
            auto row = [&](const std::string& q, double f, double ref) {
                os << "  " << pad(q, 28) << pad(num(f), 20) << pad(num(ref), 20) << sci(std::abs(f - ref)) << "\n";
            };
            row("a_fit vs d_k omega", a, rd["dk_omega"]);
            row("a_fit vs adjoint pairing", a, rd["group_velocity"]);
            if (!rd["analytic_a"].is_null()) row("a_fit vs analytic", a, rd["analytic_a"]);
            row("d_fit vs diffusion pairing", d, rd["diffusion"]);
            os << "  side-band unstable: " << (rd["sideband_unstable"].get<bool>() ? "yes" : "no") << "\n\n";
            rep["rd"] = rd;
        }
        if (va->contains("system")) {
            const json& sy = (*va)["system"];
            os << "sign adjudication\n";
            for (auto it = sy["variant_errors"].begin(); it != sy["variant_errors"].end(); ++it)
                os << "  " << pad(it.key(), 12) << "max rel speed error " << sci(it->get<double>()) << "\n";
            os << "  selected: " << sy["variant"].get<std::string>() << "\n\n";
            rep["sign_adjudication"] = {{"variant", sy["variant"]}, {"errors", sy["variant_errors"]}};
        }
        os << "validation checks\n";
        for (const auto& ck : (*va)["checks"])
            os << "  " << (ck["pass"].get<bool>() ? "PASS " : "FAIL ") << pad(ck["name"].get<std::string>(), 44)
               << pad(sci(ck["value"]), 12) << "tol " << sci(ck["tol"]) << "\n";
        os << "  verdict: " << ((*va)["passed"].get<bool>() ? "PASS" : "FAIL") << "\n\n";
        rep["validation"] = {{"checks", (*va)["checks"]}, {"passed", (*va)["passed"]}};
    } else {
        os << "validation: MISSING\n\n";
    }
    if (auto si = load(dir, "simulation.json", listed)) {
        os << "simulation checks\n";
        for (const auto& ck : (*si)["checks"])
            os << "  " << (ck["pass"].get<bool>() ? "PASS " : "FAIL ") << pad(ck["name"].get<std::string>(), 44)
               << pad(sci(ck["value"]), 12) << "tol " << sci(ck["tol"]) << "\n";
        if (si->contains("packet"))
            os << "  packet velocity " << num((*si)["packet"]["velocity"]) << " sites/time (predicted "
               << num((*si)["packet"]["predicted"]) << ")\n";
        os << "\n";
        rep["simulation"] = *si;
    } else {
        os << "simulation: MISSING\n\n";
    }
    const std::string text = os.str();
    write_text_atomic((dir / "report.txt").string(), text);
    write_text_atomic((dir / "report.json").string(), rep.dump(2) + "\n");

    // register the report files with the manifest
    bool changed = false;
    for (const char* f : {"report.txt", "report.json"})
        if (!listed.count(f)) {
            man["files"].push_back(f);
            changed = true;
        }
    if (changed) write_text_atomic(mf.string(), man.dump(2) + "\n");
    return text;
}

}  // namespace latwave
