// Python module latwave._core: profiles, multipliers, modulation coefficients and the stage runner.

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "latwave/bloch.hpp"
#include "latwave/pipeline.hpp"
#include "latwave/validate.hpp"
#include "latwave/whitham.hpp"

namespace py = pybind11;
using namespace latwave;

PYBIND11_MODULE(_core, m) {
    m.doc() = "periodic traveling waves on lattices";

    static py::exception<Error> err(m, "LatwaveError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::set_error(err, e.what());
        }
    });

    py::class_<SystemSpec>(m, "System")
        .def_readonly("name", &SystemSpec::name)
        .def_readonly("d", &SystemSpec::d)
        .def_readonly("params", &SystemSpec::params)
        .def_property_readonly("cls", [](const SystemSpec& s) { return class_name(s.cls); })
        .def("param_count", &SystemSpec::param_count);
    m.def("make_system", &make_system, py::arg("name"), py::arg("params") = std::map<std::string, double>{});

    py::class_<WaveProfile>(m, "Wave")
        .def_readonly("p", &WaveProfile::p)
        .def_readonly("N", &WaveProfile::N)
        .def_readonly("k", &WaveProfile::k)
        .def_readonly("omega", &WaveProfile::omega)
        .def_readonly("coeffs", &WaveProfile::coeffs)
        .def_readonly("params", &WaveProfile::params)
        .def_readonly("residual", &WaveProfile::residual)
        .def_readonly("iterations", &WaveProfile::iterations)
        .def("period", &WaveProfile::period)
        .def("speed", &WaveProfile::speed)
        .def("evaluate", [](const WaveProfile& u, double zeta) { return evaluate_profile(u, zeta); });
    m.def("seed_wave", [](const SystemSpec& s, int p, int N, const Vec& targets, int K) { return seed_wave(s, p, N, targets, K); },
          py::arg("system"), py::arg("p"), py::arg("N"), py::arg("targets") = Vec(0), py::arg("K") = 32);
    m.def("solve_profile", [](const SystemSpec& s, double k, const Vec& targets, const WaveProfile& guess) {
        return solve_profile(s, k, targets, guess);
    });
    m.def("dk_omega", [](const SystemSpec& s, const WaveProfile& u) { return wave_derivatives(s, u).dk_omega; });

    m.def("multipliers", [](const SystemSpec& s, const WaveProfile& u, double xi) {
        return eig_dense(monodromy(SymbolGenerator(s, u, xi)).S0).values;
    }, "Bloch-Floquet multipliers at xi", py::arg("system"), py::arg("wave"), py::arg("xi"));

    m.def("rd_whitham", [](const SystemSpec& s, const WaveProfile& u) {
        const RDWhitham w = rd_whitham(s, u, wave_derivatives(s, u));
        py::dict out;
        out["omega"] = w.omega;
        out["dk_omega"] = w.dk_omega;
        out["group_velocity"] = w.group_velocity;
        out["diffusion"] = w.diffusion;
        return out;
    });
    m.def("fit_rd", [](const SystemSpec& s, const WaveProfile& u, double xi_max) {
        const AdaptiveRDFit ad = fit_rd_adaptive(s, u, xi_max);
        py::dict out;
        out["a"] = ad.fit.a;
        out["b"] = ad.fit.b;
        out["remainder_slope"] = ad.fit.remainder_slope;
        out["xi_max"] = ad.xi_max;
        out["critical"] = ad.critical;
        return out;
    }, py::arg("system"), py::arg("wave"), py::arg("xi_max") = 0.02 * kPi);

    m.def("run", [](const std::string& config_json, const std::string& out_dir) {
        RunConfig cfg = parse_config_text(config_json);
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        return manifest_to_json(run_pipeline(cfg)).dump();
    }, "runs the configured stages; returns the manifest as JSON text", py::arg("config_json"), py::arg("out_dir") = "");
    m.def("report", &emit_report, py::arg("run_dir"));
}
