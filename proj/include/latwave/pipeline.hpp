#pragma once
// Run configuration, stage orchestration, run manifests and reports.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "latwave/bloch.hpp"
#include "latwave/io.hpp"
#include "latwave/profile.hpp"

namespace latwave {

/// Stage names in dependency order.
const std::vector<std::string>& stage_names();
/// Stages required before `stage` (direct prerequisites).
std::vector<std::string> stage_prerequisites(const std::string& stage);

struct ContinuationSpec {
    std::string parameter = "k";
    std::vector<double> values;
};

struct SpectrumSpec {
    double xi_max = 0.0;  // 0: 0.1 pi / N (RD validation uses 0.02 pi when the system is lambda_omega-like)
    double eps0 = 0.0;    // 0: automatic
    double rtol = 1e-12, atol = 1e-14;
};

struct ValidationSpec {
    bool rd_fit = true;
    bool system_speeds = true;  // Mixed / Hamiltonian velocity and Riesz checks
    bool jordan = true;
    bool duality = true;
    bool derivative_fd = true;  // bordered vs re-solved Jacobian (warning only)
    double rel_tol = 1e-4;
    double omega_tol = 1e-3;
};

struct SimulationSpec {
    int ring_cells = 10;          // L = ring_cells * N
    int recurrence_periods = 1;
    double recurrence_tol = 1e-8;
    int energy_periods = 10;
    bool packet = false;          // RD packet transport run
    int packet_cells = 200;
    double packet_sigma = 40.0;
    double packet_amplitude = 1e-3;
    double rtol = 1e-11, atol = 1e-13;
};

struct RunConfig {
    std::string system;
    std::map<std::string, double> params;  // overrides of the system defaults
    int p = 1, N = 6;
    Vec targets;                           // M..., E
    int K = 32, padding = 2;
    SolveOptions solve;
    std::optional<ContinuationSpec> continuation;
    SpectrumSpec spectrum;
    ValidationSpec validation;
    SimulationSpec simulation;
    std::vector<std::string> stages;       // requested; empty means every stage
    std::string out_dir = "run";
    unsigned seed = 7;
    int jobs = 1;
};

/// Validated config with defaults filled. SchemaError lists every violation as "path: message".
RunConfig parse_config_json(const json& j);
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config(const std::string& path);
/// Full config with every default made explicit.
json config_to_json(const RunConfig& cfg);
/// 64-bit FNV-1a of the canonical config dump, as 16 hex digits.
std::string config_hash(const RunConfig& cfg);

struct StageStatus {
    std::string name;
    std::string status = "skipped";  // ok, failed, validation_failed, skipped
    std::string message;
    bool auto_enabled = false;       // pulled in as a dependency
    std::vector<std::string> files;
};

struct RunManifest {
    std::string config_hash;
    std::string artifact_version;
    std::string started, finished;
    json config;
    std::vector<StageStatus> stages;
    std::vector<std::string> files;  // relative to the run directory
    int exit_code = 0;
};

json manifest_to_json(const RunManifest& m);

/// Requested stages plus their prerequisites, in dependency order.
std::vector<std::string> stage_closure(const std::vector<std::string>& requested);

/// Runs the closure of `cfg.stages` under cfg.out_dir and writes manifest.json last.
/// Exit code 0 all green, 2 numerical failure (halts), 3 some validation check failed.
RunManifest run_pipeline(const RunConfig& cfg);

/// report.txt and report.json from the artifacts listed in the run manifest; returns the text.
/// Missing stages are marked, not fatal. MissingArtifacts if there is no manifest.
std::string emit_report(const std::string& run_dir);

}  // namespace latwave
