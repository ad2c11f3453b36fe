// Configuration schema, stage orchestration, manifests and reports.

#include <filesystem>

#include "doctest.h"
#include "latwave/pipeline.hpp"

using namespace latwave;
namespace fs = std::filesystem;

namespace {

std::string schema_message(const std::string& text) {
    try {
        parse_config_text(text);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::SchemaError) return e.what();
    }
    return "";
}

fs::path fresh_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("latwave_test_" + name);
    fs::remove_all(p);
    return p;
}

RunConfig lambda_omega_config(const fs::path& out, std::vector<std::string> stages, double mu = 0.5) {
    RunConfig cfg = parse_config_text(R"({"system": {"name": "lambda_omega", "params": {"mu": )" + std::to_string(mu) +
                                      R"(}}, "wave": {"k": "1/6"}, "spectrum": {"xi_max": 0.06283185307179587}})");
    cfg.out_dir = out.string();
    cfg.stages = std::move(stages);
    return cfg;
}

bool listed(const RunManifest& m, const std::string& f) {
    return std::find(m.files.begin(), m.files.end(), f) != m.files.end();
}

}  // namespace

TEST_CASE("minimal config gets the documented defaults") {
    const RunConfig cfg = parse_config_text(R"({"system": {"name": "lambda_omega"}, "wave": {"k": {"p": 1, "N": 6}}})");
    CHECK(cfg.p == 1);
    CHECK(cfg.N == 6);
    CHECK(cfg.K == 32);
    CHECK(cfg.padding == 2);
    CHECK(cfg.solve.tol == 1e-10);
    CHECK(cfg.seed == 7);
    CHECK(cfg.jobs == 1);
    CHECK(cfg.out_dir == "run");
    CHECK(cfg.stages.empty());
    const json j = config_to_json(cfg);
    CHECK(j["system"]["params"]["mu"].get<double>() == 0.5);
    CHECK(j["stages"].size() == stage_names().size());
}

TEST_CASE("schema violations are named") {
    const std::string k0 = schema_message(R"({"system": {"name": "lambda_omega"}, "wave": {"k": "0/6"}})");
    CHECK(k0.find("wave.k") != std::string::npos);

    const std::string unknown = schema_message(R"({"system": {"name": "sine_gordon"}, "wave": {"k": "1/6"}})");
    CHECK(unknown.find("system.name") != std::string::npos);
    for (const auto& n : available_systems()) CHECK(unknown.find(n) != std::string::npos);

    const std::string many = schema_message(
        R"({"system": {"name": "roll_waves"}, "wave": {"k": "1/1"}, "solver": {"tol": -1}, "colour": 3})");
    CHECK(many.find("wave.k.N") != std::string::npos);
    CHECK(many.find("solver.tol") != std::string::npos);
    CHECK(many.find("$.colour") != std::string::npos);
    CHECK(many.find("wave.targets") != std::string::npos);

    CHECK(schema_message("{not json").find("not valid JSON") != std::string::npos);
    CHECK(schema_message(R"({"system": {"name": "lambda_omega", "params": {"nu": 1}}, "wave": {"k": "1/6"}})")
              .find("nu") != std::string::npos);
    CHECK_THROWS_AS(parse_config("/nonexistent/config.json"), Error);
}

TEST_CASE("config hash") {
    RunConfig a = parse_config_text(R"({"system": {"name": "lambda_omega"}, "wave": {"k": "1/6"}})");
    RunConfig b = a;
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a).size() == 16);
    b.seed = 8;
    CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("dependency closure") {
    CHECK(stage_closure({"validate"}) == std::vector<std::string>{"profile", "spectrum", "whitham", "validate"});
    CHECK(stage_closure({"report"}) == std::vector<std::string>{"report"});
    CHECK(stage_closure({}) == stage_names());
    CHECK_THROWS_AS(stage_closure({"plot"}), Error);
}

TEST_CASE("validation run auto-enables its dependencies") {
    const fs::path dir = fresh_dir("validate");
    const RunManifest m = run_pipeline(lambda_omega_config(dir, {"validate"}));
    CHECK(m.exit_code == 0);
    for (const char* f : {"profile.json", "branches.csv", "whitham.json", "validation.json"}) CHECK(listed(m, f));
    for (const auto& f : m.files) CHECK(fs::exists(dir / f));
    for (const auto& st : m.stages) {
        CHECK(st.status == "ok");
        CHECK(st.auto_enabled == (st.name != "validate"));
    }
    const json man = json::parse(read_text((dir / "manifest.json").string()));
    CHECK(man["config_hash"] == m.config_hash);
    CHECK(man["stages"][1]["auto_enabled"].get<bool>());

    // same config, same numbers
    const std::string first = read_text((dir / "validation.json").string());
    run_pipeline(lambda_omega_config(dir, {"validate"}));
    CHECK(read_text((dir / "validation.json").string()) == first);

    // report: table, idempotence
    const std::string t1 = emit_report(dir.string());
    const std::string j1 = read_text((dir / "report.json").string());
    CHECK(t1.find("a_fit vs d_k omega") != std::string::npos);
    CHECK(t1.find("abs error") != std::string::npos);
    CHECK(emit_report(dir.string()) == t1);
    CHECK(read_text((dir / "report.txt").string()) == t1);
    CHECK(read_text((dir / "report.json").string()) == j1);
    const json man2 = json::parse(read_text((dir / "manifest.json").string()));
    int reports = 0;
    for (const auto& f : man2["files"]) reports += f == "report.txt";
    CHECK(reports == 1);
}

TEST_CASE("a failing profile stage halts the run") {
    const fs::path dir = fresh_dir("noconv");
    const RunManifest m = run_pipeline(lambda_omega_config(dir, {"validate"}, 2.0));
    CHECK(m.exit_code == 2);
    REQUIRE(m.stages.size() == 4);
    CHECK(m.stages[0].name == "profile");
    CHECK(m.stages[0].status == "failed");
    CHECK(m.stages[0].message.find("NoConvergence") != std::string::npos);
    for (std::size_t i = 1; i < m.stages.size(); ++i) CHECK(m.stages[i].status == "skipped");
    CHECK(fs::exists(dir / "manifest.json"));
}

TEST_CASE("partial run report marks the missing stages") {
    const fs::path dir = fresh_dir("partial");
    const RunManifest m = run_pipeline(lambda_omega_config(dir, {"profile", "report"}));
    CHECK(m.exit_code == 0);
    CHECK(listed(m, "report.txt"));
    const std::string text = read_text((dir / "report.txt").string());
    CHECK(text.find("validation: MISSING") != std::string::npos);
    CHECK(text.find("spectrum  missing") != std::string::npos);

    // stale files of an earlier run are not left behind
    run_pipeline(lambda_omega_config(dir, {"profile"}));
    CHECK(!fs::exists(dir / "report.txt"));
}

TEST_CASE("report needs a manifest") {
    const fs::path dir = fresh_dir("empty");
    fs::create_directories(dir);
    try {
        emit_report(dir.string());
        FAIL("expected MissingArtifacts");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::MissingArtifacts);
    }
}
