#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "arforge/cli/cli.hpp"

using namespace arforge;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run(std::vector<std::string> args) {
    args.insert(args.begin(), "arforge");
    std::vector<const char *> argv;
    for (const auto &a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run_command(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path write_config(const std::string &name, const std::string &body) {
    const auto dir = fs::temp_directory_path() / "arforge_cli_test";
    fs::create_directories(dir);
    std::ofstream(dir / name) << body;
    return dir / name;
}

} // namespace

TEST_CASE("usage errors exit 2") {
    auto r = run({"frobnicate"});
    CHECK(r.code == cli::kExitUsage);
    CHECK(r.err.rfind("error[usage]:", 0) == 0);
    CHECK(r.err.find("run-all") != std::string::npos);
    CHECK(run({}).code == cli::kExitUsage);
    CHECK(run({"run-all"}).code == cli::kExitUsage);
    CHECK(run({"run-all", "--config", "x.json", "--no-such-flag"}).code == cli::kExitUsage);
    CHECK(run({"pretrain", "--config", "x.json", "--beam", "3"}).code == cli::kExitUsage);
}

TEST_CASE("help exits 0") {
    const auto r = run({"--help"});
    CHECK(r.code == 0);
    CHECK(r.out.find("learn-bpe") != std::string::npos);
}

TEST_CASE("config errors exit 3 and name the problem") {
    auto r = run({"run-all", "--config", "/definitely/not/here.json"});
    CHECK(r.code == cli::kExitConfig);
    CHECK(r.err.find("error[config]:") == 0);
    CHECK(r.err.find("/definitely/not/here.json") != std::string::npos);
    const auto bad = write_config("bad.json", R"({"seed": 1, "colour": "blue"})");
    r = run({"learn-bpe", "--config", bad.string()});
    CHECK(r.code == cli::kExitConfig);
    CHECK(r.err.find("colour") != std::string::npos);
    const auto broken = write_config("broken.json", "{ not json");
    CHECK(run({"learn-bpe", "--config", broken.string()}).code == cli::kExitConfig);
    const auto ok = write_config("ok.json", R"({"seed": 1})");
    CHECK(run({"train", "--config", ok.string(), "--strategy", "NOPE"}).code == cli::kExitConfig);
    CHECK(run({"evaluate", "--config", ok.string(), "--beam", "0"}).code == cli::kExitConfig);
}

TEST_CASE("stage failures exit 1 with the stage named") {
    const auto dir = fs::temp_directory_path() / "arforge_cli_test";
    fs::remove_all(dir / "run_stage");
    const auto cfg = write_config("stage.json", R"({"run_dir": "run_stage"})");
    const auto r = run({"pretrain", "--config", cfg.string()});
    CHECK(r.code == cli::kExitStage);
    CHECK(r.err.find("error[stage]: stage pretrain.s2t") != std::string::npos);
    // The effective config is echoed before any stage runs.
    CHECK(fs::exists(dir / "run_stage" / "config.effective.json"));
}

TEST_CASE("flags and the environment override the run directory") {
    const auto dir = fs::temp_directory_path() / "arforge_cli_test";
    const auto cfg = write_config("dirs.json", R"({"run_dir": "from_config"})");
    fs::remove_all(dir / "from_env");
    fs::remove_all(dir / "from_flag");
    ::setenv("AR_FORGE_RUN_DIR", (dir / "from_env").c_str(), 1);
    run({"pretrain", "--config", cfg.string(), "--seed", "42"});
    CHECK(fs::exists(dir / "from_env" / "config.effective.json"));
    std::ifstream in(dir / "from_env" / "config.effective.json");
    const auto echoed = nlohmann::json::parse(in);
    CHECK(echoed["seed"] == 42);
    run({"pretrain", "--config", cfg.string(), "--run-dir", (dir / "from_flag").string()});
    CHECK(fs::exists(dir / "from_flag" / "config.effective.json"));
    ::unsetenv("AR_FORGE_RUN_DIR");
}

TEST_CASE("emit_report formats") {
    metrics::ExperimentReport report{{{"BASE", "BASE", 30.0, 0.0}, {"BT", "BASE + BT", 31.25, 1.25}},
                                     {{"S2S", 40.0, 45.0, 0.5, 0.4, 10}}};
    const auto json = cli::emit_report(report, cli::ReportFormat::json);
    CHECK(cli::emit_report(metrics::report_from_json(nlohmann::json::parse(json)), cli::ReportFormat::json) == json);
    const auto table = cli::emit_report(report, cli::ReportFormat::table);
    CHECK(table.find("BLEU") != std::string::npos);
    CHECK(table.find("Δ") != std::string::npos);
    CHECK(table.find("+1.25") != std::string::npos);
    CHECK(cli::parse_format("json") == cli::ReportFormat::json);
    CHECK_FALSE(cli::parse_format("xml").has_value());
}
