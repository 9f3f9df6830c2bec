#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "json.hpp"
#include "msl/experiments.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kCli = MSL_CLI_PATH;
const fs::path kConfigs = MSL_CONFIG_DIR;

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("msl_cli_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

int run(const std::string& args) {
    const std::string cmd = "\"" + kCli + "\" " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write(const fs::path& dir, const std::string& name, const std::string& text) {
    const fs::path p = dir / name;
    std::ofstream(p) << text;
    return p;
}

json read_json(const fs::path& p) {
    std::ifstream in(p);
    return json::parse(in);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

const char* kSmall = R"({
  "lattice": {"n_t": 4, "n_x": 4, "h": 0.5, "k": 0.7},
  "potential": {"kind": "free"},
  "data": {"kind": "random", "amplitude": 0.2, "count": 2},
  "experiments": ["multisymplectic_check", "noether"],
  "seed": 9
})";

}  // namespace

TEST(Cli, SchemaVersionIsOne) { EXPECT_EQ(msl::experiments::report_schema_version(), "1"); }

TEST(Cli, MultisymplecticConfigPassesAndReports) {
    const auto out = scratch("ms");
    ASSERT_EQ(run("run \"" + (kConfigs / "multisymplectic_free.json").string() + "\" --out \"" + out.string() + "\""), 0);
    const json r = read_json(out / "report.json");
    EXPECT_EQ(r.at("schema_version"), "1");
    EXPECT_EQ(r.at("config").at("lattice").at("n_t"), 8);
    ASSERT_EQ(r.at("experiments").size(), 3u);
    for (const auto& e : r.at("experiments")) {
        for (const char* key : {"name", "paper_tag", "max_residual", "tolerance", "pass"}) EXPECT_TRUE(e.contains(key));
        EXPECT_TRUE(e.at("pass").get<bool>());
        EXPECT_FALSE(e.at("paper_tag").get<std::string>().empty());
        EXPECT_LE(e.at("max_residual").get<double>(), e.at("tolerance").get<double>());
    }
    const std::string csv = slurp(out / "report.csv");
    EXPECT_EQ(csv.rfind("experiment,surface_or_region_id,value,residual\n", 0), 0u);
    // 8x8 lattice: 36 * 36 rectangular regions per region-based experiment.
    std::size_t ms_rows = 0;
    std::istringstream lines(csv);
    for (std::string line; std::getline(lines, line);)
        if (line.rfind("multisymplectic_check,", 0) == 0) ++ms_rows;
    EXPECT_EQ(ms_rows, 36u * 36u);
}

TEST(Cli, BrokenGluingExitsOneWithResidual) {
    const auto out = scratch("broken");
    EXPECT_EQ(run("run \"" + (kConfigs / "broken_gluing.json").string() + "\" --out \"" + out.string() + "\""), 1);
    const json r = read_json(out / "report.json");
    EXPECT_FALSE(r.at("pass").get<bool>());
    for (const auto& e : r.at("experiments")) {
        EXPECT_FALSE(e.at("pass").get<bool>());
        EXPECT_GT(e.at("max_residual").get<double>(), 1e-5);
    }
}

TEST(Cli, ValidationErrorsExitTwo) {
    const auto dir = scratch("invalid");
    json base = json::parse(kSmall);
    auto with = [&](const std::function<void(json&)>& edit) {
        json c = base;
        edit(c);
        return write(dir, "c.json", c.dump());
    };
    EXPECT_EQ(run("run \"" + with([](json& c) { c["experiments"] = json::array(); }).string() + "\""), 2);
    EXPECT_EQ(run("run \"" + with([](json& c) { c["experiments"] = {"nope"}; }).string() + "\""), 2);
    EXPECT_EQ(run("run \"" + with([](json& c) { c["tolerances"] = {{"noether", 0.0}}; }).string() + "\""), 2);
    EXPECT_EQ(run("run \"" + with([](json& c) { c["lattice"]["n_t"] = 1; }).string() + "\""), 2);
    EXPECT_EQ(run("run \"" + with([](json& c) { c["lattice"]["h"] = -0.5; }).string() + "\""), 2);
    EXPECT_EQ(run("run \"" + with([](json& c) { c["bogus"] = 1; }).string() + "\""), 2);
    EXPECT_EQ(run("run \"" + with([](json& c) { c.erase("lattice"); }).string() + "\""), 2);
    EXPECT_EQ(run("run \"" + write(dir, "bad.json", "{ not json").string() + "\""), 2);
    EXPECT_EQ(run("run \"" + (dir / "missing.json").string() + "\""), 2);
    EXPECT_EQ(run(""), 2);
}

TEST(Cli, ListExperiments) { EXPECT_EQ(run("--list-experiments"), 0); }

TEST(Cli, SameSeedGivesIdenticalReports) {
    const auto dir = scratch("determinism");
    const auto cfg = write(dir, "c.json", kSmall);
    ASSERT_EQ(run("run \"" + cfg.string() + "\" --out \"" + (dir / "a").string() + "\""), 0);
    ASSERT_EQ(run("run \"" + cfg.string() + "\" --out \"" + (dir / "b").string() + "\""), 0);
    EXPECT_EQ(slurp(dir / "a" / "report.json"), slurp(dir / "b" / "report.json"));
    EXPECT_EQ(slurp(dir / "a" / "report.csv"), slurp(dir / "b" / "report.csv"));

    ASSERT_EQ(run("run \"" + cfg.string() + "\" --seed 1234 --out \"" + (dir / "c").string() + "\""), 0);
    EXPECT_EQ(read_json(dir / "c" / "report.json").at("seed"), 1234);
    EXPECT_NE(slurp(dir / "a" / "report.csv"), slurp(dir / "c" / "report.csv"));
}

TEST(Cli, ExampleConfigsRun) {
    for (const char* name : {"phi4_suite.json", "evolve_explicit.json", "coarse_flux.json"}) {
        const auto out = scratch(std::string("ex_") + name);
        EXPECT_EQ(run("run \"" + (kConfigs / name).string() + "\" --out \"" + out.string() + "\""), 0) << name;
    }
    // The coarse Noether current is rejected by the corrected dynamics.
    const auto out = scratch("coarse_noether");
    EXPECT_EQ(run("run \"" + (kConfigs / "coarse_noether.json").string() + "\" --out \"" + out.string() + "\""), 1);
    const json r = read_json(out / "report.json");
    EXPECT_NE(r.at("experiments").at(0).at("note").get<std::string>().find("transfer rejected"), std::string::npos);
}

TEST(Cli, MassiveNoetherIsAFailedExperiment) {
    const auto dir = scratch("massive");
    json c = json::parse(kSmall);
    c["potential"] = {{"kind", "phi4"}, {"lambda", 0.0}, {"mass", 0.5}};
    EXPECT_EQ(run("run \"" + write(dir, "c.json", c.dump()).string() + "\" --out \"" + dir.string() + "\""), 1);
    const json r = read_json(dir / "report.json");
    EXPECT_TRUE(r.at("experiments").at(0).at("pass").get<bool>());
    EXPECT_FALSE(r.at("experiments").at(1).at("pass").get<bool>());
}

TEST(Cli, LibraryRunnerMatchesCatalogue) {
    msl::experiments::ExperimentConfig c;
    c.lattice = {4, 4, 0.5, 0.7};
    c.experiments = {"separation"};
    const auto res = msl::experiments::run(c);
    ASSERT_EQ(res.size(), 1u);
    EXPECT_EQ(res[0].paper_tag, msl::experiments::find_experiment("separation")->paper_tag);
    EXPECT_TRUE(res[0].pass);
    c.experiments.clear();
    EXPECT_THROW(msl::experiments::run(c), msl::DomainError);
}
