// Config-driven runner for the verification experiments.
//
//   msl run <config.json> [--out DIR] [--seed N]
//   msl --list-experiments
//
// Exit codes: 0 all experiments within tolerance, 1 some experiment failed,
// 2 the config could not be parsed or validated.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "msl/experiments.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
namespace ex = msl::experiments;

namespace {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || it.key() == a;
        if (!ok) throw ConfigError("unknown key '" + it.key() + "' in " + where);
    }
}

template <class T>
T get(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError("missing '" + std::string(key) + "' in " + where);
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("bad value for '" + std::string(key) + "' in " + where + ": " + e.what());
    }
}

template <class T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
    return j.contains(key) ? get<T>(j, key, where) : fallback;
}

std::vector<double> parse_potential(const json& p) {
    if (!p.is_object()) throw ConfigError("'potential' must be an object");
    const auto kind = get<std::string>(p, "kind", "potential");
    if (kind == "free") {
        reject_unknown(p, {"kind"}, "potential");
        return {};
    }
    if (kind == "phi4") {
        reject_unknown(p, {"kind", "lambda", "mass"}, "potential");
        const auto pot = msl::Potential::phi4(get<double>(p, "lambda", "potential"), get<double>(p, "mass", "potential"));
        return pot.coefficients();
    }
    if (kind == "polynomial") {
        reject_unknown(p, {"kind", "coefficients"}, "potential");
        return get<std::vector<double>>(p, "coefficients", "potential");
    }
    throw ConfigError("unknown potential kind '" + kind + "'");
}

ex::DataSpec parse_data(const json& d) {
    if (!d.is_object()) throw ConfigError("'data' must be an object");
    reject_unknown(d, {"kind", "method", "value", "amplitude", "count", "values", "perturbation"}, "data");
    ex::DataSpec s;
    const auto kind = get_or<std::string>(d, "kind", "random", "data");
    if (kind == "constant")
        s.kind = ex::DataKind::Constant;
    else if (kind == "random")
        s.kind = ex::DataKind::Random;
    else if (kind == "explicit")
        s.kind = ex::DataKind::Explicit;
    else
        throw ConfigError("unknown data kind '" + kind + "'");
    const auto method = get_or<std::string>(d, "method", "dirichlet", "data");
    if (method == "dirichlet")
        s.method = ex::DataMethod::Dirichlet;
    else if (method == "evolve")
        s.method = ex::DataMethod::Evolve;
    else
        throw ConfigError("unknown data method '" + method + "'");
    s.value = get_or(d, "value", 0.0, "data");
    s.amplitude = get_or(d, "amplitude", 0.1, "data");
    s.count = get_or(d, "count", 3, "data");
    s.values = get_or(d, "values", std::vector<std::vector<double>>{}, "data");
    s.perturbation = get_or(d, "perturbation", 0.0, "data");
    return s;
}

ex::ExperimentConfig parse_config(const json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    reject_unknown(j, {"lattice", "potential", "data", "experiments", "tolerances", "seed", "coarse_current"}, "config");
    ex::ExperimentConfig c;
    const json& l = j.contains("lattice") ? j.at("lattice") : throw ConfigError("missing 'lattice'");
    reject_unknown(l, {"n_t", "n_x", "h", "k"}, "lattice");
    c.lattice = {get<int>(l, "n_t", "lattice"), get<int>(l, "n_x", "lattice"), get<double>(l, "h", "lattice"),
                 get<double>(l, "k", "lattice")};
    c.potential = j.contains("potential") ? parse_potential(j.at("potential")) : std::vector<double>{};
    if (j.contains("data")) c.data = parse_data(j.at("data"));
    c.experiments = get<std::vector<std::string>>(j, "experiments", "config");
    c.tolerances = get_or(j, "tolerances", std::map<std::string, double>{}, "config");
    c.seed = get_or<std::uint64_t>(j, "seed", 1, "config");
    c.coarse_current = get_or<std::string>(j, "coarse_current", "noether", "config");
    try {
        ex::validate(c);
    } catch (const msl::DomainError& e) {
        throw ConfigError(e.what());
    }
    return c;
}

// Writes next to the target and renames into place.
void write_atomically(const fs::path& target, const std::string& content) {
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        if (!out.flush()) throw std::runtime_error("cannot write " + tmp.string());
    }
    fs::rename(tmp, target);
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
}

int run(const std::string& config_path, const std::string& out_dir, std::optional<std::uint64_t> seed) {
    json raw;
    ex::ExperimentConfig cfg;
    try {
        std::ifstream in(config_path);
        if (!in) throw ConfigError("cannot open config '" + config_path + "'");
        try {
            raw = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ConfigError(std::string("config is not valid JSON: ") + e.what());
        }
        cfg = parse_config(raw);
        if (seed) cfg.seed = *seed;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    std::vector<ex::ExperimentResult> results;
    try {
        results = ex::run(cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: could not prepare solutions: " << e.what() << "\n";
        return 1;
    }

    json report;
    report["schema_version"] = ex::report_schema_version();
    report["config"] = raw;
    report["seed"] = cfg.seed;
    bool all = true;
    std::ostringstream csv;
    csv.precision(17);
    csv << "experiment,surface_or_region_id,value,residual\n";
    for (const auto& r : results) {
        json e{{"name", r.name},
               {"paper_tag", r.paper_tag},
               {"max_residual", r.max_residual},
               {"tolerance", r.tolerance},
               {"pass", r.pass}};
        if (!r.note.empty()) e["note"] = r.note;
        report["experiments"].push_back(e);
        all = all && r.pass;
        for (const auto& row : r.rows) csv << r.name << ',' << csv_field(row.id) << ',' << row.value << ',' << row.residual << '\n';
        std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << "  max_residual=" << r.max_residual
                  << "  tolerance=" << r.tolerance << (r.note.empty() ? "" : "  (" + r.note + ")") << "\n";
    }
    report["pass"] = all;

    try {
        fs::create_directories(out_dir);
        write_atomically(fs::path(out_dir) / "report.json", report.dump(2) + "\n");
        write_atomically(fs::path(out_dir) / "report.csv", csv.str());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    if (!all) {
        std::cerr << "some experiments exceeded their tolerance\n";
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multisymplectic lattice field theory experiment runner"};
    app.require_subcommand(0, 1);
    bool list = false;
    app.add_flag("--list-experiments", list, "List the available experiments and exit");

    auto* run_cmd = app.add_subcommand("run", "Run the experiments of a config file");
    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    run_cmd->add_option("config", config_path, "Experiment config (JSON)")->required();
    run_cmd->add_option("--out", out_dir, "Directory for report.json and report.csv");
    run_cmd->add_option("--seed", seed, "Random seed (overrides the config)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    if (list) {
        for (const auto& e : ex::catalogue())
            std::cout << e.name << "\t" << e.paper_tag << "\t(default tolerance " << e.default_tolerance << ")\n";
        return 0;
    }
    if (!*run_cmd) {
        std::cerr << app.help();
        return 2;
    }
    return run(config_path, out_dir, seed);
}
