#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gwflow/config.hpp"
#include "gwflow/errors.hpp"

namespace {

namespace fs = std::filesystem;

nlohmann::json resolve(const std::string& spec) {
    if (fs::exists(spec)) {
        return gwflow::load_config(spec);
    }
    if (spec.find('/') == std::string::npos && spec.find(".json") == std::string::npos) {
        return gwflow::bundled_config(spec).document;
    }
    throw gwflow::ConfigError("config " + spec + " does not exist");
}

fs::path output_dir(const std::string& flag, const nlohmann::json& config) {
    if (!flag.empty()) {
        return flag;
    }
    if (const char* env = std::getenv("GWFLOW_OUT"); env && *env) {
        return env;
    }
    if (config.contains("output_dir") && config.at("output_dir").is_string()) {
        return config.at("output_dir").get<std::string>();
    }
    return fs::path("gwflow_out") / config.value("name", std::string("run"));
}

int run(const std::string& spec, unsigned workers, const std::string& out, const std::vector<std::string>& overrides) {
    auto config = resolve(spec);
    for (const auto& o : overrides) {
        gwflow::apply_override(config, o);
    }
    const auto result = gwflow::run_config(config, workers);
    const auto dir = output_dir(out, config);
    gwflow::write_artifacts(dir, config, result);
    for (const auto& v : result.verdicts) {
        std::cout << (v.pass ? "PASS " : "FAIL ") << v.name << ": " << v.detail << '\n';
    }
    std::cout << std::fixed << std::setprecision(2) << result.tag << " finished in " << result.wall_clock_seconds
              << " s; artifacts in " << dir.string() << '\n';
    return result.passed() ? gwflow::kExitPass : gwflow::kExitVerdictFailed;
}

int list() {
    for (const auto& c : gwflow::bundled_configs()) {
        std::cout << std::left << std::setw(26) << c.name << c.document.value("experiment", std::string{}) << '\n';
    }
    return gwflow::kExitPass;
}

int describe(const std::string& name) {
    const auto& c = gwflow::bundled_config(name);
    std::cout << c.name << "\n  anchor: " << c.anchor << "\n  experiment: " << c.document.value("experiment", "")
              << "\n  runtime budget: " << c.document.value("runtime_budget_seconds", 0.0) << " s\n"
              << c.document.dump(2) << '\n';
    return gwflow::kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Galton-Watson branching flows and their superprocess limits"};
    app.require_subcommand(1);

    std::string spec, out, name;
    unsigned workers = 0;
    std::vector<std::string> overrides;
    auto* run_cmd = app.add_subcommand("run", "Run an experiment config (path or bundled name)");
    run_cmd->add_option("config", spec, "Config file or bundled config name")->required();
    run_cmd->add_option("--workers", workers, "Worker threads (never changes results)");
    run_cmd->add_option("--out", out, "Output directory (default: $GWFLOW_OUT, then the config's output_dir)");
    run_cmd->add_option("--override", overrides, "Set dotted.key=json_value before running")->take_all();
    auto* list_cmd = app.add_subcommand("list", "List bundled configs");
    auto* describe_cmd = app.add_subcommand("describe", "Show a bundled config and what it checks");
    describe_cmd->add_option("name", name, "Bundled config name")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : gwflow::kExitSchema;
    }

    try {
        if (*run_cmd) {
            return run(spec, workers, out, overrides);
        }
        if (*list_cmd) {
            return list();
        }
        return describe(name);
    } catch (const std::exception& e) {
        std::cerr << "gwflow: " << e.what() << '\n';
        return gwflow::exit_code_for(e);
    }
}
