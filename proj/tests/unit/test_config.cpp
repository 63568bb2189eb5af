#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gwflow/config.hpp"
#include "gwflow/errors.hpp"

using namespace gwflow;
using nlohmann::json;

namespace {

json small_mc() {
    return json::parse(R"({
      "schema": "gwflow/1", "name": "small", "experiment": "mc_laplace", "model": "independent",
      "a": 1.0, "mechanism": {"sigma2": 1.0}, "k": 10, "gamma": {"C": 1.0}, "t": 0.5,
      "initial": {"kind": "unit_lattice", "count": 1},
      "test_function": {"kind": "constant", "value": 1.0},
      "replicates": 300, "seed": 5
    })");
}

int code_of(const json& config) {
    try {
        validate_config(config);
        (void)run_config(config);
    } catch (const std::exception& e) {
        return exit_code_for(e);
    }
    return kExitPass;
}

}  // namespace

TEST_CASE("bundled configs are present and valid") {
    const auto& all = bundled_configs();
    CHECK(all.size() >= 6);
    for (const auto& config : all) {
        CHECK_NOTHROW(validate_config(config.document));
        CHECK(config.document.at("name") == config.name);
        CHECK_FALSE(config.anchor.empty());
    }
    CHECK(bundled_config("feller_binary").name == "feller_binary");
    CHECK_THROWS_AS((void)bundled_config("no_such_config"), ConfigError);
}

TEST_CASE("overrides use dotted keys and JSON values") {
    json config = small_mc();
    apply_override(config, "k=20");
    CHECK(config["k"] == 20);
    apply_override(config, "mechanism.sigma2=0.5");
    CHECK(config["mechanism"]["sigma2"] == 0.5);
    apply_override(config, "model=interactive");
    CHECK(config["model"] == "interactive");
    apply_override(config, "tolerances.z_score=4");
    CHECK(config["tolerances"]["z_score"] == 4);
    CHECK_THROWS_AS(apply_override(config, "missing_equals"), ConfigError);
}

TEST_CASE("schema errors") {
    json config = small_mc();
    config["schema"] = "gwflow/0";
    CHECK(code_of(config) == kExitSchema);

    config = small_mc();
    config.erase("seed");
    CHECK(code_of(config) == kExitSchema);

    config = small_mc();
    config["experiment"] = "teleport";
    CHECK(code_of(config) == kExitSchema);

    config = small_mc();
    config["mechanism"]["sigma2"] = -1.0;
    CHECK(code_of(config) == kExitSchema);

    config = small_mc();
    config["k"] = "ten";
    CHECK(code_of(config) == kExitSchema);
}

TEST_CASE("validity errors") {
    json config = small_mc();
    config["gamma"]["C"] = 0.01;
    CHECK(code_of(config) == kExitValidity);

    config = small_mc();
    config["model"] = "interactive";
    config["psi"] = json::parse(R"({"h": [[0.0, 1.0], [1.0, -1.0]]})");
    CHECK(code_of(config) == kExitValidity);
}

TEST_CASE("runs are deterministic and independent of the worker count") {
    const json config = small_mc();
    const auto one = run_config(config, 1);
    const auto three = run_config(config, 3);
    std::ostringstream a, b;
    write_result_csv(a, one);
    write_result_csv(b, three);
    CHECK(a.str() == b.str());
    CHECK(one.passed());
}

TEST_CASE("artifacts") {
    const auto dir = std::filesystem::temp_directory_path() / "gwflow_config_test";
    std::filesystem::remove_all(dir);
    const json config = bundled_config("feller_binary").document;
    const auto result = run_config(config);
    write_artifacts(dir, config, result);
    REQUIRE(std::filesystem::exists(dir / "results.csv"));
    std::ifstream in(dir / "summary.json");
    const auto summary = json::parse(in);
    CHECK(summary["passed"] == true);
    CHECK(summary["name"] == "feller_binary");
    CHECK(summary["rungs"].size() == 3);
    std::filesystem::remove_all(dir);
}

TEST_CASE("load_config reports unreadable files") {
    CHECK_THROWS_AS((void)load_config("/nonexistent/config.json"), ConfigError);
    const auto path = std::filesystem::temp_directory_path() / "gwflow_bad.json";
    std::ofstream(path) << "{ not json";
    CHECK_THROWS_AS((void)load_config(path), ConfigError);
    std::filesystem::remove(path);
}
