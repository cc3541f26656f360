#include "cli_common.hpp"
#include "imk/suite.hpp"

#include <CLI11.hpp>

#include <filesystem>

using namespace imk;

int main(int argc, char** argv) {
    CLI::App app{"Dynamic verification suites: attraction, ejection, tube, neighbor, nondeg"};
    std::string suite = "all", config, out = "report.json";
    std::vector<std::string> choices = suite_names();
    choices.push_back("all");
    app.add_option("--suite", suite, "Suite to run")->check(CLI::IsMember(choices));
    app.add_option("--config", config, "YAML run configuration")->required()->check(CLI::ExistingFile);
    app.add_option("--out", out, "JSON report; distance traces go to <stem>_<scenario>.csv");
    CLI11_PARSE(app, argc, argv);

    return cli::guarded_main([&] {
        const SuiteConfig cfg = load_suite_config(config);
        if (const auto dir = std::filesystem::path(out).parent_path(); !dir.empty())
            std::filesystem::create_directories(dir);
        const std::string stem = std::filesystem::path(out).replace_extension("").string();
        const SuiteResult r = run_suite(suite, cfg, stem);
        nlohmann::json j = r.to_json();
        j["suite"] = suite;
        j["config"] = config;
        cli::write_json(out, j);
        for (const ExperimentReport& e : r.reports) {
            std::cout << e.scenario << ": " << (e.status == "ok" ? (e.pass ? "PASS" : "FAIL") : e.status);
            if (!e.reason.empty()) std::cout << " (" << e.reason << ')';
            std::cout << '\n';
        }
        return r.pass() ? 0 : 2;
    });
}
