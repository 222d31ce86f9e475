#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "stosym/experiments.hpp"

namespace {

int run_command(const std::string& config_path, const std::string& out_flag,
                std::optional<std::uint64_t> seed_override)
{
    std::ifstream file(config_path);
    if (!file) {
        std::cerr << "cannot read config file: " << config_path << "\n";
        return 2;
    }
    std::stringstream buffer;
    buffer << file.rdbuf();
    const std::string config = buffer.str();

    stosym::ExperimentReport report;
    std::string out_dir = out_flag;
    try {
        if (out_dir.empty()) {
            const nlohmann::json parsed = nlohmann::json::parse(config);
            if (parsed.is_object() && parsed.contains("out"))
                out_dir = parsed.at("out").get<std::string>();
        }
        report = stosym::run_experiment(config, seed_override);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    if (out_dir.empty()) out_dir = ".";

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    const auto write_file = [&](const std::string& name,
                                const std::string& content) {
        const std::filesystem::path path =
            std::filesystem::path(out_dir) / name;
        std::ofstream out(path, std::ios::binary);
        if (!out) {
            std::cerr << "cannot write " << path.string() << "\n";
            return false;
        }
        out << content;
        return true;
    };

    if (!write_file("report.json", stosym::report_to_json(report))) return 2;
    for (const auto& artifact : report.artifacts)
        if (!write_file(artifact.first, artifact.second)) return 2;

    for (const auto& check : report.checks)
        std::cout << (check.pass ? "[pass] " : "[FAIL] ") << check.label
                  << ": " << check.statistic << " " << check.relation << " "
                  << check.threshold << "\n";
    std::cout << "experiment " << report.name << ": "
              << (report.pass ? "pass" : "FAIL") << "\n";
    return report.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"symmetry experiment runner"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "run one experiment from a config");
    std::string config_path;
    run->add_option("--config", config_path, "json config file")->required();
    std::string out_dir;
    run->add_option("--out", out_dir,
                    "output directory (defaults to the config's out field, "
                    "then the working directory)");
    std::uint64_t seed_value = 0;
    auto* seed_opt = run->add_option("--seed-override", seed_value,
                                     "replace the config's seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    std::optional<std::uint64_t> seed_override;
    if (seed_opt->count() > 0) seed_override = seed_value;
    return run_command(config_path, out_dir, seed_override);
}
