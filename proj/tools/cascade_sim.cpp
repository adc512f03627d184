// cascade-sim: command-line front end for the experiment drivers.
//
//   cascade-sim <flux|scan|g2map|gated|probe-loss> [--config FILE]
//               [--area RAD] [--out DIR] [--no-jitter]
//
// Worker threads come from CASCADE_WORKERS (default: all cores).

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "cascade/experiments.hpp"

namespace {

int fail(const std::string& command, const std::string& kind, const std::string& message, int code) {
    nlohmann::json err{{"error", {{"command", command}, {"type", kind}, {"message", message}}}};
    std::cerr << err.dump() << '\n';
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cascaded two-emitter photon statistics simulator"};
    app.require_subcommand(1);

    std::string configPath;
    std::optional<double> area;
    std::optional<std::string> outDir;
    bool noJitter = false;

    const char* commands[][2] = {
        {"flux", "input/output photon flux profiles"},
        {"scan", "integrated flux and g2 versus pulse area"},
        {"g2map", "two-time correlation maps and diagonal fit"},
        {"gated", "time-gated g2 for both generations"},
        {"probe-loss", "sensitivity of the output statistics to eta'_loss"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("-c,--config", configPath, "JSON configuration file")->check(CLI::ExistingFile);
        sub->add_option("--area", area, "pulse area in radians (overrides pulse.area)");
        sub->add_option("-o,--out", outDir, "output directory (overrides output_dir)");
        sub->add_flag("--no-jitter", noJitter, "skip detector jitter convolution");
    }

    CLI11_PARSE(app, argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        cascade::ExperimentConfig cfg =
            configPath.empty() ? cascade::ExperimentConfig::defaults() : cascade::loadConfig(configPath);
        if (area) {
            cfg.pulse.area = *area;
        }
        if (outDir) {
            cfg.output_dir = *outDir;
        }
        if (noJitter) {
            cfg.apply_jitter = false;
        }
        cfg.validate();
        const auto files = cascade::runCommand(command, cfg, cascade::workersFromEnvironment());
        for (const auto& f : files) {
            std::cout << cfg.output_dir << "/" << f << '\n';
        }
    } catch (const cascade::IntegrationError& e) {
        return fail(command, "integration", e.what(), 3);
    } catch (const std::invalid_argument& e) {
        return fail(command, "invalid_argument", e.what(), 2);
    } catch (const std::exception& e) {
        return fail(command, "runtime", e.what(), 1);
    }
    return 0;
}
