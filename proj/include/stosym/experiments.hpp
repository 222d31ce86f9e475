#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace stosym {

/// One numeric criterion of an experiment.  `relation` says which side of
/// the threshold passes: "<=" for defect bounds, ">=" for detection checks
/// that must exceed a floor (counterexamples, perturbed inputs).
struct ExperimentCheck {
    std::string label;
    double statistic = 0.0;
    double threshold = 0.0;
    std::string relation = "<=";
    bool pass = false;
};

struct ExperimentReport {
    std::string name;
    std::uint64_t seed = 0;
    bool pass = false;  // every check passed
    std::vector<ExperimentCheck> checks;
    // (filename, content) pairs the caller may write next to the report
    std::vector<std::pair<std::string, std::string>> artifacts;
};

/// Names accepted by run_experiment, in registry order.
std::vector<std::string> experiment_names();

/// Runs the experiment described by a JSON config object with fields
///   experiment: registered name (required)
///   seed:       base RNG seed (default 0)
///   out:        ignored here, reserved for the caller
/// plus experiment-specific parameter overrides.  Unknown experiment names
/// and unknown config keys throw std::invalid_argument; the message for an
/// unknown name lists the valid ones.  The same config and seed produce an
/// identical report, artifacts included.
ExperimentReport run_experiment(
    const std::string& config_json,
    std::optional<std::uint64_t> seed_override = std::nullopt);

/// Stable JSON rendering of the report (alphabetical keys, no timestamps);
/// artifact contents are not embedded, only their filenames.
std::string report_to_json(const ExperimentReport& r);

}  // namespace stosym
