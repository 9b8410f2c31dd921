#pragma once

#include <string>
#include <vector>

#include "odefit/experiment.hpp"
#include "odefit/vendor_json.hpp"

namespace odefit {

// Named configurations reproducing each benchmark experiment; show-preset
// prints the embedded document.
std::vector<std::string> preset_names();

// Throws std::invalid_argument listing the known names.
const nlohmann::json& preset_json(const std::string& name);
ExperimentConfig preset_config(const std::string& name);

// Default sweep stored with a preset, when it has one.
struct SweepPlan {
    SweepAxis axis;
    std::vector<double> values;
};
std::optional<SweepPlan> preset_sweep(const std::string& name);

// Plain-text warning for configurations expected to need hours or many GB;
// empty when none applies.
std::string resource_warning(const ExperimentConfig& config);

}  // namespace odefit
