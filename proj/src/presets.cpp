#include "odefit/presets.hpp"

#include <map>
#include <stdexcept>

namespace odefit {

using nlohmann::json;

namespace {

const char* const kPresetText = R"json({
  "saddle": {
    "description": "linear saddle, noiseless bursts, least squares",
    "seed": 101, "system": "saddle",
    "domain": {"bounds": [[0, 2], [0, 2]]},
    "bursts": {"count": 10, "intervals": 2},
    "basis": {"kind": "monomial", "degree": 1},
    "solver": {"kind": "l2"},
    "validation": {"initial_states": [[1.0, 0.9]], "horizon": 1.0, "dt": 0.01}
  },
  "improper-node": {
    "description": "linear improper node, noiseless bursts, least absolute deviations",
    "seed": 102, "system": "improper-node",
    "domain": {"bounds": [[-1, 1], [-1, 1]]},
    "bursts": {"count": 10, "intervals": 2},
    "basis": {"kind": "monomial", "degree": 1},
    "solver": {"kind": "l1"},
    "validation": {"initial_states": [[0.5, -0.5]], "horizon": 1.0, "dt": 0.01}
  },
  "star": {
    "description": "linear star node, uniformly noisy bursts, least squares",
    "seed": 103, "system": "star",
    "domain": {"bounds": [[-1, 1], [-1, 1]]},
    "bursts": {"count": 10, "intervals": 19},
    "noise": {"state": {"kind": "uniform", "scale": 0.01}},
    "derivative": {"method": "lsq", "degree": 2},
    "basis": {"kind": "monomial", "degree": 1},
    "solver": {"kind": "l2"},
    "validation": {"initial_states": [[0.5, 0.5]], "horizon": 1.0, "dt": 0.01}
  },
  "nodal-sink": {
    "description": "linear nodal sink on a half-plane masked domain, noisy bursts",
    "seed": 104, "system": "nodal-sink",
    "domain": {"bounds": [[-2, 0], [-1, 1]], "mask": "halfplane(0,-1,1)"},
    "drop_outside": true,
    "bursts": {"count": 10, "intervals": 19},
    "noise": {"state": {"kind": "uniform", "scale": 0.01}},
    "derivative": {"method": "lsq", "degree": 2},
    "basis": {"kind": "monomial", "degree": 1},
    "solver": {"kind": "l2"},
    "validation": {"initial_states": [[-1.0, 0.5]], "horizon": 1.0, "dt": 0.01}
  },
  "center": {
    "description": "linear center, 10% of bursts corrupted, least absolute deviations",
    "seed": 105, "system": "center",
    "domain": {"bounds": [[-1, 1], [-1, 1]]},
    "bursts": {"count": 20, "intervals": 2},
    "corruption": {"count": 2, "mean": 0.5, "stddev": 1.0},
    "basis": {"kind": "monomial", "degree": 1},
    "solver": {"kind": "l1"},
    "validation": {"initial_states": [[0.5, 0.0]], "horizon": 1.0, "dt": 0.01}
  },
  "spiral": {
    "description": "linear spiral on a disk, 10% of bursts corrupted, least absolute deviations",
    "seed": 106, "system": "spiral",
    "domain": {"bounds": [[-3, -1], [0, 2]], "mask": "disk(-2,1,1)"},
    "drop_outside": true,
    "bursts": {"count": 20, "intervals": 2},
    "corruption": {"count": 2, "mean": 0.5, "stddev": 1.0},
    "basis": {"kind": "monomial", "degree": 1},
    "solver": {"kind": "l1"},
    "validation": {"initial_states": [[-2.0, 1.5]], "horizon": 1.0, "dt": 0.01}
  },
  "duffing": {
    "description": "undamped Duffing oscillator, noiseless bursts, cubic basis",
    "seed": 201, "system": "duffing",
    "domain": {"bounds": [[0, 2], [-1, 1]]},
    "bursts": {"count": 30, "intervals": 2},
    "basis": {"kind": "monomial", "degree": 3},
    "solver": {"kind": "l1"},
    "validation": {"initial_states": [[1.0, 0.0]], "horizon": 1.0, "dt": 0.01}
  },
  "competing-species": {
    "description": "competing species, uniformly noisy bursts, quadratic least squares",
    "seed": 202, "system": "competing-species",
    "domain": {"bounds": [[-1, 2], [-0.5, 3]]},
    "bursts": {"count": 30, "intervals": 30},
    "noise": {"state": {"kind": "uniform", "scale": 0.01}},
    "derivative": {"method": "lsq", "degree": 2},
    "basis": {"kind": "monomial", "degree": 2},
    "solver": {"kind": "l2"},
    "validation": {"initial_states": [[1.25, 1.75]], "horizon": 10.0, "dt": 0.01}
  },
  "limit-cycle": {
    "description": "cubic limit cycle on an annulus, 10% of bursts corrupted",
    "seed": 203, "system": "limit-cycle",
    "domain": {"bounds": [[-2, 2], [-2, 2]], "mask": "annulus(0,0,1)"},
    "drop_outside": true,
    "bursts": {"count": 40, "intervals": 2},
    "corruption": {"count": 4, "mean": 0.5, "stddev": 1.0},
    "basis": {"kind": "monomial", "degree": 3},
    "solver": {"kind": "l1"},
    "validation": {"initial_states": [[-1.325, 1.874]], "horizon": 10.0, "dt": 0.01}
  },
  "limit-cycle-noise": {
    "description": "cubic limit cycle, uniformly noisy bursts of 11 points, noise-level sweep",
    "seed": 204, "system": "limit-cycle",
    "domain": {"bounds": [[-2, 2], [-2, 2]], "mask": "annulus(0,0,1)"},
    "drop_outside": true,
    "bursts": {"count": 40, "intervals": 10},
    "noise": {"state": {"kind": "uniform", "scale": 0.01}},
    "derivative": {"method": "lsq", "degree": 2},
    "basis": {"kind": "monomial", "degree": 3},
    "solver": {"kind": "l1"},
    "validation": {"initial_states": [[-1.325, 1.874]], "horizon": 10.0, "dt": 0.01},
    "sweep": {"axis": "noise", "values": [0, 0.005, 0.01, 0.05, 0.1, 0.2]}
  },
  "pendulum": {
    "description": "damped pendulum (non-polynomial), degree-6 least squares",
    "seed": 205, "system": "pendulum",
    "domain": {"bounds": [[-3.141592653589793, 3.141592653589793], [-6.283185307179586, 6.283185307179586]]},
    "bursts": {"count": 200, "intervals": 2},
    "basis": {"kind": "monomial", "degree": 6},
    "solver": {"kind": "l2"},
    "validation": {"initial_states": [[-1.193, -3.876]], "horizon": 10.0, "dt": 0.01},
    "sweep": {"axis": "degree", "values": [2, 4, 6]}
  },
  "network": {
    "description": "nonlinear electric network DAE, noisy state and algebraic observations",
    "seed": 301, "system": "network",
    "domain": {"bounds": [[-2, 2], [-0.2, 0.2]]},
    "bursts": {"count": 200, "intervals": 19, "dt": 1e-9},
    "noise": {"state": {"kind": "uniform", "scale": 1e-4},
              "algebraic": [{"kind": "gaussian", "scale": 0.001}, {"kind": "gaussian", "scale": 0.005}]},
    "derivative": {"method": "lsq", "degree": 8},
    "basis": {"kind": "legendre", "degree": 8},
    "solver": {"kind": "l2"},
    "validation": {"initial_states": [[0.0, 0.1]], "horizon": 2e-7, "dt": 1e-9}
  },
  "toggle": {
    "description": "genetic toggle switch DAE, 1% of bursts corrupted, degree-16 least absolute deviations",
    "seed": 302, "system": "toggle",
    "domain": {"bounds": [[0, 20], [0, 20]]},
    "bursts": {"count": 500, "intervals": 2},
    "corruption": {"count": 5, "mean": 1.0, "stddev": 1.0},
    "basis": {"kind": "legendre", "degree": 16},
    "solver": {"kind": "l1"},
    "validation": {"initial_states": [[19.5, 16.5]], "horizon": 10.0, "dt": 0.01}
  },
  "batch-reactor": {
    "description": "batch reactor DAE, sequential approximation on a scaled profile (N = 924)",
    "seed": 401, "system": "batch-reactor",
    "domain": {"bounds": [[0.6, 1.6], [6.5, 8.5], [0, 0.7], [0, 0.3], [0, 0.3], [0, 0.02]]},
    "bursts": {"count": 50000, "intervals": 2, "dt": 1e-6, "sampler": "chebyshev-tensor"},
    "basis": {"kind": "legendre", "degree": 6},
    "solver": {"kind": "sa", "gamma": "zero", "steps": 250000, "cycle": true,
               "monitor": {"samples": 20000, "cadence": 10000}},
    "validation": {"initial_states": [[1.5776, 8.32, 0, 0, 0, 0.0142]], "horizon": 2e-4, "dt": 1e-6}
  },
  "batch-reactor-full": {
    "description": "batch reactor DAE at full scale (500,000 bursts, N = 18,564); hours of CPU time",
    "seed": 402, "system": "batch-reactor",
    "domain": {"bounds": [[0.6, 1.6], [6.5, 8.5], [0, 0.7], [0, 0.3], [0, 0.3], [0, 0.02]]},
    "bursts": {"count": 500000, "intervals": 2, "dt": 1e-6, "sampler": "chebyshev-tensor"},
    "basis": {"kind": "legendre", "degree": 12},
    "solver": {"kind": "sa", "gamma": "zero", "steps": 500000, "cycle": false,
               "monitor": {"samples": 20000, "cadence": 10000}},
    "validation": {"initial_states": [[1.5776, 8.32, 0, 0, 0, 0.0142]], "horizon": 2e-4, "dt": 1e-6}
  }
})json";

const std::map<std::string, json>& presets() {
    static const std::map<std::string, json> table = [] {
        std::map<std::string, json> m;
        const json all = json::parse(kPresetText);
        for (auto it = all.begin(); it != all.end(); ++it) {
            json p = it.value();
            p["name"] = it.key();
            m.emplace(it.key(), std::move(p));
        }
        return m;
    }();
    return table;
}

}  // namespace

std::vector<std::string> preset_names() {
    std::vector<std::string> out;
    for (const auto& [name, _] : presets()) out.push_back(name);
    return out;
}

const json& preset_json(const std::string& name) {
    const auto& t = presets();
    const auto it = t.find(name);
    if (it == t.end()) {
        std::string known;
        for (const auto& [n, _] : t) known += (known.empty() ? "" : ", ") + n;
        throw std::invalid_argument("unknown preset '" + name + "' (known: " + known + ")");
    }
    return it->second;
}

ExperimentConfig preset_config(const std::string& name) { return config_from_json(preset_json(name)); }

std::optional<SweepPlan> preset_sweep(const std::string& name) {
    const json& p = preset_json(name);
    if (!p.contains("sweep")) return std::nullopt;
    return SweepPlan{parse_sweep_axis(p["sweep"]["axis"].get<std::string>()),
                     p["sweep"]["values"].get<std::vector<double>>()};
}

std::string resource_warning(const ExperimentConfig& config) {
    const double n = static_cast<double>(config.basis().size());
    const double m = static_cast<double>(config.bursts.count);
    if (config.sequential) {
        const double steps = config.sa.steps ? static_cast<double>(config.sa.steps) : m;
        const double monitor = static_cast<double>(config.sa.monitor_samples) * (steps / std::max<double>(1.0, config.sa.cadence));
        const double work = (steps + monitor) * n * (config.domain.dim() + 4);
        if (work > 1e11) {
            return "resource warning: about " + std::to_string(static_cast<long long>(work / 1e9)) +
                   " Gflop of sequential updates and monitoring (basis size " +
                   std::to_string(static_cast<long long>(n)) + "); expect hours on one core";
        }
        return {};
    }
    const double bytes = 8.0 * m * n;
    if (bytes > 4e9) {
        return "resource warning: model matrix needs about " + std::to_string(static_cast<long long>(bytes / 1e9)) + " GB";
    }
    return {};
}

}  // namespace odefit
