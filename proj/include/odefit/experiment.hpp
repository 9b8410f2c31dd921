#pragma once

// Config-driven pipeline: synthesize bursts, perturb, differentiate, fit,
// validate and report. Every random draw comes from the config seed through
// named sub-seeds ("sampler", "noise", "corruption", "shuffle", "monitor",
// "evaluation"), so changing one stage leaves the others' draws unchanged.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "odefit/analysis.hpp"
#include "odefit/data.hpp"
#include "odefit/regression.hpp"
#include "odefit/sequential.hpp"
#include "odefit/vendor_json.hpp"

namespace odefit {

struct SaSpec {
    GammaSchedule gamma;
    std::size_t steps = 0;  // 0: one pass over the pairings
    bool cycle = true;
    std::size_t monitor_samples = 20000;
    std::size_t cadence = 1000;
    bool stream_constraint = true;
};

struct ValidationSpec {
    std::vector<State> initial_states;
    double horizon = 1.0;
    double dt = 0.01;
    int substeps = 10;
};

struct ExperimentConfig {
    std::string name = "experiment";
    std::uint64_t seed = 0;
    std::string system;         // builtin name
    std::string pairings_path;  // external data instead of a builtin
    Domain domain;
    BurstOptions bursts;
    NoiseSpec state_noise;
    NoiseSpec algebraic_noise;
    CorruptionSpec corruption;
    DerivativeMethod derivative;
    bool drop_outside = false;
    BasisKind basis_kind = BasisKind::monomial;
    int degree = 1;
    bool sequential = false;  // SA instead of a batch solver
    SolverChoice solver;
    SaSpec sa;
    // Algebraic map fit for DAEs; defaults to the state basis and solver.
    std::optional<BasisKind> constraint_kind;
    std::optional<int> constraint_degree;
    std::optional<SolverChoice> constraint_solver;
    ValidationSpec validation;
    std::size_t evaluation_samples = 2000;

    BasisSpec basis() const { return BasisSpec(basis_kind, degree, domain); }
    BasisSpec constraint_basis() const;
};

// Throws ParseError naming the offending key.
ExperimentConfig config_from_json(const nlohmann::json& j);
// Fully resolved form; config_from_json(config_to_json(c)) reproduces c.
nlohmann::json config_to_json(const ExperimentConfig& c);

// First 8 hex digits of a hash of the resolved config.
std::string config_hash(const ExperimentConfig& c);

// Named output files (name -> content) plus the parsed results.
struct ReportBundle {
    bool ok = true;
    std::string failed_stage;
    std::string error;
    std::map<std::string, std::string> files;
    nlohmann::json summary;
    std::optional<CoefficientSet> coefficients;
    std::optional<CoefficientSet> constraint;
    std::vector<TrajectoryComparison> validations;
    std::vector<SaRecord> history;
    std::vector<DataPairing> pairings;
};

// `resume` continues a sequential run from a stored snapshot.
ReportBundle run_experiment(const ExperimentConfig& config, const SaState* resume = nullptr);

// Writes every file of the bundle below dir (created when missing).
void write_bundle(const ReportBundle& bundle, const std::string& dir);

// <name>-<hash8>-<UTC timestamp>
std::string run_directory_name(const ExperimentConfig& c);

enum class SweepAxis { noise, degree, count };
SweepAxis parse_sweep_axis(const std::string& name);
std::string to_string(SweepAxis axis);

// Copy of the base config with the axis set to value.
ExperimentConfig with_axis_value(const ExperimentConfig& base, SweepAxis axis, double value);

struct SweepRow {
    double value = 0.0;
    bool ok = true;
    std::string error;
    std::vector<double> coef_l2;  // per component, empty when no truth is known
    double coef_l2_total = 0.0;
    double coef_max = 0.0;
    double max_trajectory_error = 0.0;
    nlohmann::json summary;
};

// One run per value; every run reuses the base seed so that the axis is the
// only thing that changes between rows. Failures are recorded per row.
std::vector<SweepRow> run_sweep(const ExperimentConfig& base, SweepAxis axis, const std::vector<double>& values,
                                unsigned workers = 1);

std::string sweep_csv(SweepAxis axis, const std::vector<SweepRow>& rows);

// Reads a pairing CSV, checking the state dimension when expected_dim >= 0.
std::vector<DataPairing> import_pairings(const std::string& path, int expected_dim = -1);

// Stage outputs without fitting, for the synth and export commands.
struct SynthesisResult {
    std::vector<TrajectoryBurst> bursts;
    PerturbReport perturbation;
    std::vector<DataPairing> pairings;
};
SynthesisResult synthesize(const ExperimentConfig& config);

// Validates a stored coefficient set (and constraint map) against the
// config's builtin system from the configured initial states.
std::vector<TrajectoryComparison> validate(const ExperimentConfig& config, const LearnedSystem& learned);

// Error-bound evaluation for a learned legendre expansion of a builtin ODE:
// all bound inputs estimated on the config domain, compared against the
// observed trajectory error from u0 up to the first domain exit.
struct BoundReport {
    BoundInputs inputs;
    double bound = 0.0;
    double observed_max_error = 0.0;
    std::optional<std::size_t> first_exit;
    double sampled_sup_error = 0.0;  // sup |f~ - f| over the check samples
    double sup_inequality_rhs = 0.0;          // proj_sup_err + l2_err * sup_sqrt_k
};
BoundReport evaluate_bound(const ExperimentConfig& config, const CoefficientSet& learned, const State& u0,
                           double horizon, std::size_t lipschitz_samples = 100000, std::size_t sup_samples = 10000);
nlohmann::json to_json(const BoundReport& report);

}  // namespace odefit
