#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "odefit/domain.hpp"
#include "odefit/dynamics.hpp"

namespace odefit {

// One short observed trajectory: J+1 samples at t0 + j*dt.
struct TrajectoryBurst {
    int id = 0;
    double t0 = 0.0;
    double dt = 0.0;
    Eigen::MatrixXd states;                    // (J+1) x d
    std::optional<Eigen::MatrixXd> algebraic;  // (J+1) x d_v, DAE bursts only

    int intervals() const { return static_cast<int>(states.rows()) - 1; }
    double time(int j) const { return t0 + j * dt; }
};

struct NoiseLaw {
    enum class Kind { none, uniform, gaussian };
    Kind kind = Kind::none;
    double scale = 0.0;  // eta for uniform on [-eta, eta], sigma for gaussian
};

// One law per component; a single law is broadcast to every component.
struct NoiseSpec {
    std::vector<NoiseLaw> laws;

    static NoiseSpec none() { return {}; }
    static NoiseSpec uniform(double eta) { return {{{NoiseLaw::Kind::uniform, eta}}}; }
    static NoiseSpec gaussian(double sigma) { return {{{NoiseLaw::Kind::gaussian, sigma}}}; }
    bool is_none() const;
    const NoiseLaw& law(int component) const;
};

// Adds N(mean, stddev^2) to every entry of `count` randomly chosen bursts.
struct CorruptionSpec {
    std::size_t count = 0;
    double mean = 0.0;
    double stddev = 0.0;
};

struct PerturbSeeds {
    std::uint64_t noise = 0;
    std::uint64_t corruption = 0;
};

// (x, xdot) sample feeding the regression, optionally with the algebraic
// observation v at the same instant.
struct DataPairing {
    Point x;
    Point xdot;
    std::optional<Point> v;
    double weight = 1.0;
    int burst_id = 0;
    double t = 0.0;
};

struct BurstOptions {
    std::size_t count = 1;  // M
    int intervals = 2;      // J
    double dt = 0.005;
    SamplingStrategy strategy = SamplingStrategy::uniform;
    int substeps = 10;
    int retry_cap = 100;
};

// Integrates `count` bursts from initial states drawn in the domain. Noiseless.
std::vector<TrajectoryBurst> synthesize_bursts(const System& system, const Domain& domain, const BurstOptions& opts,
                                               std::uint64_t seed);

struct PerturbReport {
    std::vector<int> corrupted_ids;
};

// Entrywise noise on states (and algebraic values when present), then
// corruption of whole bursts. Identity for empty specs.
std::vector<TrajectoryBurst> perturb(const std::vector<TrajectoryBurst>& bursts, const NoiseSpec& state_noise,
                                     const NoiseSpec& algebraic_noise, const CorruptionSpec& corruption,
                                     const PerturbSeeds& seeds, PerturbReport* report = nullptr);

struct DerivativeMethod {
    enum class Kind { central, lsq };
    Kind kind = Kind::central;
    int degree = 1;  // L, lsq only
    int window = 0;  // lsq only: 0 fits the whole burst once, otherwise a sliding window of this many points

    static DerivativeMethod central() { return {}; }
    static DerivativeMethod lsq(int degree, int window = 0) { return {Kind::lsq, degree, window}; }
};

std::vector<DataPairing> estimate_derivatives(const TrajectoryBurst& burst, const DerivativeMethod& method);
std::vector<DataPairing> estimate_derivatives(const std::vector<TrajectoryBurst>& bursts,
                                              const DerivativeMethod& method);

// Keeps pairings whose state lies in the domain (mask included).
std::vector<DataPairing> drop_outside(std::vector<DataPairing> pairings, const Domain& domain);

// CSV formats, each opened by a "# odefit-<kind> v1" line.
void write_bursts_csv(std::ostream& os, const std::vector<TrajectoryBurst>& bursts);
std::vector<TrajectoryBurst> read_bursts_csv(std::istream& is);
void write_pairings_csv(std::ostream& os, const std::vector<DataPairing>& pairings);
// expected_dim < 0 skips the dimension check.
std::vector<DataPairing> read_pairings_csv(std::istream& is, int expected_dim = -1);

}  // namespace odefit
