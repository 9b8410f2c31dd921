#pragma once

// Matrix-free sequential approximation: each step consumes a single pairing
// and moves every coefficient column along the basis vector at that state.
// Nothing here touches a model matrix; per-step work is O(N d).

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "odefit/coefficients.hpp"
#include "odefit/data.hpp"

namespace odefit {

// gamma_k as a function of the step counter. Only the two presets are
// offered; the constant is chosen by the user from the noise level.
struct GammaSchedule {
    enum class Kind { zero, constant };
    Kind kind = Kind::zero;
    double value = 0.0;

    static GammaSchedule zero() { return {}; }
    static GammaSchedule constant(double gamma);
    // "zero" or "constant(<gamma>)"
    static GammaSchedule parse(const std::string& tag);

    double operator()(std::uint64_t /*k*/) const { return kind == Kind::zero ? 0.0 : value; }
    std::string tag() const;
    bool operator==(const GammaSchedule&) const = default;
};

struct SaState {
    Eigen::MatrixXd coeffs;      // N x d
    Eigen::MatrixXd constraint;  // N x d_v, zero columns when v is not streamed
    std::uint64_t k = 0;
    GammaSchedule gamma;

    static SaState zeros(std::size_t basis_size, int dim, int algebraic_dim = 0, GammaSchedule gamma = {});
};

// Pure update: returns the state after one step on `pairing`.
SaState sa_step(const SaState& state, const DataPairing& pairing, const BasisSpec& basis);

// In-place kernel shared by sa_step and sa_run: phi = Phi(x) is supplied.
void sa_update(SaState& state, std::span<const double> phi, const Point& xdot, const std::optional<Point>& v);

// Step order over `count` pairings: seeded shuffle per epoch. With cycle the
// order repeats (reshuffled) until `steps` entries exist; without it the run
// stops after one pass. steps == 0 means one pass.
std::vector<std::size_t> stream_order(std::size_t count, std::size_t steps, std::uint64_t seed, bool cycle = true);

// Reference values on a fixed sample set; truth_g is used only when the
// constraint map is streamed along.
struct SaMonitor {
    Eigen::MatrixXd points;   // S x d
    Eigen::MatrixXd truth_f;  // S x d, empty when the truth is unknown
    Eigen::MatrixXd truth_g;  // S x d_v, optional
    std::size_t cadence = 100;

    bool has_truth() const { return truth_f.size() > 0; }
};

// Built from a system's rhs and, for DAEs, its constraint map.
SaMonitor make_monitor(const std::vector<Point>& points, const RhsFn& f, const std::function<State(const State&)>& g,
                       std::size_t cadence);

struct SaRecord {
    std::uint64_t step = 0;
    std::vector<double> f_component;  // relative l2 error per component
    double f_total = 0.0;
    std::vector<double> g_component;
    double g_total = 0.0;
    // Relative coefficient change since the previous record; the only
    // quantity recorded when the monitor has no truth.
    double update_norm = 0.0;
};

struct SaResult {
    SaState state;
    std::vector<SaRecord> history;
};

// Applies sa_update over pairings[order[0]], pairings[order[1]], ... and
// records the monitor every `cadence` steps. Throws BlowUpError with the
// step index when a coefficient turns non-finite.
SaResult sa_run(const std::vector<DataPairing>& pairings, std::span<const std::size_t> order, const BasisSpec& basis,
                SaState initial, const SaMonitor* monitor);

// Relative errors of the current coefficients on the monitor set.
SaRecord sa_evaluate(const SaState& state, const BasisSpec& basis, const SaMonitor& monitor);

// step,component,relative_l2_error; component is f_1.., g_1.., f, g or update.
void write_history_csv(std::ostream& os, const std::vector<SaRecord>& history);

}  // namespace odefit
