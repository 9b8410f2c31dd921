#include "odefit/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include "odefit/error.hpp"
#include "odefit/rng.hpp"
#include "odefit/serialize.hpp"

namespace odefit {

using nlohmann::json;

BasisSpec ExperimentConfig::constraint_basis() const {
    return BasisSpec(constraint_kind.value_or(basis_kind), constraint_degree.value_or(degree), domain);
}

// ---------------------------------------------------------------- config

namespace {

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ParseError("'" + where + "' must be an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!ok.count(it.key())) throw ParseError("unknown key '" + it.key() + "' in '" + where + "'");
    }
}

template <class T>
T get(const json& j, const char* key, const std::string& where, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ParseError("bad value for '" + where + "." + key + "'");
    }
}

NoiseLaw law_from_json(const json& j, const std::string& where) {
    check_keys(j, where, {"kind", "scale"});
    NoiseLaw law;
    const auto kind = get<std::string>(j, "kind", where, "none");
    if (kind == "none") law.kind = NoiseLaw::Kind::none;
    else if (kind == "uniform") law.kind = NoiseLaw::Kind::uniform;
    else if (kind == "gaussian") law.kind = NoiseLaw::Kind::gaussian;
    else throw ParseError("unknown noise kind '" + kind + "' in '" + where + "'");
    law.scale = get<double>(j, "scale", where, 0.0);
    if (!(law.scale >= 0.0)) throw ParseError("noise scale must be >= 0 in '" + where + "'");
    return law;
}

NoiseSpec noise_from_json(const json& j, const std::string& where) {
    NoiseSpec spec;
    if (j.is_null()) return spec;
    if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i) spec.laws.push_back(law_from_json(j[i], where + "[" + std::to_string(i) + "]"));
    } else {
        spec.laws.push_back(law_from_json(j, where));
    }
    if (spec.is_none()) spec.laws.clear();
    return spec;
}

const char* law_name(NoiseLaw::Kind k) {
    switch (k) {
        case NoiseLaw::Kind::none: return "none";
        case NoiseLaw::Kind::uniform: return "uniform";
        case NoiseLaw::Kind::gaussian: return "gaussian";
    }
    return "none";
}

json noise_to_json(const NoiseSpec& spec) {
    if (spec.laws.empty()) return {{"kind", "none"}, {"scale", 0.0}};
    auto one = [](const NoiseLaw& l) { return json{{"kind", law_name(l.kind)}, {"scale", l.scale}}; };
    if (spec.laws.size() == 1) return one(spec.laws.front());
    json a = json::array();
    for (const auto& l : spec.laws) a.push_back(one(l));
    return a;
}

SolverChoice batch_solver_from_json(const json& j, const std::string& where, bool* sequential, SaSpec* sa) {
    SolverChoice s;
    const auto kind = get<std::string>(j, "kind", where, "l2");
    if (kind == "sa") {
        if (!sequential) throw ParseError("'" + where + "' cannot use the sequential solver");
        check_keys(j, where, {"kind", "gamma", "steps", "cycle", "monitor", "stream_constraint"});
        *sequential = true;
        sa->gamma = GammaSchedule::parse(get<std::string>(j, "gamma", where, "zero"));
        sa->steps = get<std::size_t>(j, "steps", where, 0);
        sa->cycle = get<bool>(j, "cycle", where, true);
        sa->stream_constraint = get<bool>(j, "stream_constraint", where, true);
        if (j.contains("monitor")) {
            const auto& m = j.at("monitor");
            check_keys(m, where + ".monitor", {"samples", "cadence"});
            sa->monitor_samples = get<std::size_t>(m, "samples", where + ".monitor", 20000);
            sa->cadence = get<std::size_t>(m, "cadence", where + ".monitor", 1000);
        }
        return s;
    }
    check_keys(j, where, {"kind", "lambda", "rank_cutoff", "smoothing", "max_iterations", "tolerance", "polish",
                          "max_sweeps"});
    try {
        s.kind = parse_solver_kind(kind);
    } catch (const std::invalid_argument& e) {
        throw ParseError(e.what());
    }
    s.lambda = get<double>(j, "lambda", where, 0.0);
    s.l2.rank_cutoff = get<double>(j, "rank_cutoff", where, s.l2.rank_cutoff);
    s.l1.smoothing = get<double>(j, "smoothing", where, s.l1.smoothing);
    s.l1.max_iterations = get<int>(j, "max_iterations", where, s.l1.max_iterations);
    s.l1.polish = get<bool>(j, "polish", where, s.l1.polish);
    if (s.kind == SolverChoice::Kind::lasso) {
        s.lasso.tolerance = get<double>(j, "tolerance", where, s.lasso.tolerance);
        s.lasso.max_sweeps = get<int>(j, "max_sweeps", where, s.lasso.max_sweeps);
        if (!(s.lambda >= 0.0)) throw ParseError("lasso lambda must be >= 0");
    } else {
        s.l1.tolerance = get<double>(j, "tolerance", where, s.l1.tolerance);
    }
    return s;
}

json solver_to_json(const SolverChoice& s) {
    json j{{"kind", to_string(s.kind)}};
    switch (s.kind) {
        case SolverChoice::Kind::l2: j["rank_cutoff"] = s.l2.rank_cutoff; break;
        case SolverChoice::Kind::l1:
            j["smoothing"] = s.l1.smoothing;
            j["max_iterations"] = s.l1.max_iterations;
            j["tolerance"] = s.l1.tolerance;
            j["polish"] = s.l1.polish;
            break;
        case SolverChoice::Kind::lasso:
            j["lambda"] = s.lambda;
            j["tolerance"] = s.lasso.tolerance;
            j["max_sweeps"] = s.lasso.max_sweeps;
            break;
    }
    return j;
}

State state_from_json(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) throw ParseError("'" + where + "' must be a non-empty array of numbers");
    State s(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw ParseError("'" + where + "' must contain numbers");
        s[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    }
    return s;
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
    check_keys(j, "config", {"name", "seed", "system", "pairings", "domain", "bursts", "noise", "corruption",
                             "derivative", "drop_outside", "basis", "solver", "constraint", "validation",
                             "evaluation_samples", "description", "sweep"});
    ExperimentConfig c;
    c.name = get<std::string>(j, "name", "config", c.name);
    if (!j.contains("seed")) throw ParseError("config needs a 'seed'");
    c.seed = get<std::uint64_t>(j, "seed", "config", 0);
    c.system = get<std::string>(j, "system", "config", "");
    c.pairings_path = get<std::string>(j, "pairings", "config", "");
    if (c.system.empty() == c.pairings_path.empty()) {
        throw ParseError("config needs exactly one of 'system' and 'pairings'");
    }
    if (!c.system.empty()) {
        const auto names = builtin_names();
        if (std::find(names.begin(), names.end(), c.system) == names.end()) {
            throw ParseError("unknown system '" + c.system + "'");
        }
    }
    if (!j.contains("domain")) throw ParseError("config needs a 'domain'");
    check_keys(j.at("domain"), "domain", {"bounds", "mask"});
    try {
        c.domain = domain_from_json(j.at("domain"));
    } catch (const ParseError&) {
        throw;
    } catch (const std::exception& e) {
        throw ParseError(std::string("domain: ") + e.what());
    }
    if (!c.system.empty() && c.domain.dim() != state_dim(builtin_system(c.system))) {
        throw ParseError("domain dimension " + std::to_string(c.domain.dim()) + " does not match system '" + c.system +
                         "'");
    }
    if (j.contains("bursts")) {
        const auto& b = j.at("bursts");
        check_keys(b, "bursts", {"count", "intervals", "dt", "sampler", "substeps", "retry_cap"});
        c.bursts.count = get<std::size_t>(b, "count", "bursts", c.bursts.count);
        c.bursts.intervals = get<int>(b, "intervals", "bursts", c.bursts.intervals);
        c.bursts.dt = get<double>(b, "dt", "bursts", c.bursts.dt);
        c.bursts.substeps = get<int>(b, "substeps", "bursts", c.bursts.substeps);
        c.bursts.retry_cap = get<int>(b, "retry_cap", "bursts", c.bursts.retry_cap);
        c.bursts.strategy = parse_strategy(get<std::string>(b, "sampler", "bursts", "uniform"));
        if (c.bursts.count < 1 || c.bursts.intervals < 1 || !(c.bursts.dt > 0.0) || c.bursts.substeps < 1) {
            throw ParseError("bursts need count >= 1, intervals >= 1, dt > 0, substeps >= 1");
        }
    }
    if (j.contains("noise")) {
        const auto& n = j.at("noise");
        check_keys(n, "noise", {"state", "algebraic"});
        if (n.contains("state")) c.state_noise = noise_from_json(n.at("state"), "noise.state");
        if (n.contains("algebraic")) c.algebraic_noise = noise_from_json(n.at("algebraic"), "noise.algebraic");
    }
    if (j.contains("corruption")) {
        const auto& k = j.at("corruption");
        check_keys(k, "corruption", {"count", "mean", "stddev"});
        c.corruption.count = get<std::size_t>(k, "count", "corruption", 0);
        c.corruption.mean = get<double>(k, "mean", "corruption", 0.0);
        c.corruption.stddev = get<double>(k, "stddev", "corruption", 0.0);
    }
    if (j.contains("derivative")) {
        const auto& d = j.at("derivative");
        check_keys(d, "derivative", {"method", "degree", "window"});
        const auto m = get<std::string>(d, "method", "derivative", "central");
        if (m == "central") c.derivative = DerivativeMethod::central();
        else if (m == "lsq") c.derivative = DerivativeMethod::lsq(get<int>(d, "degree", "derivative", 2), get<int>(d, "window", "derivative", 0));
        else throw ParseError("unknown derivative method '" + m + "' (central, lsq)");
    }
    c.drop_outside = get<bool>(j, "drop_outside", "config", c.domain.has_mask());
    if (j.contains("basis")) {
        const auto& b = j.at("basis");
        check_keys(b, "basis", {"kind", "degree"});
        c.basis_kind = parse_basis_kind(get<std::string>(b, "kind", "basis", "monomial"));
        c.degree = get<int>(b, "degree", "basis", 1);
        if (c.degree < 0) throw ParseError("basis degree must be >= 0");
    }
    if (j.contains("solver")) c.solver = batch_solver_from_json(j.at("solver"), "solver", &c.sequential, &c.sa);
    if (j.contains("constraint")) {
        const auto& k = j.at("constraint");
        check_keys(k, "constraint", {"basis", "solver"});
        if (k.contains("basis")) {
            const auto& b = k.at("basis");
            check_keys(b, "constraint.basis", {"kind", "degree"});
            if (b.contains("kind")) c.constraint_kind = parse_basis_kind(b.at("kind").get<std::string>());
            if (b.contains("degree")) c.constraint_degree = b.at("degree").get<int>();
        }
        if (k.contains("solver")) c.constraint_solver = batch_solver_from_json(k.at("solver"), "constraint.solver", nullptr, nullptr);
    }
    if (j.contains("validation")) {
        const auto& v = j.at("validation");
        check_keys(v, "validation", {"initial_states", "horizon", "dt", "substeps"});
        if (v.contains("initial_states")) {
            const auto& a = v.at("initial_states");
            for (std::size_t i = 0; i < a.size(); ++i) {
                State s = state_from_json(a[i], "validation.initial_states[" + std::to_string(i) + "]");
                if (s.size() != c.domain.dim()) throw ParseError("validation initial state has the wrong dimension");
                c.validation.initial_states.push_back(std::move(s));
            }
        }
        c.validation.horizon = get<double>(v, "horizon", "validation", c.validation.horizon);
        c.validation.dt = get<double>(v, "dt", "validation", c.validation.dt);
        c.validation.substeps = get<int>(v, "substeps", "validation", c.validation.substeps);
        if (!(c.validation.horizon >= 0.0) || !(c.validation.dt > 0.0) || c.validation.substeps < 1) {
            throw ParseError("validation needs horizon >= 0, dt > 0, substeps >= 1");
        }
    }
    c.evaluation_samples = get<std::size_t>(j, "evaluation_samples", "config", c.evaluation_samples);
    return c;
}

json config_to_json(const ExperimentConfig& c) {
    json j;
    j["name"] = c.name;
    j["seed"] = c.seed;
    if (!c.system.empty()) j["system"] = c.system;
    if (!c.pairings_path.empty()) j["pairings"] = c.pairings_path;
    j["domain"] = to_json(c.domain);
    j["bursts"] = {{"count", c.bursts.count},
                   {"intervals", c.bursts.intervals},
                   {"dt", c.bursts.dt},
                   {"sampler", to_string(c.bursts.strategy)},
                   {"substeps", c.bursts.substeps},
                   {"retry_cap", c.bursts.retry_cap}};
    j["noise"] = {{"state", noise_to_json(c.state_noise)}, {"algebraic", noise_to_json(c.algebraic_noise)}};
    j["corruption"] = {{"count", c.corruption.count}, {"mean", c.corruption.mean}, {"stddev", c.corruption.stddev}};
    if (c.derivative.kind == DerivativeMethod::Kind::central) {
        j["derivative"] = {{"method", "central"}};
    } else {
        j["derivative"] = {{"method", "lsq"}, {"degree", c.derivative.degree}, {"window", c.derivative.window}};
    }
    j["drop_outside"] = c.drop_outside;
    j["basis"] = {{"kind", to_string(c.basis_kind)}, {"degree", c.degree}};
    if (c.sequential) {
        j["solver"] = {{"kind", "sa"},
                       {"gamma", c.sa.gamma.tag()},
                       {"steps", c.sa.steps},
                       {"cycle", c.sa.cycle},
                       {"stream_constraint", c.sa.stream_constraint},
                       {"monitor", {{"samples", c.sa.monitor_samples}, {"cadence", c.sa.cadence}}}};
    } else {
        j["solver"] = solver_to_json(c.solver);
    }
    if (c.constraint_kind || c.constraint_degree || c.constraint_solver) {
        json k = json::object();
        if (c.constraint_kind || c.constraint_degree) {
            k["basis"] = json::object();
            if (c.constraint_kind) k["basis"]["kind"] = to_string(*c.constraint_kind);
            if (c.constraint_degree) k["basis"]["degree"] = *c.constraint_degree;
        }
        if (c.constraint_solver) k["solver"] = solver_to_json(*c.constraint_solver);
        j["constraint"] = k;
    }
    json states = json::array();
    for (const auto& s : c.validation.initial_states) states.push_back(std::vector<double>(s.data(), s.data() + s.size()));
    j["validation"] = {{"initial_states", states},
                       {"horizon", c.validation.horizon},
                       {"dt", c.validation.dt},
                       {"substeps", c.validation.substeps}};
    j["evaluation_samples"] = c.evaluation_samples;
    return j;
}

std::string config_hash(const ExperimentConfig& c) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(config_to_json(c).dump())));
    return std::string(buf, 8);
}

std::string run_directory_name(const ExperimentConfig& c) {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%SZ", &tm);
    return c.name + "-" + config_hash(c) + "-" + stamp;
}

// ---------------------------------------------------------------- pipeline

std::vector<DataPairing> import_pairings(const std::string& path, int expected_dim) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open pairing file '" + path + "'");
    try {
        return read_pairings_csv(in, expected_dim);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

namespace {

// Runs fn, rethrowing any failure tagged with the stage name.
template <class Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

// Truth expressed in the learned basis, when that is possible exactly.
std::optional<CoefficientSet> truth_in_basis(const OdeSystem& sys, const BasisSpec& basis) {
    if (!sys.true_coefficients) return std::nullopt;
    const CoefficientSet& t = *sys.true_coefficients;
    if (basis.kind() == BasisKind::monomial) return t;
    if (basis.dim() > 3) return std::nullopt;
    const int level = std::max(basis.degree(), t.basis.degree()) + 1;
    return project([&t](const State& x) { return t.evaluate(x); }, basis, level);
}

json coefficient_error_json(const CoefficientError& e) {
    return {{"max_termwise", e.max_abs},
            {"component_l2", std::vector<double>(e.component_l2.data(), e.component_l2.data() + e.component_l2.size())},
            {"total_l2", e.termwise.norm()}};
}

json comparison_json(const TrajectoryComparison& cmp) {
    json j{{"max_state_error", cmp.max_state_error()},
           {"relative_state_error", cmp.relative_state_error()},
           {"max_state_error_in_domain", cmp.max_state_error_in_domain()},
           {"first_exit", cmp.first_exit ? json(*cmp.first_exit) : json(nullptr)}};
    if (!cmp.e_algebraic.empty()) {
        j["max_algebraic_error"] = cmp.max_algebraic_error();
        j["relative_algebraic_error"] = cmp.relative_algebraic_error();
    }
    return j;
}

}  // namespace

SynthesisResult synthesize(const ExperimentConfig& config) {
    SynthesisResult out;
    if (!config.pairings_path.empty()) {
        out.pairings = stage("import", [&] { return import_pairings(config.pairings_path, config.domain.dim()); });
        return out;
    }
    const System system = builtin_system(config.system);
    auto clean = stage("synthesize", [&] {
        return synthesize_bursts(system, config.domain, config.bursts, derive_seed(config.seed, "sampler"));
    });
    out.bursts = stage("perturb", [&] {
        return perturb(clean, config.state_noise, config.algebraic_noise, config.corruption,
                       {derive_seed(config.seed, "noise"), derive_seed(config.seed, "corruption")}, &out.perturbation);
    });
    out.pairings = stage("differentiate", [&] {
        auto p = estimate_derivatives(out.bursts, config.derivative);
        if (config.drop_outside) p = drop_outside(std::move(p), config.domain);
        if (p.empty()) throw std::runtime_error("no usable pairings");
        return p;
    });
    return out;
}

std::vector<TrajectoryComparison> validate(const ExperimentConfig& config, const LearnedSystem& learned) {
    std::vector<TrajectoryComparison> out;
    if (config.system.empty()) return out;
    const System system = builtin_system(config.system);
    const auto steps = static_cast<std::size_t>(std::llround(config.validation.horizon / config.validation.dt));
    for (const auto& u0 : config.validation.initial_states) {
        out.push_back(trajectory_error(system, learned, u0, config.validation.dt, steps, config.validation.substeps,
                                       &config.domain));
    }
    return out;
}

ReportBundle run_experiment(const ExperimentConfig& config, const SaState* resume) {
    ReportBundle rb;
    json& s = rb.summary;
    s["name"] = config.name;
    s["config"] = config_to_json(config);
    s["config_hash"] = config_hash(config);
    try {
        SynthesisResult syn = synthesize(config);
        rb.pairings = std::move(syn.pairings);
        s["pairings"] = rb.pairings.size();
        s["corrupted_bursts"] = syn.perturbation.corrupted_ids;
        const BasisSpec basis = stage("fit", [&] { return config.basis(); });
        s["basis_size"] = basis.size();
        const std::optional<System> system =
            config.system.empty() ? std::nullopt : std::optional<System>(builtin_system(config.system));
        const int dv = system ? algebraic_dim(*system) : (rb.pairings.front().v ? static_cast<int>(rb.pairings.front().v->size()) : 0);
        const std::vector<Point> eval_points =
            system ? domain_samples(config.domain, config.evaluation_samples, derive_seed(config.seed, "evaluation"))
                   : std::vector<Point>{};

        if (config.sequential) {
            stage("fit", [&] {
                const bool joint = dv > 0 && config.sa.stream_constraint && rb.pairings.front().v.has_value();
                SaState init = SaState::zeros(basis.size(), basis.dim(), joint ? dv : 0, config.sa.gamma);
                if (resume) {
                    if (resume->coeffs.rows() != init.coeffs.rows() || resume->coeffs.cols() != init.coeffs.cols() ||
                        resume->constraint.cols() != init.constraint.cols()) {
                        throw DimensionError("snapshot does not match the configured basis and system");
                    }
                    init = *resume;
                    init.gamma = config.sa.gamma;
                }
                const auto order = stream_order(rb.pairings.size(), config.sa.steps, derive_seed(config.seed, "shuffle"),
                                                config.sa.cycle);
                SaMonitor monitor;
                monitor.cadence = config.sa.cadence;
                if (system) {
                    const auto pts = domain_samples(config.domain, config.sa.monitor_samples, derive_seed(config.seed, "monitor"));
                    std::function<State(const State&)> g;
                    if (joint) g = [&](const State& u) { return algebraic_state(*system, u); };
                    monitor = make_monitor(pts, state_rhs(*system), g, config.sa.cadence);
                }
                SaResult res = sa_run(rb.pairings, order, basis, std::move(init), &monitor);
                rb.history = std::move(res.history);
                rb.coefficients = CoefficientSet(basis, res.state.coeffs);
                if (joint) rb.constraint = CoefficientSet(basis, res.state.constraint);
                std::ostringstream os;
                write_history_csv(os, rb.history);
                rb.files["history.csv"] = os.str();
                rb.files["state.json"] = sa_snapshot_to_json(res.state, basis).dump(2) + "\n";
                s["sa"] = {{"steps", order.size()}, {"records", rb.history.size()}};
                if (!rb.history.empty() && !rb.history.back().f_component.empty()) {
                    s["sa"]["initial_error"] = rb.history.front().f_total;
                    s["sa"]["final_error"] = rb.history.back().f_total;
                    if (joint) s["sa"]["final_constraint_error"] = rb.history.back().g_total;
                }
                return 0;
            });
        } else {
            stage("fit", [&] {
                ModelMatrix mm = assemble(rb.pairings, basis);
                rb.coefficients = fit(mm, config.solver);
                return 0;
            });
        }
        rb.files["coefficients.json"] = coefficients_to_json(*rb.coefficients, &config.domain).dump(2) + "\n";

        if (dv > 0 && !rb.constraint) {
            stage("constraint", [&] {
                if (!rb.pairings.front().v) throw std::runtime_error("pairings carry no algebraic values");
                const auto m = static_cast<Eigen::Index>(rb.pairings.size());
                Eigen::MatrixXd U(m, basis.dim()), V(m, dv);
                for (Eigen::Index i = 0; i < m; ++i) {
                    U.row(i) = rb.pairings[static_cast<std::size_t>(i)].x.transpose();
                    V.row(i) = rb.pairings[static_cast<std::size_t>(i)].v->transpose();
                }
                rb.constraint = fit_constraint_map(U, V, config.constraint_basis(),
                                                   config.constraint_solver.value_or(config.solver));
                return 0;
            });
        }
        if (rb.constraint) rb.files["constraint.json"] = coefficients_to_json(*rb.constraint, &config.domain).dump(2) + "\n";

        json diag = json::array();
        for (const auto& d : rb.coefficients->diagnostics) diag.push_back(to_json(d));
        s["diagnostics"] = diag;

        if (system) {
            stage("evaluate", [&] {
                LearnedSystem learned{*rb.coefficients, rb.constraint};
                s["rhs_relative_error"] = rhs_error(learned.rhs_fn(), state_rhs(*system), eval_points);
                if (rb.constraint) {
                    const CoefficientSet& g = *rb.constraint;
                    s["constraint_relative_error"] = rhs_error([&g](const State& u) { return g.evaluate(u); },
                                                               [&](const State& u) { return algebraic_state(*system, u); },
                                                               eval_points);
                }
                if (const auto* ode = std::get_if<OdeSystem>(&*system)) {
                    if (auto truth = truth_in_basis(*ode, basis)) {
                        s["coefficient_error"] = coefficient_error_json(coefficient_error(*rb.coefficients, *truth));
                    }
                }
                return 0;
            });
            stage("validate", [&] {
                rb.validations = validate(config, LearnedSystem{*rb.coefficients, rb.constraint});
                json vs = json::array();
                for (std::size_t i = 0; i < rb.validations.size(); ++i) {
                    std::ostringstream os;
                    write_validation_csv(os, rb.validations[i]);
                    rb.files["validation_" + std::to_string(i) + ".csv"] = os.str();
                    json v = comparison_json(rb.validations[i]);
                    const State& u0 = config.validation.initial_states[i];
                    v["initial_state"] = std::vector<double>(u0.data(), u0.data() + u0.size());
                    vs.push_back(v);
                }
                s["validation"] = vs;
                return 0;
            });
        }
        s["status"] = "ok";
    } catch (const StageError& e) {
        rb.ok = false;
        rb.failed_stage = e.stage();
        rb.error = e.what();
        s["status"] = "failed";
        s["failed_stage"] = e.stage();
        s["error"] = e.what();
    }
    rb.files["summary.json"] = s.dump(2) + "\n";
    return rb;
}

void write_bundle(const ReportBundle& bundle, const std::string& dir) {
    std::filesystem::create_directories(dir);
    for (const auto& [name, content] : bundle.files) {
        std::ofstream out(std::filesystem::path(dir) / name, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + name + " in " + dir);
        out << content;
    }
}

// ---------------------------------------------------------------- sweeps

SweepAxis parse_sweep_axis(const std::string& name) {
    if (name == "noise") return SweepAxis::noise;
    if (name == "degree") return SweepAxis::degree;
    if (name == "count" || name == "M") return SweepAxis::count;
    throw std::invalid_argument("unknown sweep axis '" + name + "' (noise, degree, count)");
}

std::string to_string(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::noise: return "noise";
        case SweepAxis::degree: return "degree";
        case SweepAxis::count: return "count";
    }
    return "noise";
}

ExperimentConfig with_axis_value(const ExperimentConfig& base, SweepAxis axis, double value) {
    ExperimentConfig c = base;
    switch (axis) {
        case SweepAxis::noise:
            if (!(value >= 0.0)) throw std::invalid_argument("noise level must be >= 0");
            if (value == 0.0) {
                c.state_noise = NoiseSpec::none();
            } else if (c.state_noise.laws.empty()) {
                c.state_noise = NoiseSpec::uniform(value);
            } else {
                for (auto& l : c.state_noise.laws) l.scale = value;
            }
            break;
        case SweepAxis::degree:
            if (value < 0 || value != std::floor(value)) throw std::invalid_argument("degree must be a whole number >= 0");
            c.degree = static_cast<int>(value);
            break;
        case SweepAxis::count:
            if (value < 1 || value != std::floor(value)) throw std::invalid_argument("burst count must be a whole number >= 1");
            c.bursts.count = static_cast<std::size_t>(value);
            break;
    }
    return c;
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& base, SweepAxis axis, const std::vector<double>& values,
                                unsigned workers) {
    if (values.empty()) throw std::invalid_argument("run_sweep: no axis values");
    std::vector<SweepRow> rows(values.size());
    auto one = [&](std::size_t i) {
        SweepRow& row = rows[i];
        row.value = values[i];
        try {
            const ReportBundle rb = run_experiment(with_axis_value(base, axis, values[i]));
            row.ok = rb.ok;
            row.error = rb.error;
            row.summary = rb.summary;
            if (rb.summary.contains("coefficient_error")) {
                const auto& ce = rb.summary["coefficient_error"];
                row.coef_l2 = ce["component_l2"].get<std::vector<double>>();
                row.coef_l2_total = ce["total_l2"].get<double>();
                row.coef_max = ce["max_termwise"].get<double>();
            }
            for (const auto& v : rb.validations) row.max_trajectory_error = std::max(row.max_trajectory_error, v.max_state_error());
        } catch (const std::exception& e) {
            row.ok = false;
            row.error = e.what();
        }
    };
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(values.size())));
    if (workers == 1) {
        for (std::size_t i = 0; i < values.size(); ++i) one(i);
        return rows;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i; (i = next.fetch_add(1)) < values.size();) one(i);
        });
    }
    for (auto& t : pool) t.join();
    return rows;
}

std::string sweep_csv(SweepAxis axis, const std::vector<SweepRow>& rows) {
    std::size_t d = 0;
    for (const auto& r : rows) d = std::max(d, r.coef_l2.size());
    std::ostringstream os;
    os.precision(17);
    os << to_string(axis) << ",status,coef_l2_total";
    for (std::size_t l = 0; l < d; ++l) os << ",coef_l2_" << l + 1;
    os << ",coef_max,max_trajectory_error\n";
    for (const auto& r : rows) {
        os << r.value << ',' << (r.ok ? "ok" : "failed") << ',' << r.coef_l2_total;
        for (std::size_t l = 0; l < d; ++l) os << ',' << (l < r.coef_l2.size() ? r.coef_l2[l] : 0.0);
        os << ',' << r.coef_max << ',' << r.max_trajectory_error << '\n';
    }
    return os.str();
}

// ---------------------------------------------------------------- bound

BoundReport evaluate_bound(const ExperimentConfig& config, const CoefficientSet& learned, const State& u0,
                           double horizon, std::size_t lipschitz_samples, std::size_t sup_samples) {
    if (config.system.empty()) throw std::invalid_argument("evaluate_bound: needs a builtin system");
    const System system = builtin_system(config.system);
    if (algebraic_dim(system) > 0) throw std::invalid_argument("evaluate_bound: ODE systems only");
    const BasisSpec& basis = learned.basis;
    const RhsFn f = state_rhs(system);
    const CoefficientSet pv = project(f, basis, 2 * basis.degree() + 2, derive_seed(config.seed, "projection"));
    const RhsFn pvf = [&pv](const State& x) { return pv.evaluate(x); };
    const RhsFn tilde = [&learned](const State& x) { return learned.evaluate(x); };
    BoundReport r;
    r.inputs.lipschitz = estimate_lipschitz(state_jacobian(system), config.domain, lipschitz_samples,
                                            derive_seed(config.seed, "lipschitz"));
    const std::uint64_t sup_seed = derive_seed(config.seed, "sup");
    r.inputs.proj_sup_err = sup_difference(f, pvf, config.domain, sup_samples, sup_seed);
    r.inputs.l2_err = orthonormal_l2_distance(learned, pv);
    r.inputs.sup_sqrt_k = sup_sqrt_kernel(basis, config.domain, sup_samples, sup_seed);
    r.inputs.horizon = horizon;
    r.bound = gronwall_bound(r.inputs);
    r.sup_inequality_rhs = r.inputs.proj_sup_err + r.inputs.l2_err * r.inputs.sup_sqrt_k;
    r.sampled_sup_error = sup_difference(f, tilde, config.domain, sup_samples, sup_seed);
    const auto steps = static_cast<std::size_t>(std::llround(horizon / config.validation.dt));
    const TrajectoryComparison cmp = trajectory_error(system, LearnedSystem{learned, std::nullopt}, u0,
                                                      config.validation.dt, steps, config.validation.substeps,
                                                      &config.domain);
    r.first_exit = cmp.first_exit;
    r.observed_max_error = cmp.max_state_error_in_domain();
    return r;
}

json to_json(const BoundReport& r) {
    return {{"inputs",
             {{"lipschitz", r.inputs.lipschitz},
              {"proj_sup_err", r.inputs.proj_sup_err},
              {"l2_err", r.inputs.l2_err},
              {"sup_sqrt_k", r.inputs.sup_sqrt_k},
              {"horizon", r.inputs.horizon}}},
            {"bound", r.bound},
            {"observed_max_error", r.observed_max_error},
            {"first_exit", r.first_exit ? json(*r.first_exit) : json(nullptr)},
            {"sampled_sup_error", r.sampled_sup_error},
            {"sup_inequality_rhs", r.sup_inequality_rhs}};
}

}  // namespace odefit
