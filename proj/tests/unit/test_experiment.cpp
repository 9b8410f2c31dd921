#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "odefit/error.hpp"
#include "odefit/experiment.hpp"
#include "odefit/presets.hpp"
#include "odefit/rng.hpp"
#include "odefit/serialize.hpp"

using namespace odefit;
using nlohmann::json;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::filesystem::path scratch(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("odefit-test-" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("every preset parses and round-trips") {
    const auto names = preset_names();
    CHECK(names.size() >= 14);
    for (const auto& n : names) {
        CAPTURE(n);
        const ExperimentConfig c = preset_config(n);
        CHECK(c.name == n);
        const json j = config_to_json(c);
        const ExperimentConfig back = config_from_json(j);
        CHECK(config_to_json(back) == j);
        CHECK(config_hash(back) == config_hash(c));
        CHECK(config_hash(c).size() == 8);
    }
    CHECK_THROWS_AS(preset_json("no-such-preset"), std::invalid_argument);
    CHECK(preset_sweep("limit-cycle-noise").has_value());
    CHECK_FALSE(preset_sweep("saddle").has_value());
}

TEST_CASE("config parsing is strict") {
    json j = preset_json("saddle");
    j["bogus"] = 1;
    CHECK_THROWS_AS(config_from_json(j), ParseError);
    json k = preset_json("saddle");
    k["bursts"]["cuont"] = 3;
    CHECK_THROWS_AS(config_from_json(k), ParseError);
    json w = preset_json("saddle");
    w["seed"] = "abc";
    CHECK_THROWS_AS(config_from_json(w), ParseError);
}

TEST_CASE("hash changes with every resolved field") {
    const ExperimentConfig c = preset_config("saddle");
    ExperimentConfig d = c;
    d.seed += 1;
    CHECK(config_hash(d) != config_hash(c));
    d = c;
    d.degree = 2;
    CHECK(config_hash(d) != config_hash(c));
    const auto dir = run_directory_name(c);
    CHECK(dir.rfind("saddle-" + config_hash(c) + "-", 0) == 0);
}

TEST_CASE("runs are reproducible byte for byte") {
    const ExperimentConfig c = preset_config("competing-species");
    const ReportBundle a = run_experiment(c);
    const ReportBundle b = run_experiment(c);
    REQUIRE(a.ok);
    CHECK(a.files == b.files);
    CHECK(a.files.count("summary.json"));
    CHECK(a.files.count("coefficients.json"));
    CHECK(a.files.count("validation_0.csv"));
    // The summary carries the fully resolved config.
    CHECK(config_from_json(a.summary.at("config")).name == c.name);
    CHECK(a.summary.at("config_hash") == config_hash(c));
    const auto d1 = scratch("bundle1"), d2 = scratch("bundle2");
    write_bundle(a, d1.string());
    write_bundle(b, d2.string());
    for (const auto& [name, _] : a.files) CHECK(slurp(d1 / name) == slurp(d2 / name));
}

TEST_CASE("stage failures are reported") {
    ExperimentConfig c = preset_config("saddle");
    c.degree = 7000;  // basis size above kMaxBasisSize
    const ReportBundle rb = run_experiment(c);
    CHECK_FALSE(rb.ok);
    CHECK(rb.failed_stage == "fit");
    CHECK(rb.summary["status"] == "failed");
}

TEST_CASE("named sub-seeds keep stages independent") {
    ExperimentConfig a = preset_config("star");
    ExperimentConfig b = a;
    b.state_noise = NoiseSpec::uniform(0.02);
    ExperimentConfig clean = a;
    clean.state_noise = NoiseSpec::none();
    const auto sa = synthesize(a), sb = synthesize(b), sc = synthesize(clean);
    REQUIRE(sa.bursts.size() == sc.bursts.size());
    // Same sampler draws: clean initial states coincide, so each noisy state
    // stays within the noise scale of its clean counterpart.
    for (std::size_t i = 0; i < sa.bursts.size(); ++i) {
        const auto& xa = sa.bursts[i].states;
        const auto& xb = sb.bursts[i].states;
        const auto& xc = sc.bursts[i].states;
        CHECK((xa - xc).cwiseAbs().maxCoeff() <= 0.01 + 1e-15);
        CHECK((xb - xc).cwiseAbs().maxCoeff() <= 0.02 + 1e-15);
    }
    // Changing the corruption stage leaves the noise draws alone on untouched bursts.
    ExperimentConfig corrupt = a;
    corrupt.corruption = {2, 0.5, 1.0};
    const auto sd = synthesize(corrupt);
    std::size_t same = 0;
    for (std::size_t i = 0; i < sa.bursts.size(); ++i) same += sa.bursts[i].states == sd.bursts[i].states;
    CHECK(same == sa.bursts.size() - 2);
}

TEST_CASE("single-value sweep equals the plain run") {
    const ExperimentConfig c = preset_config("limit-cycle");
    const auto rows = run_sweep(c, SweepAxis::degree, {static_cast<double>(c.degree)});
    REQUIRE(rows.size() == 1);
    const ReportBundle rb = run_experiment(c);
    CHECK(rows[0].summary == rb.summary);
    const std::string csv = sweep_csv(SweepAxis::degree, rows);
    CHECK(csv.rfind("degree,", 0) == 0);
    CHECK_THROWS_AS(with_axis_value(c, SweepAxis::degree, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(parse_sweep_axis("temperature"), std::invalid_argument);
}

TEST_CASE("sweep rows share the base seed and ignore the worker count") {
    const ExperimentConfig c = preset_config("duffing");
    const auto r1 = run_sweep(c, SweepAxis::degree, {2, 3, 4});
    const auto r2 = run_sweep(c, SweepAxis::degree, {3});
    CHECK(r1[1].summary == r2[0].summary);
    const auto r3 = run_sweep(c, SweepAxis::degree, {2, 3, 4}, 3);
    for (std::size_t i = 0; i < r1.size(); ++i) CHECK(r3[i].summary == r1[i].summary);
    // A failing row is recorded and the sweep continues.
    const auto r4 = run_sweep(c, SweepAxis::degree, {3, 7000});
    CHECK(r4[0].ok);
    CHECK_FALSE(r4[1].ok);
}

TEST_CASE("imported pairings reproduce the builtin fit") {
    const ExperimentConfig c = preset_config("duffing");
    const auto syn = synthesize(c);
    const auto dir = scratch("import");
    const auto path = (dir / "pairings.csv").string();
    {
        std::ofstream out(path);
        write_pairings_csv(out, syn.pairings);
    }
    const auto back = import_pairings(path, 2);
    REQUIRE(back.size() == syn.pairings.size());
    CHECK_THROWS_AS(import_pairings(path, 3), DimensionError);
    ExperimentConfig ext = c;
    ext.system.clear();
    ext.pairings_path = path;
    const ReportBundle a = run_experiment(c), b = run_experiment(ext);
    REQUIRE(b.ok);
    CHECK((a.coefficients->coeffs - b.coefficients->coeffs).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("coefficient documents round-trip") {
    const ReportBundle rb = run_experiment(preset_config("limit-cycle"));
    REQUIRE(rb.coefficients);
    const json j = json::parse(rb.files.at("coefficients.json"));
    const CoefficientSet back = coefficients_from_json(j);
    CHECK(back.basis.same_space(rb.coefficients->basis));
    CHECK(back.coeffs == rb.coefficients->coeffs);
    json bad = j;
    bad["format"] = "something-else";
    CHECK_THROWS_AS(coefficients_from_json(bad), ParseError);
    const Domain d({{-1, 2}, {0, 1}}, Mask::annulus({0.5, 0.5}, 0.4));
    const Domain dd = domain_from_json(to_json(d));
    CHECK(dd.mask().to_string() == d.mask().to_string());
    CHECK(basis_from_json(to_json(rb.coefficients->basis)).same_space(rb.coefficients->basis));
}

TEST_CASE("sequential snapshots resume exactly") {
    ExperimentConfig c = preset_config("saddle");
    c.sequential = true;
    c.sa.steps = 200;
    c.sa.cadence = 50;
    c.sa.monitor_samples = 500;
    const ReportBundle first = run_experiment(c);
    REQUIRE(first.ok);
    BasisSpec basis;
    const SaState snap = sa_snapshot_from_json(json::parse(first.files.at("state.json")), &basis);
    CHECK(snap.k == 200);
    CHECK(snap.coeffs == first.coefficients->coeffs);
    CHECK(basis.same_space(c.basis()));

    const ReportBundle second = run_experiment(c, &snap);
    REQUIRE(second.ok);
    const SaState end = sa_snapshot_from_json(json::parse(second.files.at("state.json")));
    CHECK(end.k == 400);
    // Resuming is the same as running the stream from the stored state by hand.
    const auto order = stream_order(first.pairings.size(), c.sa.steps, derive_seed(c.seed, "shuffle"), c.sa.cycle);
    const SaResult manual = sa_run(first.pairings, order, basis, snap, nullptr);
    CHECK(manual.state.coeffs == end.coeffs);
    CHECK(second.summary["sa"]["final_error"].get<double>() < first.summary["sa"]["final_error"].get<double>());

    ExperimentConfig wrong = c;
    wrong.degree = 2;
    CHECK_FALSE(run_experiment(wrong, &snap).ok);
}

TEST_CASE("error bound holds on analytic systems") {
    for (const std::string name : {"duffing", "saddle"}) {
        CAPTURE(name);
        ExperimentConfig c = preset_config(name);
        c.basis_kind = BasisKind::legendre;
        const ReportBundle rb = run_experiment(c);
        REQUIRE(rb.ok);
        const State u0 = c.validation.initial_states.front();
        const BoundReport r = evaluate_bound(c, *rb.coefficients, u0, c.validation.horizon, 20000, 5000);
        CHECK(r.bound >= r.observed_max_error);
        CHECK(r.sup_inequality_rhs - r.sampled_sup_error >= -1e-6);
        CHECK(r.bound == doctest::Approx(gronwall_bound(r.inputs)));
        CHECK(to_json(r).contains("bound"));
    }
}

TEST_CASE("resource warnings flag the full-scale profile only") {
    CHECK_FALSE(resource_warning(preset_config("batch-reactor-full")).empty());
    CHECK(resource_warning(preset_config("saddle")).empty());
}
