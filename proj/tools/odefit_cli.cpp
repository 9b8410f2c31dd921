// odefit: run, inspect and reproduce polynomial ODE/DAE recovery experiments.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 a pipeline stage failed.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "odefit/catalog.hpp"
#include "odefit/error.hpp"
#include "odefit/experiment.hpp"
#include "odefit/presets.hpp"
#include "odefit/serialize.hpp"
#include "odefit/simd.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace odefit;

namespace {

struct ConfigSource {
    std::string preset;
    std::string file;
    std::vector<std::string> overrides;  // /json/pointer=value

    void bind(CLI::App* cmd) {
        auto* p = cmd->add_option("--preset", preset, "named preset (see list-presets)");
        auto* f = cmd->add_option("--config", file, "JSON config file")->check(CLI::ExistingFile);
        p->excludes(f);
        cmd->add_option("--set", overrides, "override a config value, e.g. --set /bursts/count=40");
    }

    json load() const {
        json j;
        if (!preset.empty()) {
            j = preset_json(preset);
        } else if (!file.empty()) {
            std::ifstream in(file);
            try {
                j = json::parse(in);
            } catch (const json::parse_error& e) {
                throw ParseError(file + ": " + e.what());
            }
        } else {
            throw CLI::ValidationError("one of --preset or --config is required");
        }
        for (const auto& o : overrides) {
            const auto eq = o.find('=');
            if (eq == std::string::npos || o.empty() || o[0] != '/') {
                throw CLI::ValidationError("--set expects /pointer=value, got '" + o + "'");
            }
            const std::string ptr = o.substr(0, eq), text = o.substr(eq + 1);
            json value;
            try {
                value = json::parse(text);
            } catch (const json::parse_error&) {
                value = text;
            }
            j[json::json_pointer(ptr)] = value;
        }
        return j;
    }

    ExperimentConfig config() const { return config_from_json(load()); }
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << content;
}

void warn_resources(const ExperimentConfig& c) {
    if (auto w = resource_warning(c); !w.empty()) std::cerr << w << "\n";
}

int finish(const ReportBundle& rb, const fs::path& dir) {
    write_bundle(rb, dir.string());
    std::cout << dir.string() << "\n";
    if (!rb.ok) {
        std::cerr << "error: " << rb.error << "\n";
        return 2;
    }
    const json& s = rb.summary;
    if (s.contains("coefficient_error")) {
        std::cout << "max termwise coefficient error: " << s["coefficient_error"]["max_termwise"].get<double>() << "\n";
    }
    if (s.contains("rhs_relative_error")) {
        std::cout << "relative rhs error: " << s["rhs_relative_error"].get<double>() << "\n";
    }
    if (s.contains("validation")) {
        for (const auto& v : s["validation"]) {
            std::cout << "validation max state error: " << v["max_state_error"].get<double>();
            if (v.contains("max_algebraic_error")) {
                std::cout << ", algebraic: " << v["max_algebraic_error"].get<double>();
            }
            std::cout << "\n";
        }
    }
    if (s.contains("sa") && s["sa"].contains("final_error")) {
        std::cout << "monitored relative error: " << s["sa"]["initial_error"].get<double>() << " -> "
                  << s["sa"]["final_error"].get<double>() << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Recover polynomial right-hand sides of ODE and DAE systems from short trajectory bursts"};
    app.require_subcommand(1);
    std::string simd_choice;
    app.add_option("--simd", simd_choice, "vector kernel variant (scalar, avx2)");

    auto* list = app.add_subcommand("list-presets", "list shipped experiment presets");
    auto* systems = app.add_subcommand("list-systems", "print the builtin system catalog as JSON");

    std::string show_name;
    auto* show = app.add_subcommand("show-preset", "print a preset config as JSON");
    show->add_option("name", show_name)->required();

    ConfigSource run_src;
    std::string out_root = "runs";
    auto* run = app.add_subcommand("run", "run the full pipeline and write a report bundle");
    run_src.bind(run);
    run->add_option("--out", out_root, "parent directory for run directories");

    ConfigSource synth_src;
    std::string synth_out = "synth";
    auto* synth = app.add_subcommand("synth", "synthesize and perturb bursts, write bursts.csv and pairings.csv");
    synth_src.bind(synth);
    synth->add_option("--out", synth_out, "output directory");

    ConfigSource export_src;
    std::string export_file;
    auto* exp = app.add_subcommand("export", "write the derivative pairings of a config to a CSV file");
    export_src.bind(exp);
    exp->add_option("--output", export_file, "pairing CSV path")->required();

    std::string import_file, import_output;
    int import_dim = -1;
    auto* imp = app.add_subcommand("import", "validate a pairing CSV and optionally rewrite it canonically");
    imp->add_option("file", import_file)->required()->check(CLI::ExistingFile);
    imp->add_option("--dim", import_dim, "expected state dimension");
    imp->add_option("--output", import_output, "canonical copy");

    ConfigSource fit_src;
    std::string fit_pairings, fit_output;
    auto* fitc = app.add_subcommand("fit", "fit coefficients and write them as JSON");
    fit_src.bind(fitc);
    fitc->add_option("--pairings", fit_pairings, "use pairings from this CSV instead of synthesizing")
        ->check(CLI::ExistingFile);
    fitc->add_option("--output", fit_output, "coefficient JSON path")->required();

    ConfigSource val_src;
    std::string val_coeffs, val_constraint, val_out = "validation";
    bool val_bound = false;
    auto* val = app.add_subcommand("validate", "compare stored coefficients with the true system");
    val_src.bind(val);
    val->add_option("--coefficients", val_coeffs, "coefficient JSON")->required()->check(CLI::ExistingFile);
    val->add_option("--constraint", val_constraint, "algebraic map coefficient JSON")->check(CLI::ExistingFile);
    val->add_option("--out", val_out, "output directory");
    val->add_flag("--bound", val_bound, "also evaluate the Gronwall error bound (legendre ODE fits)");

    ConfigSource sweep_src;
    std::string sweep_axis, sweep_out = "runs";
    std::vector<double> sweep_values;
    unsigned sweep_workers = 1;
    auto* sweep = app.add_subcommand("sweep", "run one experiment per axis value and tabulate errors");
    sweep_src.bind(sweep);
    sweep->add_option("--axis", sweep_axis, "noise, degree or count");
    sweep->add_option("--values", sweep_values, "axis values")->delimiter(',');
    sweep->add_option("--workers", sweep_workers, "concurrent runs");
    sweep->add_option("--out", sweep_out, "parent directory for the sweep directory");

    ConfigSource sa_src;
    std::string sa_resume, sa_gamma, sa_out = "runs";
    std::size_t sa_steps = 0;
    auto* sa = app.add_subcommand("sa-run", "sequential approximation run, optionally resumed from a snapshot");
    sa_src.bind(sa);
    sa->add_option("--resume", sa_resume, "state.json from an earlier run")->check(CLI::ExistingFile);
    sa->add_option("--steps", sa_steps, "number of steps");
    sa->add_option("--gamma", sa_gamma, "zero or constant(<gamma>)");
    sa->add_option("--out", sa_out, "parent directory for run directories");

    CLI11_PARSE(app, argc, argv);

    try {
        if (simd_choice == "scalar") {
            simd::select(simd::Isa::scalar);
        } else if (simd_choice == "avx2") {
            if (!simd::select(simd::Isa::avx2)) std::cerr << "avx2 kernels unavailable, using scalar\n";
        } else if (!simd_choice.empty()) {
            throw CLI::ValidationError("--simd must be scalar or avx2");
        }

        if (*list) {
            for (const auto& name : preset_names()) {
                std::cout << name << "\t" << preset_json(name).value("description", "") << "\n";
            }
            return 0;
        }
        if (*systems) {
            std::cout << catalog_manifest().dump(2) << "\n";
            return 0;
        }
        if (*show) {
            std::cout << preset_json(show_name).dump(2) << "\n";
            return 0;
        }
        if (*run) {
            const ExperimentConfig c = run_src.config();
            warn_resources(c);
            return finish(run_experiment(c), fs::path(out_root) / run_directory_name(c));
        }
        if (*synth) {
            const ExperimentConfig c = synth_src.config();
            const SynthesisResult r = synthesize(c);
            std::ostringstream b, p;
            write_bursts_csv(b, r.bursts);
            write_pairings_csv(p, r.pairings);
            write_file(fs::path(synth_out) / "bursts.csv", b.str());
            write_file(fs::path(synth_out) / "pairings.csv", p.str());
            std::cout << r.bursts.size() << " bursts, " << r.pairings.size() << " pairings written to " << synth_out
                      << "\n";
            return 0;
        }
        if (*exp) {
            const SynthesisResult r = synthesize(export_src.config());
            std::ostringstream p;
            write_pairings_csv(p, r.pairings);
            write_file(export_file, p.str());
            std::cout << r.pairings.size() << " pairings written to " << export_file << "\n";
            return 0;
        }
        if (*imp) {
            const auto pairings = import_pairings(import_file, import_dim);
            std::cout << pairings.size() << " pairings, dimension " << pairings.front().x.size();
            if (pairings.front().v) std::cout << ", algebraic dimension " << pairings.front().v->size();
            std::cout << "\n";
            if (!import_output.empty()) {
                std::ostringstream p;
                write_pairings_csv(p, pairings);
                write_file(import_output, p.str());
            }
            return 0;
        }
        if (*fitc) {
            ExperimentConfig c = fit_src.config();
            if (!fit_pairings.empty()) {
                c.pairings_path = fit_pairings;
                c.system.clear();
            }
            c.validation.initial_states.clear();
            warn_resources(c);
            const ReportBundle rb = run_experiment(c);
            if (!rb.ok) {
                std::cerr << "error: " << rb.error << "\n";
                return 2;
            }
            write_file(fit_output, rb.files.at("coefficients.json"));
            if (rb.constraint) {
                fs::path g = fit_output;
                g.replace_extension(".constraint.json");
                write_file(g, rb.files.at("constraint.json"));
            }
            std::cout << "coefficients written to " << fit_output << "\n";
            return 0;
        }
        if (*val) {
            const ExperimentConfig c = val_src.config();
            LearnedSystem learned{coefficients_from_json(json::parse(read_file(val_coeffs))), std::nullopt};
            if (!val_constraint.empty()) learned.constraint = coefficients_from_json(json::parse(read_file(val_constraint)));
            const auto cmps = validate(c, learned);
            json report = json::array();
            for (std::size_t i = 0; i < cmps.size(); ++i) {
                std::ostringstream os;
                write_validation_csv(os, cmps[i]);
                write_file(fs::path(val_out) / ("validation_" + std::to_string(i) + ".csv"), os.str());
                std::cout << "initial state " << i << ": max state error " << cmps[i].max_state_error();
                if (!cmps[i].e_algebraic.empty()) std::cout << ", algebraic " << cmps[i].max_algebraic_error();
                std::cout << "\n";
            }
            if (val_bound) {
                json bounds = json::array();
                for (const auto& u0 : c.validation.initial_states) {
                    const BoundReport br = evaluate_bound(c, learned.coeffs, u0, c.validation.horizon);
                    bounds.push_back(to_json(br));
                    std::cout << "bound " << br.bound << " vs observed " << br.observed_max_error << "\n";
                }
                write_file(fs::path(val_out) / "bound.json", bounds.dump(2) + "\n");
            }
            return 0;
        }
        if (*sweep) {
            const ExperimentConfig c = sweep_src.config();
            SweepAxis axis;
            std::vector<double> values = sweep_values;
            if (!sweep_axis.empty()) {
                axis = parse_sweep_axis(sweep_axis);
            } else if (!sweep_src.preset.empty() && preset_sweep(sweep_src.preset)) {
                axis = preset_sweep(sweep_src.preset)->axis;
                if (values.empty()) values = preset_sweep(sweep_src.preset)->values;
            } else {
                throw CLI::ValidationError("--axis is required for this config");
            }
            if (values.empty()) throw CLI::ValidationError("--values is required");
            warn_resources(c);
            const auto rows = run_sweep(c, axis, values, sweep_workers);
            const fs::path dir = fs::path(sweep_out) / (run_directory_name(c) + "-sweep-" + to_string(axis));
            write_file(dir / "sweep.csv", sweep_csv(axis, rows));
            bool ok = true;
            for (std::size_t i = 0; i < rows.size(); ++i) {
                write_file(dir / ("summary_" + std::to_string(i) + ".json"), rows[i].summary.dump(2) + "\n");
                if (!rows[i].ok) {
                    ok = false;
                    std::cerr << to_string(axis) << "=" << rows[i].value << " failed: " << rows[i].error << "\n";
                }
            }
            std::cout << dir.string() << "\n" << sweep_csv(axis, rows);
            return ok ? 0 : 2;
        }
        if (*sa) {
            ExperimentConfig c = sa_src.config();
            if (!c.sequential) {
                c.sequential = true;
                c.sa = SaSpec{};
            }
            if (sa_steps) c.sa.steps = sa_steps;
            if (!sa_gamma.empty()) c.sa.gamma = GammaSchedule::parse(sa_gamma);
            warn_resources(c);
            std::optional<SaState> resume;
            if (!sa_resume.empty()) resume = sa_snapshot_from_json(json::parse(read_file(sa_resume)));
            return finish(run_experiment(c, resume ? &*resume : nullptr), fs::path(sa_out) / run_directory_name(c));
        }
    } catch (const CLI::Error& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
