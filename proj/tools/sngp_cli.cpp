// Command-line front end: train, eval, surface, sweep, theory.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sngp/artifact.hpp"
#include "sngp/config.hpp"
#include "sngp/errors.hpp"
#include "sngp/experiment.hpp"
#include "sngp/theory.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitTheory = 3;

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string artifact;
    std::vector<std::string> ood;
    std::string grid;
    std::vector<std::string> claims;
};

sngp::ExperimentConfig resolve_config(const Options& o) {
    sngp::ExperimentConfig c = o.config.empty() ? sngp::ExperimentConfig{} : sngp::load_config(o.config);
    if (o.seed) {
        c.seed = *o.seed;
        c.trainer.seed = *o.seed;
        c.predict.seed = *o.seed;
    }
    if (!o.out.empty()) c.out_dir = o.out;
    return c;
}

fs::path ensure_dir(const std::string& dir) {
    fs::path p(dir);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw sngp::ConfigError("cannot create output directory " + dir + ": " + ec.message());
    return p;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw sngp::ConfigError("cannot write " + path.string());
    out << text;
}

std::string artifact_path(const Options& o) {
    if (!o.artifact.empty()) return o.artifact;
    if (!o.out.empty()) return (fs::path(o.out) / "model.json").string();
    throw sngp::ConfigError("give --artifact PATH or --out DIR containing model.json");
}

int cmd_train(const Options& o) {
    const auto config = resolve_config(o);
    const auto outcome = sngp::run_train(config);
    const fs::path dir = ensure_dir(config.out_dir);
    sngp::save_artifact((dir / "model.json").string(), outcome.artifact);
    write_text(dir / "train_log.json", sngp::training_log_json(outcome).dump(2) + "\n");
    std::ofstream cfg(dir / "config.ini");
    sngp::write_config(cfg, config);
    json summary{{"artifact", (dir / "model.json").string()},
                 {"members", outcome.artifact.members.size()},
                 {"final_loss", outcome.logs.back().epoch_loss.empty() ? json(nullptr)
                                                                       : json(outcome.logs.back().epoch_loss.back())}};
    std::cout << summary.dump(2) << "\n";
    return kExitOk;
}

int cmd_eval(const Options& o) {
    const auto artifact = sngp::load_artifact(artifact_path(o));
    const auto data = sngp::make_data(artifact.config);
    std::map<std::string, sngp::LabeledSet> ood;
    for (const auto& path : o.ood) ood[fs::path(path).stem().string()] = sngp::load_csv(path);
    const auto report = sngp::evaluate(artifact, data.train, data.test, ood);
    const std::string text = sngp::to_json(report).dump(2) + "\n";
    if (!o.out.empty()) write_text(ensure_dir(o.out) / "eval.json", text);
    std::cout << text;
    return kExitOk;
}

int cmd_surface(const Options& o) {
    const auto artifact = sngp::load_artifact(artifact_path(o));
    sngp::GridSpec grid;
    if (o.grid.empty()) {
        if (artifact.members.front().net.input_dim() != 2)
            throw sngp::DimensionUnsupported("surface: model input dimension must be 2");
        grid = sngp::default_grid(sngp::make_data(artifact.config).train);
    } else {
        grid = sngp::parse_grid(o.grid);
    }
    if (o.out.empty()) {
        sngp::write_surface(std::cout, artifact, grid);
    } else {
        std::ofstream out(ensure_dir(o.out) / "surface.csv", std::ios::binary);
        sngp::write_surface(out, artifact, grid);
    }
    return kExitOk;
}

int cmd_sweep(const Options& o) {
    const auto config = resolve_config(o);
    const auto result = sngp::run_sweep(config);
    const std::string text = sngp::sweep_json(result).dump(2) + "\n";
    if (!o.out.empty()) write_text(ensure_dir(o.out) / "sweep.json", text);
    std::cout << text;
    return kExitOk;
}

int cmd_theory(const Options& o) {
    const auto verdicts = sngp::run_theory_suite(o.claims, o.seed.value_or(0));
    json all = json::array();
    bool ok = true;
    for (const auto& v : verdicts) {
        all.push_back(sngp::to_json(v));
        ok = ok && v.pass;
    }
    const std::string text = all.dump(2) + "\n";
    if (!o.out.empty()) write_text(ensure_dir(o.out) / "theory.json", text);
    std::cout << text;
    return ok ? kExitOk : kExitTheory;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectral-normalized neural Gaussian process toolkit"};
    app.require_subcommand(1);
    Options o;

    auto add_seed = [&](CLI::App* sub) {
        sub->add_option_function<std::uint64_t>("--seed", [&](const std::uint64_t& s) { o.seed = s; },
                                                "Override the config seed");
    };

    auto* train = app.add_subcommand("train", "Train a model and write model.json");
    train->add_option("--config", o.config, "INI config file")->check(CLI::ExistingFile);
    add_seed(train);
    train->add_option("--out", o.out, "Output directory (default: [experiment] out)");

    auto* eval = app.add_subcommand("eval", "Evaluate calibration and OOD detection");
    eval->add_option("--artifact", o.artifact, "model.json (default: OUT/model.json)");
    eval->add_option("--out", o.out, "Run directory; eval.json is written here");
    eval->add_option("--ood", o.ood, "OOD dataset CSV files")->check(CLI::ExistingFile);

    auto* surface = app.add_subcommand("surface", "Export the uncertainty surface of a 2-D model");
    surface->add_option("--artifact", o.artifact, "model.json (default: OUT/model.json)");
    surface->add_option("--out", o.out, "Directory for surface.csv (default: stdout)");
    surface->add_option("--grid", o.grid, "\"x0:lo:hi:n,x1:lo:hi:n\"");

    auto* sweep = app.add_subcommand("sweep", "Sweep spectral norm bound and kernel amplitude");
    sweep->add_option("--config", o.config, "INI config file")->check(CLI::ExistingFile);
    add_seed(sweep);
    sweep->add_option("--out", o.out, "Directory for sweep.json");

    auto* theory = app.add_subcommand("theory", "Run the numerical theory checks");
    theory->add_option("--claims", o.claims, "Claim groups to run (default: all)")->delimiter(',');
    add_seed(theory);
    theory->add_option("--out", o.out, "Directory for theory.json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (app.got_subcommand(train)) return cmd_train(o);
        if (app.got_subcommand(eval)) return cmd_eval(o);
        if (app.got_subcommand(surface)) return cmd_surface(o);
        if (app.got_subcommand(sweep)) return cmd_sweep(o);
        if (app.got_subcommand(theory)) return cmd_theory(o);
    } catch (const sngp::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const sngp::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
