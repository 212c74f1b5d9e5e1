// hierfed: generate / train / evaluate / grid / export-embeddings / report.
//
// Exit codes: 0 ok, 2 configuration error, 3 numerical failure, 1 other.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "hierfed/errors.hpp"
#include "hierfed/runner/runner.hpp"
#include "hierfed/synth/synthgen.hpp"

namespace {

using namespace hierfed;

struct Flags {
    std::string config;
    std::string dataset;
    std::string preset;
    std::optional<std::string> strategy;
    std::optional<std::string> task;
    std::optional<std::string> demographic;
    bool include_unspecified = false;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> workers;
};

void add_common(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config, "experiment config (JSON)");
    cmd->add_option("--dataset", f.dataset, "directory with events.csv and students.csv");
    cmd->add_option("--preset", f.preset, "synthetic preset instead of a dataset");
    cmd->add_option("--strategy", f.strategy, "strategy name, e.g. sc2-P-AT-B");
    cmd->add_option("--task", f.task, "kt or op")->check(CLI::IsMember({"kt", "op"}, CLI::ignore_case));
    cmd->add_option("--demographic", f.demographic, "gender, continent or age")
        ->check(CLI::IsMember({"gender", "continent", "age"}, CLI::ignore_case));
    cmd->add_flag("--include-unspecified", f.include_unspecified, "treat undisclosed values as a subgroup");
    cmd->add_option("--seed", f.seed, "master seed (wins over HIERFED_SEED)");
    cmd->add_option("--out", f.out, "output directory");
    cmd->add_option("--workers", f.workers, "client worker threads")->check(CLI::PositiveNumber);
}

// File, then environment, then flags.
runner::ExperimentConfig resolve(const Flags& f) {
    runner::ExperimentConfig c;
    if (!f.config.empty()) c = runner::load_config(f.config);
    runner::apply_env_overrides(c);
    if (!f.dataset.empty()) {
        c.dataset = f.dataset;
        c.preset.clear();
        c.synth = nlohmann::json::object();
    }
    if (!f.preset.empty()) {
        c.preset = f.preset;
        c.dataset.clear();
    }
    if (f.strategy) c.strategy = *f.strategy;
    if (f.task) c.task = models::parse_task(*f.task);
    if (f.demographic) c.demographic = parse_demographic(*f.demographic);
    if (f.include_unspecified) c.include_unspecified = true;
    if (f.seed) c.seed = *f.seed;
    if (f.out) c.out = *f.out;
    if (f.workers) c.workers = *f.workers;
    runner::validate(c);
    return c;
}

nlohmann::json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-layer personalized federated learning simulator"};
    app.require_subcommand(1);
    std::string log_level = "info";
    app.add_option("--log-level", log_level, "trace, debug, info, warn, error, off");

    Flags gen_f, train_f, eval_f, grid_f, emb_f;
    std::string checkpoint, grid_path, emb_checkpoint, report_out = "report";
    std::vector<std::string> reports;

    auto* gen = app.add_subcommand("generate", "write a synthetic preset as events.csv + students.csv");
    add_common(gen, gen_f);
    auto* train = app.add_subcommand("train", "train folds x repetitions and write the run report");
    add_common(train, train_f);
    auto* eval = app.add_subcommand("evaluate", "rescore a checkpoint on its fold's test groups");
    add_common(eval, eval_f);
    eval->add_option("--checkpoint", checkpoint, "checkpoint written by train")->required();
    auto* grid = app.add_subcommand("grid", "grid search on validation AUC");
    add_common(grid, grid_f);
    grid->add_option("--grid", grid_path, "JSON object: parameter -> list of values")->required();
    auto* emb = app.add_subcommand("export-embeddings", "student activity embeddings (op task)");
    add_common(emb, emb_f);
    emb->add_option("--checkpoint", emb_checkpoint, "use a trained checkpoint instead of training");
    auto* rep = app.add_subcommand("report", "merge run reports into comparison tables and heatmaps");
    rep->add_option("reports", reports, "report.json files")->required();
    rep->add_option("--out", report_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    spdlog::set_default_logger(spdlog::stderr_color_mt("hierfed"));
    spdlog::set_level(spdlog::level::from_str(log_level));

    try {
        if (*gen) {
            const auto c = resolve(gen_f);
            if (c.preset.empty()) throw ConfigError("generate needs --preset");
            nlohmann::json g = synth::to_json(synth::preset(c.preset));
            g["seed"] = c.seed;
            for (const auto& [k, v] : c.synth.items()) g[k] = v;
            const auto gc = synth::gen_config_from_json(g);
            synth::write_generated(gc, synth::generate(gc), c.out);
            spdlog::info("wrote {} into {}", c.preset, c.out);
        } else if (*train) {
            runner::cmd_train(resolve(train_f));
        } else if (*eval) {
            const auto r = runner::cmd_evaluate(resolve(eval_f), checkpoint);
            std::cout << r.dump(2) << "\n";
        } else if (*grid) {
            const auto g = runner::cmd_grid(resolve(grid_f), read_json(grid_path));
            std::cout << runner::to_json(g.best_config).dump(2) << "\n";
        } else if (*emb) {
            const auto c = resolve(emb_f);
            runner::cmd_export_embeddings(
                c, emb_checkpoint.empty() ? std::nullopt : std::optional<std::filesystem::path>(emb_checkpoint));
        } else if (*rep) {
            std::vector<std::filesystem::path> paths(reports.begin(), reports.end());
            runner::cmd_report(paths, report_out);
        }
    } catch (const ConfigError& e) {
        spdlog::error("config: {}", e.what());
        return 2;
    } catch (const NumericalError& e) {
        spdlog::error("numerical failure: {}", e.what());
        return 3;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 1;
    }
    return 0;
}
