#include "hierfed/runner/runner.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "hierfed/errors.hpp"
#include "hierfed/fed/checkpoint.hpp"

namespace hierfed::runner {

namespace {

namespace fs = std::filesystem;

std::vector<int> usable_only(const models::Objective& obj, const std::vector<int>& ids) {
    std::vector<int> out;
    for (int id : ids) {
        if (obj.usable(id)) out.push_back(id);
    }
    return out;
}

std::map<GroupKey, std::vector<int>> grouped(const ExperimentConfig& c, const data::Dataset& ds,
                                             const models::Objective& obj, const std::vector<int>& ids) {
    auto g = data::group_by_demographic(ds, usable_only(obj, ids), c.group_variable(), c.include_unspecified);
    std::erase_if(g, [](const auto& kv) { return kv.second.empty(); });
    return g;
}

nlohmann::json key_json(const GroupKey& k, const std::vector<std::string>& course_ids) {
    return {{"course", course_ids.at(static_cast<std::size_t>(k.course))},
            {"course_index", k.course},
            {"demographic", demographic_name(k.variable)},
            {"subgroup", subgroup_label(k.variable, k.subgroup)}};
}

GroupKey key_from_json(const nlohmann::json& j) {
    GroupKey k;
    k.course = j.at("course_index").get<int>();
    k.variable = parse_demographic(j.at("demographic").get<std::string>());
    const auto label = j.at("subgroup").get<std::string>();
    const auto x = parse_subgroup(k.variable, label);
    if (!x) throw DataError("report: unknown subgroup '" + label + "'");
    k.subgroup = *x;
    return k;
}

nlohmann::json opt_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

std::optional<double> opt_from(const nlohmann::json& j) {
    return j.is_null() ? std::nullopt : std::optional<double>(j.get<double>());
}

// Groups with an undefined AUC (one class only) are left out of the mean.
std::optional<double> validation_score(Selection sel, const std::map<GroupKey, models::Scored>& scored) {
    if (sel == Selection::Pooled) {
        models::Scored all;
        for (const auto& [_, s] : scored) all.append(s);
        if (all.size() == 0) return std::nullopt;
        return metrics::auc(all.scores, all.labels);
    }
    std::vector<double> aucs;
    for (const auto& [_, s] : scored) {
        if (const auto a = metrics::auc(s.scores, s.labels)) aucs.push_back(*a);
    }
    if (aucs.empty()) return std::nullopt;
    return metrics::mean_of(aucs);
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
}

// Lists what a command wrote, with the config hash and seed that made it.
void write_manifest(const fs::path& dir, const std::string& command, const ExperimentConfig& c,
                    const std::vector<std::string>& files) {
    nlohmann::json m = {{"command", command},
                        {"config_hash", config_hash(c)},
                        {"seed", c.seed},
                        {"config", to_json(c)},
                        {"files", files}};
    write_text(dir / ("manifest_" + command + ".json"), m.dump(2) + "\n");
}

std::string file_label(const std::string& s) {
    std::string out;
    for (char ch : s) out.push_back(std::isalnum(static_cast<unsigned char>(ch)) ? ch : '_');
    return out;
}

}  // namespace

std::vector<data::Partition> make_partitions(const ExperimentConfig& c, const data::Dataset& ds) {
    return data::make_folds(ds, substream_seed(c.seed, "folds"), c.num_folds, c.val_fraction);
}

FoldData prepare_fold(const ExperimentConfig& c, const data::Dataset& ds, const data::Partition& p) {
    FoldData f;
    f.partition = p;
    const auto train = p.all_train();
    f.vocab = models::build_vocab(ds, train);
    f.objective = models::make_objective(c.task, ds, f.vocab, c.hidden, static_cast<std::size_t>(c.max_steps));
    f.train = grouped(c, ds, *f.objective, train);
    f.validation = grouped(c, ds, *f.objective, p.all_validation());
    f.test = grouped(c, ds, *f.objective, p.all_test());
    if (f.train.empty()) throw DataError("fold " + std::to_string(p.fold) + " has no usable training students");
    if (c.strategy_config().architecture == fed::Architecture::FedIRT) {
        for (const auto& [k, ids] : f.train) f.responses[k] = fed::quiz_responses(ds, f.vocab, ids);
    }
    return f;
}

std::uint64_t run_seed(const ExperimentConfig& c, int fold, int repetition) {
    return substream_seed(c.seed, "run", {static_cast<std::uint64_t>(fold), static_cast<std::uint64_t>(repetition)});
}

fed::RunContext make_context(const ExperimentConfig& c, const FoldData& fold, std::uint64_t seed) {
    fed::RunContext ctx;
    ctx.objective = fold.objective.get();
    ctx.clients = fold.train;
    ctx.seed = seed;
    ctx.workers = c.workers;
    ctx.responses = fold.responses;
    ctx.num_items = fold.vocab.num_videos;
    auto rng = make_rng(seed, "init");
    ctx.init = fold.objective->init(rng);
    return ctx;
}

TrainOutcome train_one(const ExperimentConfig& c, const FoldData& fold, int fold_index, int repetition,
                       bool score_test) {
    const auto s = c.strategy_config();
    auto ctx = make_context(c, fold, run_seed(c, fold_index, repetition));

    TrainOutcome out;
    out.record.fold = fold_index;
    out.record.repetition = repetition;
    bool have = false;
    ctx.on_round = [&](int k, const fed::TrainedBundle& b) {
        const auto a = validation_score(c.selection, fed::evaluate_adapted(s, b, ctx, fold.validation));
        const bool better = !have || (a && (!out.record.validation_auc || *a > *out.record.validation_auc));
        if (better) {
            out.bundle = b;
            out.record.selected_round = k;
            out.record.validation_auc = a;
            have = true;
        }
    };
    const auto final_bundle = fed::train(s, ctx);
    out.record.history = final_bundle.history;

    if (score_test) {
        const auto scored = fed::evaluate_adapted(s, out.bundle, ctx, fold.test);
        for (const auto& [k, _] : fold.test) {
            const auto it = scored.find(k);
            out.record.test[k] = it == scored.end() ? std::nullopt : metrics::auc(it->second.scores, it->second.labels);
            out.record.test_counts[k] = it == scored.end() ? 0 : it->second.size();
        }
    }
    spdlog::info("{} fold {} rep {}: round {} selected, validation AUC {}", s.name(), fold_index, repetition,
                 out.record.selected_round,
                 out.record.validation_auc ? fmt::format("{:.4f}", *out.record.validation_auc) : "undefined");
    return out;
}

namespace {

RunReport empty_report(const ExperimentConfig& c, const data::Dataset& ds) {
    RunReport r;
    r.config = to_json(c);
    r.config_hash = config_hash(c);
    r.seed = c.seed;
    r.dataset_hash = hex64(ds.content_hash());
    r.strategy = c.strategy_config().name();
    r.task = models::task_name(c.task);
    r.variable = c.group_variable();
    r.course_ids = ds.course_ids;
    return r;
}

void finish(RunReport& r) {
    std::vector<metrics::RunAucs> aucs;
    for (const auto& run : r.runs) aucs.push_back(run.test);
    r.summary = metrics::summarize(aucs);
}

RunReport experiment(const ExperimentConfig& c, const data::Dataset& ds,
                     std::vector<std::pair<fed::TrainedBundle, double>>* bundles) {
    validate(c);
    RunReport r = empty_report(c, ds);
    const auto parts = make_partitions(c, ds);
    for (int f : c.folds) {
        const FoldData fold = prepare_fold(c, ds, parts.at(static_cast<std::size_t>(f)));
        for (int rep = 0; rep < c.repetitions; ++rep) {
            const auto t0 = std::chrono::steady_clock::now();
            auto o = train_one(c, fold, f, rep);
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            r.runs.push_back(std::move(o.record));
            if (bundles) bundles->emplace_back(std::move(o.bundle), secs);
        }
    }
    finish(r);
    return r;
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& c, const data::Dataset& ds) { return experiment(c, ds, nullptr); }

nlohmann::json to_json(const RunReport& r) {
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& run : r.runs) {
        nlohmann::json test = nlohmann::json::array();
        for (const auto& [k, a] : run.test) {
            auto row = key_json(k, r.course_ids);
            row["auc"] = opt_json(a);
            const auto n = run.test_counts.find(k);
            row["n_scored"] = n == run.test_counts.end() ? 0 : n->second;
            test.push_back(std::move(row));
        }
        runs.push_back({{"fold", run.fold},
                        {"repetition", run.repetition},
                        {"selected_round", run.selected_round},
                        {"validation_auc", opt_json(run.validation_auc)},
                        {"history", run.history},
                        {"test", test}});
    }
    return {{"schema_version", kSchemaVersion},
            {"config", r.config},
            {"config_hash", r.config_hash},
            {"seed", r.seed},
            {"dataset_hash", r.dataset_hash},
            {"strategy", r.strategy},
            {"task", r.task},
            {"demographic", demographic_name(r.variable)},
            {"course_ids", r.course_ids},
            {"runs", runs},
            {"summary", metrics::summary_to_json(r.summary, r.summary_context())}};
}

RunReport report_from_json(const nlohmann::json& j) {
    RunReport r;
    try {
        r.config = j.at("config");
        r.config_hash = j.at("config_hash").get<std::string>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.dataset_hash = j.at("dataset_hash").get<std::string>();
        r.strategy = j.at("strategy").get<std::string>();
        r.task = j.at("task").get<std::string>();
        r.variable = parse_demographic(j.at("demographic").get<std::string>());
        r.course_ids = j.at("course_ids").get<std::vector<std::string>>();
        for (const auto& run : j.at("runs")) {
            RunRecord rec;
            rec.fold = run.at("fold").get<int>();
            rec.repetition = run.at("repetition").get<int>();
            rec.selected_round = run.at("selected_round").get<int>();
            rec.validation_auc = opt_from(run.at("validation_auc"));
            rec.history = run.at("history").get<std::vector<double>>();
            for (const auto& row : run.at("test")) {
                const auto k = key_from_json(row);
                rec.test[k] = opt_from(row.at("auc"));
                rec.test_counts[k] = row.at("n_scored").get<std::size_t>();
            }
            r.runs.push_back(std::move(rec));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("report: ") + e.what());
    }
    finish(r);
    return r;
}

RunReport load_report(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read report " + path.string());
    try {
        return report_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError("report " + path.string() + ": " + e.what());
    }
}

RunReport cmd_train(const ExperimentConfig& c) {
    validate(c);
    const auto ds = load_dataset(c);
    for (const auto& w : ds.warnings) spdlog::warn("{}", w);
    std::vector<std::pair<fed::TrainedBundle, double>> bundles;
    const auto t0 = std::chrono::steady_clock::now();
    const RunReport r = experiment(c, ds, &bundles);
    const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const fs::path out(c.out);
    fs::create_directories(out / "checkpoints");
    std::vector<std::string> files = {"report.json", "summary.csv", "timing.json"};
    nlohmann::json timing = {{"total_seconds", total}, {"workers", c.workers}, {"runs", nlohmann::json::array()}};
    for (std::size_t i = 0; i < r.runs.size(); ++i) {
        const auto& run = r.runs[i];
        const std::string name = "checkpoints/fold" + std::to_string(run.fold) + "_rep" + std::to_string(run.repetition) + ".json";
        fed::save_checkpoint(out / name, bundles[i].first, r.config_hash,
                             {{"fold", run.fold}, {"repetition", run.repetition}, {"seed", c.seed},
                              {"selected_round", run.selected_round}});
        files.push_back(name);
        timing["runs"].push_back({{"fold", run.fold}, {"repetition", run.repetition}, {"seconds", bundles[i].second}});
    }
    write_text(out / "report.json", to_json(r).dump(2) + "\n");
    std::ostringstream csv;
    metrics::write_summary_csv(r.summary, r.summary_context(), csv);
    write_text(out / "summary.csv", csv.str());
    write_text(out / "timing.json", timing.dump(2) + "\n");
    write_manifest(out, "train", c, files);
    spdlog::info("{}: overall AUC {:.4f} +- {:.4f} over {} groups", r.strategy, r.summary.overall_mean,
                 r.summary.overall_std, r.summary.n_groups);
    return r;
}

nlohmann::json cmd_evaluate(const ExperimentConfig& c, const fs::path& checkpoint) {
    validate(c);
    std::string hash;
    nlohmann::json meta;
    const auto bundle = fed::load_checkpoint(checkpoint, &hash, &meta);
    if (hash != config_hash(c)) {
        throw ConfigError("checkpoint " + checkpoint.string() + " was trained under config " + hash +
                          ", not " + config_hash(c));
    }
    const int f = meta.value("fold", c.folds.front());
    const int rep = meta.value("repetition", 0);
    const auto ds = load_dataset(c);
    const auto parts = make_partitions(c, ds);
    const FoldData fold = prepare_fold(c, ds, parts.at(static_cast<std::size_t>(f)));
    const auto ctx = make_context(c, fold, run_seed(c, f, rep));
    const auto scored = fed::evaluate_adapted(c.strategy_config(), bundle, ctx, fold.test);

    nlohmann::json groups = nlohmann::json::array();
    for (const auto& [k, s] : scored) {
        auto row = key_json(k, ds.course_ids);
        row["auc"] = opt_json(metrics::auc(s.scores, s.labels));
        row["n_scored"] = s.size();
        groups.push_back(std::move(row));
    }
    nlohmann::json result = {{"config_hash", hash}, {"seed", c.seed}, {"fold", f}, {"repetition", rep},
                             {"strategy", c.strategy_config().name()}, {"groups", groups}};
    const fs::path out(c.out);
    fs::create_directories(out);
    write_text(out / "evaluation.json", result.dump(2) + "\n");
    write_manifest(out, "evaluate", c, {"evaluation.json"});
    return result;
}

GridResult run_grid(const ExperimentConfig& c, const data::Dataset& ds, const nlohmann::json& grid) {
    if (!grid.is_object() || grid.empty()) throw ConfigError("grid: empty grid");
    GridResult g;
    std::vector<std::vector<nlohmann::json>> values;
    for (const auto& [k, v] : grid.items()) {
        if (!v.is_array() || v.empty()) throw ConfigError("grid: '" + k + "' needs a nonempty value list");
        g.params.push_back(k);
        values.push_back(std::vector<nlohmann::json>(v.begin(), v.end()));
    }
    // Odometer over the value lists, last parameter fastest.
    std::vector<std::size_t> idx(values.size(), 0);
    for (bool more = true; more;) {
        std::vector<nlohmann::json> cell;
        for (std::size_t p = 0; p < values.size(); ++p) cell.push_back(values[p][idx[p]]);
        g.cells.push_back(cell);
        more = false;
        for (std::size_t p = values.size(); p-- > 0;) {
            if (++idx[p] < values[p].size()) {
                more = true;
                break;
            }
            idx[p] = 0;
        }
    }

    const auto parts = make_partitions(c, ds);
    std::optional<double> best;
    for (std::size_t i = 0; i < g.cells.size(); ++i) {
        ExperimentConfig cc = c;
        nlohmann::json hp = nlohmann::json::object();
        for (std::size_t p = 0; p < g.params.size(); ++p) {
            if (g.params[p] == "hidden") {
                cc.hidden = g.cells[i][p].get<int>();
            } else {
                hp[g.params[p]] = g.cells[i][p];
            }
        }
        nlohmann::json probe = to_json(cc);
        for (const auto& [k, v] : hp.items()) probe["hyperparameters"][k] = v;
        cc = config_from_json(probe);
        cc.out = c.out;
        cc.workers = c.workers;
        validate(cc);

        std::vector<double> aucs;
        for (int f : cc.folds) {
            const FoldData fold = prepare_fold(cc, ds, parts.at(static_cast<std::size_t>(f)));
            for (int rep = 0; rep < cc.repetitions; ++rep) {
                const auto o = train_one(cc, fold, f, rep, false);
                ++g.trainings;
                if (o.record.validation_auc) aucs.push_back(*o.record.validation_auc);
            }
        }
        const std::optional<double> mean = aucs.empty() ? std::nullopt : std::optional<double>(metrics::mean_of(aucs));
        g.validation_auc.push_back(mean);
        if (i == 0 || (mean && (!best || *mean > *best))) {
            if (mean || i == 0) {
                best = mean;
                g.best = i;
                g.best_config = cc;
            }
        }
    }
    return g;
}

GridResult cmd_grid(const ExperimentConfig& c, const nlohmann::json& grid) {
    validate(c);
    const auto ds = load_dataset(c);
    const GridResult g = run_grid(c, ds, grid);
    const fs::path out(c.out);
    fs::create_directories(out);
    std::ostringstream csv;
    for (const auto& p : g.params) csv << p << ',';
    csv << "mean_validation_auc,best\n";
    for (std::size_t i = 0; i < g.cells.size(); ++i) {
        for (const auto& v : g.cells[i]) csv << v.dump() << ',';
        if (g.validation_auc[i]) csv << fmt::format("{:.17g}", *g.validation_auc[i]);
        csv << ',' << (i == g.best ? 1 : 0) << '\n';
    }
    write_text(out / "grid.csv", csv.str());
    write_text(out / "best_config.json", to_json(g.best_config).dump(2) + "\n");
    write_manifest(out, "grid", c, {"grid.csv", "best_config.json"});
    return g;
}

std::vector<models::EmbeddingRow> export_embeddings(const ExperimentConfig& c, const data::Dataset& ds,
                                                    const std::optional<fs::path>& checkpoint) {
    validate(c);
    if (c.task != models::Task::OP) throw ConfigError("export-embeddings is only supported for the op task");
    int f = c.folds.front();
    int rep = 0;
    fed::TrainedBundle bundle;
    std::optional<FoldData> fold;
    const auto parts = make_partitions(c, ds);
    if (checkpoint) {
        std::string hash;
        nlohmann::json meta;
        bundle = fed::load_checkpoint(*checkpoint, &hash, &meta);
        if (hash != config_hash(c)) throw ConfigError("checkpoint was trained under a different config");
        f = meta.value("fold", f);
        rep = meta.value("repetition", 0);
        fold.emplace(prepare_fold(c, ds, parts.at(static_cast<std::size_t>(f))));
    } else {
        fold.emplace(prepare_fold(c, ds, parts.at(static_cast<std::size_t>(f))));
        bundle = train_one(c, *fold, f, rep, false).bundle;
    }
    const auto* op = dynamic_cast<const models::OpObjective*>(fold->objective.get());
    if (!op) throw ConfigError("export-embeddings needs the op objective");

    const auto ctx = make_context(c, *fold, run_seed(c, f, rep));
    std::vector<GroupKey> keys;
    for (const auto& [k, _] : fold->test) keys.push_back(k);
    const auto models = fed::adapted_models(c.strategy_config(), bundle, ctx, keys);

    std::vector<models::EmbeddingRow> rows;
    for (const auto& [k, ids] : fold->test) {
        const auto m = models.find(k);
        if (m == models.end()) continue;
        for (int id : ids) {
            const auto& info = ds.students[static_cast<std::size_t>(id)].info;
            rows.push_back({info.student_id, info.course_id, demographic_name(k.variable),
                            subgroup_label(k.variable, k.subgroup), op->embedding(id, m->second)});
        }
    }
    return rows;
}

void cmd_export_embeddings(const ExperimentConfig& c, const std::optional<fs::path>& checkpoint) {
    const auto ds = load_dataset(c);
    const auto rows = export_embeddings(c, ds, checkpoint);
    const fs::path out(c.out);
    fs::create_directories(out);
    std::ostringstream csv;
    models::write_embeddings_csv(rows, c.hidden, csv);
    write_text(out / "embeddings.csv", csv.str());
    write_manifest(out, "export-embeddings", c, {"embeddings.csv"});
}

void write_comparison(const std::vector<RunReport>& reports, std::ostream& csv, std::ostream& md) {
    if (reports.empty()) throw ConfigError("report: no run reports given");
    for (const auto& r : reports) {
        if (r.dataset_hash != reports.front().dataset_hash) {
            throw ConfigError("report: refusing to merge reports over different datasets (" +
                              reports.front().dataset_hash + " vs " + r.dataset_hash + ")");
        }
    }
    for (std::size_t i = 0; i < reports.size(); ++i) {
        std::ostringstream one;
        metrics::write_summary_csv(reports[i].summary, reports[i].summary_context(), one);
        const std::string text = one.str();
        csv << (i == 0 ? text : text.substr(text.find('\n') + 1));
    }

    md << "# Strategy comparison\n\n";
    md << "Dataset `" << reports.front().dataset_hash << "`.\n\n";
    md << "| strategy | task | config | seed | runs | groups | mean AUC | std AUC |\n";
    md << "|---|---|---|---|---|---|---|---|\n";
    for (const auto& r : reports) {
        md << fmt::format("| {} | {} | `{}` | {} | {} | {} | {:.4f} | {:.4f} |\n", r.strategy, r.task, r.config_hash,
                          r.seed, r.runs.size(), r.summary.n_groups, r.summary.overall_mean, r.summary.overall_std);
    }
    md << "\n## Per group\n\n| course | demographic | subgroup | strategy | task | mean AUC | std AUC | runs |\n";
    md << "|---|---|---|---|---|---|---|---|\n";
    for (const auto& r : reports) {
        for (const auto& [k, g] : r.summary.groups) {
            md << fmt::format("| {} | {} | {} | {} | {} | {} | {} | {} |\n",
                              r.course_ids.at(static_cast<std::size_t>(k.course)), demographic_name(k.variable),
                              subgroup_label(k.variable, k.subgroup), r.strategy, r.task,
                              g.n_runs ? fmt::format("{:.4f}", g.mean) : "n/a",
                              g.n_runs ? fmt::format("{:.4f}", g.std) : "n/a", g.n_runs);
        }
    }
}

void cmd_report(const std::vector<fs::path>& paths, const fs::path& out) {
    std::vector<RunReport> reports;
    for (const auto& p : paths) reports.push_back(load_report(p));
    fs::create_directories(out);
    std::ostringstream csv, md;
    write_comparison(reports, csv, md);

    // Activity heatmaps: each subgroup against the rest of its course.
    const ExperimentConfig c = config_from_json(reports.front().config);
    const auto ds = load_dataset(c);
    if (hex64(ds.content_hash()) != reports.front().dataset_hash) {
        throw ConfigError("report: the dataset no longer matches the report's hash");
    }
    const Demographic var = c.demographic;
    std::vector<std::string> files = {"comparison.csv", "comparison.md"};
    md << "\n## Activity heatmaps (" << demographic_name(var) << ")\n\n| course | subgroup | mean cell |\n|---|---|---|\n";
    for (int course = 0; course < ds.num_courses(); ++course) {
        const auto ids = ds.students_in_course(course);
        const auto groups = data::group_by_demographic(ds, ids, var, c.include_unspecified);
        for (const auto& [k, members] : groups) {
            std::vector<int> rest;
            for (const auto& [k2, m2] : groups) {
                if (k2 != k) rest.insert(rest.end(), m2.begin(), m2.end());
            }
            if (members.empty() || rest.empty()) continue;
            std::sort(rest.begin(), rest.end());
            const auto h = metrics::activity_heatmap(ds, members, rest);
            const std::string name = "heatmap_" + file_label(ds.course_ids[static_cast<std::size_t>(course)]) + "_" +
                                     file_label(subgroup_label(var, k.subgroup)) + ".csv";
            std::ostringstream hs;
            metrics::write_heatmap_csv(h, hs);
            write_text(out / name, hs.str());
            files.push_back(name);
            md << fmt::format("| {} | {} | {:.4f} |\n", ds.course_ids[static_cast<std::size_t>(course)],
                              subgroup_label(var, k.subgroup), h.mean());
        }
    }
    write_text(out / "comparison.csv", csv.str());
    write_text(out / "comparison.md", md.str());

    nlohmann::json manifest = {{"command", "report"}, {"files", files}, {"reports", nlohmann::json::array()}};
    for (const auto& r : reports) {
        manifest["reports"].push_back({{"config_hash", r.config_hash}, {"seed", r.seed}, {"strategy", r.strategy}});
    }
    write_text(out / "manifest_report.json", manifest.dump(2) + "\n");
}

}  // namespace hierfed::runner
