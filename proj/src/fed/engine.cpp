#include "hierfed/fed/engine.hpp"

#include <algorithm>
#include <optional>

#include <spdlog/spdlog.h>

#include "hierfed/data/partition.hpp"
#include "hierfed/errors.hpp"
#include "hierfed/util/parallel.hpp"

namespace hierfed::fed {

namespace {

struct Layout {
    std::vector<GroupKey> keys;                 // ascending
    std::vector<const std::vector<int>*> students;
    std::vector<int> ordinal;                   // position within its course
    std::map<int, std::vector<std::size_t>> by_course;
    double total = 0.0;

    std::size_t size() const { return keys.size(); }
};

Layout layout_of(const RunContext& ctx) {
    if (!ctx.objective) throw ConfigError("run context has no objective");
    if (ctx.clients.empty()) throw DomainError("no clients to train");
    Layout l;
    for (const auto& [key, ids] : ctx.clients) {
        if (ids.empty()) {
            throw DomainError("client (course " + std::to_string(key.course) + ", subgroup " +
                              std::to_string(key.subgroup) + ") has no training students");
        }
        auto& members = l.by_course[key.course];
        l.ordinal.push_back(static_cast<int>(members.size()));
        members.push_back(l.keys.size());
        l.keys.push_back(key);
        l.students.push_back(&ids);
        l.total += static_cast<double>(ids.size());
    }
    return l;
}

std::string describe(const GroupKey& k) {
    return "course " + std::to_string(k.course) + " / " + demographic_name(k.variable) + " " +
           subgroup_label(k.variable, k.subgroup);
}

void check_params(const nn::ParamSet& p, const std::string& where) {
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!p[i].allFinite()) throw NumericalError(where + ": non-finite values in layer '" + p.name(i) + "'");
    }
}

// Runs `fn` with round/client context attached to numerical failures.
template <typename Fn>
void with_context(const std::string& where, Fn&& fn) {
    try {
        fn();
    } catch (const NumericalError& e) {
        throw NumericalError(where + ": " + e.what());
    }
}

std::vector<int> stratified(const Layout& l, int course, int per_group, Rng& rng) {
    std::vector<std::vector<int>> groups;
    for (std::size_t i : l.by_course.at(course)) groups.push_back(*l.students[i]);
    return data::stratified_batch(groups, per_group, rng);
}

// Course adaptation used by the personalised two-level loop: one plain
// gradient step from the global model on a stratified batch.
nn::ParamSet course_adapt(const StrategyConfig& s, const RunContext& ctx, const Layout& l,
                          const nn::ParamSet& global, int course, int round) {
    auto rng = make_rng(ctx.seed, "course-adapt", {static_cast<std::uint64_t>(round),
                                                   static_cast<std::uint64_t>(course)});
    const auto batch = stratified(l, course, s.strat_per_group, rng);
    nn::ParamSet out = global;
    const auto g = batch_gradient(*ctx.objective, global, batch, s.clip_norm);
    axpy_inplace(-s.eta, g, out);
    return out;
}

ClientState course_state(const Layout& l, int course, nn::ParamSet params) {
    ClientState st{GroupKey::course_level(course), std::move(params), {}};
    for (std::size_t i : l.by_course.at(course)) {
        st.students.insert(st.students.end(), l.students[i]->begin(), l.students[i]->end());
    }
    return st;
}

void notify(const RunContext& ctx, int round, const TrainedBundle& b) {
    if (ctx.on_round) ctx.on_round(round, b);
}

// Shared federated loop. In scenario I each course holds exactly one client.
TrainedBundle run_federated(const StrategyConfig& s, const RunContext& ctx) {
    if (s.aggregation != Aggregation::AV && s.aggregation != Aggregation::AT) {
        throw ConfigError("federated run needs AV or AT aggregation");
    }
    const Layout l = layout_of(ctx);
    const auto& obj = *ctx.objective;
    const bool personalised = s.architecture == Architecture::P;
    const double beta = s.inner_step();

    TrainedBundle b;
    b.global = ctx.init;
    for (const auto& k : l.keys) b.local_iterations[k] = 0;

    for (int k = 0; k < s.rounds; ++k) {
        std::map<int, nn::ParamSet> start;
        for (const auto& [c, members] : l.by_course) {
            if (personalised && members.size() >= 2) {
                with_context("round " + std::to_string(k) + ", course " + std::to_string(c) + " adaptation",
                             [&] { start[c] = course_adapt(s, ctx, l, b.global, c, k); });
            } else {
                start[c] = b.global;
            }
        }

        std::vector<ClientState> clients(l.size());
        std::vector<double> losses(l.size(), 0.0);
        parallel_for(l.size(), ctx.workers, [&](std::size_t i) {
            const auto& key = l.keys[i];
            auto rng = make_rng(ctx.seed, "client", {static_cast<std::uint64_t>(k),
                                                     static_cast<std::uint64_t>(key.course),
                                                     static_cast<std::uint64_t>(l.ordinal[i])});
            nn::ParamSet theta = start.at(key.course);
            const std::string where = "round " + std::to_string(k) + ", client " + describe(key);
            with_context(where, [&] {
                for (int e = 0; e < s.local_iters; ++e) {
                    losses[i] = personalised
                                    ? meta_epoch(obj, theta, *l.students[i], s.eta, beta, s.batch_size, s.clip_norm, rng)
                                    : local_sgd_epoch(obj, theta, *l.students[i], s.eta, s.batch_size, s.clip_norm, rng);
                }
                check_params(theta, where);
            });
            clients[i] = ClientState{key, std::move(theta), *l.students[i]};
        });

        std::vector<ClientState> courses;
        for (const auto& [c, members] : l.by_course) {
            nn::ParamSet pc;
            if (members.size() == 1) {
                pc = clients[members.front()].params;
            } else {
                std::vector<ClientState> subs;
                for (std::size_t i : members) subs.push_back(clients[i]);
                pc = s.aggregation == Aggregation::AV
                         ? aggregate_average(subs)
                         : aggregate_attention(start.at(c), subs, s.epsilon, s.attention_mode);
            }
            courses.push_back(course_state(l, c, std::move(pc)));
        }
        b.global = s.aggregation == Aggregation::AV
                       ? aggregate_average(courses)
                       : aggregate_attention(b.global, courses, s.epsilon, s.attention_mode);
        check_params(b.global, "round " + std::to_string(k) + ", global aggregation");
        ++b.aggregations;

        for (auto& cs : courses) b.course[cs.key.course] = std::move(cs.params);
        double loss = 0.0;
        for (std::size_t i = 0; i < l.size(); ++i) {
            b.local[l.keys[i]] = std::move(clients[i].params);
            b.local_iterations[l.keys[i]] += s.local_iters;
            loss += losses[i];
        }
        b.history.push_back(loss / l.total);
        notify(ctx, k, b);
    }
    return b;
}

}  // namespace

TrainedBundle run_scenario1(const StrategyConfig& s, const RunContext& ctx) {
    for (const auto& [key, _] : ctx.clients) {
        if (key.variable != Demographic::None || key.subgroup != kSubgroupAll) {
            throw ConfigError("scenario I clients must be course-level");
        }
    }
    return run_federated(s, ctx);
}

TrainedBundle run_scenario2(const StrategyConfig& s, const RunContext& ctx) {
    return run_federated(s, ctx);
}

TrainedBundle run_fedirt(const StrategyConfig& s, const RunContext& ctx) {
    const Layout l = layout_of(ctx);
    const auto& obj = *ctx.objective;

    // Per-course Rasch confidences, fixed for the run.
    std::vector<double> alpha(l.size(), 0.0);
    for (const auto& [c, members] : l.by_course) {
        std::vector<std::vector<Response>> groups;
        for (std::size_t i : members) {
            const auto it = ctx.responses.find(l.keys[i]);
            groups.push_back(it == ctx.responses.end() ? std::vector<Response>{} : it->second);
        }
        const auto conf = irt_confidence(groups, std::max(ctx.num_items, 1));
        for (std::size_t j = 0; j < members.size(); ++j) alpha[members[j]] = conf[j];
    }

    TrainedBundle b;
    b.global = ctx.init;
    std::vector<nn::ParamSet> prev(l.size(), ctx.init);
    for (const auto& k : l.keys) b.local_iterations[k] = 0;

    for (int k = 0; k < s.rounds; ++k) {
        std::vector<ClientState> clients(l.size());
        std::vector<double> losses(l.size(), 0.0);
        parallel_for(l.size(), ctx.workers, [&](std::size_t i) {
            const auto& key = l.keys[i];
            auto rng = make_rng(ctx.seed, "client", {static_cast<std::uint64_t>(k),
                                                     static_cast<std::uint64_t>(key.course),
                                                     static_cast<std::uint64_t>(l.ordinal[i])});
            nn::ParamSet theta = irt_interpolate(prev[i], b.global).params;
            const std::string where = "round " + std::to_string(k) + ", client " + describe(key);
            with_context(where, [&] {
                for (int e = 0; e < s.local_iters; ++e) {
                    losses[i] = local_sgd_epoch(obj, theta, *l.students[i], s.eta, s.batch_size, s.clip_norm, rng);
                }
                check_params(theta, where);
            });
            clients[i] = ClientState{key, std::move(theta), *l.students[i]};
        });

        std::vector<ClientState> courses;
        for (const auto& [c, members] : l.by_course) {
            std::vector<ClientState> subs;
            std::vector<double> w;
            for (std::size_t i : members) {
                subs.push_back(clients[i]);
                w.push_back(alpha[i]);
            }
            courses.push_back(course_state(l, c, aggregate_weighted(subs, w)));
        }
        b.global = aggregate_average(courses);
        ++b.aggregations;

        for (auto& cs : courses) b.course[cs.key.course] = std::move(cs.params);
        double loss = 0.0;
        for (std::size_t i = 0; i < l.size(); ++i) {
            prev[i] = clients[i].params;
            b.local[l.keys[i]] = std::move(clients[i].params);
            b.local_iterations[l.keys[i]] += s.local_iters;
            loss += losses[i];
        }
        b.history.push_back(loss / l.total);
        notify(ctx, k, b);
    }
    return b;
}

TrainedBundle run_centralized(const StrategyConfig& s, const RunContext& ctx) {
    const Layout l = layout_of(ctx);
    std::vector<int> pooled;
    for (const auto* ids : l.students) pooled.insert(pooled.end(), ids->begin(), ids->end());
    std::sort(pooled.begin(), pooled.end());

    TrainedBundle b;
    b.global = ctx.init;
    for (int e = 0; e < s.epochs; ++e) {
        auto rng = make_rng(ctx.seed, "central", {static_cast<std::uint64_t>(e)});
        double loss = 0.0;
        with_context("epoch " + std::to_string(e), [&] {
            loss = local_sgd_epoch(*ctx.objective, b.global, pooled, s.eta, s.batch_size, s.clip_norm, rng);
            check_params(b.global, "centralized model");
        });
        b.history.push_back(loss / l.total);
        notify(ctx, e, b);
    }
    return b;
}

TrainedBundle run_local(const StrategyConfig& s, const RunContext& ctx) {
    const Layout l = layout_of(ctx);
    std::vector<nn::ParamSet> models(l.size(), ctx.init);
    TrainedBundle b;
    b.global = ctx.init;
    for (int e = 0; e < s.epochs; ++e) {
        std::vector<double> losses(l.size(), 0.0);
        parallel_for(l.size(), ctx.workers, [&](std::size_t i) {
            const auto& key = l.keys[i];
            auto rng = make_rng(ctx.seed, "local", {static_cast<std::uint64_t>(e),
                                                    static_cast<std::uint64_t>(key.course),
                                                    static_cast<std::uint64_t>(l.ordinal[i])});
            const std::string where = "epoch " + std::to_string(e) + ", client " + describe(key);
            with_context(where, [&] {
                losses[i] = local_sgd_epoch(*ctx.objective, models[i], *l.students[i], s.eta, s.batch_size,
                                            s.clip_norm, rng);
                check_params(models[i], where);
            });
        });
        double loss = 0.0;
        for (std::size_t i = 0; i < l.size(); ++i) {
            b.local[l.keys[i]] = models[i];
            b.local_iterations[l.keys[i]] = e + 1;
            loss += losses[i];
        }
        b.history.push_back(loss / l.total);
        notify(ctx, e, b);
    }
    return b;
}

TrainedBundle train(const StrategyConfig& s, const RunContext& ctx) {
    if (s.architecture == Architecture::FedIRT) return run_fedirt(s, ctx);
    if (s.architecture == Architecture::L) return run_local(s, ctx);
    if (s.aggregation == Aggregation::None) return run_centralized(s, ctx);
    return s.scenario == Scenario::SC1 ? run_scenario1(s, ctx) : run_scenario2(s, ctx);
}

std::map<GroupKey, nn::ParamSet> adapted_models(const StrategyConfig& s, const TrainedBundle& bundle,
                                                const RunContext& ctx, const std::vector<GroupKey>& keys) {
    if (!ctx.objective) throw ConfigError("run context has no objective");
    const auto& obj = *ctx.objective;
    const bool personalised = s.architecture == Architecture::P;
    const bool sc2 = s.scenario == Scenario::SC2;

    // Scenario II course step, shared by every subgroup of the course.
    std::map<int, nn::ParamSet> course_model;
    if (personalised && sc2) {
        std::map<int, std::vector<std::vector<int>>> course_groups;
        for (const auto& [key, ids] : ctx.clients) {
            if (!ids.empty()) course_groups[key.course].push_back(ids);
        }
        for (const auto& [c, groups] : course_groups) {
            auto rng = make_rng(ctx.seed, "eval-course", {static_cast<std::uint64_t>(c)});
            const auto d = data::stratified_batch(groups, s.strat_per_group, rng);
            const auto dp = data::stratified_batch(groups, s.strat_per_group, rng);
            course_model[c] = meta_update(obj, bundle.global, d, dp, s.eta, s.inner_step(), s.clip_norm);
        }
    }

    std::vector<std::optional<nn::ParamSet>> models(keys.size());
    parallel_for(keys.size(), ctx.workers, [&](std::size_t i) {
        const auto& key = keys[i];
        const auto train_it = ctx.clients.find(key);
        const std::vector<int>* train_ids =
            train_it == ctx.clients.end() || train_it->second.empty() ? nullptr : &train_it->second;

        if (s.architecture == Architecture::L || s.architecture == Architecture::FedIRT) {
            const auto it = bundle.local.find(key);
            if (it == bundle.local.end()) {
                spdlog::warn("evaluation: no model trained for {}, skipped", describe(key));
                return;
            }
            models[i] = it->second;
        } else if (personalised && !sc2) {
            models[i] = bundle.global;
            if (train_ids) {
                auto rng = make_rng(ctx.seed, "eval-adapt", {static_cast<std::uint64_t>(key.course)});
                local_sgd_epoch(obj, *models[i], *train_ids, s.inner_step(), s.batch_size, s.clip_norm, rng);
            }
        } else if (personalised) {
            const auto cm = course_model.find(key.course);
            models[i] = cm != course_model.end() ? cm->second : bundle.global;
            if (s.hierarchy == Hierarchy::B && train_ids) {
                auto rng = make_rng(ctx.seed, "eval-adapt",
                                    {static_cast<std::uint64_t>(key.course),
                                     static_cast<std::uint64_t>(static_cast<int>(key.variable)),
                                     static_cast<std::uint64_t>(key.subgroup)});
                local_sgd_epoch(obj, *models[i], *train_ids, s.inner_step(), s.batch_size, s.clip_norm, rng);
            }
        } else if (sc2 && s.hierarchy == Hierarchy::M && bundle.course.count(key.course)) {
            models[i] = bundle.course.at(key.course);
        } else {
            models[i] = bundle.global;
        }
    });

    std::map<GroupKey, nn::ParamSet> out;
    for (std::size_t i = 0; i < keys.size(); ++i) {
        if (models[i]) out.emplace(keys[i], std::move(*models[i]));
    }
    return out;
}

std::map<GroupKey, models::Scored> evaluate_adapted(const StrategyConfig& s,
                                                    const TrainedBundle& bundle,
                                                    const RunContext& ctx,
                                                    const std::map<GroupKey, std::vector<int>>& eval_groups) {
    std::vector<GroupKey> keys;
    for (const auto& [key, ids] : eval_groups) {
        if (ids.empty()) {
            spdlog::warn("evaluation: {} has no students, skipped", describe(key));
            continue;
        }
        keys.push_back(key);
    }
    const auto models = adapted_models(s, bundle, ctx, keys);
    const auto& obj = *ctx.objective;

    std::vector<GroupKey> scored_keys;
    for (const auto& [key, _] : models) scored_keys.push_back(key);
    std::vector<models::Scored> scored(scored_keys.size());
    parallel_for(scored_keys.size(), ctx.workers, [&](std::size_t i) {
        const auto& model = models.at(scored_keys[i]);
        for (int id : eval_groups.at(scored_keys[i])) {
            if (obj.usable(id)) obj.score(id, model, scored[i]);
        }
    });

    std::map<GroupKey, models::Scored> result;
    for (std::size_t i = 0; i < scored_keys.size(); ++i) result.emplace(scored_keys[i], std::move(scored[i]));
    return result;
}

}  // namespace hierfed::fed
