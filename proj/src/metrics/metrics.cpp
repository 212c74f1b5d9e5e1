#include "hierfed/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <ostream>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "hierfed/errors.hpp"

namespace hierfed::metrics {

std::optional<double> auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw ShapeError("auc: scores and labels differ in length");
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Average 1-based ranks over tie runs; sum the ranks of the positives.
    double rank_sum = 0.0;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t t = i; t < j; ++t) {
            if (labels[order[t]] == 1) {
                rank_sum += avg_rank;
                ++pos;
            }
        }
        i = j;
    }
    const std::size_t neg = n - pos;
    if (pos == 0 || neg == 0) {
        spdlog::debug("auc undefined: {} positives, {} negatives", pos, neg);
        return std::nullopt;
    }
    const double np = static_cast<double>(pos);
    return (rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(neg));
}

namespace {
bool all_equal(std::span<const double> xs) {
    return std::adjacent_find(xs.begin(), xs.end(), std::not_equal_to<>()) == xs.end();
}
}  // namespace

// Identical inputs short-circuit so that repeated runs give exactly zero spread.
double mean_of(std::span<const double> xs) {
    if (xs.empty()) return 0.0;
    if (all_equal(xs)) return xs.front();
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

double population_std(std::span<const double> xs) {
    if (xs.empty() || all_equal(xs)) return 0.0;
    const double m = mean_of(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(xs.size()));
}

SubgroupSummary summarize(std::span<const RunAucs> runs) {
    if (runs.empty()) throw DomainError("summarize needs at least one run");
    std::set<GroupKey> keys;
    for (const auto& r : runs) {
        for (const auto& [k, _] : r) keys.insert(k);
    }
    SubgroupSummary out;
    std::vector<double> means;
    for (const auto& k : keys) {
        std::vector<double> vals;
        bool incomplete = false;
        for (const auto& r : runs) {
            auto it = r.find(k);
            if (it == r.end() || !it->second) {
                incomplete = true;
                continue;
            }
            vals.push_back(*it->second);
        }
        GroupStats g;
        g.n_runs = static_cast<int>(vals.size());
        g.incomplete = incomplete;
        if (!vals.empty()) {
            g.mean = mean_of(vals);
            g.std = population_std(vals);
            means.push_back(g.mean);
        }
        if (incomplete) {
            spdlog::warn("subgroup (course {}, {}, {}) has a defined AUC in {} of {} runs", k.course,
                         demographic_name(k.variable), subgroup_label(k.variable, k.subgroup),
                         g.n_runs, runs.size());
        }
        out.groups.emplace(k, g);
    }
    out.n_groups = static_cast<int>(means.size());
    out.overall_mean = mean_of(means);
    out.overall_std = population_std(means);
    return out;
}

namespace {

std::string course_label(const SummaryContext& ctx, int c) {
    if (c >= 0 && static_cast<std::size_t>(c) < ctx.course_ids.size()) {
        return ctx.course_ids[static_cast<std::size_t>(c)];
    }
    return std::to_string(c);
}

}  // namespace

void write_summary_csv(const SubgroupSummary& s, const SummaryContext& ctx, std::ostream& out) {
    std::string buf = "course,demographic,subgroup,task,strategy,mean_auc,std_auc,n_runs\n";
    for (const auto& [k, g] : s.groups) {
        buf += fmt::format("{},{},{},{},{},", course_label(ctx, k.course),
                           demographic_name(k.variable), subgroup_label(k.variable, k.subgroup),
                           ctx.task, ctx.strategy);
        if (g.n_runs > 0) {
            buf += fmt::format("{},{},{}\n", g.mean, g.std, g.n_runs);
        } else {
            buf += fmt::format(",,0\n");
        }
    }
    out << buf;
}

nlohmann::json summary_to_json(const SubgroupSummary& s, const SummaryContext& ctx) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& [k, g] : s.groups) {
        nlohmann::json r = {{"course", course_label(ctx, k.course)},
                            {"demographic", demographic_name(k.variable)},
                            {"subgroup", subgroup_label(k.variable, k.subgroup)},
                            {"task", ctx.task},
                            {"strategy", ctx.strategy},
                            {"n_runs", g.n_runs},
                            {"incomplete", g.incomplete}};
        r["mean_auc"] = g.n_runs ? nlohmann::json(g.mean) : nlohmann::json(nullptr);
        r["std_auc"] = g.n_runs ? nlohmann::json(g.std) : nlohmann::json(nullptr);
        rows.push_back(std::move(r));
    }
    return {{"groups", rows},
            {"overall_mean_auc", s.overall_mean},
            {"overall_std_auc", s.overall_std},
            {"n_groups", s.n_groups}};
}

Heatmap activity_heatmap(const data::Dataset& ds, std::span<const int> group_a,
                         std::span<const int> group_b, int bins) {
    if (group_a.empty() || group_b.empty()) throw DomainError("activity heatmap needs two nonempty groups");
    if (bins < 1) throw DomainError("heatmap needs at least one bin");

    std::set<std::string> videos;
    for (auto group : {group_a, group_b}) {
        for (int id : group) {
            for (const auto& e : ds.students.at(static_cast<std::size_t>(id)).events) {
                if (e.video_id) videos.insert(*e.video_id);
            }
        }
    }
    Heatmap h;
    std::map<std::string, int> row_of;
    for (const auto& v : videos) {
        row_of.emplace(v, static_cast<int>(h.rows.size()));
        h.rows.push_back(v);
    }
    const int forum_base = static_cast<int>(h.rows.size());
    for (auto a : {data::ForumAction::Post, data::ForumAction::Reply, data::ForumAction::View}) {
        h.rows.push_back(data::to_string(a));
    }
    const auto R = static_cast<Eigen::Index>(h.rows.size());

    auto fractions = [&](std::span<const int> group) {
        nn::Tensor counts = nn::Tensor::Zero(R, bins);
        nn::Tensor seen(R, bins);
        for (int id : group) {
            const auto& ev = ds.students[static_cast<std::size_t>(id)].events;
            seen.setZero();
            const std::size_t n = ev.size();
            for (std::size_t i = 0; i < n; ++i) {
                const auto bin = static_cast<Eigen::Index>(i * static_cast<std::size_t>(bins) / n);
                const int row = ev[i].video_id ? row_of.at(*ev[i].video_id)
                                               : forum_base + static_cast<int>(*ev[i].forum_action);
                seen(row, bin) = 1.0;
            }
            counts += seen;
        }
        return nn::Tensor(counts / static_cast<double>(group.size()));
    };
    h.values = (fractions(group_a) - fractions(group_b)).cwiseAbs();
    return h;
}

void write_heatmap_csv(const Heatmap& h, std::ostream& out) {
    std::string buf = "activity";
    for (Eigen::Index b = 0; b < h.values.cols(); ++b) buf += fmt::format(",bin_{}", b);
    buf += '\n';
    for (Eigen::Index r = 0; r < h.values.rows(); ++r) {
        buf += h.rows[static_cast<std::size_t>(r)];
        for (Eigen::Index b = 0; b < h.values.cols(); ++b) buf += fmt::format(",{}", h.values(r, b));
        buf += '\n';
    }
    out << buf;
}

}  // namespace hierfed::metrics
