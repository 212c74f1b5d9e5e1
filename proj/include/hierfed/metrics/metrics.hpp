#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hierfed/data/dataset.hpp"
#include "hierfed/group_key.hpp"
#include "hierfed/nn/param_set.hpp"

namespace hierfed::metrics {

/// Rank-sum (Mann-Whitney) AUC with ties credited one half. Returns nullopt
/// when the labels hold only one class.
std::optional<double> auc(std::span<const double> scores, std::span<const int> labels);

/// Per-subgroup AUC of one training run; nullopt marks an undefined AUC.
using RunAucs = std::map<GroupKey, std::optional<double>>;

struct GroupStats {
    double mean = 0.0;
    double std = 0.0;  // population (n divisor)
    int n_runs = 0;    // runs with a defined AUC
    bool incomplete = false;  // missing or undefined in at least one run
};

struct SubgroupSummary {
    std::map<GroupKey, GroupStats> groups;
    // Across subgroup means, over groups with at least one defined AUC.
    double overall_mean = 0.0;
    double overall_std = 0.0;
    int n_groups = 0;
};

double mean_of(std::span<const double> xs);
double population_std(std::span<const double> xs);

SubgroupSummary summarize(std::span<const RunAucs> runs);

/// Labels used when writing summaries.
struct SummaryContext {
    std::vector<std::string> course_ids;
    std::string task;
    std::string strategy;
};

void write_summary_csv(const SubgroupSummary& s, const SummaryContext& ctx, std::ostream& out);
nlohmann::json summary_to_json(const SubgroupSummary& s, const SummaryContext& ctx);

/// Activity-divergence map: rows are activities (each video id of the
/// course, then forum_post, forum_reply, forum_view), columns are bins of
/// normalized sequence position. Cell = |frac_a - frac_b| where frac is the
/// share of the group's students with that activity in that bin.
struct Heatmap {
    std::vector<std::string> rows;
    nn::Tensor values;  // rows x bins

    double mean() const { return values.size() ? values.mean() : 0.0; }
};

inline constexpr int kHeatmapBins = 50;

Heatmap activity_heatmap(const data::Dataset& ds, std::span<const int> group_a,
                         std::span<const int> group_b, int bins = kHeatmapBins);

void write_heatmap_csv(const Heatmap& h, std::ostream& out);

}  // namespace hierfed::metrics
