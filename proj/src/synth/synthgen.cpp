#include "hierfed/synth/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "hierfed/errors.hpp"
#include "hierfed/util/rng.hpp"

namespace hierfed::synth {

namespace {

constexpr int kForumStates = 3;
constexpr std::int64_t kEpoch = 1'600'000'000;  // first session start, UNIX seconds

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<double> equal_shares(int n) { return std::vector<double>(static_cast<std::size_t>(n), 1.0 / n); }

std::vector<double> resolved_shares(const GenConfig& c) {
    return c.shares.empty() ? equal_shares(subgroup_count(c.archetype_variable)) : c.shares;
}

double resolved_mean(const GenConfig& c, int x) {
    return c.ability_means.empty() ? 0.0 : c.ability_means[static_cast<std::size_t>(x)];
}

void normalize_rows(nn::Tensor& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        const double s = m.row(r).sum();
        if (s > 0) m.row(r) /= s;
    }
}

// Course-wide behaviour: mostly forward progression through the videos with
// occasional skips, revisits and forum visits. Weights are jittered per course.
nn::Tensor base_transitions(int V, Rng& rng) {
    const int S = V + kForumStates;
    std::normal_distribution<double> jitter(0.0, 0.5);
    nn::Tensor m = nn::Tensor::Zero(S, S);
    for (int s = 0; s < S; ++s) {
        for (int t = 0; t < V; ++t) m(s, t) = 0.3 / V;
        if (s < V) {
            m(s, std::min(s + 1, V - 1)) += 3.0;
            m(s, std::min(s + 2, V - 1)) += 0.5;
        } else {
            for (int t = 0; t < V; ++t) m(s, t) += 1.0 / V;
        }
        m(s, V + 0) += 0.05;
        m(s, V + 1) += 0.1;
        m(s, V + 2) += 0.25;
        for (int t = 0; t < S; ++t) m(s, t) *= std::exp(jitter(rng));
    }
    normalize_rows(m);
    return m;
}

// Subgroup behaviour: movement concentrated on the subgroup's preferred
// videos, with its own forum propensity and action mix.
nn::Tensor specific_transitions(int V, const std::vector<int>& preferred, Rng& rng) {
    const int S = V + kForumStates;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double forum = 0.05 + 0.45 * u(rng);
    nn::Vec mix(kForumStates);
    for (int a = 0; a < kForumStates; ++a) mix[a] = 0.1 + u(rng);
    mix /= mix.sum();
    nn::Tensor m = nn::Tensor::Zero(S, S);
    for (int s = 0; s < S; ++s) {
        for (int v : preferred) m(s, v) = (1.0 - forum) / static_cast<double>(preferred.size());
        for (int a = 0; a < kForumStates; ++a) m(s, V + a) = forum * mix[a];
    }
    return m;
}

// Videos split into disjoint contiguous-by-permutation blocks, one per subgroup.
std::vector<std::vector<int>> preferred_supports(int V, int groups, Rng& rng) {
    std::vector<int> order(static_cast<std::size_t>(V));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::vector<int>> out(static_cast<std::size_t>(groups));
    for (int i = 0; i < V; ++i) out[static_cast<std::size_t>(i * groups / V)].push_back(order[static_cast<std::size_t>(i)]);
    for (auto& s : out) std::sort(s.begin(), s.end());
    return out;
}

// Exact per-subgroup counts by largest remainder.
std::vector<int> subgroup_counts(const std::vector<double>& shares, int n) {
    std::vector<int> counts(shares.size());
    std::vector<std::pair<double, std::size_t>> rem;
    int used = 0;
    for (std::size_t x = 0; x < shares.size(); ++x) {
        const double exact = shares[x] * n;
        counts[x] = static_cast<int>(std::floor(exact));
        used += counts[x];
        rem.emplace_back(exact - counts[x], x);
    }
    std::stable_sort(rem.begin(), rem.end(), [](auto a, auto b) { return a.first > b.first; });
    for (std::size_t i = 0; used < n; ++i, ++used) ++counts[rem[i % rem.size()].second];
    return counts;
}

int draw(const nn::Vec& p, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double r = u(rng), acc = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        acc += p[i];
        if (r < acc) return static_cast<int>(i);
    }
    return static_cast<int>(p.size() - 1);
}

data::StudentRecord demographics(const GenConfig& c, const std::string& sid,
                                 const std::string& cid, int subgroup, Rng& rng) {
    std::uniform_int_distribution<int> g(0, 1), cont(0, 4), year(1960, 2002);
    data::StudentRecord s;
    s.student_id = sid;
    s.course_id = cid;
    s.gender = static_cast<data::Gender>(g(rng));
    s.continent = static_cast<data::Continent>(cont(rng));
    s.birth_year = year(rng);
    switch (c.archetype_variable) {
        case Demographic::Gender: s.gender = static_cast<data::Gender>(subgroup); break;
        case Demographic::Continent: s.continent = static_cast<data::Continent>(subgroup); break;
        case Demographic::BirthYear: {
            std::uniform_int_distribution<int> lo(1960, 1979), mid(1980, 1989), hi(1990, 2002);
            s.birth_year = subgroup == 0 ? lo(rng) : subgroup == 1 ? mid(rng) : hi(rng);
            break;
        }
        case Demographic::None: break;
    }
    std::bernoulli_distribution blank(c.undisclosed_fraction);
    if (blank(rng)) s.gender.reset();
    if (blank(rng)) s.continent.reset();
    if (blank(rng)) s.birth_year.reset();
    return s;
}

}  // namespace

void validate(const GenConfig& c) {
    auto bad = [](const std::string& m) { throw ConfigError("generator config: " + m); };
    if (c.courses < 1) bad("courses must be >= 1");
    if (c.students_per_course < 1) bad("students_per_course must be >= 1");
    if (c.videos_per_course < 1) bad("videos_per_course must be >= 1");
    if (c.archetype_variable == Demographic::None) bad("archetype_variable must name a demographic");
    const int X = subgroup_count(c.archetype_variable);
    if (!c.shares.empty()) {
        if (static_cast<int>(c.shares.size()) != X) bad(fmt::format("shares needs {} entries", X));
        double sum = 0.0;
        for (double s : c.shares) {
            if (!(s >= 0.0)) bad("shares must be nonnegative");
            sum += s;
        }
        if (std::abs(sum - 1.0) > 1e-9) bad("shares must sum to 1");
    }
    if (!c.ability_means.empty() && static_cast<int>(c.ability_means.size()) != X) {
        bad(fmt::format("ability_means needs {} entries", X));
    }
    if (!(c.ability_std >= 0.0)) bad("ability_std must be >= 0");
    if (!(c.tau >= 0.0 && c.tau <= 1.0)) bad("tau must lie in [0, 1]");
    if (!(c.undisclosed_fraction >= 0.0 && c.undisclosed_fraction <= 1.0)) bad("undisclosed_fraction must lie in [0, 1]");
    if (!(c.label_noise >= 0.0 && c.label_noise <= 0.5)) bad("label_noise must lie in [0, 0.5]");
    // A zero hazard would leave the stop state unreachable.
    if (!(c.stop_prob > 0.0 && c.stop_prob <= 1.0)) bad("stop_prob must lie in (0, 1]; stop would be unreachable");
    if (c.max_events < 1) bad("max_events must be >= 1");
}

std::vector<CourseArchetypes> build_archetypes(const GenConfig& c) {
    validate(c);
    const int V = c.videos_per_course, X = subgroup_count(c.archetype_variable);
    const int S = V + kForumStates;
    const auto shares = resolved_shares(c);
    std::vector<CourseArchetypes> out(static_cast<std::size_t>(c.courses));
    for (int course = 0; course < c.courses; ++course) {
        Rng rng = make_rng(c.seed, "synth-course", {static_cast<std::uint64_t>(course)});
        std::normal_distribution<double> diff(0.0, c.difficulty_std);
        const nn::Tensor base = base_transitions(V, rng);
        nn::Vec base_start = nn::Vec::Zero(S);
        base_start[0] = 0.7;
        base_start.head(V).array() += 0.3 / V;
        nn::Vec d_base(V);
        for (int v = 0; v < V; ++v) d_base[v] = diff(rng);
        const auto supports = preferred_supports(V, X, rng);

        for (int x = 0; x < X; ++x) {
            Archetype a;
            const auto& pref = supports[static_cast<std::size_t>(x)];
            // A subgroup with no preferred video (more subgroups than videos)
            // falls back to the whole catalogue.
            std::vector<int> support = pref;
            if (support.empty()) {
                support.resize(static_cast<std::size_t>(V));
                std::iota(support.begin(), support.end(), 0);
            }
            const nn::Tensor spec = specific_transitions(V, support, rng);
            a.transition = (1.0 - c.tau) * base + c.tau * spec;
            nn::Vec spec_start = nn::Vec::Zero(S);
            for (int v : support) spec_start[v] = 1.0 / static_cast<double>(support.size());
            a.start = (1.0 - c.tau) * base_start + c.tau * spec_start;
            nn::Vec d_spec(V);
            for (int v = 0; v < V; ++v) d_spec[v] = diff(rng);
            a.difficulty = (1.0 - c.tau) * d_base + c.tau * d_spec;
            a.ability_mean = resolved_mean(c, x);
            a.ability_std = c.ability_std;
            a.share = shares[static_cast<std::size_t>(x)];
            out[static_cast<std::size_t>(course)].subgroups.push_back(std::move(a));
        }
    }
    return out;
}

Generated generate_full(const GenConfig& c) {
    const auto archetypes = build_archetypes(c);
    const int V = c.videos_per_course;
    std::vector<data::EventRecord> events;
    std::vector<data::StudentRecord> students;
    Generated g;
    g.true_subgroup.resize(static_cast<std::size_t>(c.courses));

    for (int course = 0; course < c.courses; ++course) {
        const auto& arch = archetypes[static_cast<std::size_t>(course)].subgroups;
        const std::string cid = fmt::format("course_{}", course);
        std::vector<double> shares;
        for (const auto& a : arch) shares.push_back(a.share);
        const auto counts = subgroup_counts(shares, c.students_per_course);
        std::vector<int> assignment;
        for (std::size_t x = 0; x < counts.size(); ++x) assignment.insert(assignment.end(), counts[x], static_cast<int>(x));
        Rng arng = make_rng(c.seed, "synth-assign", {static_cast<std::uint64_t>(course)});
        std::shuffle(assignment.begin(), assignment.end(), arng);
        g.true_subgroup[static_cast<std::size_t>(course)] = assignment;

        for (int i = 0; i < c.students_per_course; ++i) {
            const int x = assignment[static_cast<std::size_t>(i)];
            const auto& a = arch[static_cast<std::size_t>(x)];
            Rng rng = make_rng(c.seed, "synth-student",
                               {static_cast<std::uint64_t>(course), static_cast<std::uint64_t>(i)});
            const std::string sid = fmt::format("c{}_u{:04d}", course, i);
            auto rec = demographics(c, sid, cid, x, rng);

            std::normal_distribution<double> ability_dist(a.ability_mean, a.ability_std);
            const double ability = ability_dist(rng);
            std::uniform_int_distribution<int> gap(1, 10), offset(0, 60 * 24 * 14);
            std::uniform_real_distribution<double> u(0.0, 1.0);
            std::int64_t minute = offset(rng);
            std::vector<bool> answered(static_cast<std::size_t>(V), false);
            int forum_events = 0;
            int state = draw(a.start, rng);
            for (int n = 0; n < c.max_events; ++n) {
                const std::int64_t ts = kEpoch + 60 * minute;
                if (state < V) {
                    const std::string vid = fmt::format("v{:02d}", state);
                    events.push_back({sid, cid, data::EventKind::Video, vid, std::nullopt, std::nullopt, ts});
                    if (!answered[static_cast<std::size_t>(state)]) {
                        answered[static_cast<std::size_t>(state)] = true;
                        const int r = u(rng) < sigmoid(ability - a.difficulty[state]) ? 1 : 0;
                        events.push_back({sid, cid, data::EventKind::QuizResponse, vid, r, std::nullopt, ts + 60});
                        minute += 1;
                    }
                } else {
                    ++forum_events;
                    events.push_back({sid, cid, data::EventKind::Forum, std::nullopt, std::nullopt,
                                      static_cast<data::ForumAction>(state - V), ts});
                }
                minute += gap(rng);
                if (u(rng) < c.stop_prob) break;
                state = draw(a.transition.row(state).transpose(), rng);
            }

            // Expected score on an end-of-course assessment covering every item.
            double exam = 0.0;
            for (int v = 0; v < V; ++v) exam += sigmoid(ability - a.difficulty[v]);
            exam /= V;
            const double bonus = 0.1 * std::min(1.0, forum_events / 10.0);
            int outcome = exam + bonus > c.pass_threshold ? 1 : 0;
            if (u(rng) < c.label_noise) outcome = 1 - outcome;
            rec.outcome = outcome;
            students.push_back(std::move(rec));
        }
    }
    g.dataset = data::assemble(std::move(events), std::move(students));
    return g;
}

data::Dataset generate(const GenConfig& c) { return generate_full(c).dataset; }

GenConfig preset(const std::string& name) {
    GenConfig c;
    c.name = name;
    if (name == "balanced-small") {
        c.courses = 1;
        c.students_per_course = 100;
        c.videos_per_course = 10;
        c.shares = {0.5, 0.5};
        c.tau = 0.0;
    } else if (name == "heterogeneous-3course") {
        c.courses = 3;
        c.students_per_course = 300;
        c.videos_per_course = 20;
        c.shares = {0.85, 0.15};
        c.tau = 0.8;
    } else if (name == "imbalanced-minority") {
        c.courses = 2;
        c.students_per_course = 200;
        c.videos_per_course = 15;
        c.shares = {0.85, 0.15};
        c.tau = 0.5;
        c.undisclosed_fraction = 0.1;
    } else {
        throw ConfigError("unknown preset '" + name + "' (known: balanced-small, "
                          "heterogeneous-3course, imbalanced-minority)");
    }
    return c;
}

std::vector<std::string> preset_names() {
    return {"balanced-small", "heterogeneous-3course", "imbalanced-minority"};
}

nlohmann::json to_json(const GenConfig& c) {
    return {{"name", c.name},
            {"generator_version", kGeneratorVersion},
            {"courses", c.courses},
            {"students_per_course", c.students_per_course},
            {"videos_per_course", c.videos_per_course},
            {"archetype_variable", demographic_name(c.archetype_variable)},
            {"shares", c.shares},
            {"ability_means", c.ability_means},
            {"ability_std", c.ability_std},
            {"undisclosed_fraction", c.undisclosed_fraction},
            {"tau", c.tau},
            {"difficulty_std", c.difficulty_std},
            {"stop_prob", c.stop_prob},
            {"max_events", c.max_events},
            {"pass_threshold", c.pass_threshold},
            {"label_noise", c.label_noise},
            {"seed", c.seed}};
}

GenConfig gen_config_from_json(const nlohmann::json& j) {
    GenConfig c;
    if (j.contains("preset")) c = preset(j.at("preset").get<std::string>());
    try {
        c.name = j.value("name", c.name);
        c.courses = j.value("courses", c.courses);
        c.students_per_course = j.value("students_per_course", c.students_per_course);
        c.videos_per_course = j.value("videos_per_course", c.videos_per_course);
        if (j.contains("archetype_variable")) {
            c.archetype_variable = parse_demographic(j.at("archetype_variable").get<std::string>());
        }
        c.shares = j.value("shares", c.shares);
        c.ability_means = j.value("ability_means", c.ability_means);
        c.ability_std = j.value("ability_std", c.ability_std);
        c.undisclosed_fraction = j.value("undisclosed_fraction", c.undisclosed_fraction);
        c.tau = j.value("tau", c.tau);
        c.difficulty_std = j.value("difficulty_std", c.difficulty_std);
        c.stop_prob = j.value("stop_prob", c.stop_prob);
        c.max_events = j.value("max_events", c.max_events);
        c.pass_threshold = j.value("pass_threshold", c.pass_threshold);
        c.label_noise = j.value("label_noise", c.label_noise);
        c.seed = j.value("seed", c.seed);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("generator config: ") + e.what());
    }
    validate(c);
    return c;
}

void write_generated(const GenConfig& c, const data::Dataset& ds, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    data::export_csv(ds, dir / "events.csv", dir / "students.csv");
    nlohmann::json manifest = {{"generator", "hierfed-synthgen"},
                               {"config", to_json(c)},
                               {"seed", c.seed},
                               {"students", ds.size()},
                               {"content_hash", fmt::format("{:016x}", ds.content_hash())},
                               {"files", {"events.csv", "students.csv"}}};
    std::ofstream out(dir / "manifest.json");
    if (!out) throw DataError("cannot write " + (dir / "manifest.json").string());
    out << manifest.dump(2) << '\n';
}

}  // namespace hierfed::synth
