#include "hierfed/fed/irt.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <spdlog/spdlog.h>

#include "hierfed/errors.hpp"

namespace hierfed::fed {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

constexpr double kDifficultyBound = 8.0;

// One Newton step on a logit parameter given its score and information.
double newton(double x, double grad, double info, double bound) {
    if (info < 1e-10) return x;
    return std::clamp(x + grad / info, -bound, bound);
}

}  // namespace

double RaschFit::ability_of(int student) const {
    const auto it = std::lower_bound(students.begin(), students.end(), student);
    if (it == students.end() || *it != student) throw DomainError("student not in Rasch fit");
    return ability[static_cast<std::size_t>(it - students.begin())];
}

double RaschFit::prob(int student, int item) const {
    return sigmoid(ability_of(student) - difficulty.at(static_cast<std::size_t>(item)));
}

RaschFit fit_rasch(std::span<const Response> responses, int num_items, int max_iter, double tol) {
    RaschFit fit;
    for (const auto& r : responses) {
        if (r.item < 0 || r.item >= num_items) throw DomainError("response item out of range");
        fit.students.push_back(r.student);
    }
    std::sort(fit.students.begin(), fit.students.end());
    fit.students.erase(std::unique(fit.students.begin(), fit.students.end()), fit.students.end());
    fit.ability.assign(fit.students.size(), 0.0);
    fit.difficulty.assign(static_cast<std::size_t>(num_items), 0.0);

    std::vector<std::size_t> sidx(responses.size());
    std::vector<char> seen(static_cast<std::size_t>(num_items), 0);
    for (std::size_t i = 0; i < responses.size(); ++i) {
        sidx[i] = static_cast<std::size_t>(
            std::lower_bound(fit.students.begin(), fit.students.end(), responses[i].student) -
            fit.students.begin());
        seen[static_cast<std::size_t>(responses[i].item)] = 1;
    }

    std::vector<double> ga, ia, gd, id;
    for (int it = 0; it < max_iter; ++it) {
        double delta = 0.0;

        ga.assign(fit.ability.size(), 0.0);
        ia.assign(fit.ability.size(), 0.0);
        for (std::size_t i = 0; i < responses.size(); ++i) {
            const auto& r = responses[i];
            const double p = sigmoid(fit.ability[sidx[i]] - fit.difficulty[static_cast<std::size_t>(r.item)]);
            ga[sidx[i]] += r.correct - p;
            ia[sidx[i]] += p * (1.0 - p);
        }
        for (std::size_t s = 0; s < fit.ability.size(); ++s) {
            const double next = newton(fit.ability[s], ga[s], ia[s], kAbilityBound);
            delta = std::max(delta, std::abs(next - fit.ability[s]));
            fit.ability[s] = next;
        }

        gd.assign(fit.difficulty.size(), 0.0);
        id.assign(fit.difficulty.size(), 0.0);
        for (std::size_t i = 0; i < responses.size(); ++i) {
            const auto& r = responses[i];
            const auto j = static_cast<std::size_t>(r.item);
            const double p = sigmoid(fit.ability[sidx[i]] - fit.difficulty[j]);
            gd[j] += p - r.correct;
            id[j] += p * (1.0 - p);
        }
        std::vector<double> next = fit.difficulty;
        double mean = 0.0;
        int n_seen = 0;
        for (std::size_t j = 0; j < next.size(); ++j) {
            if (!seen[j]) continue;
            next[j] = newton(next[j], gd[j], id[j], kDifficultyBound);
            mean += next[j];
            ++n_seen;
        }
        // Pin the scale's origin: difficulties centred over the seen items.
        if (n_seen > 0) mean /= n_seen;
        for (std::size_t j = 0; j < next.size(); ++j) {
            if (!seen[j]) continue;
            next[j] -= mean;
            delta = std::max(delta, std::abs(next[j] - fit.difficulty[j]));
        }
        fit.difficulty = std::move(next);
        fit.iterations = it + 1;
        if (delta < tol) break;
    }
    return fit;
}

std::vector<double> irt_confidence(const std::vector<std::vector<Response>>& per_subgroup,
                                   int num_items) {
    if (per_subgroup.empty()) throw DomainError("irt_confidence: no subgroups");
    std::vector<Response> all;
    for (const auto& g : per_subgroup) all.insert(all.end(), g.begin(), g.end());
    const RaschFit fit = fit_rasch(all, num_items);

    std::vector<double> conf(per_subgroup.size(), 0.5);
    for (std::size_t x = 0; x < per_subgroup.size(); ++x) {
        const auto& g = per_subgroup[x];
        if (g.empty()) {
            spdlog::warn("irt_confidence: subgroup {} has no quiz responses, using the 0.5 prior", x);
            continue;
        }
        double s = 0.0;
        for (const auto& r : g) {
            const double p = fit.prob(r.student, r.item);
            s += r.correct ? p : 1.0 - p;
        }
        conf[x] = s / static_cast<double>(g.size());
    }
    double total = 0.0;
    for (double c : conf) total += c;
    for (double& c : conf) c /= total;
    return conf;
}

std::vector<Response> quiz_responses(const data::Dataset& ds, const models::Vocab& vocab,
                                     std::span<const int> students) {
    std::vector<Response> out;
    for (int id : students) {
        const auto& st = ds.students.at(static_cast<std::size_t>(id));
        const int course = ds.course_of[static_cast<std::size_t>(id)];
        std::set<std::string> answered;
        for (const auto& e : st.events) {
            if (e.kind != data::EventKind::QuizResponse || !e.video_id || !e.response) continue;
            if (!answered.insert(*e.video_id).second) continue;
            out.push_back({id, vocab.video_slot(course, *e.video_id), *e.response});
        }
    }
    return out;
}

}  // namespace hierfed::fed
