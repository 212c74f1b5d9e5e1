#include "hierfed/models/sequences.hpp"

#include <algorithm>
#include <set>

#include <spdlog/spdlog.h>

#include "hierfed/errors.hpp"

namespace hierfed::models {

std::string task_name(Task t) { return t == Task::KT ? "kt" : "op"; }

Task parse_task(const std::string& s) {
    if (s == "kt" || s == "KT") return Task::KT;
    if (s == "op" || s == "OP") return Task::OP;
    throw ConfigError("unknown task '" + s + "' (expected kt or op)");
}

int Vocab::video_slot(int course, const std::string& video_id) const {
    if (course < 0 || course >= num_courses) {
        throw DomainError("course index " + std::to_string(course) + " outside vocabulary");
    }
    const auto& m = video_slots[static_cast<std::size_t>(course)];
    auto it = m.find(video_id);
    return it == m.end() ? unknown_video() : it->second;
}

Vocab build_vocab(const data::Dataset& ds, const std::vector<int>& train_students) {
    Vocab v;
    v.num_courses = ds.num_courses();
    std::vector<std::set<std::string>> seen(static_cast<std::size_t>(v.num_courses));
    for (int id : train_students) {
        const auto c = static_cast<std::size_t>(ds.course_of[static_cast<std::size_t>(id)]);
        for (const auto& e : ds.students[static_cast<std::size_t>(id)].events) {
            if (e.video_id) seen[c].insert(*e.video_id);
        }
    }
    std::size_t widest = 0;
    v.video_slots.resize(seen.size());
    for (std::size_t c = 0; c < seen.size(); ++c) {
        int slot = 0;
        for (const auto& vid : seen[c]) v.video_slots[c].emplace(vid, slot++);
        widest = std::max(widest, seen[c].size());
    }
    v.num_videos = static_cast<int>(widest) + 1;
    return v;
}

std::vector<InteractionSeq> build_kt_sequences(const data::Dataset& ds, const Vocab& vocab,
                                               std::size_t max_steps, std::size_t* excluded) {
    std::vector<InteractionSeq> out;
    std::size_t dropped = 0;
    for (std::size_t i = 0; i < ds.students.size(); ++i) {
        const int course = ds.course_of[i];
        InteractionSeq seq{static_cast<int>(i), {}};
        for (const auto& e : ds.students[i].events) {
            if (e.kind != data::EventKind::QuizResponse) continue;
            if (seq.steps.size() >= max_steps) break;
            seq.steps.push_back({course, vocab.video_slot(course, *e.video_id), *e.response});
        }
        if (seq.steps.empty()) {
            ++dropped;
            continue;
        }
        out.push_back(std::move(seq));
    }
    if (dropped > 0) spdlog::info("kt: excluded {} students without quiz responses", dropped);
    if (excluded) *excluded = dropped;
    return out;
}

std::vector<ActivitySeq> build_op_sequences(const data::Dataset& ds, const Vocab& vocab,
                                            std::size_t max_steps, std::size_t* excluded) {
    std::vector<ActivitySeq> out;
    std::size_t dropped = 0;
    for (std::size_t i = 0; i < ds.students.size(); ++i) {
        const int course = ds.course_of[i];
        const auto& student = ds.students[i];
        ActivitySeq seq{static_cast<int>(i), {}, student.info.outcome};
        // A response attaches to the latest unanswered view of the same video.
        std::vector<std::pair<std::string, std::size_t>> open_views;
        for (const auto& e : student.events) {
            switch (e.kind) {
                case data::EventKind::Video:
                    seq.steps.emplace_back(
                        VideoStep{course, vocab.video_slot(course, *e.video_id), std::nullopt});
                    open_views.emplace_back(*e.video_id, seq.steps.size() - 1);
                    break;
                case data::EventKind::QuizResponse: {
                    auto it = std::find_if(open_views.rbegin(), open_views.rend(),
                                           [&](const auto& v) { return v.first == *e.video_id; });
                    if (it != open_views.rend()) {
                        std::get<VideoStep>(seq.steps[it->second]).response = *e.response;
                        open_views.erase(std::next(it).base());
                    } else {
                        seq.steps.emplace_back(VideoStep{
                            course, vocab.video_slot(course, *e.video_id), *e.response});
                    }
                    break;
                }
                case data::EventKind::Forum:
                    seq.steps.emplace_back(ForumStep{course, *e.forum_action});
                    break;
            }
        }
        if (seq.steps.size() > max_steps) seq.steps.resize(max_steps);
        if (seq.steps.empty()) {
            ++dropped;
            continue;
        }
        out.push_back(std::move(seq));
    }
    if (dropped > 0) spdlog::info("op: excluded {} students without activity", dropped);
    if (excluded) *excluded = dropped;
    return out;
}

}  // namespace hierfed::models
