#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hierfed/data/dataset.hpp"

namespace hierfed::models {

enum class Task { KT, OP };

std::string task_name(Task t);
Task parse_task(const std::string& s);

/// Course and per-course video index maps. Video slots are indexed within a
/// course (the one-hot for video v of course c), so every course shares the
/// same |V| slots; the last slot is reserved for videos unseen in training.
struct Vocab {
    int num_courses = 0;
    int num_videos = 1;  // slots, including the unknown slot
    std::vector<std::map<std::string, int>> video_slots;

    int unknown_video() const { return num_videos - 1; }
    int video_slot(int course, const std::string& video_id) const;
};

/// Builds the vocabulary from the given (training) students only.
Vocab build_vocab(const data::Dataset& ds, const std::vector<int>& train_students);

struct KtStep {
    int course = 0;
    int video = 0;
    int response = 0;
};

struct InteractionSeq {
    int student = 0;
    std::vector<KtStep> steps;
};

struct VideoStep {
    int course = 0;
    int video = 0;
    std::optional<int> response;
};

struct ForumStep {
    int course = 0;
    data::ForumAction action = data::ForumAction::View;
};

using ActivityStep = std::variant<VideoStep, ForumStep>;

struct ActivitySeq {
    int student = 0;
    std::vector<ActivityStep> steps;
    int outcome = 0;
};

inline constexpr std::size_t kDefaultMaxSteps = 512;

/// KT keeps video/quiz-response pairs (one step per first response); OP
/// interleaves video and forum activity chronologically. Students without a
/// usable step are left out; `excluded` receives how many.
std::vector<InteractionSeq> build_kt_sequences(const data::Dataset& ds, const Vocab& vocab,
                                               std::size_t max_steps = kDefaultMaxSteps,
                                               std::size_t* excluded = nullptr);
std::vector<ActivitySeq> build_op_sequences(const data::Dataset& ds, const Vocab& vocab,
                                            std::size_t max_steps = kDefaultMaxSteps,
                                            std::size_t* excluded = nullptr);

}  // namespace hierfed::models
