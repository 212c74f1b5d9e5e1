#include "hierfed/models/encoding.hpp"

#include "hierfed/errors.hpp"

namespace hierfed::models {

namespace {

void check_item(int course, int video, const Vocab& vocab) {
    if (course < 0 || course >= vocab.num_courses) {
        throw DomainError("course index " + std::to_string(course) + " out of range [0, " +
                          std::to_string(vocab.num_courses) + ")");
    }
    if (video < 0 || video >= vocab.num_videos) {
        throw DomainError("video index " + std::to_string(video) + " out of range [0, " +
                          std::to_string(vocab.num_videos) + ")");
    }
}

void check_response(int r) {
    if (r != 0 && r != 1) throw DomainError("response must be 0 or 1");
}

}  // namespace

nn::OneHotInput kt_input(const KtStep& step, const Vocab& vocab) {
    check_item(step.course, step.video, vocab);
    check_response(step.response);
    const int items = interaction_dim(vocab);
    return {{step.course, vocab.num_courses + step.video, items + step.response},
            kt_input_dim(vocab)};
}

nn::OneHotInput activity_input(const ActivityStep& step, const Vocab& vocab) {
    const int items = interaction_dim(vocab);
    nn::OneHotInput x{{}, activity_dim(vocab)};
    if (const auto* v = std::get_if<VideoStep>(&step)) {
        check_item(v->course, v->video, vocab);
        x.active = {v->course, vocab.num_courses + v->video};
        if (v->response) {
            check_response(*v->response);
            x.active.push_back(items + *v->response);
        }
    } else {
        const auto& f = std::get<ForumStep>(step);
        check_item(f.course, 0, vocab);
        x.active = {f.course, items + 2 + static_cast<int>(f.action)};
    }
    return x;
}

nn::Vec encode_interaction(int course, int video, const Vocab& vocab) {
    check_item(course, video, vocab);
    nn::Vec v = nn::Vec::Zero(interaction_dim(vocab));
    v[course] = 1.0;
    v[vocab.num_courses + video] = 1.0;
    return v;
}

nn::Vec encode_activity(const ActivityStep& step, const Vocab& vocab) {
    return nn::to_dense<double>(activity_input(step, vocab));
}

}  // namespace hierfed::models
